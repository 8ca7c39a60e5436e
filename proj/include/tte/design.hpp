#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace tte {

enum class DesignKind { kBernoulli, kComplete };

std::string_view to_string(DesignKind kind);
DesignKind parse_design_kind(std::string_view text);

using Treatment = std::vector<std::uint8_t>;

// Monotone staggered rollout: stage t = 0..T assigns z^t, and once treated an
// individual stays treated. Targets are probabilities for a Bernoulli design
// and treated counts for a completely randomized design.
class TreatmentSchedule {
 public:
  // Validates shape, monotonicity, and (for kComplete) exact counts.
  TreatmentSchedule(DesignKind kind, std::vector<double> targets,
                    std::vector<Treatment> stages);

  DesignKind kind() const { return kind_; }
  std::size_t size() const { return n_; }
  std::size_t horizon() const { return stages_.size() - 1; }
  std::size_t stage_count() const { return stages_.size(); }

  std::span<const double> targets() const { return targets_; }
  std::span<const std::uint8_t> stage(std::size_t t) const { return stages_[t]; }
  std::span<const std::size_t> realized_counts() const { return realized_; }

  // Targets on the treated-fraction scale: p for BRD, k/n for CRD.
  std::vector<double> target_fractions() const;
  std::vector<double> realized_fractions() const;

  // Smallest gap between consecutive targets, in target units.
  double min_gap() const;

  friend bool operator==(const TreatmentSchedule&, const TreatmentSchedule&) = default;

 private:
  DesignKind kind_;
  std::size_t n_ = 0;
  std::vector<double> targets_;
  std::vector<Treatment> stages_;
  std::vector<std::size_t> realized_;
};

// One uniform threshold per individual; z^t_i = 1 iff u_i <= p_t.
TreatmentSchedule brd_schedule(std::span<const double> p, std::size_t n,
                               std::uint64_t seed);

// Stage t treats a uniform (k_t - k_{t-1})-subset of those still untreated.
TreatmentSchedule crd_schedule(std::span<const std::size_t> k, std::size_t n,
                               std::uint64_t seed);

// Probability that s given individuals are all treated when k of n are
// treated uniformly at random. Zero for s > k; one for s = 0.
double bracket(std::size_t k, std::size_t n, std::size_t s);

// Evenly spaced ladders from zero up to the final budget, T = beta stages.
std::vector<double> brd_ladder(double p, std::size_t beta);
// k_t = tk/beta rounded half up.
std::vector<std::size_t> crd_ladder(std::size_t k, std::size_t beta);
// Final treated count for a budget fraction, rounded half up.
std::size_t budget_count(double budget, std::size_t n);

// Header "design brd|crd T n", a target line, then T+1 bitstring rows.
void write_schedule(const TreatmentSchedule& s, std::ostream& out);
TreatmentSchedule read_schedule(std::istream& in);

}  // namespace tte
