#pragma once

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "tte/design.hpp"
#include "tte/errors.hpp"
#include "tte/graph.hpp"

namespace tte {

// Sorted list of node indices.
using Subset = std::vector<NodeId>;

// Heterogeneous outcome family used by the simulations:
//   Y_i(z) = c_i0 + sum_j w_ij z_j + sum_{l=2..beta} (sum_j w_ij z_j / sum_j w_ij)^l
// where w_ij are the influence weights over the in-neighborhood of i.
struct ParametricModel {
  Graph graph;
  std::size_t beta = 1;
  double r = 0.0;
  double sigma = 0.0;
  std::vector<double> baseline;
  // weights[i][k] belongs to the edge (in_neighbors(i)[k], i).
  std::vector<std::vector<double>> weights;

  std::size_t size() const { return graph.size(); }
};

// Generic low-degree form: Y_i(z) = sum_S c_{i,S} prod_{j in S} z_j.
struct CoefficientModel {
  Graph graph;
  std::size_t beta = 1;
  double sigma = 0.0;
  std::vector<std::map<Subset, double>> coefficients;

  std::size_t size() const { return graph.size(); }

  // Throws InvalidParameter unless every key is a sorted subset of the
  // node's in-neighborhood with at most beta elements.
  void validate() const;

  // max_i sum_S |c_{i,S}|.
  double max_outcome() const;
  // L_j: total absolute weight of every coefficient whose subset contains j.
  std::vector<double> influence() const;
  double max_influence() const;
};

// Noisy outcomes per stage: values[t][i] = Y_i(z^t) + eps_{t,i}.
struct ObservationSet {
  std::vector<std::vector<double>> values;
  std::vector<double> stage_means;
  double sigma = 0.0;

  std::size_t stage_count() const { return values.size(); }
};

ParametricModel sample_parametric_model(Graph g, std::size_t beta, double r,
                                        std::uint64_t seed);

std::vector<double> evaluate(const ParametricModel& model,
                             std::span<const std::uint8_t> z);
std::vector<double> evaluate(const CoefficientModel& model,
                             std::span<const std::uint8_t> z);

template <typename M>
concept OutcomeModel = requires(const M& m, std::span<const std::uint8_t> z) {
  { m.size() } -> std::convertible_to<std::size_t>;
  { m.sigma } -> std::convertible_to<double>;
  { evaluate(m, z) } -> std::same_as<std::vector<double>>;
};

// Mean of Y_i(1) - Y_i(0).
template <OutcomeModel M>
double true_tte(const M& model) {
  const std::size_t n = model.size();
  const auto treated = evaluate(model, Treatment(n, 1));
  const auto control = evaluate(model, Treatment(n, 0));
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += treated[i] - control[i];
  return total / static_cast<double>(n);
}

// (1/n) sum_i sum_{S nonempty} c_{i,S}, read straight off the coefficients.
double coefficient_tte(const CoefficientModel& model);

inline constexpr std::size_t kMaxExpandableNeighborhood = 20;

// Exact multilinear expansion of the parametric family. Throws
// CapacityError when some in-neighborhood exceeds 20 nodes.
CoefficientModel expand_to_coefficients(const ParametricModel& model);

ObservationSet observe_outcomes(std::span<const std::vector<double>> outcomes,
                                double sigma, std::uint64_t seed);

template <OutcomeModel M>
ObservationSet observe(const M& model, const TreatmentSchedule& schedule,
                       std::uint64_t seed) {
  if (schedule.size() != model.size()) {
    throw DimensionError("schedule width does not match model size");
  }
  std::vector<std::vector<double>> outcomes;
  outcomes.reserve(schedule.stage_count());
  for (std::size_t t = 0; t < schedule.stage_count(); ++t) {
    outcomes.push_back(evaluate(model, schedule.stage(t)));
  }
  return observe_outcomes(outcomes, model.sigma, seed);
}

nlohmann::json to_json(const ParametricModel& model);
nlohmann::json to_json(const CoefficientModel& model);
ParametricModel parametric_model_from_json(const nlohmann::json& j);
CoefficientModel coefficient_model_from_json(const nlohmann::json& j);

}  // namespace tte
