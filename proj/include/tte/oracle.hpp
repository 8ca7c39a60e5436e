#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "tte/design.hpp"
#include "tte/outcomes.hpp"

namespace tte {

// Exact law of a PI estimate over every rollout a design can produce, with
// noiseless outcomes.
struct EnumerationReport {
  double expectation = 0.0;
  double variance = 0.0;
  std::size_t n = 0;
  std::size_t horizon = 0;
  DesignKind design = DesignKind::kBernoulli;
  std::vector<double> targets;
  std::size_t enumeration_size = 0;
};

enum class WeightsMode { kTargets, kRealized };

inline constexpr std::size_t kMaxBrdEnumerationN = 8;
inline constexpr std::size_t kMaxBrdEnumerationHorizon = 3;
inline constexpr std::size_t kMaxCrdEnumerationN = 7;
inline constexpr std::size_t kMaxCrdEnumerationSize = 1'000'000;

// Calls visit(stages, probability) once per distinct BRD rollout: every
// assignment of individuals to threshold buckets (u <= p_0,
// p_0 < u <= p_1, ..., u > p_T) with nonzero probability.
void for_each_brd_rollout(
    std::size_t n, std::span<const double> p,
    const std::function<void(const std::vector<Treatment>&, double)>& visit);

// Calls visit(stages) once per nested subset sequence of a CRD rollout;
// all sequences are equally likely.
void for_each_crd_rollout(std::size_t n, std::span<const std::size_t> k,
                          const std::function<void(const std::vector<Treatment>&)>& visit);

// Number of nested subset sequences for counts k out of n.
double crd_rollout_count(std::size_t n, std::span<const std::size_t> k);

// Enumerates every assignment of individuals to threshold buckets
// (u <= p_0, p_0 < u <= p_1, ..., u > p_T), skipping empty buckets. The
// estimate interpolates at the targets p or at the realized fractions.
EnumerationReport exact_moments_brd(const CoefficientModel& model,
                                    std::span<const double> p, WeightsMode mode);

// Enumerates every nested subset sequence of a CRD rollout (all equally
// likely) and reports the law of the PI estimate at k/n.
EnumerationReport exact_moments_crd(const CoefficientModel& model,
                                    std::span<const std::size_t> k);

// Closed-form variance bounds for a linear model under a two-stage rollout
// that starts from zero treated.
double linear_variance_bound_brd(const CoefficientModel& model, double p, double sigma);
double linear_variance_bound_crd(const CoefficientModel& model, std::size_t k,
                                 double sigma);

struct WeightSolution {
  std::vector<double> alphas;
  // Multipliers of sum(alpha) = 0 and sum(alpha * p) = 1.
  double lambda = 0.0;
  double mu = 0.0;
  double objective = 0.0;
};

// Quadratic form sum_{t,t'} a_t a_t' (p_min(t,t') - p_t p_t'), scaled.
double weight_objective(std::span<const double> alphas, std::span<const double> p,
                        double network_factor = 1.0);

// Minimum-variance unbiased stage weights for a linear model under a
// Bernoulli rollout, from the KKT system of the constrained quadratic.
WeightSolution optimal_weights(std::span<const double> p, double network_factor = 1.0);

// Dense solve with partial pivoting; throws InvalidParameter when singular.
std::vector<double> solve_dense(std::vector<std::vector<double>> a, std::vector<double> b);

// Product prod_{i<s} (k - i) / (n - i) over real arguments.
double bracket_real(double k, double n, std::size_t s);

// |[(pn-a)/(n-a)]^b / [pn/n]^b - 1|.
double bracket_ratio_check(std::size_t n, double p, std::size_t a, std::size_t b);

inline constexpr std::size_t kMaxBinomialN = 10'000;

// E[X^-beta; X > 0] for X ~ Binomial(n, p), by exact summation.
double inverse_binomial_moment(std::size_t n, double p, std::size_t beta);

}  // namespace tte
