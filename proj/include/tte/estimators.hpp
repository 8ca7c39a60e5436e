#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tte/graph.hpp"
#include "tte/outcomes.hpp"

namespace tte {

// Stable estimator tags used in CSV output.
namespace tags {
inline constexpr const char* kPiBrdP = "pi_brd_p";
inline constexpr const char* kPiCrdK = "pi_crd_k";
inline constexpr const char* kPiBrdKhat = "pi_brd_khat";
inline constexpr const char* kDm = "dm";
inline constexpr const char* kDmThreshold = "dm_thresh";
inline constexpr const char* kLsNum = "ls_num";
inline constexpr const char* kLsProp = "ls_prop";
inline constexpr const char* kTwoPoint = "two_point";
}  // namespace tags

// Consecutive targets closer than this make the interpolant undefined.
inline constexpr double kDegenerateGap = 1e-12;

struct InterpolationWeights {
  std::vector<double> targets;
  // gamma_t = l_t(1) - l_t(0) for the Lagrange basis on the targets.
  std::vector<double> gammas;
  bool degenerate = false;
};

// Value of the t-th Lagrange basis polynomial on nodes x at point c.
double lagrange_basis(std::span<const double> x, std::size_t t, double c);

// Throws InvalidParameter when x decreases or leaves [0, 1]. Coincident
// consecutive targets yield all-zero weights and the degenerate flag.
InterpolationWeights lagrange_weights(std::span<const double> x);

struct Estimate {
  std::string name;
  double value = 0.0;
  std::vector<double> targets;
  std::vector<std::size_t> realized_counts;
  std::optional<double> lambda;
  std::vector<double> coefficients;
};

// Extrapolates stage means to full treatment and full control:
// sum_t gamma_t * mean_t, or 0 when the targets are degenerate.
Estimate tte_pi(const ObservationSet& obs, std::span<const double> x,
                std::string name = tags::kPiCrdK);

// Treated mean minus control mean. Throws DegenerateGroup when either
// group is empty.
Estimate dm(std::span<const std::uint8_t> z, std::span<const double> y);

// Difference in means restricted to individuals whose non-self
// in-neighbors share their own assignment in at least a lambda fraction.
// Individuals with no non-self in-neighbors always qualify.
Estimate dm_threshold(std::span<const std::uint8_t> z, std::span<const double> y,
                      const Graph& g, double lambda);

enum class Covariate { kCount, kFraction };

// Regression of outcomes on (1, X, ..., X^beta, z, zX, ..., zX^{beta-1})
// with X the count or fraction of treated non-self in-neighbors, solved in
// the minimum-norm least-squares sense. Coefficients are reported in the
// order (rho, gamma_1..gamma_beta, rho~, gamma~_1..gamma~_{beta-1}).
Estimate ls_estimate(std::span<const std::uint8_t> z, std::span<const double> y,
                     const Graph& g, std::size_t beta, Covariate covariate);

// (mean_T - mean_0) / (xT - x0).
Estimate two_point_linear(const ObservationSet& obs, double x0, double xT);

}  // namespace tte
