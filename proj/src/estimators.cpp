#include "tte/estimators.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "tte/errors.hpp"

namespace tte {

double lagrange_basis(std::span<const double> x, std::size_t t, double c) {
  double value = 1.0;
  for (std::size_t s = 0; s < x.size(); ++s) {
    if (s == t) continue;
    value *= (c - x[s]) / (x[t] - x[s]);
  }
  return value;
}

InterpolationWeights lagrange_weights(std::span<const double> x) {
  if (x.empty()) throw InvalidParameter("no interpolation targets");
  InterpolationWeights w;
  w.targets.assign(x.begin(), x.end());
  w.gammas.assign(x.size(), 0.0);
  for (std::size_t t = 0; t < x.size(); ++t) {
    if (!(x[t] >= 0.0 && x[t] <= 1.0)) {
      throw InvalidParameter("interpolation target outside [0, 1]");
    }
    if (t > 0) {
      if (x[t] < x[t - 1] - kDegenerateGap) {
        throw InvalidParameter("interpolation targets must be nondecreasing");
      }
      if (x[t] - x[t - 1] <= kDegenerateGap) w.degenerate = true;
    }
  }
  if (w.degenerate) return w;
  for (std::size_t t = 0; t < x.size(); ++t) {
    double at_one = 1.0;
    double at_zero = 1.0;
    for (std::size_t s = 0; s < x.size(); ++s) {
      if (s == t) continue;
      const double gap = x[t] - x[s];
      at_one *= (1.0 - x[s]) / gap;
      at_zero *= -x[s] / gap;
    }
    w.gammas[t] = at_one - at_zero;
  }
  return w;
}

Estimate tte_pi(const ObservationSet& obs, std::span<const double> x,
                std::string name) {
  if (obs.stage_count() != x.size()) {
    throw DimensionError("observation stages do not match target count");
  }
  const auto w = lagrange_weights(x);
  Estimate e;
  e.name = std::move(name);
  e.targets = w.targets;
  for (std::size_t t = 0; t < x.size(); ++t) {
    e.value += w.gammas[t] * obs.stage_means[t];
  }
  return e;
}

namespace {

void check_lengths(std::span<const std::uint8_t> z, std::span<const double> y) {
  if (z.size() != y.size()) {
    throw DimensionError("treatment and outcome vectors differ in length");
  }
}

struct GroupMeans {
  double treated_sum = 0.0;
  double control_sum = 0.0;
  std::size_t treated = 0;
  std::size_t control = 0;

  double difference() const {
    if (treated == 0) throw DegenerateGroup("no individuals in the treated group");
    if (control == 0) throw DegenerateGroup("no individuals in the control group");
    return treated_sum / static_cast<double>(treated) -
           control_sum / static_cast<double>(control);
  }
};

// Treated non-self in-neighbors of i.
std::size_t treated_neighbors(const Graph& g, std::span<const std::uint8_t> z,
                              std::size_t i) {
  std::size_t count = 0;
  for (NodeId j : g.in_neighbors(i)) {
    if (j != i && z[j]) ++count;
  }
  return count;
}

}  // namespace

Estimate dm(std::span<const std::uint8_t> z, std::span<const double> y) {
  check_lengths(z, y);
  GroupMeans groups;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i]) {
      groups.treated_sum += y[i];
      ++groups.treated;
    } else {
      groups.control_sum += y[i];
      ++groups.control;
    }
  }
  Estimate e;
  e.name = tags::kDm;
  e.value = groups.difference();
  return e;
}

Estimate dm_threshold(std::span<const std::uint8_t> z, std::span<const double> y,
                      const Graph& g, double lambda) {
  check_lengths(z, y);
  if (g.size() != z.size()) throw DimensionError("graph size differs from data");
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw InvalidParameter("lambda must lie in [0, 1]");
  }
  GroupMeans groups;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const std::size_t others = g.in_neighbors(i).size() - 1;
    bool qualifies = true;
    if (others > 0) {
      const std::size_t treated = treated_neighbors(g, z, i);
      const std::size_t agreeing = z[i] ? treated : others - treated;
      qualifies = static_cast<double>(agreeing) / static_cast<double>(others) >= lambda;
    }
    if (!qualifies) continue;
    if (z[i]) {
      groups.treated_sum += y[i];
      ++groups.treated;
    } else {
      groups.control_sum += y[i];
      ++groups.control;
    }
  }
  Estimate e;
  e.name = tags::kDmThreshold;
  e.lambda = lambda;
  e.value = groups.difference();
  return e;
}

Estimate ls_estimate(std::span<const std::uint8_t> z, std::span<const double> y,
                     const Graph& g, std::size_t beta, Covariate covariate) {
  check_lengths(z, y);
  if (g.size() != z.size()) throw DimensionError("graph size differs from data");
  if (beta < 1) throw InvalidParameter("beta must be at least 1");
  const std::size_t n = z.size();
  const std::size_t width = 2 * beta + 1;
  if (n < width) {
    throw Underdetermined("least squares needs n >= 2*beta + 1 = " +
                          std::to_string(width));
  }

  // Row layout: 1, X..X^beta, z, zX..zX^{beta-1}.
  Eigen::MatrixXd design(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(width));
  Eigen::VectorXd response(static_cast<Eigen::Index>(n));
  std::vector<double> full_exposure(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t others = g.in_neighbors(i).size() - 1;
    const auto treated = static_cast<double>(treated_neighbors(g, z, i));
    double x = 0.0;
    if (covariate == Covariate::kCount) {
      x = treated;
      full_exposure[i] = static_cast<double>(others);
    } else {
      x = others > 0 ? treated / static_cast<double>(others) : 0.0;
      full_exposure[i] = 1.0;
    }
    const auto row = static_cast<Eigen::Index>(i);
    const double zi = z[i] ? 1.0 : 0.0;
    double power = 1.0;
    for (std::size_t k = 0; k <= beta; ++k) {
      design(row, static_cast<Eigen::Index>(k)) = power;
      if (k < beta) design(row, static_cast<Eigen::Index>(beta + 1 + k)) = zi * power;
      power *= x;
    }
    response(row) = y[i];
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-10);
  const Eigen::VectorXd coef = svd.solve(response);

  // g(1, X) - g(0, 0) = sum_k gamma_k X^k + rho~ + sum_k gamma~_k X^k.
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = full_exposure[i];
    double effect = 0.0;
    double power = 1.0;
    for (std::size_t k = 0; k <= beta; ++k) {
      if (k > 0) effect += coef(static_cast<Eigen::Index>(k)) * power;
      if (k < beta) effect += coef(static_cast<Eigen::Index>(beta + 1 + k)) * power;
      power *= x;
    }
    total += effect;
  }

  Estimate e;
  e.name = covariate == Covariate::kCount ? tags::kLsNum : tags::kLsProp;
  e.value = total / static_cast<double>(n);
  e.coefficients.assign(coef.data(), coef.data() + coef.size());
  return e;
}

Estimate two_point_linear(const ObservationSet& obs, double x0, double xT) {
  if (obs.stage_count() < 2) throw DimensionError("need at least two stages");
  if (!(xT > x0)) throw InvalidParameter("two-point estimator needs xT > x0");
  Estimate e;
  e.name = tags::kTwoPoint;
  e.targets = {x0, xT};
  e.value = (obs.stage_means.back() - obs.stage_means.front()) / (xT - x0);
  return e;
}

}  // namespace tte
