#include "tte/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tte/errors.hpp"
#include "tte/estimators.hpp"

namespace tte {
namespace {

double stage_mean(const CoefficientModel& model, std::span<const std::uint8_t> z) {
  const auto y = evaluate(model, z);
  double sum = 0.0;
  for (double v : y) sum += v;
  return sum / static_cast<double>(y.size());
}

double interpolate(std::span<const double> means, std::span<const double> x) {
  const auto w = lagrange_weights(x);
  double value = 0.0;
  for (std::size_t t = 0; t < means.size(); ++t) value += w.gammas[t] * means[t];
  return value;
}

void finish(EnumerationReport& report, std::span<const double> values,
            std::span<const double> probs) {
  double mean = 0.0;
  for (std::size_t a = 0; a < values.size(); ++a) mean += probs[a] * values[a];
  double var = 0.0;
  for (std::size_t a = 0; a < values.size(); ++a) {
    const double d = values[a] - mean;
    var += probs[a] * d * d;
  }
  report.expectation = mean;
  report.variance = var;
  report.enumeration_size = values.size();
}

}  // namespace

void for_each_brd_rollout(
    std::size_t n, std::span<const double> p,
    const std::function<void(const std::vector<Treatment>&, double)>& visit) {
  if (p.empty()) throw InvalidParameter("empty probability vector");
  for (std::size_t t = 0; t < p.size(); ++t) {
    if (!(p[t] >= 0.0 && p[t] <= 1.0) || (t > 0 && p[t] < p[t - 1])) {
      throw InvalidParameter("probabilities must be nondecreasing in [0, 1]");
    }
  }
  const std::size_t horizon = p.size() - 1;

  // Bucket b <= T means first treated at stage b; bucket T+1 means never.
  struct Bucket {
    std::size_t first_stage;
    double prob;
  };
  std::vector<Bucket> buckets;
  for (std::size_t b = 0; b <= horizon + 1; ++b) {
    const double lo = b == 0 ? 0.0 : p[b - 1];
    const double hi = b <= horizon ? p[b] : 1.0;
    if (hi - lo > 0.0) buckets.push_back({b, hi - lo});
  }

  const std::size_t radix = buckets.size();
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= radix;

  std::vector<std::size_t> digits(n, 0);
  std::vector<Treatment> stages(p.size(), Treatment(n, 0));
  for (std::size_t code = 0; code < total; ++code) {
    double prob = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Bucket& bucket = buckets[digits[i]];
      prob *= bucket.prob;
      for (std::size_t t = 0; t <= horizon; ++t) {
        stages[t][i] = bucket.first_stage <= t ? 1 : 0;
      }
    }
    visit(stages, prob);
    for (std::size_t i = 0; i < n; ++i) {
      if (++digits[i] < radix) break;
      digits[i] = 0;
    }
  }
}

namespace {

double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  double value = 1.0;
  for (std::size_t i = 0; i < k; ++i) {
    value = value * static_cast<double>(n - i) / static_cast<double>(i + 1);
  }
  return std::round(value);
}

void check_counts(std::size_t n, std::span<const std::size_t> k) {
  if (k.empty()) throw InvalidParameter("empty count vector");
  for (std::size_t t = 0; t < k.size(); ++t) {
    if (k[t] > n || (t > 0 && k[t] < k[t - 1])) {
      throw InvalidParameter("counts must be nondecreasing and at most n");
    }
  }
}

}  // namespace

double crd_rollout_count(std::size_t n, std::span<const std::size_t> k) {
  check_counts(n, k);
  double size = 1.0;
  for (std::size_t t = 0; t < k.size(); ++t) {
    const std::size_t prev = t == 0 ? 0 : k[t - 1];
    size *= binomial(n - prev, k[t] - prev);
  }
  return size;
}

void for_each_crd_rollout(std::size_t n, std::span<const std::size_t> k,
                          const std::function<void(const std::vector<Treatment>&)>& visit) {
  check_counts(n, k);
  std::vector<Treatment> stages(k.size(), Treatment(n, 0));
  Treatment z(n, 0);

  // Depth-first over stages; stage t adds k_t - k_{t-1} untreated
  // individuals, chosen in increasing index order.
  auto add_stage = [&](auto&& self, std::size_t t) -> void {
    if (t == k.size()) {
      visit(stages);
      return;
    }
    const std::size_t need = k[t] - (t == 0 ? 0 : k[t - 1]);
    auto choose = [&](auto&& pick, std::size_t start, std::size_t left) -> void {
      if (left == 0) {
        stages[t] = z;
        self(self, t + 1);
        return;
      }
      for (std::size_t i = start; i < n; ++i) {
        if (z[i]) continue;
        z[i] = 1;
        pick(pick, i + 1, left - 1);
        z[i] = 0;
      }
    };
    choose(choose, 0, need);
  };
  add_stage(add_stage, 0);
}

EnumerationReport exact_moments_brd(const CoefficientModel& model,
                                    std::span<const double> p, WeightsMode mode) {
  const std::size_t n = model.size();
  if (p.empty()) throw InvalidParameter("empty probability vector");
  const std::size_t horizon = p.size() - 1;
  if (n > kMaxBrdEnumerationN || horizon > kMaxBrdEnumerationHorizon) {
    throw CapacityError("BRD enumeration limited to n <= 8 and T <= 3");
  }

  std::vector<double> values;
  std::vector<double> probs;
  std::vector<double> means(p.size());
  std::vector<double> x(p.size());
  for_each_brd_rollout(n, p, [&](const std::vector<Treatment>& stages, double prob) {
    for (std::size_t t = 0; t <= horizon; ++t) {
      means[t] = stage_mean(model, stages[t]);
      if (mode == WeightsMode::kTargets) {
        x[t] = p[t];
      } else {
        const auto count = std::count(stages[t].begin(), stages[t].end(), 1);
        x[t] = static_cast<double>(count) / static_cast<double>(n);
      }
    }
    values.push_back(interpolate(means, x));
    probs.push_back(prob);
  });

  EnumerationReport report;
  report.n = n;
  report.horizon = horizon;
  report.design = DesignKind::kBernoulli;
  report.targets.assign(p.begin(), p.end());
  finish(report, values, probs);
  return report;
}

EnumerationReport exact_moments_crd(const CoefficientModel& model,
                                    std::span<const std::size_t> k) {
  const std::size_t n = model.size();
  if (n > kMaxCrdEnumerationN) throw CapacityError("CRD enumeration limited to n <= 7");
  const double size = crd_rollout_count(n, k);
  if (size > static_cast<double>(kMaxCrdEnumerationSize)) {
    throw CapacityError("CRD enumeration exceeds 10^6 rollouts");
  }

  std::vector<double> x(k.size());
  for (std::size_t t = 0; t < k.size(); ++t) {
    x[t] = static_cast<double>(k[t]) / static_cast<double>(n);
  }
  const auto weights = lagrange_weights(x);

  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(size));
  for_each_crd_rollout(n, k, [&](const std::vector<Treatment>& stages) {
    double value = 0.0;
    for (std::size_t t = 0; t < stages.size(); ++t) {
      value += weights.gammas[t] * stage_mean(model, stages[t]);
    }
    values.push_back(value);
  });

  const std::vector<double> probs(values.size(), 1.0 / static_cast<double>(values.size()));
  EnumerationReport report;
  report.n = n;
  report.horizon = k.size() - 1;
  report.design = DesignKind::kComplete;
  report.targets.assign(k.begin(), k.end());
  finish(report, values, probs);
  return report;
}

namespace {

void require_linear(const CoefficientModel& model) {
  if (model.beta != 1) {
    throw InvalidParameter("closed-form bound applies to linear models only");
  }
}

}  // namespace

double linear_variance_bound_brd(const CoefficientModel& model, double p, double sigma) {
  require_linear(model);
  if (!(p > 0.0 && p <= 1.0)) throw InvalidParameter("p must lie in (0, 1]");
  const auto n = static_cast<double>(model.size());
  const double l_max = model.max_influence();
  return (1.0 - p) / (n * p) * l_max * l_max + 2.0 * sigma * sigma / (n * p * p);
}

double linear_variance_bound_crd(const CoefficientModel& model, std::size_t k,
                                 double sigma) {
  require_linear(model);
  const std::size_t size = model.size();
  if (k == 0 || k > size) throw InvalidParameter("k must lie in [1, n]");
  const auto n = static_cast<double>(size);
  const auto kd = static_cast<double>(k);
  const double l_max = model.max_influence();
  const double network = size == 1 ? 0.0 : (n - kd) / ((n - 1.0) * kd) * l_max * l_max;
  return network + 2.0 * sigma * sigma * n / (kd * kd);
}

double weight_objective(std::span<const double> alphas, std::span<const double> p,
                        double network_factor) {
  double total = 0.0;
  for (std::size_t t = 0; t < p.size(); ++t) {
    for (std::size_t s = 0; s < p.size(); ++s) {
      total += alphas[t] * alphas[s] * (p[std::min(t, s)] - p[t] * p[s]);
    }
  }
  return network_factor * total;
}

std::vector<double> solve_dense(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t m = b.size();
  double scale = 0.0;
  for (const auto& row : a) {
    for (double v : row) scale = std::max(scale, std::abs(v));
  }
  for (std::size_t col = 0; col < m; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < m; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    if (std::abs(a[pivot][col]) <= 1e-13 * scale) {
      throw InvalidParameter("singular linear system");
    }
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = col + 1; r < m; ++r) {
      const double factor = a[r][col] / a[col][col];
      if (factor == 0.0) continue;
      for (std::size_t c = col; c < m; ++c) a[r][c] -= factor * a[col][c];
      b[r] -= factor * b[col];
    }
  }
  std::vector<double> x(m);
  for (std::size_t r = m; r-- > 0;) {
    double acc = b[r];
    for (std::size_t c = r + 1; c < m; ++c) acc -= a[r][c] * x[c];
    x[r] = acc / a[r][r];
  }
  return x;
}

WeightSolution optimal_weights(std::span<const double> p, double network_factor) {
  if (p.size() < 2) throw InvalidParameter("need at least two stages");
  if (!(network_factor > 0.0)) throw InvalidParameter("network factor must be positive");
  for (std::size_t t = 0; t < p.size(); ++t) {
    if (!(p[t] >= 0.0 && p[t] <= 1.0)) throw InvalidParameter("p outside [0, 1]");
    if (t > 0 && !(p[t] > p[t - 1])) {
      throw InvalidParameter("probabilities must be strictly increasing");
    }
  }
  // Stationarity: 2 Q a + lambda 1 - mu p = 0; then sum a = 0, a.p = 1.
  const std::size_t m = p.size();
  const std::size_t dim = m + 2;
  std::vector<std::vector<double>> kkt(dim, std::vector<double>(dim, 0.0));
  std::vector<double> rhs(dim, 0.0);
  for (std::size_t t = 0; t < m; ++t) {
    for (std::size_t s = 0; s < m; ++s) {
      kkt[t][s] = 2.0 * network_factor * (p[std::min(t, s)] - p[t] * p[s]);
    }
    kkt[t][m] = 1.0;
    kkt[t][m + 1] = -p[t];
    kkt[m][t] = 1.0;
    kkt[m + 1][t] = p[t];
  }
  rhs[m + 1] = 1.0;
  const auto x = solve_dense(std::move(kkt), std::move(rhs));

  WeightSolution out;
  out.alphas.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(m));
  out.lambda = x[m];
  out.mu = x[m + 1];
  out.objective = weight_objective(out.alphas, p, network_factor);
  return out;
}

double bracket_real(double k, double n, std::size_t s) {
  double value = 1.0;
  for (std::size_t i = 0; i < s; ++i) {
    const auto di = static_cast<double>(i);
    value *= (k - di) / (n - di);
  }
  return value;
}

double bracket_ratio_check(std::size_t n, double p, std::size_t a, std::size_t b) {
  if (!(p > 0.0 && p <= 1.0)) throw InvalidParameter("p must lie in (0, 1]");
  const auto nd = static_cast<double>(n);
  const double treated = p * nd;
  if (!(treated > static_cast<double>(a + b))) {
    throw InvalidParameter("bracket ratio needs pn > a + b");
  }
  const auto ad = static_cast<double>(a);
  const double shifted = bracket_real(treated - ad, nd - ad, b);
  const double base = bracket_real(treated, nd, b);
  return std::abs(shifted / base - 1.0);
}

double inverse_binomial_moment(std::size_t n, double p, std::size_t beta) {
  if (n == 0) throw InvalidParameter("n must be at least 1");
  if (n > kMaxBinomialN) throw CapacityError("exact summation limited to n <= 10^4");
  if (!(p > 0.0 && p <= 1.0)) throw InvalidParameter("p must lie in (0, 1]");
  if (beta < 1) throw InvalidParameter("beta must be at least 1");
  if (static_cast<double>(n) * p < 1.0) throw InvalidParameter("need np >= 1");
  const auto b = static_cast<double>(beta);
  if (p == 1.0) return std::pow(static_cast<double>(n), -b);

  const double log_p = std::log(p);
  const double log_q = std::log1p(-p);
  const double log_n_fact = std::lgamma(static_cast<double>(n) + 1.0);
  double total = 0.0;
  for (std::size_t x = 1; x <= n; ++x) {
    const auto xd = static_cast<double>(x);
    const double log_pmf = log_n_fact - std::lgamma(xd + 1.0) -
                           std::lgamma(static_cast<double>(n - x) + 1.0) + xd * log_p +
                           static_cast<double>(n - x) * log_q;
    total += std::exp(log_pmf - b * std::log(xd));
  }
  return total;
}

}  // namespace tte
