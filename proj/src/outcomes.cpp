#include "tte/outcomes.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "tte/errors.hpp"
#include "tte/rng.hpp"

namespace tte {

ParametricModel sample_parametric_model(Graph g, std::size_t beta, double r,
                                        std::uint64_t seed) {
  if (beta < 1) throw InvalidParameter("beta must be at least 1");
  if (!(r >= 0.0)) throw InvalidParameter("r must be nonnegative");
  const std::size_t n = g.size();
  Rng rng(seed);

  ParametricModel m;
  m.beta = beta;
  m.r = r;
  m.baseline.resize(n);
  std::vector<double> self_weight(n);
  std::vector<double> influence(n);
  for (std::size_t i = 0; i < n; ++i) {
    m.baseline[i] = rng.uniform();
    do {
      self_weight[i] = rng.uniform();
    } while (self_weight[i] == 0.0);
  }
  for (std::size_t j = 0; j < n; ++j) influence[j] = rng.uniform(0.0, r);

  // Influence of j is split over its out-neighbors (self included) in
  // proportion to their in-degrees.
  std::vector<double> share_total(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (NodeId k : g.out_neighbors(j)) {
      share_total[j] += static_cast<double>(g.in_neighbors(k).size());
    }
  }

  m.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto nbrs = g.in_neighbors(i);
    const auto in_degree = static_cast<double>(nbrs.size());
    auto& w = m.weights[i];
    w.resize(nbrs.size());
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      const NodeId j = nbrs[k];
      w[k] = j == i ? self_weight[i] : influence[j] * in_degree / share_total[j];
    }
  }
  m.graph = std::move(g);
  return m;
}

namespace {

void check_width(std::size_t n, std::span<const std::uint8_t> z) {
  if (z.size() != n) {
    throw DimensionError("treatment vector has length " + std::to_string(z.size()) +
                         ", expected " + std::to_string(n));
  }
}

}  // namespace

std::vector<double> evaluate(const ParametricModel& model,
                             std::span<const std::uint8_t> z) {
  const std::size_t n = model.size();
  check_width(n, z);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto nbrs = model.graph.in_neighbors(i);
    const auto& w = model.weights[i];
    double exposed = 0.0;
    double total = 0.0;
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      total += w[k];
      if (z[nbrs[k]]) exposed += w[k];
    }
    double value = model.baseline[i] + exposed;
    const double ratio = exposed / total;
    double power = ratio;
    for (std::size_t l = 2; l <= model.beta; ++l) {
      power *= ratio;
      value += power;
    }
    y[i] = value;
  }
  return y;
}

std::vector<double> evaluate(const CoefficientModel& model,
                             std::span<const std::uint8_t> z) {
  const std::size_t n = model.size();
  check_width(n, z);
  std::vector<double> y(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double value = 0.0;
    for (const auto& [subset, c] : model.coefficients[i]) {
      const bool all_treated =
          std::all_of(subset.begin(), subset.end(), [&](NodeId j) { return z[j] != 0; });
      if (all_treated) value += c;
    }
    y[i] = value;
  }
  return y;
}

void CoefficientModel::validate() const {
  if (coefficients.size() != graph.size()) {
    throw DimensionError("coefficient table does not match graph size");
  }
  for (std::size_t i = 0; i < coefficients.size(); ++i) {
    const auto nbrs = graph.in_neighbors(i);
    for (const auto& [subset, c] : coefficients[i]) {
      if (subset.size() > beta) {
        throw InvalidParameter("subset larger than beta at node " + std::to_string(i));
      }
      if (!std::is_sorted(subset.begin(), subset.end()) ||
          std::adjacent_find(subset.begin(), subset.end()) != subset.end()) {
        throw InvalidParameter("subset keys must be sorted and distinct");
      }
      for (NodeId j : subset) {
        if (!std::binary_search(nbrs.begin(), nbrs.end(), j)) {
          throw InvalidParameter("subset leaves the neighborhood of node " +
                                 std::to_string(i));
        }
      }
      if (!std::isfinite(c)) throw InvalidParameter("non-finite coefficient");
    }
  }
}

double CoefficientModel::max_outcome() const {
  double best = 0.0;
  for (const auto& table : coefficients) {
    double sum = 0.0;
    for (const auto& entry : table) sum += std::abs(entry.second);
    best = std::max(best, sum);
  }
  return best;
}

std::vector<double> CoefficientModel::influence() const {
  std::vector<double> l(size(), 0.0);
  for (const auto& table : coefficients) {
    for (const auto& [subset, c] : table) {
      for (NodeId j : subset) l[j] += std::abs(c);
    }
  }
  return l;
}

double CoefficientModel::max_influence() const {
  const auto l = influence();
  return l.empty() ? 0.0 : *std::max_element(l.begin(), l.end());
}

double coefficient_tte(const CoefficientModel& model) {
  double total = 0.0;
  for (const auto& table : model.coefficients) {
    for (const auto& [subset, c] : table) {
      if (!subset.empty()) total += c;
    }
  }
  return total / static_cast<double>(model.size());
}

namespace {

// sum_{l=2..beta} x^l.
double power_sum(double x, std::size_t beta) {
  double total = 0.0;
  double power = x;
  for (std::size_t l = 2; l <= beta; ++l) {
    power *= x;
    total += power;
  }
  return total;
}

template <typename Visit>
void for_each_subset(std::size_t m, std::size_t max_size, Visit&& visit) {
  std::vector<std::size_t> picks;
  auto recurse = [&](auto&& self, std::size_t start) -> void {
    visit(picks);
    if (picks.size() == max_size) return;
    for (std::size_t k = start; k < m; ++k) {
      picks.push_back(k);
      self(self, k + 1);
      picks.pop_back();
    }
  };
  recurse(recurse, 0);
}

}  // namespace

CoefficientModel expand_to_coefficients(const ParametricModel& model) {
  const std::size_t n = model.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (model.graph.in_neighbors(i).size() > kMaxExpandableNeighborhood) {
      throw CapacityError("neighborhood of node " + std::to_string(i) +
                          " exceeds 20 nodes");
    }
  }
  // Coefficient of S in f(z) = sum_l (sum_j a_j z_j)^l is the Moebius sum
  // sum_{T subset S} (-1)^{|S|-|T|} f(1_T).
  CoefficientModel out;
  out.graph = model.graph;
  out.beta = model.beta;
  out.sigma = model.sigma;
  out.coefficients.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto nbrs = model.graph.in_neighbors(i);
    const auto& w = model.weights[i];
    double total = 0.0;
    for (double v : w) total += v;
    auto& table = out.coefficients[i];
    for_each_subset(nbrs.size(), model.beta, [&](const std::vector<std::size_t>& picks) {
      Subset key;
      key.reserve(picks.size());
      for (std::size_t k : picks) key.push_back(nbrs[k]);
      double c = 0.0;
      if (picks.empty()) {
        c = model.baseline[i];
      } else {
        const std::size_t s = picks.size();
        for (std::size_t mask = 1; mask < (std::size_t{1} << s); ++mask) {
          double share = 0.0;
          for (std::size_t b = 0; b < s; ++b) {
            if (mask >> b & 1U) share += w[picks[b]] / total;
          }
          const double term = power_sum(share, model.beta);
          c += (s - static_cast<std::size_t>(std::popcount(mask))) % 2 == 0 ? term : -term;
        }
        if (s == 1) c += w[picks.front()];
      }
      table.emplace(std::move(key), c);
    });
  }
  return out;
}

ObservationSet observe_outcomes(std::span<const std::vector<double>> outcomes,
                                double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw InvalidParameter("sigma must be nonnegative");
  ObservationSet obs;
  obs.sigma = sigma;
  obs.values.assign(outcomes.begin(), outcomes.end());
  Rng rng(seed);
  obs.stage_means.reserve(obs.values.size());
  for (auto& row : obs.values) {
    if (!obs.values.empty() && row.size() != obs.values.front().size()) {
      throw DimensionError("ragged outcome matrix");
    }
    double sum = 0.0;
    for (double& y : row) {
      if (sigma > 0.0) y += sigma * rng.normal();
      sum += y;
    }
    obs.stage_means.push_back(row.empty() ? 0.0 : sum / static_cast<double>(row.size()));
  }
  return obs;
}

nlohmann::json to_json(const ParametricModel& model) {
  nlohmann::json ctilde = nlohmann::json::array();
  for (std::size_t i = 0; i < model.size(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    const auto nbrs = model.graph.in_neighbors(i);
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      row.push_back({nbrs[k], model.weights[i][k]});
    }
    ctilde.push_back(std::move(row));
  }
  return {{"n", model.size()},     {"beta", model.beta},
          {"r", model.r},          {"sigma", model.sigma},
          {"baseline", model.baseline}, {"ctilde", std::move(ctilde)}};
}

nlohmann::json to_json(const CoefficientModel& model) {
  nlohmann::json coefficients = nlohmann::json::array();
  nlohmann::json neighbors = nlohmann::json::array();
  for (std::size_t i = 0; i < model.size(); ++i) {
    const auto nbrs = model.graph.in_neighbors(i);
    neighbors.push_back(std::vector<NodeId>(nbrs.begin(), nbrs.end()));
    nlohmann::json row = nlohmann::json::array();
    for (const auto& [subset, c] : model.coefficients[i]) row.push_back({subset, c});
    coefficients.push_back(std::move(row));
  }
  return {{"n", model.size()},
          {"beta", model.beta},
          {"sigma", model.sigma},
          {"in_neighbors", std::move(neighbors)},
          {"coefficients", std::move(coefficients)}};
}

ParametricModel parametric_model_from_json(const nlohmann::json& j) {
  try {
    const auto n = j.at("n").get<std::size_t>();
    const auto& ctilde = j.at("ctilde");
    if (ctilde.size() != n) throw InvalidParameter("ctilde has wrong length");
    std::vector<std::vector<NodeId>> lists(n);
    std::vector<std::vector<std::pair<NodeId, double>>> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& entry : ctilde[i]) {
        rows[i].emplace_back(entry.at(0).get<NodeId>(), entry.at(1).get<double>());
      }
      std::sort(rows[i].begin(), rows[i].end());
      for (const auto& [nbr, w] : rows[i]) lists[i].push_back(nbr);
    }
    ParametricModel m;
    m.graph = Graph(std::move(lists));
    m.beta = j.at("beta").get<std::size_t>();
    m.r = j.at("r").get<double>();
    m.sigma = j.at("sigma").get<double>();
    m.baseline = j.at("baseline").get<std::vector<double>>();
    if (m.baseline.size() != n) throw InvalidParameter("baseline has wrong length");
    m.weights.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& [nbr, w] : rows[i]) m.weights[i].push_back(w);
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidParameter(std::string("malformed model: ") + e.what());
  }
}

CoefficientModel coefficient_model_from_json(const nlohmann::json& j) {
  try {
    CoefficientModel m;
    m.beta = j.at("beta").get<std::size_t>();
    m.sigma = j.value("sigma", 0.0);
    m.graph = Graph(j.at("in_neighbors").get<std::vector<std::vector<NodeId>>>());
    const auto& rows = j.at("coefficients");
    if (rows.size() != m.graph.size()) {
      throw InvalidParameter("coefficients have wrong length");
    }
    m.coefficients.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (const auto& entry : rows[i]) {
        m.coefficients[i][entry.at(0).get<Subset>()] += entry.at(1).get<double>();
      }
    }
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidParameter(std::string("malformed model: ") + e.what());
  }
}

}  // namespace tte
