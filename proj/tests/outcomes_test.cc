#include "tte/outcomes.hpp"

#include <cmath>

#include "gtest/gtest.h"
#include "tte/errors.hpp"
#include "tte/rng.hpp"
#include "tte/verify.hpp"

namespace tte {
namespace {

Graph pair_graph() { return Graph({{0, 1}, {0, 1}}); }

Treatment bits(std::size_t n, std::size_t mask) {
  Treatment z(n);
  for (std::size_t j = 0; j < n; ++j) z[j] = (mask >> j) & 1U;
  return z;
}

TEST(ParametricModelTest, ZeroSpilloverHasNoCrossWeights) {
  const auto m = sample_parametric_model(generate_configuration_model(50, 2.5, 1), 2, 0.0, 9);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto nbrs = m.graph.in_neighbors(i);
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      if (nbrs[k] == i) {
        EXPECT_GT(m.weights[i][k], 0.0);
        EXPECT_LE(m.weights[i][k], 1.0);
      } else {
        EXPECT_EQ(m.weights[i][k], 0.0);
      }
    }
  }
}

TEST(ParametricModelTest, SingleNode) {
  const auto m = sample_parametric_model(Graph(std::vector<std::vector<NodeId>>{{0}}), 3, 2.0, 4);
  ASSERT_EQ(m.weights[0].size(), 1u);
  const double c0 = m.baseline[0];
  const double w = m.weights[0][0];
  EXPECT_DOUBLE_EQ(evaluate(m, Treatment{0})[0], c0);
  EXPECT_DOUBLE_EQ(evaluate(m, Treatment{1})[0], c0 + w + 2.0);
}

TEST(ParametricModelTest, SpilloverShareMatchesDefinition) {
  // i is one of j's out-neighbours, so its share of v_j never exceeds v_j <= r.
  const Graph g = generate_configuration_model(80, 2.5, 3);
  const auto m = sample_parametric_model(g, 1, 1.5, 6);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto nbrs = g.in_neighbors(i);
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      if (nbrs[k] == i) continue;
      EXPECT_GE(m.weights[i][k], 0.0);
      EXPECT_LE(m.weights[i][k], 1.5);
    }
  }
}

TEST(ParametricModelTest, SeededDeterminism) {
  const Graph g = generate_configuration_model(100, 2.5, 2);
  const auto a = sample_parametric_model(g, 2, 1.0, 5);
  const auto b = sample_parametric_model(g, 2, 1.0, 5);
  EXPECT_EQ(a.baseline, b.baseline);
  EXPECT_EQ(a.weights, b.weights);
}

TEST(ParametricModelTest, RejectsBadParameters) {
  EXPECT_THROW(sample_parametric_model(pair_graph(), 0, 1.0, 1), InvalidParameter);
  EXPECT_THROW(sample_parametric_model(pair_graph(), 1, -1.0, 1), InvalidParameter);
  const auto m = sample_parametric_model(pair_graph(), 1, 1.0, 1);
  EXPECT_THROW(evaluate(m, Treatment{1}), DimensionError);
}

TEST(ParametricModelTest, HandComputedOutcomes) {
  ParametricModel m;
  m.graph = pair_graph();
  m.beta = 2;
  m.baseline = {0.5, 0.25};
  m.weights = {{0.4, 0.1}, {0.3, 0.2}};
  const auto y = evaluate(m, Treatment{1, 0});
  EXPECT_DOUBLE_EQ(y[0], 0.5 + 0.4 + 0.8 * 0.8);
  EXPECT_DOUBLE_EQ(y[1], 0.25 + 0.3 + 0.6 * 0.6);
  // TTE = mean of (sum w + 1).
  EXPECT_DOUBLE_EQ(true_tte(m), (0.5 + 1.0 + 0.5 + 1.0) / 2.0);
}

TEST(ParametricModelTest, NoSpilloverTteIsSelfWeightPlusPowers) {
  const Graph g = generate_configuration_model(40, 2.5, 8);
  const auto m = sample_parametric_model(g, 2, 0.0, 3);
  double expected = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (double w : m.weights[i]) expected += w;
  }
  expected = expected / static_cast<double>(m.size()) + 1.0;
  EXPECT_NEAR(true_tte(m), expected, 1e-12);
}

TEST(CoefficientModelTest, SingleEntryExample) {
  CoefficientModel m;
  m.graph = pair_graph();
  m.beta = 2;
  m.coefficients = {{{{}, 1.0}, {{0, 1}, 2.0}}, {{{1}, -0.5}}};
  m.validate();
  EXPECT_EQ(evaluate(m, Treatment{1, 0}), (std::vector<double>{1.0, 0.0}));
  EXPECT_EQ(evaluate(m, Treatment{1, 1}), (std::vector<double>{3.0, -0.5}));
  EXPECT_DOUBLE_EQ(coefficient_tte(m), (2.0 - 0.5) / 2.0);
  EXPECT_DOUBLE_EQ(true_tte(m), coefficient_tte(m));
  EXPECT_DOUBLE_EQ(m.max_outcome(), 3.0);
  EXPECT_EQ(m.influence(), (std::vector<double>{2.0, 2.5}));
  EXPECT_DOUBLE_EQ(m.max_influence(), 2.5);
}

TEST(CoefficientModelTest, ValidationRejectsBadKeys) {
  CoefficientModel m;
  m.graph = Graph({{0}, {0, 1}});
  m.beta = 1;
  m.coefficients = {{{{0, 1}, 1.0}}, {}};
  EXPECT_THROW(m.validate(), InvalidParameter);
  m.beta = 2;
  EXPECT_THROW(m.validate(), InvalidParameter);  // 1 is not an in-neighbour of 0
  m.coefficients = {{}, {{{1, 0}, 1.0}}};
  EXPECT_THROW(m.validate(), InvalidParameter);
  m.coefficients = {{}, {{{0, 1}, std::nan("")}}};
  EXPECT_THROW(m.validate(), InvalidParameter);
  m.coefficients = {{}};
  EXPECT_THROW(m.validate(), DimensionError);
}

TEST(CoefficientModelTest, TtePathsAgreeOnRandomModels) {
  Rng rng(12);
  for (int rep = 0; rep < 50; ++rep) {
    const auto m = verify::random_coefficient_model(2 + rng.below(6), 1 + rng.below(3), rng());
    EXPECT_NEAR(true_tte(m), coefficient_tte(m), 1e-12);
  }
}

TEST(ExpansionTest, LinearModelIsCopied) {
  ParametricModel m;
  m.graph = pair_graph();
  m.beta = 1;
  m.baseline = {0.5, 0.25};
  m.weights = {{0.4, 0.1}, {0.3, 0.2}};
  const auto c = expand_to_coefficients(m);
  EXPECT_DOUBLE_EQ(c.coefficients[0].at({}), 0.5);
  EXPECT_DOUBLE_EQ(c.coefficients[0].at({0}), 0.4);
  EXPECT_DOUBLE_EQ(c.coefficients[0].at({1}), 0.1);
  EXPECT_EQ(c.coefficients[0].count({0, 1}), 0u);
}

TEST(ExpansionTest, QuadraticPairTerm) {
  ParametricModel m;
  m.graph = pair_graph();
  m.beta = 2;
  m.baseline = {0.0, 0.0};
  m.weights = {{0.4, 0.1}, {0.3, 0.2}};
  const auto c = expand_to_coefficients(m);
  const double w = 0.5;
  EXPECT_NEAR(c.coefficients[0].at({0, 1}), 2 * 0.4 * 0.1 / (w * w), 1e-14);
  EXPECT_NEAR(c.coefficients[0].at({0}), 0.4 + 0.64, 1e-14);
}

TEST(ExpansionTest, AgreesWithParametricFormEverywhere) {
  Rng rng(31);
  for (int rep = 0; rep < 40; ++rep) {
    const std::size_t n = 1 + rng.below(6);
    const auto g = verify::random_small_graph(n, rng());
    const auto m = sample_parametric_model(g, 1 + rng.below(4), 2.0 * rng.uniform(), rng());
    const auto c = expand_to_coefficients(m);
    c.validate();
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
      const auto z = bits(n, mask);
      const auto a = evaluate(m, z);
      const auto b = evaluate(c, z);
      for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(a[i], b[i], 1e-10);
    }
  }
}

TEST(ExpansionTest, LargeNeighborhoodIsRefused) {
  std::vector<std::vector<NodeId>> lists(22);
  for (NodeId i = 0; i < 22; ++i) lists[0].push_back(i);
  for (NodeId i = 1; i < 22; ++i) lists[i] = {i};
  const auto m = sample_parametric_model(Graph(lists), 2, 1.0, 1);
  EXPECT_THROW(expand_to_coefficients(m), CapacityError);
}

TEST(OutcomePropertiesTest, BoundedAndMonotone) {
  Rng rng(5);
  const Graph g = generate_configuration_model(60, 2.5, 4);
  const auto m = sample_parametric_model(g, 3, 1.25, 7);
  double ymax = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    double bound = m.baseline[i] + static_cast<double>(m.beta - 1);
    for (double w : m.weights[i]) bound += w;
    ymax = std::max(ymax, bound);
  }
  for (int rep = 0; rep < 50; ++rep) {
    Treatment lo(m.size());
    for (auto& v : lo) v = rng.below(2);
    Treatment hi = lo;
    for (auto& v : hi) v = v || rng.below(2);
    const auto a = evaluate(m, lo);
    const auto b = evaluate(m, hi);
    for (std::size_t i = 0; i < m.size(); ++i) {
      EXPECT_LE(std::abs(a[i]), ymax + 1e-12);
      EXPECT_LE(a[i], b[i] + 1e-12);
    }
  }
}

TEST(ObserveTest, NoiselessIsExact) {
  const auto m = sample_parametric_model(generate_configuration_model(30, 2.5, 1), 2, 1.0, 2);
  const std::vector<std::size_t> k = {0, 10, 20};
  const auto s = crd_schedule(k, 30, 3);
  const auto obs = observe(m, s, 4);
  ASSERT_EQ(obs.stage_count(), 3u);
  for (std::size_t t = 0; t < 3; ++t) {
    const auto y = evaluate(m, s.stage(t));
    EXPECT_EQ(obs.values[t], y);
    double mean = 0.0;
    for (double v : y) mean += v;
    EXPECT_NEAR(obs.stage_means[t], mean / 30.0, 1e-14);
  }
}

TEST(ObserveTest, NoiseMomentsAndDeterminism) {
  const std::vector<std::vector<double>> outcomes = {std::vector<double>(100000, 1.0)};
  const auto obs = observe_outcomes(outcomes, 0.5, 77);
  double mean = 0.0;
  for (double v : obs.values[0]) mean += v;
  mean /= 100000.0;
  double var = 0.0;
  for (double v : obs.values[0]) var += (v - mean) * (v - mean);
  var /= 100000.0;
  EXPECT_NEAR(mean, 1.0, 0.02);
  EXPECT_NEAR(var, 0.25, 0.05 * 0.25);
  EXPECT_EQ(observe_outcomes(outcomes, 0.5, 77).values, obs.values);
  EXPECT_THROW(observe_outcomes(outcomes, -1.0, 1), InvalidParameter);
}

TEST(ObserveTest, WidthMismatch) {
  const auto m = sample_parametric_model(pair_graph(), 1, 1.0, 1);
  const std::vector<std::size_t> k = {0, 1};
  EXPECT_THROW(observe(m, crd_schedule(k, 3, 1), 1), DimensionError);
}

TEST(ModelJsonTest, RoundTrips) {
  const auto m = sample_parametric_model(generate_configuration_model(25, 2.5, 2), 2, 1.0, 3);
  const auto back = parametric_model_from_json(nlohmann::json::parse(to_json(m).dump()));
  EXPECT_EQ(back.graph, m.graph);
  EXPECT_EQ(back.baseline, m.baseline);
  EXPECT_EQ(back.weights, m.weights);
  EXPECT_EQ(back.beta, m.beta);

  const auto c = expand_to_coefficients(m);
  const auto cb = coefficient_model_from_json(nlohmann::json::parse(to_json(c).dump()));
  EXPECT_EQ(cb.graph, c.graph);
  EXPECT_EQ(cb.coefficients, c.coefficients);
}

TEST(ModelJsonTest, RejectsMalformed) {
  EXPECT_THROW(parametric_model_from_json(nlohmann::json::object()), InvalidParameter);
  EXPECT_THROW(parametric_model_from_json(nlohmann::json::parse(
                   R"({"n":2,"beta":1,"r":0,"sigma":0,"baseline":[0,0],"ctilde":[[[0,1]]]})")),
               InvalidParameter);
  EXPECT_THROW(coefficient_model_from_json(nlohmann::json::parse(
                   R"({"beta":1,"in_neighbors":[[0]],"coefficients":[[[[0,1],1.0]]]})")),
               InvalidParameter);
}

}  // namespace
}  // namespace tte
