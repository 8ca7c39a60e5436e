#include "tte/design.hpp"

#include <cmath>
#include <sstream>

#include "gtest/gtest.h"
#include "tte/errors.hpp"
#include "tte/oracle.hpp"
#include "tte/rng.hpp"

namespace tte {
namespace {

TEST(BracketTest, Examples) {
  EXPECT_DOUBLE_EQ(bracket(2, 4, 2), 1.0 / 6.0);
  EXPECT_EQ(bracket(3, 7, 0), 1.0);
  EXPECT_EQ(bracket(0, 7, 0), 1.0);
  EXPECT_EQ(bracket(0, 5, 1), 0.0);
  EXPECT_EQ(bracket(2, 5, 3), 0.0);
  EXPECT_THROW(bracket(2, 3, 4), InvalidParameter);
  EXPECT_THROW(bracket(0, 0, 0), InvalidParameter);
}

TEST(BrdScheduleTest, BoundaryTargetsAreDeterministic) {
  const std::vector<double> p = {0.0, 0.5, 1.0};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = brd_schedule(p, 30, seed);
    EXPECT_EQ(s.realized_counts()[0], 0u);
    EXPECT_EQ(s.realized_counts()[2], 30u);
  }
}

TEST(BrdScheduleTest, ExactMarginalByBucketEnumeration) {
  // Sum the bucket probabilities of every rollout in which individual i is
  // treated at stage 1.
  const std::vector<double> p = {0.0, 0.35};
  for (std::size_t n = 1; n <= 6; ++n) {
    std::vector<double> treated(n, 0.0);
    double total = 0.0;
    for_each_brd_rollout(n, p, [&](const std::vector<Treatment>& z, double prob) {
      total += prob;
      for (std::size_t i = 0; i < n; ++i) {
        if (z[1][i]) treated[i] += prob;
      }
    });
    EXPECT_NEAR(total, 1.0, 1e-14);
    for (double m : treated) EXPECT_NEAR(m, 0.35, 1e-14);
  }
}

TEST(BrdScheduleTest, SamplerMatchesMarginalsByMonteCarlo) {
  const std::vector<double> p = {0.1, 0.4, 0.7};
  constexpr int kDraws = 100000;
  std::vector<double> hits(p.size(), 0.0);
  double pair = 0.0;
  for (int d = 0; d < kDraws; ++d) {
    const auto s = brd_schedule(p, 3, static_cast<std::uint64_t>(d));
    for (std::size_t t = 0; t < p.size(); ++t) hits[t] += s.stage(t)[0];
    pair += s.stage(0)[1] * s.stage(2)[2];
  }
  for (std::size_t t = 0; t < p.size(); ++t) {
    const double se = std::sqrt(p[t] * (1 - p[t]) / kDraws);
    EXPECT_NEAR(hits[t] / kDraws, p[t], 4 * se);
  }
  const double joint = 0.1 * 0.7;
  EXPECT_NEAR(pair / kDraws, joint, 4 * std::sqrt(joint * (1 - joint) / kDraws));
}

TEST(BrdScheduleTest, RejectsInvalidTargets) {
  const std::vector<double> decreasing = {0.0, 0.5, 0.4};
  const std::vector<double> above = {0.0, 1.2};
  const std::vector<double> negative = {-0.1, 0.2};
  EXPECT_THROW(brd_schedule(decreasing, 5, 0), InvalidParameter);
  EXPECT_THROW(brd_schedule(above, 5, 0), InvalidParameter);
  EXPECT_THROW(brd_schedule(negative, 5, 0), InvalidParameter);
}

TEST(BrdScheduleTest, SeededDeterminism) {
  const std::vector<double> p = {0.0, 0.2, 0.6};
  EXPECT_EQ(brd_schedule(p, 100, 3), brd_schedule(p, 100, 3));
}

TEST(CrdScheduleTest, FullTreatment) {
  const std::vector<std::size_t> k = {0, 9};
  const auto s = crd_schedule(k, 9, 4);
  for (std::uint8_t z : s.stage(1)) EXPECT_EQ(z, 1);
  for (std::uint8_t z : s.stage(0)) EXPECT_EQ(z, 0);
}

TEST(CrdScheduleTest, PairProbabilityBySubsetEnumeration) {
  const std::vector<std::size_t> k = {0, 2};
  double both = 0.0;
  double count = 0.0;
  for_each_crd_rollout(4, k, [&](const std::vector<Treatment>& z) {
    count += 1.0;
    if (z[1][0] && z[1][3]) both += 1.0;
  });
  EXPECT_EQ(count, 6.0);
  EXPECT_DOUBLE_EQ(both / count, 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(both / count, bracket(2, 4, 2));
}

TEST(CrdScheduleTest, SamplerMatchesBracketByMonteCarlo) {
  const std::vector<std::size_t> k = {0, 2};
  constexpr int kDraws = 100000;
  double both = 0.0;
  for (int d = 0; d < kDraws; ++d) {
    const auto s = crd_schedule(k, 4, static_cast<std::uint64_t>(d));
    both += s.stage(1)[1] * s.stage(1)[2];
  }
  const double expected = 1.0 / 6.0;
  EXPECT_NEAR(both / kDraws, expected, 4 * std::sqrt(expected * (1 - expected) / kDraws));
}

TEST(CrdScheduleTest, ExactCountsEveryDraw) {
  const std::vector<std::size_t> k = {0, 1, 3};
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto s = crd_schedule(k, 5, seed);
    EXPECT_EQ(s.realized_counts()[0], 0u);
    EXPECT_EQ(s.realized_counts()[1], 1u);
    EXPECT_EQ(s.realized_counts()[2], 3u);
  }
}

TEST(CrdScheduleTest, RejectsInvalidTargets) {
  const std::vector<std::size_t> decreasing = {0, 3, 2};
  const std::vector<std::size_t> too_many = {0, 6};
  EXPECT_THROW(crd_schedule(decreasing, 5, 0), InvalidParameter);
  EXPECT_THROW(crd_schedule(too_many, 5, 0), InvalidParameter);
}

TEST(ScheduleTest, MonotoneAndExactOnRandomTargets) {
  Rng rng(17);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 1 + rng.below(60);
    const std::size_t stages = 1 + rng.below(5);
    std::vector<std::size_t> k(stages);
    std::vector<double> p(stages);
    for (std::size_t t = 0; t < stages; ++t) {
      k[t] = rng.below(n + 1);
      p[t] = rng.uniform();
    }
    std::sort(k.begin(), k.end());
    std::sort(p.begin(), p.end());
    const auto crd = crd_schedule(k, n, rng());
    const auto brd = brd_schedule(p, n, rng());
    for (std::size_t t = 0; t < stages; ++t) EXPECT_EQ(crd.realized_counts()[t], k[t]);
    for (const auto* s : {&crd, &brd}) {
      for (std::size_t t = 1; t < stages; ++t) {
        for (std::size_t i = 0; i < n; ++i) EXPECT_LE(s->stage(t - 1)[i], s->stage(t)[i]);
      }
    }
  }
}

TEST(ScheduleTest, ConstructorRejectsWithdrawnTreatment) {
  EXPECT_THROW(TreatmentSchedule(DesignKind::kBernoulli, {0.2, 0.5}, {{1, 0}, {0, 1}}),
               InvalidParameter);
  EXPECT_THROW(TreatmentSchedule(DesignKind::kComplete, {0, 2}, {{0, 0}, {0, 1}}),
               InvalidParameter);
  EXPECT_THROW(TreatmentSchedule(DesignKind::kBernoulli, {0.2}, {{0}, {1}}), DimensionError);
}

TEST(ScheduleTest, MinGapAndFractions) {
  const std::vector<std::size_t> k = {0, 3, 5, 10};
  const auto s = crd_schedule(k, 10, 1);
  EXPECT_EQ(s.min_gap(), 2.0);
  const auto x = s.target_fractions();
  EXPECT_DOUBLE_EQ(x[1], 0.3);
  EXPECT_EQ(s.realized_fractions(), x);
}

TEST(LadderTest, DefaultsAndRounding) {
  EXPECT_EQ(crd_ladder(5, 2), (std::vector<std::size_t>{0, 3, 5}));
  EXPECT_EQ(crd_ladder(500, 1), (std::vector<std::size_t>{0, 500}));
  EXPECT_EQ(crd_ladder(10, 3), (std::vector<std::size_t>{0, 3, 7, 10}));
  const auto p = brd_ladder(0.3, 3);
  ASSERT_EQ(p.size(), 4u);
  EXPECT_DOUBLE_EQ(p[2], 0.2);
  EXPECT_EQ(budget_count(0.3, 1000), 300u);
  EXPECT_EQ(budget_count(0.5, 5), 3u);
  EXPECT_EQ(budget_count(0.05, 5), 0u);
  EXPECT_THROW(crd_ladder(5, 0), InvalidParameter);
}

TEST(ScheduleSerializationTest, RoundTrip) {
  const std::vector<double> p = {0.0, 0.125, 0.3};
  const std::vector<std::size_t> k = {0, 2, 7};
  for (const auto& s : {brd_schedule(p, 12, 8), crd_schedule(k, 12, 8)}) {
    std::ostringstream out;
    write_schedule(s, out);
    std::istringstream in(out.str());
    EXPECT_EQ(read_schedule(in), s);
  }
}

TEST(ScheduleSerializationTest, RejectsMalformedInput) {
  std::istringstream bad_kind("design xyz 1 2\n0 1\n00\n11\n");
  EXPECT_THROW(read_schedule(bad_kind), ParseError);
  std::istringstream short_row("design crd 1 2\n0 2\n00\n1\n");
  EXPECT_THROW(read_schedule(short_row), ParseError);
  std::istringstream wrong_count("design crd 1 2\n0 2\n00\n10\n");
  EXPECT_THROW(read_schedule(wrong_count), ParseError);
}

}  // namespace
}  // namespace tte
