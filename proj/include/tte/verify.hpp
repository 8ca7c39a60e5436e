#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tte/outcomes.hpp"

namespace tte::verify {

struct CheckResult {
  std::string name;
  bool pass = false;
  // Observed statistic and the tolerance or threshold it is judged against.
  double value = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

// Random instance generators for the exact checks. Graphs are arbitrary
// sparse neighborhoods; coefficients are uniform on [-1, 1].
Graph random_small_graph(std::size_t n, std::uint64_t seed);
CoefficientModel random_coefficient_model(std::size_t n, std::size_t beta,
                                          std::uint64_t seed);

// Each check runs a fixed randomized family of instances derived from seed.
CheckResult check_brd_unbiasedness(std::uint64_t seed);
CheckResult check_crd_unbiasedness(std::uint64_t seed);
CheckResult check_linear_variance_bounds(std::uint64_t seed);
CheckResult check_realized_count_bias(std::uint64_t seed);
CheckResult check_optimal_weights(std::uint64_t seed);
CheckResult check_lagrange_properties(std::uint64_t seed);
CheckResult check_design_marginals(std::uint64_t seed);
CheckResult check_inverse_binomial_moment();
CheckResult check_bracket_ratio_decay();

std::vector<CheckResult> run_suite(std::uint64_t seed = 20240601);

// "PASS|FAIL name value tolerance".
void print_result(const CheckResult& r, std::ostream& out);

}  // namespace tte::verify
