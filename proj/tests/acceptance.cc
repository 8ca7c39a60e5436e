// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "tte/estimators.hpp"
#include "tte/harness.hpp"
#include "tte/rng.hpp"
#include "tte/verify.hpp"

namespace {

namespace fs = std::filesystem;
using tte::verify::CheckResult;

constexpr std::uint64_t kSeed = 20240601;

CheckResult timed(CheckResult (*check)(std::uint64_t), const char* role, double budget_s) {
  const auto start = std::chrono::steady_clock::now();
  auto r = check(tte::derive_seed(kSeed, role, {}));
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  r.detail += " runtime=" + std::to_string(secs) + "s limit=" + std::to_string(budget_s) + "s";
  if (secs >= budget_s) r.pass = false;
  return r;
}

CheckResult lemma_checks() {
  const auto moment = tte::verify::check_inverse_binomial_moment();
  const auto ratio = tte::verify::check_bracket_ratio_decay();
  CheckResult r;
  r.name = "binomial_moment_and_bracket_decay";
  r.pass = moment.pass && ratio.pass;
  r.value = moment.value;
  r.tolerance = moment.tolerance;
  r.detail = moment.detail + "; " + ratio.detail;
  return r;
}

struct Stat {
  double mean = 0.0;
  double se = 0.0;
  double std = 0.0;
  bool ok = false;
};

Stat stat_of(const std::vector<tte::SummaryRow>& rows, double value, const std::string& est) {
  for (const auto& row : rows) {
    if (row.sweep_value != value || row.estimator != est || !row.mean_rel_bias) continue;
    return {*row.mean_rel_bias, *row.std_rel_bias / std::sqrt(static_cast<double>(row.n_ok)),
            *row.std_rel_bias, true};
  }
  return {};
}

std::string fmt(const Stat& s) {
  std::ostringstream out;
  out << s.mean << "±" << s.se;
  return out.str();
}

CheckResult figure_one() {
  const auto start = std::chrono::steady_clock::now();
  tte::ExperimentConfig cfg;
  cfg.design = tte::DesignKind::kComplete;
  cfg.beta = 1;
  cfg.n = 1000;
  cfg.budget = 0.5;
  cfg.graphs = 5;
  cfg.schedules = 50;
  cfg.sigma = 0.0;
  cfg.sweep_param = tte::SweepParam::kR;
  cfg.sweep_values = {1.25, 0.0};
  cfg.estimators = tte::default_estimators(cfg.design);
  cfg.master_seed = kSeed;
  const auto rows = tte::aggregate(tte::run_experiment(cfg, 4), cfg.sweep_param);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  CheckResult r;
  r.name = "fig1_desk_scale";
  r.tolerance = 3.0;
  r.pass = secs < 300.0;
  std::ostringstream detail;
  const auto pi = stat_of(rows, 1.25, tte::tags::kPiCrdK);
  const auto dm = stat_of(rows, 1.25, tte::tags::kDm);
  const auto ls = stat_of(rows, 1.25, tte::tags::kLsProp);
  r.pass = r.pass && pi.ok && dm.ok && ls.ok;
  r.pass = r.pass && std::abs(pi.mean) <= 3.0 * pi.se;
  r.pass = r.pass && std::abs(dm.mean) > 3.0 * dm.se;
  r.pass = r.pass && std::abs(ls.mean) > 3.0 * ls.se;
  r.value = pi.se > 0 ? std::abs(pi.mean) / pi.se : 0.0;
  detail << "r=1.25 pi_crd_k=" << fmt(pi) << " dm=" << fmt(dm) << " ls_prop=" << fmt(ls)
         << "; r=0";
  for (const auto& est : cfg.estimators) {
    const auto s = stat_of(rows, 0.0, est);
    r.pass = r.pass && s.ok && std::abs(s.mean) <= 3.0 * s.se + 1e-12;
    detail << ' ' << est << '=' << fmt(s);
  }
  detail << "; runtime=" << secs << "s";
  r.detail = detail.str();
  return r;
}

CheckResult figure_two() {
  tte::ExperimentConfig cfg;
  cfg.design = tte::DesignKind::kBernoulli;
  cfg.beta = 1;
  cfg.n = 1000;
  cfg.r = 1.25;
  cfg.graphs = 5;
  cfg.schedules = 100;
  cfg.sweep_param = tte::SweepParam::kBudget;
  cfg.sweep_values = {0.3};
  cfg.estimators = {tte::tags::kPiBrdP, tte::tags::kPiBrdKhat};
  cfg.master_seed = kSeed;
  const auto rows = tte::aggregate(tte::run_experiment(cfg, 4), cfg.sweep_param);
  const auto p = stat_of(rows, 0.3, tte::tags::kPiBrdP);
  const auto khat = stat_of(rows, 0.3, tte::tags::kPiBrdKhat);
  CheckResult r;
  r.name = "fig2_realized_count_variance";
  r.pass = p.ok && khat.ok && khat.std <= p.std;
  r.value = khat.std;
  r.tolerance = p.std;
  r.detail = "std pi_brd_khat=" + std::to_string(khat.std) +
             " std pi_brd_p=" + std::to_string(p.std);
  return r;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(TTE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

CheckResult determinism() {
  const auto dir = fs::temp_directory_path() / "tte_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string flags =
      " --design brd --n 400 --graphs 3 --schedules 10 --sweep-param budget"
      " --sweep-values 0.1,0.3 --sigma 0.2 --seed 99";
  std::vector<std::string> outputs;
  bool ran = true;
  for (const char* workers : {"1", "4", "4", "1"}) {
    const auto out = dir / (std::string("w") + workers + "_" + std::to_string(outputs.size()) + ".csv");
    ran = ran && run_cli("run" + flags + " --workers " + workers + " --out " + out.string()) == 0;
    auto summary = out;
    summary.replace_extension(".summary.csv");
    outputs.push_back(slurp(out) + "\n--\n" + slurp(summary));
  }
  CheckResult r;
  r.name = "cli_byte_determinism";
  r.pass = ran && outputs[0].size() > 100;
  for (const auto& o : outputs) r.pass = r.pass && o == outputs[0];
  r.value = static_cast<double>(outputs[0].size());
  r.detail = "4 runs at workers 1,4,4,1";
  fs::remove_all(dir);
  return r;
}

}  // namespace

int main() {
  std::vector<CheckResult> results;
  results.push_back(timed(tte::verify::check_brd_unbiasedness, "brd", 30.0));
  results.push_back(timed(tte::verify::check_crd_unbiasedness, "crd", 60.0));
  results.push_back(tte::verify::check_linear_variance_bounds(tte::derive_seed(kSeed, "bounds", {})));
  results.push_back(tte::verify::check_realized_count_bias(tte::derive_seed(kSeed, "khat", {})));
  results.push_back(tte::verify::check_optimal_weights(tte::derive_seed(kSeed, "weights", {})));
  results.push_back(tte::verify::check_lagrange_properties(tte::derive_seed(kSeed, "lagrange", {})));
  results.push_back(tte::verify::check_design_marginals(tte::derive_seed(kSeed, "marginals", {})));
  results.push_back(lemma_checks());
  results.push_back(figure_one());
  results.push_back(figure_two());
  results.push_back(determinism());

  int failures = 0;
  for (const auto& r : results) {
    tte::verify::print_result(r, std::cout);
    if (!r.pass) ++failures;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " failed")
            << '\n';
  return failures == 0 ? 0 : 1;
}
