// Command-line entry point: gen-graph, run, sweep and verify.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tte/errors.hpp"
#include "tte/graph.hpp"
#include "tte/harness.hpp"
#include "tte/verify.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

// Flag values that override the config file when present.
struct Overrides {
  std::optional<std::string> design;
  std::optional<std::size_t> beta;
  std::optional<std::size_t> n;
  std::optional<double> r;
  std::optional<double> budget;
  std::optional<std::string> sweep_param;
  std::optional<std::vector<double>> sweep_values;
  std::optional<std::size_t> graphs;
  std::optional<std::size_t> schedules;
  std::optional<double> sigma;
  std::optional<std::vector<std::string>> estimators;
  std::optional<std::uint64_t> seed;
  std::optional<double> lambda;
  std::optional<double> exponent;
  std::optional<std::string> out;
  std::optional<std::string> summary;

  void apply(tte::ExperimentConfig& cfg) const {
    const bool design_changed = design.has_value();
    if (design) cfg.design = tte::parse_design_kind(*design);
    if (beta) cfg.beta = *beta;
    if (n) cfg.n = *n;
    if (r) cfg.r = *r;
    if (budget) cfg.budget = *budget;
    if (sweep_param) cfg.sweep_param = tte::parse_sweep_param(*sweep_param);
    if (sweep_values) cfg.sweep_values = *sweep_values;
    if (graphs) cfg.graphs = *graphs;
    if (schedules) cfg.schedules = *schedules;
    if (sigma) cfg.sigma = *sigma;
    if (estimators) {
      cfg.estimators = *estimators;
    } else if (design_changed) {
      cfg.estimators = tte::default_estimators(cfg.design);
    }
    if (seed) cfg.master_seed = *seed;
    if (lambda) cfg.lambda = *lambda;
    if (exponent) cfg.exponent = *exponent;
    if (out) cfg.output = *out;
    if (summary) cfg.summary_output = *summary;
  }
};

void add_config_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--design", o.design, "brd or crd");
  cmd->add_option("--beta", o.beta, "model degree (stages T = beta)");
  cmd->add_option("--n", o.n, "population size");
  cmd->add_option("--r", o.r, "network-to-direct effect ratio");
  cmd->add_option("--budget", o.budget, "final treated fraction");
  cmd->add_option("--sweep-param", o.sweep_param, "n, r, budget or beta");
  cmd->add_option("--sweep-values", o.sweep_values, "comma-separated sweep values")
      ->delimiter(',');
  cmd->add_option("--graphs", o.graphs, "graphs per sweep value (G)");
  cmd->add_option("--schedules", o.schedules, "schedules per graph (N)");
  cmd->add_option("--sigma", o.sigma, "observation noise standard deviation");
  cmd->add_option("--estimators", o.estimators, "comma-separated estimator tags")
      ->delimiter(',');
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--lambda", o.lambda, "dm_thresh agreement fraction");
  cmd->add_option("--exponent", o.exponent, "in-degree power-law exponent");
  cmd->add_option("--summary", o.summary, "summary CSV path");
}

std::string summary_path_for(const tte::ExperimentConfig& cfg) {
  if (!cfg.summary_output.empty()) return cfg.summary_output;
  fs::path p(cfg.output);
  return (p.parent_path() / (p.stem().string() + ".summary.csv")).string();
}

// Writes to a sibling temp file and renames, so readers never see a partial
// CSV.
void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw tte::Error("cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out) throw tte::Error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

void execute(tte::ExperimentConfig cfg, std::size_t workers) {
  if (cfg.output.empty()) throw tte::ConfigError("no output path (use --out)");
  if (cfg.sweep_values.empty()) {
    cfg.sweep_values = {cfg.sweep_param == tte::SweepParam::kN ? static_cast<double>(cfg.n)
                        : cfg.sweep_param == tte::SweepParam::kR   ? cfg.r
                        : cfg.sweep_param == tte::SweepParam::kBudget
                            ? cfg.budget
                            : static_cast<double>(cfg.beta)};
  }
  cfg.summary_output = summary_path_for(cfg);
  cfg.validate();
  std::cout << tte::to_json(cfg).dump(2) << std::endl;

  const auto records = tte::run_experiment(cfg, workers);
  std::ostringstream per_draw;
  tte::write_records_csv(records, per_draw);
  write_file(cfg.output, per_draw.str());

  std::ostringstream summary;
  tte::write_summary_csv(tte::aggregate(records, cfg.sweep_param), summary);
  write_file(cfg.summary_output, summary.str());
  std::cout << "wrote " << records.size() << " records to " << cfg.output << " and summary to "
            << cfg.summary_output << std::endl;
}

tte::ExperimentConfig base_config(const std::optional<std::string>& path) {
  if (!path) return tte::ExperimentConfig{};
  if (!fs::exists(*path)) throw tte::ConfigError("config file not found: " + *path);
  return tte::load_config(*path);
}

int run_sweep(const std::string& grid_path, const std::string& out_dir, const Overrides& o,
              std::size_t workers) {
  if (!fs::exists(grid_path)) throw tte::ConfigError("grid file not found: " + grid_path);
  std::ifstream in(grid_path);
  nlohmann::json grid_file;
  try {
    grid_file = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw tte::ConfigError(std::string("grid file: ") + e.what());
  }
  if (!grid_file.is_object() || !grid_file.contains("base")) {
    throw tte::ConfigError("grid file needs a 'base' config object");
  }
  const nlohmann::json base = grid_file.at("base");
  const nlohmann::json grid = grid_file.value("grid", nlohmann::json::object());
  if (!grid.is_object()) throw tte::ConfigError("'grid' must map field names to value lists");

  // Cartesian product over the grid fields, in key order.
  std::vector<nlohmann::json> runs = {base};
  for (const auto& [key, values] : grid.items()) {
    if (key == "sweep" || key == "output" || key == "summary_output") {
      throw tte::ConfigError("grid cannot vary '" + key + "'");
    }
    if (!values.is_array() || values.empty()) {
      throw tte::ConfigError("grid field '" + key + "' needs a nonempty list");
    }
    std::vector<nlohmann::json> next;
    for (const auto& run : runs) {
      for (const auto& v : values) {
        nlohmann::json expanded = run;
        expanded[key] = v;
        next.push_back(std::move(expanded));
      }
    }
    runs = std::move(next);
  }

  std::vector<tte::ExperimentConfig> configs;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    auto cfg = tte::config_from_json(runs[i]);
    o.apply(cfg);
    char name[32];
    std::snprintf(name, sizeof(name), "run_%03zu", i);
    cfg.output = (fs::path(out_dir) / (std::string(name) + ".csv")).string();
    cfg.summary_output = (fs::path(out_dir) / (std::string(name) + ".summary.csv")).string();
    configs.push_back(std::move(cfg));
  }
  nlohmann::json manifest = nlohmann::json::array();
  for (const auto& cfg : configs) manifest.push_back(tte::to_json(cfg));
  write_file(fs::path(out_dir) / "manifest.json", manifest.dump(2) + "\n");
  for (auto& cfg : configs) execute(cfg, workers);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Staggered-rollout TTE estimation toolkit"};
  app.require_subcommand(1);

  std::size_t graph_n = 0;
  std::uint64_t graph_seed = 0;
  double graph_exponent = 2.5;
  std::string graph_out;
  auto* gen = app.add_subcommand("gen-graph", "write a configuration-model edge list");
  gen->add_option("--n", graph_n, "number of nodes")->required();
  gen->add_option("--seed", graph_seed, "generator seed");
  gen->add_option("--exponent", graph_exponent, "in-degree power-law exponent");
  gen->add_option("--out", graph_out, "edge-list path")->required();

  Overrides run_flags;
  std::optional<std::string> run_config;
  std::size_t run_workers = 1;
  auto* run = app.add_subcommand("run", "execute one experiment config");
  run->add_option("--config", run_config, "experiment config (JSON)");
  run->add_option("--out", run_flags.out, "per-draw CSV path");
  run->add_option("--workers", run_workers, "worker threads")->check(CLI::PositiveNumber);
  add_config_flags(run, run_flags);

  Overrides sweep_flags;
  std::string sweep_grid;
  std::string sweep_out;
  std::size_t sweep_workers = 1;
  auto* sweep = app.add_subcommand("sweep", "expand a grid file into runs");
  sweep->add_option("--config", sweep_grid, "grid file (JSON)")->required();
  sweep->add_option("--out", sweep_out, "output directory")->required();
  sweep->add_option("--workers", sweep_workers, "worker threads")->check(CLI::PositiveNumber);
  add_config_flags(sweep, sweep_flags);

  std::uint64_t verify_seed = 20240601;
  auto* verify = app.add_subcommand("verify", "run the exact oracle suite");
  verify->add_option("--seed", verify_seed, "instance seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) {
      const auto g = tte::generate_configuration_model(graph_n, graph_exponent, graph_seed);
      std::ostringstream text;
      tte::write_edge_list(g, text);
      write_file(graph_out, text.str());
      std::cout << "wrote graph with " << g.size() << " nodes and " << g.edge_count()
                << " edges to " << graph_out << std::endl;
      return kExitOk;
    }
    if (*run) {
      auto cfg = base_config(run_config);
      run_flags.apply(cfg);
      execute(cfg, run_workers);
      return kExitOk;
    }
    if (*sweep) return run_sweep(sweep_grid, sweep_out, sweep_flags, sweep_workers);
    if (*verify) {
      bool all = true;
      for (const auto& result : tte::verify::run_suite(verify_seed)) {
        tte::verify::print_result(result, std::cout);
        all = all && result.pass;
      }
      return all ? kExitOk : kExitFailure;
    }
  } catch (const tte::ConfigError& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitUsage;
  } catch (const tte::InvalidParameter& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitFailure;
  }
  return kExitUsage;
}
