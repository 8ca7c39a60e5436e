#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tte/design.hpp"

namespace tte {

enum class SweepParam { kN, kR, kBudget, kBeta };

std::string_view to_string(SweepParam param);
SweepParam parse_sweep_param(std::string_view text);

struct ExperimentConfig {
  DesignKind design = DesignKind::kComplete;
  std::size_t beta = 1;
  std::size_t n = 1000;
  double r = 1.25;
  // Final treated fraction: p for BRD, k/n for CRD.
  double budget = 0.5;
  SweepParam sweep_param = SweepParam::kN;
  std::vector<double> sweep_values;
  std::size_t graphs = 30;
  std::size_t schedules = 100;
  double sigma = 0.0;
  std::vector<std::string> estimators;
  std::uint64_t master_seed = 0;
  double lambda = 0.75;
  double exponent = 2.5;
  std::string output;
  std::string summary_output;

  // Throws ConfigError on any violated constraint.
  void validate() const;
  // Per-value config with the swept field substituted.
  ExperimentConfig at_sweep_value(double value) const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);

// Default estimator list for a design.
std::vector<std::string> default_estimators(DesignKind design);

enum class RecordStatus { kOk, kSkipped };

struct ExperimentRecord {
  DesignKind design = DesignKind::kComplete;
  std::string estimator;
  std::size_t n = 0;
  std::size_t beta = 0;
  double r = 0.0;
  double budget = 0.0;
  std::uint64_t graph_seed = 0;
  std::uint64_t schedule_seed = 0;
  double tte_true = 0.0;
  std::optional<double> tte_est;
  RecordStatus status = RecordStatus::kOk;

  // Position in the run; used only for ordering.
  std::size_t sweep_index = 0;
  std::size_t graph_index = 0;
  std::size_t schedule_index = 0;

  double rel_bias() const { return (*tte_est - tte_true) / tte_true; }
};

// Runs every (sweep value, graph, schedule, estimator) combination. Output is
// sorted by (sweep index, graph index, schedule index, estimator tag) and is
// identical for every worker count.
std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& cfg,
                                             std::size_t workers = 1);

struct SummaryRow {
  SweepParam sweep_param = SweepParam::kN;
  double sweep_value = 0.0;
  std::string estimator;
  std::optional<double> mean_rel_bias;
  // Population standard deviation (divides by the count).
  std::optional<double> std_rel_bias;
  std::size_t n_ok = 0;
  std::size_t n_skipped = 0;
};

// Groups by sweep value then estimator tag, both in first-seen order.
std::vector<SummaryRow> aggregate(const std::vector<ExperimentRecord>& records,
                                  SweepParam sweep_param);

double sweep_value_of(const ExperimentRecord& record, SweepParam param);

void write_records_csv(const std::vector<ExperimentRecord>& records, std::ostream& out);
std::vector<ExperimentRecord> read_records_csv(std::istream& in);
void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& out);

// Shortest text that parses back to the same double.
std::string format_double(double value);

}  // namespace tte
