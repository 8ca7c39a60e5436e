#include "tte/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include "tte/errors.hpp"
#include "tte/estimators.hpp"
#include "tte/graph.hpp"
#include "tte/outcomes.hpp"
#include "tte/rng.hpp"

namespace tte {

std::string_view to_string(SweepParam param) {
  switch (param) {
    case SweepParam::kN: return "n";
    case SweepParam::kR: return "r";
    case SweepParam::kBudget: return "budget";
    case SweepParam::kBeta: return "beta";
  }
  return "n";
}

SweepParam parse_sweep_param(std::string_view text) {
  if (text == "n") return SweepParam::kN;
  if (text == "r") return SweepParam::kR;
  if (text == "budget") return SweepParam::kBudget;
  if (text == "beta") return SweepParam::kBeta;
  throw ConfigError("unknown sweep parameter '" + std::string(text) +
                    "' (expected n, r, budget or beta)");
}

std::vector<std::string> default_estimators(DesignKind design) {
  if (design == DesignKind::kBernoulli) {
    return {tags::kPiBrdP, tags::kPiBrdKhat, tags::kDm, tags::kDmThreshold,
            tags::kLsNum, tags::kLsProp};
  }
  return {tags::kPiCrdK, tags::kDm, tags::kDmThreshold, tags::kLsNum, tags::kLsProp};
}

namespace {

bool is_whole(double v) { return v >= 0.0 && std::floor(v) == v; }

const std::vector<std::string>& known_estimators() {
  static const std::vector<std::string> names = {
      tags::kPiBrdP, tags::kPiCrdK,  tags::kPiBrdKhat, tags::kDm,
      tags::kDmThreshold, tags::kLsNum, tags::kLsProp, tags::kTwoPoint};
  return names;
}

}  // namespace

ExperimentConfig ExperimentConfig::at_sweep_value(double value) const {
  ExperimentConfig c = *this;
  switch (sweep_param) {
    case SweepParam::kN: c.n = static_cast<std::size_t>(value); break;
    case SweepParam::kR: c.r = value; break;
    case SweepParam::kBudget: c.budget = value; break;
    case SweepParam::kBeta: c.beta = static_cast<std::size_t>(value); break;
  }
  return c;
}

void ExperimentConfig::validate() const {
  if (sweep_values.empty()) throw ConfigError("sweep needs at least one value");
  if (graphs < 1 || schedules < 1) throw ConfigError("graphs and schedules must be >= 1");
  if (!(sigma >= 0.0)) throw ConfigError("sigma must be nonnegative");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
  if (!(exponent > 1.0)) throw ConfigError("exponent must exceed 1");
  if (estimators.empty()) throw ConfigError("no estimators configured");
  for (const auto& name : estimators) {
    const auto& known = known_estimators();
    if (std::find(known.begin(), known.end(), name) == known.end()) {
      throw ConfigError("unknown estimator '" + name + "'");
    }
    if (name == tags::kPiBrdP && design != DesignKind::kBernoulli) {
      throw ConfigError("pi_brd_p needs the brd design");
    }
    if (name == tags::kPiCrdK && design != DesignKind::kComplete) {
      throw ConfigError("pi_crd_k needs the crd design");
    }
  }
  for (double v : sweep_values) {
    if (sweep_param == SweepParam::kN || sweep_param == SweepParam::kBeta) {
      if (!is_whole(v)) throw ConfigError("sweep values for n and beta must be integers");
    }
    const ExperimentConfig point = at_sweep_value(v);
    if (point.n < 1) throw ConfigError("n must be at least 1");
    if (point.beta < 1) throw ConfigError("beta must be at least 1");
    if (!(point.r >= 0.0)) throw ConfigError("r must be nonnegative");
    if (!(point.budget > 0.0 && point.budget <= 1.0)) {
      throw ConfigError("budget must lie in (0, 1]");
    }
  }
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  static const std::vector<std::string> fields = {
      "design", "beta", "n", "r", "budget", "sweep", "graphs", "schedules", "sigma",
      "estimators", "master_seed", "lambda", "exponent", "output", "summary_output"};
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& item : j.items()) {
    if (std::find(fields.begin(), fields.end(), item.key()) == fields.end()) {
      throw ConfigError("unknown config field '" + item.key() + "'");
    }
  }
  ExperimentConfig c;
  try {
    if (j.contains("design")) {
      c.design = parse_design_kind(j.at("design").get<std::string>());
    }
    c.beta = j.value("beta", c.beta);
    c.n = j.value("n", c.n);
    c.r = j.value("r", c.r);
    c.budget = j.value("budget", c.budget);
    c.graphs = j.value("graphs", c.graphs);
    c.schedules = j.value("schedules", c.schedules);
    c.sigma = j.value("sigma", c.sigma);
    c.master_seed = j.value("master_seed", c.master_seed);
    c.lambda = j.value("lambda", c.lambda);
    c.exponent = j.value("exponent", c.exponent);
    c.output = j.value("output", c.output);
    c.summary_output = j.value("summary_output", c.summary_output);
    c.estimators = j.value("estimators", default_estimators(c.design));
    if (j.contains("sweep")) {
      const auto& sweep = j.at("sweep");
      c.sweep_param = parse_sweep_param(sweep.at("param").get<std::string>());
      c.sweep_values = sweep.at("values").get<std::vector<double>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  } catch (const InvalidParameter& e) {
    throw ConfigError(e.what());
  }
  return c;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  return {{"design", std::string(to_string(c.design))},
          {"beta", c.beta},
          {"n", c.n},
          {"r", c.r},
          {"budget", c.budget},
          {"sweep",
           {{"param", std::string(to_string(c.sweep_param))}, {"values", c.sweep_values}}},
          {"graphs", c.graphs},
          {"schedules", c.schedules},
          {"sigma", c.sigma},
          {"estimators", c.estimators},
          {"master_seed", c.master_seed},
          {"lambda", c.lambda},
          {"exponent", c.exponent},
          {"output", c.output},
          {"summary_output", c.summary_output}};
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return config_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
}

namespace {

struct Unit {
  std::size_t sweep_index;
  std::size_t graph_index;
};

std::vector<ExperimentRecord> run_graph(const ExperimentConfig& base, const Unit& unit) {
  const ExperimentConfig cfg = base.at_sweep_value(base.sweep_values[unit.sweep_index]);
  const std::uint64_t graph_seed =
      derive_seed(base.master_seed, "graph", {unit.sweep_index, unit.graph_index});
  const std::uint64_t model_seed =
      derive_seed(base.master_seed, "model", {unit.sweep_index, unit.graph_index});

  Graph graph = generate_configuration_model(cfg.n, cfg.exponent, graph_seed);
  ParametricModel model = sample_parametric_model(std::move(graph), cfg.beta, cfg.r, model_seed);
  model.sigma = cfg.sigma;
  const double tte_true = true_tte(model);
  if (std::abs(tte_true) < 1e-12) {
    throw ConfigError("true TTE is zero; relative bias undefined");
  }

  std::vector<double> brd_targets;
  std::vector<std::size_t> crd_targets;
  if (cfg.design == DesignKind::kBernoulli) {
    brd_targets = brd_ladder(cfg.budget, cfg.beta);
  } else {
    crd_targets = crd_ladder(budget_count(cfg.budget, cfg.n), cfg.beta);
  }

  std::vector<std::string> names = cfg.estimators;
  std::sort(names.begin(), names.end());

  std::vector<ExperimentRecord> out;
  out.reserve(cfg.schedules * names.size());
  for (std::size_t s = 0; s < cfg.schedules; ++s) {
    const std::uint64_t schedule_seed = derive_seed(
        base.master_seed, "schedule", {unit.sweep_index, unit.graph_index, s});
    const std::uint64_t noise_seed = derive_seed(
        base.master_seed, "noise", {unit.sweep_index, unit.graph_index, s});
    const TreatmentSchedule schedule =
        cfg.design == DesignKind::kBernoulli
            ? brd_schedule(brd_targets, cfg.n, schedule_seed)
            : crd_schedule(crd_targets, cfg.n, schedule_seed);
    const ObservationSet obs = observe(model, schedule, noise_seed);
    const auto last = schedule.horizon();
    const auto z = schedule.stage(last);
    const std::span<const double> y = obs.values[last];

    for (const auto& name : names) {
      ExperimentRecord rec;
      rec.design = cfg.design;
      rec.estimator = name;
      rec.n = cfg.n;
      rec.beta = cfg.beta;
      rec.r = cfg.r;
      rec.budget = cfg.budget;
      rec.graph_seed = graph_seed;
      rec.schedule_seed = schedule_seed;
      rec.tte_true = tte_true;
      rec.sweep_index = unit.sweep_index;
      rec.graph_index = unit.graph_index;
      rec.schedule_index = s;
      try {
        double value = 0.0;
        if (name == tags::kPiBrdP || name == tags::kPiCrdK) {
          value = tte_pi(obs, schedule.target_fractions(), name).value;
        } else if (name == tags::kPiBrdKhat) {
          value = tte_pi(obs, schedule.realized_fractions(), name).value;
        } else if (name == tags::kTwoPoint) {
          const auto x = schedule.target_fractions();
          value = two_point_linear(obs, x.front(), x.back()).value;
        } else if (name == tags::kDm) {
          value = dm(z, y).value;
        } else if (name == tags::kDmThreshold) {
          value = dm_threshold(z, y, model.graph, cfg.lambda).value;
        } else if (name == tags::kLsNum) {
          value = ls_estimate(z, y, model.graph, cfg.beta, Covariate::kCount).value;
        } else if (name == tags::kLsProp) {
          value = ls_estimate(z, y, model.graph, cfg.beta, Covariate::kFraction).value;
        }
        rec.tte_est = value;
      } catch (const DegenerateGroup&) {
        rec.status = RecordStatus::kSkipped;
      } catch (const Underdetermined&) {
        rec.status = RecordStatus::kSkipped;
      }
      out.push_back(std::move(rec));
    }
  }
  return out;
}

}  // namespace

std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& cfg,
                                             std::size_t workers) {
  cfg.validate();
  std::vector<Unit> units;
  for (std::size_t v = 0; v < cfg.sweep_values.size(); ++v) {
    for (std::size_t g = 0; g < cfg.graphs; ++g) units.push_back({v, g});
  }
  std::vector<std::vector<ExperimentRecord>> results(units.size());
  std::vector<std::exception_ptr> errors(units.size());
  workers = std::clamp<std::size_t>(workers, 1, units.size());

  auto work = [&](std::size_t worker) {
    for (std::size_t u = worker; u < units.size(); u += workers) {
      try {
        results[u] = run_graph(cfg, units[u]);
      } catch (...) {
        errors[u] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<ExperimentRecord> records;
  for (auto& chunk : results) {
    records.insert(records.end(), std::make_move_iterator(chunk.begin()),
                   std::make_move_iterator(chunk.end()));
  }
  std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.sweep_index, a.graph_index, a.schedule_index, a.estimator) <
           std::tie(b.sweep_index, b.graph_index, b.schedule_index, b.estimator);
  });
  return records;
}

double sweep_value_of(const ExperimentRecord& record, SweepParam param) {
  switch (param) {
    case SweepParam::kN: return static_cast<double>(record.n);
    case SweepParam::kR: return record.r;
    case SweepParam::kBudget: return record.budget;
    case SweepParam::kBeta: return static_cast<double>(record.beta);
  }
  return 0.0;
}

std::vector<SummaryRow> aggregate(const std::vector<ExperimentRecord>& records,
                                  SweepParam sweep_param) {
  if (records.empty()) throw InvalidParameter("no records to aggregate");
  std::vector<SummaryRow> rows;
  std::vector<std::vector<double>> biases;
  std::map<std::pair<double, std::string>, std::size_t> index;
  for (const auto& rec : records) {
    const double value = sweep_value_of(rec, sweep_param);
    auto [it, inserted] = index.try_emplace({value, rec.estimator}, rows.size());
    if (inserted) {
      SummaryRow row;
      row.sweep_param = sweep_param;
      row.sweep_value = value;
      row.estimator = rec.estimator;
      rows.push_back(row);
      biases.emplace_back();
    }
    SummaryRow& row = rows[it->second];
    if (rec.status == RecordStatus::kOk && rec.tte_est) {
      ++row.n_ok;
      biases[it->second].push_back(rec.rel_bias());
    } else {
      ++row.n_skipped;
    }
  }
  for (std::size_t g = 0; g < rows.size(); ++g) {
    const auto& b = biases[g];
    if (b.empty()) continue;
    double mean = 0.0;
    for (double v : b) mean += v;
    mean /= static_cast<double>(b.size());
    double var = 0.0;
    for (double v : b) var += (v - mean) * (v - mean);
    var /= static_cast<double>(b.size());
    rows[g].mean_rel_bias = mean;
    rows[g].std_rel_bias = std::sqrt(var);
  }
  return rows;
}

std::string format_double(double value) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

namespace {

constexpr const char* kRecordHeader =
    "design,estimator,n,beta,r,budget,graph_seed,schedule_seed,tte_true,tte_est,status";
constexpr const char* kSummaryHeader =
    "sweep_param,sweep_value,estimator,mean_rel_bias,std_rel_bias,n_ok,n_skipped";

std::string optional_field(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

template <typename T>
T parse_number(const std::string& text, std::size_t line) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto result = std::from_chars(text.data(), end, value);
  if (result.ec != std::errc() || result.ptr != end) {
    throw ParseError(line, "bad number '" + text + "'");
  }
  return value;
}

}  // namespace

void write_records_csv(const std::vector<ExperimentRecord>& records, std::ostream& out) {
  out << kRecordHeader << '\n';
  for (const auto& r : records) {
    out << to_string(r.design) << ',' << r.estimator << ',' << r.n << ',' << r.beta << ','
        << format_double(r.r) << ',' << format_double(r.budget) << ',' << r.graph_seed << ','
        << r.schedule_seed << ',' << format_double(r.tte_true) << ','
        << optional_field(r.tte_est) << ','
        << (r.status == RecordStatus::kOk ? "ok" : "skipped") << '\n';
  }
}

std::vector<ExperimentRecord> read_records_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line != kRecordHeader) {
    throw ParseError(line_no, "expected header '" + std::string(kRecordHeader) + "'");
  }
  std::vector<ExperimentRecord> records;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream fields(line);
    std::string cell;
    while (std::getline(fields, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 11) throw ParseError(line_no, "expected 11 fields");
    ExperimentRecord r;
    try {
      r.design = parse_design_kind(cells[0]);
    } catch (const InvalidParameter& e) {
      throw ParseError(line_no, e.what());
    }
    r.estimator = cells[1];
    r.n = parse_number<std::size_t>(cells[2], line_no);
    r.beta = parse_number<std::size_t>(cells[3], line_no);
    r.r = parse_number<double>(cells[4], line_no);
    r.budget = parse_number<double>(cells[5], line_no);
    r.graph_seed = parse_number<std::uint64_t>(cells[6], line_no);
    r.schedule_seed = parse_number<std::uint64_t>(cells[7], line_no);
    r.tte_true = parse_number<double>(cells[8], line_no);
    if (!cells[9].empty()) r.tte_est = parse_number<double>(cells[9], line_no);
    if (cells[10] == "ok") {
      r.status = RecordStatus::kOk;
    } else if (cells[10] == "skipped") {
      r.status = RecordStatus::kSkipped;
    } else {
      throw ParseError(line_no, "bad status '" + cells[10] + "'");
    }
    records.push_back(std::move(r));
  }
  return records;
}

void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& out) {
  out << kSummaryHeader << '\n';
  for (const auto& row : rows) {
    out << to_string(row.sweep_param) << ',' << format_double(row.sweep_value) << ','
        << row.estimator << ',' << optional_field(row.mean_rel_bias) << ','
        << optional_field(row.std_rel_bias) << ',' << row.n_ok << ',' << row.n_skipped
        << '\n';
  }
}

}  // namespace tte
