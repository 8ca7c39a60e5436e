#include "tte/design.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "tte/errors.hpp"
#include "tte/rng.hpp"

namespace tte {

std::string_view to_string(DesignKind kind) {
  return kind == DesignKind::kBernoulli ? "brd" : "crd";
}

DesignKind parse_design_kind(std::string_view text) {
  if (text == "brd") return DesignKind::kBernoulli;
  if (text == "crd") return DesignKind::kComplete;
  throw InvalidParameter("unknown design '" + std::string(text) +
                         "' (expected brd or crd)");
}

TreatmentSchedule::TreatmentSchedule(DesignKind kind, std::vector<double> targets,
                                     std::vector<Treatment> stages)
    : kind_(kind), targets_(std::move(targets)), stages_(std::move(stages)) {
  if (stages_.empty()) throw InvalidParameter("schedule needs at least one stage");
  if (targets_.size() != stages_.size()) {
    throw DimensionError("target count does not match stage count");
  }
  n_ = stages_.front().size();
  realized_.reserve(stages_.size());
  for (std::size_t t = 0; t < stages_.size(); ++t) {
    const auto& row = stages_[t];
    if (row.size() != n_) throw DimensionError("ragged treatment matrix");
    std::size_t count = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (row[i] > 1) throw InvalidParameter("treatments must be 0 or 1");
      if (t > 0 && row[i] < stages_[t - 1][i]) {
        throw InvalidParameter("treatment withdrawn at stage " + std::to_string(t));
      }
      count += row[i];
    }
    realized_.push_back(count);
    if (t > 0 && targets_[t] < targets_[t - 1]) {
      throw InvalidParameter("targets must be nondecreasing");
    }
    if (kind_ == DesignKind::kComplete &&
        static_cast<double>(count) != targets_[t]) {
      throw InvalidParameter("CRD stage " + std::to_string(t) +
                             " count differs from its target");
    }
  }
}

std::vector<double> TreatmentSchedule::target_fractions() const {
  if (kind_ == DesignKind::kBernoulli) return targets_;
  std::vector<double> x(targets_.size());
  for (std::size_t t = 0; t < x.size(); ++t) {
    x[t] = targets_[t] / static_cast<double>(n_);
  }
  return x;
}

std::vector<double> TreatmentSchedule::realized_fractions() const {
  std::vector<double> x(realized_.size());
  for (std::size_t t = 0; t < x.size(); ++t) {
    x[t] = static_cast<double>(realized_[t]) / static_cast<double>(n_);
  }
  return x;
}

double TreatmentSchedule::min_gap() const {
  if (targets_.size() < 2) return 0.0;
  double gap = targets_[1] - targets_[0];
  for (std::size_t t = 2; t < targets_.size(); ++t) {
    gap = std::min(gap, targets_[t] - targets_[t - 1]);
  }
  return gap;
}

TreatmentSchedule brd_schedule(std::span<const double> p, std::size_t n,
                               std::uint64_t seed) {
  if (p.empty()) throw InvalidParameter("empty probability vector");
  for (std::size_t t = 0; t < p.size(); ++t) {
    if (!(p[t] >= 0.0 && p[t] <= 1.0)) {
      throw InvalidParameter("probability outside [0, 1]");
    }
    if (t > 0 && p[t] < p[t - 1]) {
      throw InvalidParameter("probabilities must be nondecreasing");
    }
  }
  Rng rng(seed);
  std::vector<double> u(n);
  for (double& v : u) v = rng.uniform();
  std::vector<Treatment> stages(p.size(), Treatment(n, 0));
  for (std::size_t t = 0; t < p.size(); ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      // uniform() lies in [0, 1), so p_t = 1 treats everyone and p_t = 0
      // treats only the measure-zero draw u = 0, which is excluded here.
      stages[t][i] = (p[t] > 0.0 && u[i] <= p[t]) ? 1 : 0;
    }
  }
  return TreatmentSchedule(DesignKind::kBernoulli, {p.begin(), p.end()},
                           std::move(stages));
}

TreatmentSchedule crd_schedule(std::span<const std::size_t> k, std::size_t n,
                               std::uint64_t seed) {
  if (k.empty()) throw InvalidParameter("empty count vector");
  for (std::size_t t = 0; t < k.size(); ++t) {
    if (k[t] > n) throw InvalidParameter("treated count exceeds population");
    if (t > 0 && k[t] < k[t - 1]) {
      throw InvalidParameter("counts must be nondecreasing");
    }
  }
  Rng rng(seed);
  // untreated[0, remaining) holds the individuals not yet treated.
  std::vector<std::size_t> untreated(n);
  std::iota(untreated.begin(), untreated.end(), std::size_t{0});
  std::size_t remaining = n;
  Treatment current(n, 0);
  std::vector<Treatment> stages;
  stages.reserve(k.size());
  std::size_t treated = 0;
  for (std::size_t target : k) {
    // Partial Fisher-Yates: move a uniform subset to the tail of the pool.
    for (; treated < target; ++treated) {
      const std::size_t pick = static_cast<std::size_t>(rng.below(remaining));
      std::swap(untreated[pick], untreated[remaining - 1]);
      current[untreated[remaining - 1]] = 1;
      --remaining;
    }
    stages.push_back(current);
  }
  std::vector<double> targets(k.begin(), k.end());
  return TreatmentSchedule(DesignKind::kComplete, std::move(targets),
                           std::move(stages));
}

double bracket(std::size_t k, std::size_t n, std::size_t s) {
  if (n == 0) throw InvalidParameter("bracket requires n >= 1");
  if (s > n) throw InvalidParameter("subset larger than population");
  if (s > k) return 0.0;
  double value = 1.0;
  for (std::size_t i = 0; i < s; ++i) {
    value *= static_cast<double>(k - i) / static_cast<double>(n - i);
  }
  return value;
}

std::vector<double> brd_ladder(double p, std::size_t beta) {
  if (beta == 0) throw InvalidParameter("ladder needs beta >= 1");
  std::vector<double> ladder(beta + 1);
  for (std::size_t t = 0; t <= beta; ++t) {
    ladder[t] = static_cast<double>(t) * p / static_cast<double>(beta);
  }
  return ladder;
}

std::vector<std::size_t> crd_ladder(std::size_t k, std::size_t beta) {
  if (beta == 0) throw InvalidParameter("ladder needs beta >= 1");
  std::vector<std::size_t> ladder(beta + 1);
  for (std::size_t t = 0; t <= beta; ++t) {
    ladder[t] = (2 * t * k + beta) / (2 * beta);
  }
  return ladder;
}

std::size_t budget_count(double budget, std::size_t n) {
  if (!(budget >= 0.0 && budget <= 1.0)) {
    throw InvalidParameter("budget outside [0, 1]");
  }
  const double scaled = budget * static_cast<double>(n);
  // Guard against representation error like 0.3 * 1000 = 299.99999999999994.
  const double nearest = std::round(scaled);
  const double value = std::abs(scaled - nearest) < 1e-9 ? nearest
                                                         : std::floor(scaled + 0.5);
  return std::min(n, static_cast<std::size_t>(value));
}

void write_schedule(const TreatmentSchedule& s, std::ostream& out) {
  out << "design " << to_string(s.kind()) << ' ' << s.horizon() << ' ' << s.size()
      << '\n';
  const auto targets = s.targets();
  for (std::size_t t = 0; t < targets.size(); ++t) {
    if (t > 0) out << ' ';
    if (s.kind() == DesignKind::kComplete) {
      out << static_cast<std::size_t>(targets[t]);
    } else {
      out << std::setprecision(17) << targets[t];
    }
  }
  out << '\n';
  for (std::size_t t = 0; t < s.stage_count(); ++t) {
    for (std::uint8_t z : s.stage(t)) out << (z ? '1' : '0');
    out << '\n';
  }
}

TreatmentSchedule read_schedule(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError(line_no, "missing header");
  std::istringstream header(line);
  std::string word;
  std::string kind_text;
  long long horizon = -1;
  long long n = -1;
  if (!(header >> word >> kind_text >> horizon >> n) || word != "design" ||
      horizon < 0 || n < 0) {
    throw ParseError(line_no, "expected 'design brd|crd T n'");
  }
  DesignKind kind;
  try {
    kind = parse_design_kind(kind_text);
  } catch (const InvalidParameter& e) {
    throw ParseError(line_no, e.what());
  }
  const auto stages = static_cast<std::size_t>(horizon) + 1;

  ++line_no;
  if (!std::getline(in, line)) throw ParseError(line_no, "missing target line");
  std::istringstream target_line(line);
  std::vector<double> targets;
  double value = 0.0;
  while (target_line >> value) targets.push_back(value);
  if (targets.size() != stages || !target_line.eof()) {
    throw ParseError(line_no, "expected " + std::to_string(stages) + " targets");
  }

  std::vector<Treatment> rows;
  while (rows.size() < stages) {
    ++line_no;
    if (!std::getline(in, line)) throw ParseError(line_no, "missing stage row");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.size() != static_cast<std::size_t>(n)) {
      throw ParseError(line_no, "row length differs from n");
    }
    Treatment row(line.size());
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] != '0' && line[i] != '1') throw ParseError(line_no, "bad bit");
      row[i] = line[i] == '1' ? 1 : 0;
    }
    rows.push_back(std::move(row));
  }
  try {
    return TreatmentSchedule(kind, std::move(targets), std::move(rows));
  } catch (const Error& e) {
    throw ParseError(line_no, e.what());
  }
}

}  // namespace tte
