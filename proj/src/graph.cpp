#include "tte/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include "tte/errors.hpp"
#include "tte/rng.hpp"

namespace tte {

Graph::Graph(std::vector<std::vector<NodeId>> in_neighbors)
    : in_(std::move(in_neighbors)), out_(in_.size()) {
  const std::size_t n = in_.size();
  for (std::size_t i = 0; i < n; ++i) {
    auto& list = in_[i];
    std::sort(list.begin(), list.end());
    if (std::adjacent_find(list.begin(), list.end()) != list.end()) {
      throw InvalidParameter("duplicate in-neighbor of node " +
                             std::to_string(i));
    }
    if (!list.empty() && list.back() >= n) {
      throw InvalidParameter("neighbor index out of range at node " +
                             std::to_string(i));
    }
    if (!std::binary_search(list.begin(), list.end(), static_cast<NodeId>(i))) {
      throw InvalidParameter("missing self-loop at node " + std::to_string(i));
    }
    for (NodeId j : list) out_[j].push_back(static_cast<NodeId>(i));
    d_in_ = std::max(d_in_, list.size());
  }
  for (const auto& list : out_) d_out_ = std::max(d_out_, list.size());
}

std::size_t Graph::edge_count() const {
  std::size_t total = 0;
  for (const auto& list : in_) total += list.size();
  return total;
}

namespace {

// Inverse-CDF sampler for the pmf proportional to x^-exponent on {1..max}.
class PowerLawSampler {
 public:
  PowerLawSampler(std::size_t max_value, double exponent) : cdf_(max_value) {
    double acc = 0.0;
    for (std::size_t x = 1; x <= max_value; ++x) {
      acc += std::pow(static_cast<double>(x), -exponent);
      cdf_[x - 1] = acc;
    }
    for (double& c : cdf_) c /= acc;
    if (!cdf_.empty()) cdf_.back() = 1.0;
  }

  std::size_t operator()(Rng& rng) const {
    const double u = rng.uniform();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return static_cast<std::size_t>(it - cdf_.begin()) + 1;
  }

 private:
  std::vector<double> cdf_;
};

}  // namespace

Graph generate_configuration_model(std::size_t n, double exponent,
                                   std::uint64_t seed) {
  if (n == 0) throw InvalidParameter("graph size must be at least 1");
  if (!(exponent > 1.0)) throw InvalidParameter("power-law exponent must exceed 1");

  Rng rng(seed);
  std::vector<std::size_t> in_degree(n, 0);
  if (n > 1) {
    PowerLawSampler sampler(n - 1, exponent);
    for (auto& d : in_degree) d = sampler(rng);
  }

  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), NodeId{0});
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[rng.below(i)]);
  }

  std::vector<std::vector<NodeId>> in(n);
  std::size_t stub = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto& list = in[i];
    list.reserve(in_degree[i] + 1);
    for (std::size_t k = 0; k < in_degree[i]; ++k, ++stub) {
      list.push_back(order[stub % n]);
    }
    list.push_back(static_cast<NodeId>(i));
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return Graph(std::move(in));
}

void write_edge_list(const Graph& g, std::ostream& out) {
  out << "n " << g.size() << '\n';
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (NodeId j : g.in_neighbors(i)) out << j << ' ' << i << '\n';
  }
}

Graph read_edge_list(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t n = 0;
  bool have_header = false;
  std::vector<std::vector<NodeId>> lists;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    if (!have_header) {
      std::string key;
      long long count = -1;
      std::string extra;
      if (!(fields >> key >> count) || key != "n" || count < 1 ||
          (fields >> extra)) {
        throw ParseError(line_no, "expected header 'n <count>'");
      }
      n = static_cast<std::size_t>(count);
      lists.resize(n);
      have_header = true;
      continue;
    }
    long long src = -1;
    long long dst = -1;
    std::string extra;
    if (!(fields >> src >> dst) || (fields >> extra)) {
      throw ParseError(line_no, "expected 'src dst'");
    }
    if (src < 0 || dst < 0 || static_cast<std::size_t>(src) >= n ||
        static_cast<std::size_t>(dst) >= n) {
      throw ParseError(line_no, "node index out of range for n = " +
                                    std::to_string(n));
    }
    auto& list = lists[static_cast<std::size_t>(dst)];
    const auto j = static_cast<NodeId>(src);
    if (std::find(list.begin(), list.end(), j) != list.end()) {
      throw ParseError(line_no, "duplicate edge");
    }
    list.push_back(j);
  }
  if (!have_header) throw ParseError(line_no + 1, "missing header 'n <count>'");
  for (std::size_t i = 0; i < n; ++i) {
    const auto& list = lists[i];
    if (std::find(list.begin(), list.end(), static_cast<NodeId>(i)) == list.end()) {
      throw ParseError(line_no, "missing self-loop '" + std::to_string(i) + " " +
                                    std::to_string(i) + "'");
    }
  }
  return Graph(std::move(lists));
}

void save_edge_list(const Graph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_edge_list(g, out);
  if (!out) throw Error("write failed: " + path.string());
}

Graph load_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_edge_list(in);
}

}  // namespace tte
