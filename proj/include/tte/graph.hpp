#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace tte {

using NodeId = std::uint32_t;

// Directed interference network. An edge (j, i) means the treatment of j
// affects the outcome of i; in_neighbors(i) lists every such j, sorted, and
// always contains i itself.
class Graph {
 public:
  Graph() = default;

  // Validates the adjacency lists and sorts them. Throws InvalidParameter
  // on a missing self-loop, an out-of-range index or a duplicate entry.
  explicit Graph(std::vector<std::vector<NodeId>> in_neighbors);

  std::size_t size() const { return in_.size(); }
  std::span<const NodeId> in_neighbors(std::size_t i) const { return in_[i]; }
  std::span<const NodeId> out_neighbors(std::size_t j) const { return out_[j]; }

  std::size_t max_in_degree() const { return d_in_; }
  std::size_t max_out_degree() const { return d_out_; }
  std::size_t max_degree() const { return d_in_ > d_out_ ? d_in_ : d_out_; }

  // Number of edges, self-loops included.
  std::size_t edge_count() const;

  friend bool operator==(const Graph& a, const Graph& b) { return a.in_ == b.in_; }

 private:
  std::vector<std::vector<NodeId>> in_;
  std::vector<std::vector<NodeId>> out_;
  std::size_t d_in_ = 0;
  std::size_t d_out_ = 0;
};

// Configuration-model network: each node draws an in-degree (self-loop
// excluded) from a discrete power law on {1, ..., n-1} with pmf proportional
// to x^-exponent. In-stubs are matched to sources round-robin over a random
// node permutation, so out-degrees differ by at most one. Repeated pairs are
// collapsed and a self-loop is added to every node.
Graph generate_configuration_model(std::size_t n, double exponent,
                                   std::uint64_t seed);

// Edge-list text: a header "n <count>" followed by one "src dst" per line.
void write_edge_list(const Graph& g, std::ostream& out);
Graph read_edge_list(std::istream& in);
void save_edge_list(const Graph& g, const std::filesystem::path& path);
Graph load_edge_list(const std::filesystem::path& path);

}  // namespace tte
