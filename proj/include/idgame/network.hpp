#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "idgame/rational.hpp"

namespace idgame {

using NodeId = std::uint32_t;

/// Directed observation network: an edge i -> j means i observes j.
///
/// Out-neighbor lists are kept sorted and free of duplicates and self-loops.
class DirectedNetwork {
 public:
  DirectedNetwork() = default;
  explicit DirectedNetwork(std::size_t n_nodes) : out_(n_nodes) {}

  [[nodiscard]] std::size_t n_nodes() const { return out_.size(); }
  [[nodiscard]] std::size_t n_edges() const;
  [[nodiscard]] std::span<const NodeId> out_neighbors(NodeId node) const { return out_.at(node); }
  [[nodiscard]] std::size_t out_degree(NodeId node) const { return out_.at(node).size(); }
  [[nodiscard]] bool has_edge(NodeId src, NodeId dst) const;

  /// Adds src -> dst. Returns false (and changes nothing) if the edge exists.
  /// Throws std::invalid_argument on self-loops or out-of-range nodes.
  bool add_edge(NodeId src, NodeId dst);
  bool remove_edge(NodeId src, NodeId dst);

  /// All edges in (src, dst) lexicographic order.
  [[nodiscard]] std::vector<std::pair<NodeId, NodeId>> edges() const;

  /// Nodes with no out-neighbors. Their utility is undefined, so the dynamics freeze them.
  [[nodiscard]] std::vector<NodeId> isolated_nodes() const;

  friend bool operator==(const DirectedNetwork&, const DirectedNetwork&) = default;

 private:
  std::vector<std::vector<NodeId>> out_;
};

/// Parameters of the clustered directed network generator.
struct GeneratorParams {
  std::size_t n_nodes = 100;
  std::size_t max_out_degree = 5;
  std::size_t n_iterations = 100;
  std::size_t pairs_per_iter = 3;
  std::size_t triad_attempts_per_iter = 6;
  Rational break_fraction{1, 200};
  std::uint64_t rng_seed = 0;

  void validate() const;
};

/// Edge counts around the break step of one growth iteration.
struct IterationTrace {
  std::size_t iteration;
  std::size_t edges_before_break;
  std::size_t edges_removed;
  std::size_t edges_after_break;
};

/// Grows a clustered directed network with bounded out-degree.
///
/// Each iteration (1) links random pairs, (2) closes random triads
/// i->k->j or i->k<-j with i->j, (3) breaks ceil(break_fraction * edges)
/// random edges. Output is a pure function of `params`.
DirectedNetwork generate_network(const GeneratorParams& params,
                                 const std::function<void(const IterationTrace&)>& trace = {});

/// Inserts the reciprocal of every edge. Out-degree limits are not enforced.
DirectedNetwork symmetrize(const DirectedNetwork& network);

/// The three-person observation cycle 0 -> 1 -> 2 -> 0, which has no pure
/// Nash equilibrium for uniqueness weight above one.
DirectedNetwork three_cycle();

/// Complete directed graph without self-loops.
DirectedNetwork complete_network(std::size_t n_nodes);

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& detail, const std::string& source = "")
      : std::runtime_error((source.empty() ? "" : source + ": ") + "line " + std::to_string(line) + ": " + detail),
        line_(line),
        detail_(detail) {}
  [[nodiscard]] std::size_t line() const { return line_; }
  [[nodiscard]] const std::string& detail() const { return detail_; }

 private:
  std::size_t line_;
  std::string detail_;
};

/// Edge-list text: node count on the first line, then one "src dst" per line.
/// Lines starting with '#' and blank lines are ignored.
DirectedNetwork read_network(std::string_view text);
std::string write_network(const DirectedNetwork& network);

DirectedNetwork read_network_file(const std::string& path);
void write_network_file(const DirectedNetwork& network, const std::string& path);

/// Graphviz rendering with grayscale node fills: `shade_lo` maps to white,
/// `shade_hi` to black. `values` holds one shading value per node and
/// `labels` (optional) one label per node.
std::string write_dot(const DirectedNetwork& network, std::span<const std::int64_t> values,
                      std::int64_t shade_lo, std::int64_t shade_hi,
                      std::span<const std::string> labels = {});

}  // namespace idgame
