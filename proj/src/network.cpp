#include "idgame/network.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

#include "idgame/random.hpp"

namespace idgame {

std::size_t DirectedNetwork::n_edges() const {
  std::size_t total = 0;
  for (const auto& list : out_) total += list.size();
  return total;
}

bool DirectedNetwork::has_edge(NodeId src, NodeId dst) const {
  const auto& list = out_.at(src);
  return std::binary_search(list.begin(), list.end(), dst);
}

bool DirectedNetwork::add_edge(NodeId src, NodeId dst) {
  if (src >= out_.size() || dst >= out_.size()) throw std::invalid_argument("edge endpoint out of range");
  if (src == dst) throw std::invalid_argument("self-loop " + std::to_string(src));
  auto& list = out_[src];
  auto it = std::lower_bound(list.begin(), list.end(), dst);
  if (it != list.end() && *it == dst) return false;
  list.insert(it, dst);
  return true;
}

bool DirectedNetwork::remove_edge(NodeId src, NodeId dst) {
  auto& list = out_.at(src);
  auto it = std::lower_bound(list.begin(), list.end(), dst);
  if (it == list.end() || *it != dst) return false;
  list.erase(it);
  return true;
}

std::vector<std::pair<NodeId, NodeId>> DirectedNetwork::edges() const {
  std::vector<std::pair<NodeId, NodeId>> result;
  result.reserve(n_edges());
  for (NodeId src = 0; src < out_.size(); ++src) {
    for (NodeId dst : out_[src]) result.emplace_back(src, dst);
  }
  return result;
}

std::vector<NodeId> DirectedNetwork::isolated_nodes() const {
  std::vector<NodeId> result;
  for (NodeId node = 0; node < out_.size(); ++node) {
    if (out_[node].empty()) result.push_back(node);
  }
  return result;
}

void GeneratorParams::validate() const {
  if (n_nodes < 2) throw std::invalid_argument("generator needs at least 2 nodes");
  if (max_out_degree < 1) throw std::invalid_argument("max_out_degree must be >= 1");
  if (triad_attempts_per_iter < 1) throw std::invalid_argument("triad_attempts_per_iter must be >= 1");
  if (break_fraction < Rational(0) || break_fraction >= Rational(1)) {
    throw std::invalid_argument("break_fraction must lie in [0, 1)");
  }
}

namespace {

class NetworkGrower {
 public:
  NetworkGrower(const GeneratorParams& params)
      : params_(params), net_(params.n_nodes), in_(params.n_nodes), rng_(params.rng_seed) {}

  DirectedNetwork run(const std::function<void(const IterationTrace&)>& trace) {
    for (std::size_t iter = 0; iter < params_.n_iterations; ++iter) {
      for (std::size_t p = 0; p < params_.pairs_per_iter; ++p) link_random_pair();
      for (std::size_t t = 0; t < params_.triad_attempts_per_iter; ++t) close_random_triad();
      IterationTrace record{iter, net_.n_edges(), 0, 0};
      record.edges_removed = break_edges();
      record.edges_after_break = net_.n_edges();
      if (trace) trace(record);
    }
    return std::move(net_);
  }

 private:
  bool can_add(NodeId src, NodeId dst) const {
    return src != dst && net_.out_degree(src) < params_.max_out_degree && !net_.has_edge(src, dst);
  }

  void add(NodeId src, NodeId dst) {
    net_.add_edge(src, dst);
    auto& list = in_[dst];
    list.insert(std::lower_bound(list.begin(), list.end(), src), src);
  }

  void remove(NodeId src, NodeId dst) {
    net_.remove_edge(src, dst);
    auto& list = in_[dst];
    list.erase(std::lower_bound(list.begin(), list.end(), src));
  }

  void link_random_pair() {
    const auto n = params_.n_nodes;
    const auto i = static_cast<NodeId>(rng_.below(n));
    auto j = static_cast<NodeId>(rng_.below(n - 1));
    if (j >= i) ++j;
    if (can_add(i, j)) {
      add(i, j);
    } else if (can_add(j, i)) {
      add(j, i);
    }
  }

  // Third parties j completing a triad on edge i -> k (k -> j or j -> k)
  // for which i -> j could still be added.
  std::vector<NodeId> closers(NodeId i, NodeId k) const {
    std::vector<NodeId> merged;
    if (net_.out_degree(i) >= params_.max_out_degree) return merged;
    const auto out = net_.out_neighbors(k);
    const auto& in = in_[k];
    merged.reserve(out.size() + in.size());
    std::set_union(out.begin(), out.end(), in.begin(), in.end(), std::back_inserter(merged));
    std::erase_if(merged, [&](NodeId j) { return j == i || net_.has_edge(i, j); });
    return merged;
  }

  // Uniform over all qualifying (i, k, j) instances of either closure pattern.
  void close_random_triad() {
    const auto edges = net_.edges();
    std::vector<std::size_t> cumulative;
    cumulative.reserve(edges.size());
    std::size_t total = 0;
    for (const auto& [i, k] : edges) {
      total += closers(i, k).size();
      cumulative.push_back(total);
    }
    if (total == 0) return;
    const std::size_t pick = rng_.below(total);
    const auto pos = static_cast<std::size_t>(
        std::upper_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin());
    const auto [i, k] = edges[pos];
    const std::size_t offset = pick - (pos == 0 ? 0 : cumulative[pos - 1]);
    add(i, closers(i, k)[offset]);
  }

  std::size_t break_edges() {
    auto edges = net_.edges();
    if (edges.empty()) return 0;
    const auto& frac = params_.break_fraction;
    const std::size_t count = static_cast<std::size_t>(ceil(Rational(static_cast<std::int64_t>(edges.size())) * frac));
    // Partial Fisher-Yates: the first `count` slots become a uniform sample.
    for (std::size_t s = 0; s < count; ++s) {
      const std::size_t pick = s + rng_.below(edges.size() - s);
      std::swap(edges[s], edges[pick]);
      remove(edges[s].first, edges[s].second);
    }
    return count;
  }

  const GeneratorParams& params_;
  DirectedNetwork net_;
  std::vector<std::vector<NodeId>> in_;
  Rng rng_;
};

}  // namespace

DirectedNetwork generate_network(const GeneratorParams& params,
                                 const std::function<void(const IterationTrace&)>& trace) {
  params.validate();
  return NetworkGrower(params).run(trace);
}

DirectedNetwork symmetrize(const DirectedNetwork& network) {
  DirectedNetwork result = network;
  for (const auto& [src, dst] : network.edges()) result.add_edge(dst, src);
  return result;
}

DirectedNetwork three_cycle() {
  DirectedNetwork net(3);
  net.add_edge(0, 1);
  net.add_edge(1, 2);
  net.add_edge(2, 0);
  return net;
}

DirectedNetwork complete_network(std::size_t n_nodes) {
  DirectedNetwork net(n_nodes);
  for (NodeId i = 0; i < n_nodes; ++i) {
    for (NodeId j = 0; j < n_nodes; ++j) {
      if (i != j) net.add_edge(i, j);
    }
  }
  return net;
}

namespace {

bool parse_u64(std::string_view token, std::uint64_t& out) {
  if (token.empty()) return false;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc{} && ptr == token.data() + token.size();
}

}  // namespace

DirectedNetwork read_network(std::string_view text) {
  std::optional<DirectedNetwork> net;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;

    if (!net) {
      std::uint64_t n = 0;
      if (!parse_u64(line, n) || n == 0) throw ParseError(line_no, "expected positive node count, got '" + std::string(line) + "'");
      net.emplace(static_cast<std::size_t>(n));
      continue;
    }
    const auto space = line.find(' ');
    std::uint64_t src = 0;
    std::uint64_t dst = 0;
    if (space == std::string_view::npos || !parse_u64(line.substr(0, space), src) ||
        !parse_u64(line.substr(space + 1), dst)) {
      throw ParseError(line_no, "malformed edge '" + std::string(line) + "'");
    }
    if (src >= net->n_nodes() || dst >= net->n_nodes()) {
      throw ParseError(line_no, "node index out of range in '" + std::string(line) + "'");
    }
    if (src == dst) throw ParseError(line_no, "self-loop on node " + std::to_string(src));
    if (!net->add_edge(static_cast<NodeId>(src), static_cast<NodeId>(dst))) {
      throw ParseError(line_no, "duplicate edge '" + std::string(line) + "'");
    }
  }
  if (!net) throw ParseError(line_no, "missing node count");
  return std::move(*net);
}

std::string write_network(const DirectedNetwork& network) {
  std::string out = std::to_string(network.n_nodes()) + "\n";
  for (const auto& [src, dst] : network.edges()) {
    out += std::to_string(src);
    out += ' ';
    out += std::to_string(dst);
    out += '\n';
  }
  return out;
}

DirectedNetwork read_network_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open network file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return read_network(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(e.line(), e.detail(), path);
  }
}

void write_network_file(const DirectedNetwork& network, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write network file " + path);
  out << write_network(network);
  if (!out) throw std::runtime_error("write failed for " + path);
}

std::string write_dot(const DirectedNetwork& network, std::span<const std::int64_t> values,
                      std::int64_t shade_lo, std::int64_t shade_hi, std::span<const std::string> labels) {
  if (values.size() != network.n_nodes()) throw std::invalid_argument("one shading value per node required");
  if (!labels.empty() && labels.size() != network.n_nodes()) throw std::invalid_argument("one label per node required");
  std::ostringstream os;
  os << "digraph identities {\n"
     << "  node [shape=circle, style=filled, fontsize=8];\n"
     << "  edge [arrowsize=0.5];\n";
  for (NodeId node = 0; node < network.n_nodes(); ++node) {
    int level = 255;
    if (shade_hi > shade_lo) {
      const auto clamped = std::clamp(values[node], shade_lo, shade_hi);
      level = static_cast<int>(255 - (255 * (clamped - shade_lo)) / (shade_hi - shade_lo));
    }
    char fill[8];
    std::snprintf(fill, sizeof fill, "#%02x%02x%02x", level, level, level);
    const char* font = level < 128 ? "white" : "black";
    os << "  " << node << " [fillcolor=\"" << fill << "\", fontcolor=" << font;
    if (!labels.empty()) os << ", label=\"" << labels[node] << "\"";
    os << "];\n";
  }
  for (const auto& [src, dst] : network.edges()) os << "  " << src << " -> " << dst << ";\n";
  os << "}\n";
  return os.str();
}

}  // namespace idgame
