#include "conceptree/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

namespace conceptree {
namespace {

// Sources are accumulated in fixed-size blocks that are summed in block
// order, so the floating-point result is independent of the worker count.
constexpr std::size_t kSourceBlock = 32;

// Centrality and row sums are compared after rounding so that values equal up
// to summation order still tie.
double tie_key(double value, double resolution) { return std::round(value / resolution); }

using AdjacencyList = std::vector<std::vector<std::size_t>>;

AdjacencyList adjacency_list(const ConceptGraph& graph) {
  AdjacencyList adj(graph.node_count());
  for (const auto& [a, b] : graph.edges) {
    if (a == b || a >= adj.size() || b >= adj.size()) {
      throw ValidationError("graph has a self-loop or an invalid endpoint");
    }
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  for (auto& n : adj) {
    std::ranges::sort(n);
    n.erase(std::unique(n.begin(), n.end()), n.end());
  }
  return adj;
}

struct BrandesScratch {
  explicit BrandesScratch(std::size_t n)
      : order(), predecessors(n), paths(n), distance(n), dependency(n), queue(n) {}

  std::vector<std::size_t> order;
  std::vector<std::vector<std::size_t>> predecessors;
  std::vector<double> paths;
  std::vector<long> distance;
  std::vector<double> dependency;
  std::vector<std::size_t> queue;
};

void accumulate_source(const AdjacencyList& adj, std::size_t source, BrandesScratch& w,
                       std::vector<double>& out) {
  const std::size_t n = adj.size();
  w.order.clear();
  for (std::size_t v = 0; v < n; ++v) {
    w.predecessors[v].clear();
    w.paths[v] = 0.0;
    w.distance[v] = -1;
    w.dependency[v] = 0.0;
  }
  w.paths[source] = 1.0;
  w.distance[source] = 0;

  std::size_t head = 0;
  std::size_t tail = 0;
  w.queue[tail++] = source;
  while (head < tail) {
    const std::size_t v = w.queue[head++];
    w.order.push_back(v);
    for (std::size_t u : adj[v]) {
      if (w.distance[u] < 0) {
        w.distance[u] = w.distance[v] + 1;
        w.queue[tail++] = u;
      }
      if (w.distance[u] == w.distance[v] + 1) {
        w.paths[u] += w.paths[v];
        w.predecessors[u].push_back(v);
      }
    }
  }

  for (auto it = w.order.rbegin(); it != w.order.rend(); ++it) {
    const std::size_t v = *it;
    for (std::size_t p : w.predecessors[v]) {
      w.dependency[p] += w.paths[p] / w.paths[v] * (1.0 + w.dependency[v]);
    }
    if (v != source) out[v] += w.dependency[v];
  }
}

std::string dot_quote(std::string_view text) {
  std::string out = "\"";
  for (char c : text) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::vector<double> betweenness(const ConceptGraph& graph, const BetweennessOptions& options) {
  if (graph.directed) throw Error("betweenness expects an undirected graph");
  const auto adj = adjacency_list(graph);
  const std::size_t n = adj.size();

  std::vector<std::size_t> sources(n);
  std::iota(sources.begin(), sources.end(), std::size_t{0});
  double scale = 0.5;  // each unordered pair is reached from both ends
  if (options.sampled_sources && *options.sampled_sources < n) {
    const std::size_t m = *options.sampled_sources;
    if (m == 0) throw Error("sampled betweenness needs at least one source");
    Rng rng(derive_seed(options.seed, "betweenness-sources"));
    std::shuffle(sources.begin(), sources.end(), rng);
    sources.resize(m);
    std::ranges::sort(sources);
    scale *= static_cast<double>(n) / static_cast<double>(m);
  }

  const std::size_t blocks = (sources.size() + kSourceBlock - 1) / kSourceBlock;
  std::vector<std::vector<double>> partial(blocks);
  parallel_for(blocks, options.workers, [&](std::size_t b) {
    partial[b].assign(n, 0.0);
    BrandesScratch scratch(n);
    const std::size_t end = std::min(sources.size(), (b + 1) * kSourceBlock);
    for (std::size_t i = b * kSourceBlock; i < end; ++i) {
      accumulate_source(adj, sources[i], scratch, partial[b]);
    }
  });

  std::vector<double> total(n, 0.0);
  for (const auto& block : partial) {
    for (std::size_t v = 0; v < n; ++v) total[v] += block[v];
  }
  for (double& v : total) v *= scale;
  return total;
}

std::vector<Hierarchy::Edge> Hierarchy::edges() const {
  std::vector<Edge> out;
  out.reserve(size() > 0 ? size() - 1 : 0);
  for (std::size_t v : insertion_order) {
    if (parent[v]) out.push_back({v, *parent[v], edge_similarity[v]});
  }
  return out;
}

void validate_hierarchy(const Hierarchy& h) {
  const std::size_t k = h.size();
  if (k == 0) throw ValidationError("hierarchy is empty");
  if (h.parent.size() != k || h.edge_similarity.size() != k || h.insertion_order.size() != k ||
      h.centrality.size() != k) {
    throw ValidationError("hierarchy fields have inconsistent sizes");
  }
  if (h.root >= k || h.parent[h.root] || h.insertion_order.front() != h.root) {
    throw ValidationError("hierarchy root is inconsistent");
  }
  std::vector<std::size_t> position(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t v = h.insertion_order[i];
    if (v >= k || position[v] != k) throw ValidationError("insertion order is not a permutation");
    position[v] = i;
  }
  // Parents always precede children in insertion order, which rules out
  // cycles and makes every node reach the root.
  for (std::size_t v = 0; v < k; ++v) {
    if (v == h.root) continue;
    if (!h.parent[v] || *h.parent[v] >= k) {
      throw ValidationError("node '" + h.ids[v] + "' has no valid parent");
    }
    if (position[*h.parent[v]] >= position[v]) {
      throw ValidationError("node '" + h.ids[v] + "' is attached to a later node");
    }
  }
}

Hierarchy extract_hierarchy(std::vector<std::string> ids, const Matrix& symmetric,
                            const ConceptGraph& graph, const BetweennessOptions& options) {
  const std::size_t k = ids.size();
  if (k == 0) throw Error("cannot extract a hierarchy from zero concepts");
  if (symmetric.rows() != k || symmetric.cols() != k) {
    throw Error("similarity matrix does not match the id list");
  }
  if (graph.ids != ids) throw Error("graph and similarity matrix cover different ids");

  Hierarchy h;
  h.centrality = betweenness(graph, options);

  std::vector<double> row_sum(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (i != j) row_sum[i] += symmetric(i, j);
    }
  }

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::ranges::sort(order, [&](std::size_t a, std::size_t b) {
    const double ca = tie_key(h.centrality[a], 1e-8);
    const double cb = tie_key(h.centrality[b], 1e-8);
    if (ca != cb) return ca > cb;
    const double ra = tie_key(row_sum[a], 1e-10);
    const double rb = tie_key(row_sum[b], 1e-10);
    if (ra != rb) return ra > rb;
    return ids[a] < ids[b];
  });

  h.root = order.front();
  h.parent.assign(k, std::nullopt);
  h.edge_similarity.assign(k, 0.0);
  h.insertion_order.push_back(h.root);

  // best[u]: most similar placed node so far; updated in placement order with
  // a strict comparison so the earliest placed node wins ties.
  std::vector<std::size_t> best(k, h.root);
  for (std::size_t step = 1; step < k; ++step) {
    const std::size_t u = order[step];
    h.parent[u] = best[u];
    h.edge_similarity[u] = symmetric(u, best[u]);
    h.insertion_order.push_back(u);
    for (std::size_t i = step + 1; i < k; ++i) {
      const std::size_t w = order[i];
      if (symmetric(w, u) > symmetric(w, best[w])) best[w] = u;
    }
  }
  h.ids = std::move(ids);
  return h;
}

Hierarchy extract_hierarchy(const SimilarityMatrix& s, const ConceptGraph& graph,
                            const BetweennessOptions& options) {
  return extract_hierarchy(s.ids, symmetric_similarity(s), graph, options);
}

std::string tree_to_dot(const Hierarchy& h, const NameMap& names) {
  const auto label_of = [&](std::size_t v) -> const std::string& {
    auto it = names.find(h.ids[v]);
    return it == names.end() ? h.ids[v] : it->second;
  };
  std::ostringstream out;
  out << "digraph {\n";
  for (std::size_t v : h.insertion_order) {
    out << "  " << dot_quote(h.ids[v]) << " [label=" << dot_quote(label_of(v)) << "];\n";
  }
  for (const auto& e : h.edges()) {
    char similarity[32];
    std::snprintf(similarity, sizeof(similarity), "%.3f", e.similarity);
    out << "  " << dot_quote(h.ids[e.parent]) << " -> " << dot_quote(h.ids[e.child])
        << " [label=\"" << similarity << "\"];\n";
  }
  out << "}\n";
  return out.str();
}

nlohmann::json hierarchy_to_json(const Hierarchy& h) {
  nlohmann::json order = nlohmann::json::array();
  for (std::size_t v : h.insertion_order) order.push_back(h.ids[v]);
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : h.edges()) {
    edges.push_back({{"child", h.ids[e.child]}, {"parent", h.ids[e.parent]}, {"similarity", e.similarity}});
  }
  nlohmann::json centrality = nlohmann::json::object();
  for (std::size_t v = 0; v < h.size(); ++v) centrality[h.ids[v]] = h.centrality[v];
  return {{"root", h.ids[h.root]}, {"order", order}, {"edges", edges}, {"centrality", centrality}};
}

Hierarchy hierarchy_from_json(const nlohmann::json& doc) {
  Hierarchy h;
  try {
    h.ids = doc.at("order").get<std::vector<std::string>>();
    const std::size_t k = h.ids.size();
    std::map<std::string, std::size_t, std::less<>> index;
    for (std::size_t i = 0; i < k; ++i) {
      if (!index.emplace(h.ids[i], i).second) {
        throw ValidationError("duplicate id '" + h.ids[i] + "' in tree order");
      }
    }
    const auto lookup = [&](const std::string& id) {
      auto it = index.find(id);
      if (it == index.end()) throw ValidationError("tree refers to unknown id '" + id + "'");
      return it->second;
    };

    h.root = lookup(doc.at("root").get<std::string>());
    h.parent.assign(k, std::nullopt);
    h.edge_similarity.assign(k, 0.0);
    h.centrality.assign(k, 0.0);
    h.insertion_order.resize(k);
    std::iota(h.insertion_order.begin(), h.insertion_order.end(), std::size_t{0});
    for (const auto& e : doc.at("edges")) {
      const auto child = lookup(e.at("child").get<std::string>());
      if (h.parent[child]) throw ValidationError("node '" + h.ids[child] + "' has two parents");
      h.parent[child] = lookup(e.at("parent").get<std::string>());
      h.edge_similarity[child] = e.at("similarity").get<double>();
    }
    for (const auto& [id, value] : doc.at("centrality").items()) {
      h.centrality[lookup(id)] = value.get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed tree document: ") + e.what());
  }
  validate_hierarchy(h);
  return h;
}

}  // namespace conceptree
