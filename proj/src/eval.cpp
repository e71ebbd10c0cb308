#include "conceptree/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "conceptree/io.hpp"

namespace conceptree {

DisjointSet::DisjointSet(std::size_t n) : parent_(n), size_(n, 1), components_(n) {
  std::iota(parent_.begin(), parent_.end(), std::size_t{0});
}

std::size_t DisjointSet::find(std::size_t x) {
  while (parent_[x] != x) {
    parent_[x] = parent_[parent_[x]];
    x = parent_[x];
  }
  return x;
}

bool DisjointSet::unite(std::size_t x, std::size_t y) {
  x = find(x);
  y = find(y);
  if (x == y) return false;
  if (size_[x] < size_[y]) std::swap(x, y);
  parent_[y] = x;
  size_[x] += size_[y];
  --components_;
  return true;
}

namespace {

StructureReport structure_of(std::size_t n, std::span<const GraphEdge> edges) {
  DisjointSet sets(n);
  std::vector<bool> touched(n, false);
  for (const auto& [a, b] : edges) {
    sets.unite(a, b);
    touched[a] = touched[b] = true;
  }
  StructureReport r;
  r.node_count = n;
  r.edge_count = edges.size();
  r.connected_components = sets.components();
  r.isolated_nodes = static_cast<std::size_t>(std::ranges::count(touched, false));
  return r;
}

}  // namespace

StructureReport structure_metrics(const ConceptGraph& graph) {
  auto r = structure_of(graph.node_count(), graph.edges);
  r.label = std::string(to_string(graph.label));
  r.directed = graph.directed;
  return r;
}

StructureReport structure_metrics(const Hierarchy& h, std::string label) {
  std::vector<GraphEdge> edges;
  for (const auto& e : h.edges()) edges.emplace_back(e.child, e.parent);
  auto r = structure_of(h.size(), edges);
  r.label = std::move(label);
  r.directed = true;
  return r;
}

MeanWithCI mean_with_ci(std::span<const double> values) {
  MeanWithCI m;
  m.n = values.size();
  if (m.n == 0) throw Error("mean of an empty sample");
  m.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(m.n);
  if (m.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - m.mean) * (v - m.mean);
    const double sd = std::sqrt(ss / static_cast<double>(m.n - 1));
    m.half_width = 1.96 * sd / std::sqrt(static_cast<double>(m.n));
  }
  return m;
}

ClusterAssignment read_clusters_csv(std::istream& in) {
  ClusterAssignment clusters;
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty clusters file");
  if (strip_cr(line) != "id,cluster") throw ValidationError("clusters header must be 'id,cluster'");
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    auto text = strip_cr(line);
    if (text.empty()) continue;
    auto fields = split_csv_line(text);
    if (fields.size() != 2 || fields[0].empty()) {
      throw ValidationError("malformed clusters row at row " + std::to_string(row));
    }
    if (!clusters.emplace(std::string(fields[0]), std::string(fields[1])).second) {
      throw ValidationError("duplicate id '" + std::string(fields[0]) + "' at row " +
                            std::to_string(row));
    }
  }
  return clusters;
}

ClusterAssignment load_clusters(const std::filesystem::path& path) {
  auto in = open_input_file(path);
  try {
    return read_clusters_csv(in);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_clusters_csv(std::ostream& out, const ClusterAssignment& clusters) {
  out << "id,cluster\n";
  for (const auto& [id, label] : clusters) out << id << ',' << label << '\n';
}

namespace {

const std::string& cluster_of(const ClusterAssignment& clusters, const std::string& id) {
  auto it = clusters.find(id);
  if (it == clusters.end()) throw ValidationError("concept '" + id + "' has no cluster label");
  return it->second;
}

}  // namespace

MeanWithCI edge_cluster_accuracy(const Hierarchy& h, const ClusterAssignment& clusters) {
  for (const auto& id : h.ids) cluster_of(clusters, id);
  std::vector<double> hits;
  for (const auto& e : h.edges()) {
    hits.push_back(cluster_of(clusters, h.ids[e.child]) == cluster_of(clusters, h.ids[e.parent]));
  }
  if (hits.empty()) throw Error("edge accuracy needs a tree with at least one edge");
  return mean_with_ci(hits);
}

MeanWithCI silhouette_from_distances(const Matrix& distances, std::span<const std::string> labels) {
  const std::size_t n = labels.size();
  if (distances.rows() != n || distances.cols() != n) {
    throw Error("distance matrix does not match the label count");
  }
  std::vector<std::string> distinct(labels.begin(), labels.end());
  std::ranges::sort(distinct);
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 2) throw Error("silhouette needs at least two clusters");

  std::vector<std::size_t> label_index(n);
  std::vector<std::size_t> cluster_size(distinct.size(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    label_index[i] = static_cast<std::size_t>(
        std::ranges::lower_bound(distinct, labels[i]) - distinct.begin());
    ++cluster_size[label_index[i]];
  }

  std::vector<double> scores(n, 0.0);
  std::vector<double> sums(distinct.size());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t own = label_index[i];
    if (cluster_size[own] == 1) continue;
    std::ranges::fill(sums, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) sums[label_index[j]] += distances(i, j);
    }
    const double a = sums[own] / static_cast<double>(cluster_size[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < distinct.size(); ++c) {
      if (c != own) b = std::min(b, sums[c] / static_cast<double>(cluster_size[c]));
    }
    const double denom = std::max(a, b);
    scores[i] = denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return mean_with_ci(scores);
}

MeanWithCI silhouette(const Matrix& symmetric, std::span<const std::string> ids,
                      const ClusterAssignment& clusters) {
  Matrix distances(symmetric.rows(), symmetric.cols());
  for (std::size_t i = 0; i < symmetric.rows(); ++i) {
    for (std::size_t j = 0; j < symmetric.cols(); ++j) distances(i, j) = 1.0 - symmetric(i, j);
  }
  std::vector<std::string> labels;
  for (const auto& id : ids) labels.push_back(cluster_of(clusters, id));
  return silhouette_from_distances(distances, labels);
}

std::string_view to_string(SourceMetric metric) {
  return metric == SourceMetric::cosine_similarity ? "cosine" : "euclidean";
}

SourceMetric source_metric_from_string(std::string_view text) {
  if (text == "cosine") return SourceMetric::cosine_similarity;
  if (text == "euclidean") return SourceMetric::euclidean_distance;
  throw ValidationError("unknown metric '" + std::string(text) + "' (expected cosine|euclidean)");
}

std::string_view direction(SourceMetric metric) {
  return metric == SourceMetric::cosine_similarity ? "up" : "down";
}

std::size_t SimilaritySource::index_of(std::string_view id) const {
  auto it = std::ranges::find(ids, id);
  if (it == ids.end()) throw ValidationError("source '" + name + "' lacks id '" + std::string(id) + "'");
  return static_cast<std::size_t>(it - ids.begin());
}

double SimilaritySource::between(std::size_t a, std::size_t b) const {
  if (kind == SourceKind::precomputed_matrix) return values(a, b);
  const auto x = values.row(a);
  const auto y = values.row(b);
  if (metric == SourceMetric::euclidean_distance) {
    double ss = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) ss += (x[k] - y[k]) * (x[k] - y[k]);
    return std::sqrt(ss);
  }
  const double nx = std::sqrt(dot(x, x));
  const double ny = std::sqrt(dot(y, y));
  return nx > 0.0 && ny > 0.0 ? dot(x, y) / (nx * ny) : 0.0;
}

SimilaritySource source_from_embeddings(std::string name, const EmbeddingStore& store,
                                        SourceMetric metric) {
  SimilaritySource s{std::move(name), SourceKind::embedding_table, metric, store.ids(),
                     Matrix(store.size(), store.dim())};
  for (std::size_t i = 0; i < store.size(); ++i) std::ranges::copy(store.vector(i), s.values.row(i).begin());
  return s;
}

SimilaritySource source_from_matrix(std::string name, std::vector<std::string> ids, Matrix values,
                                    SourceMetric metric) {
  if (values.rows() != ids.size() || values.cols() != ids.size()) {
    throw ValidationError("source matrix must be K x K over its ids");
  }
  return {std::move(name), SourceKind::precomputed_matrix, metric, std::move(ids), std::move(values)};
}

SimilaritySource cav_weight_source(std::span<const ConceptVector> cavs, SourceMetric metric) {
  const std::size_t dim = cavs.empty() ? 0 : cavs.front().weights.size();
  SimilaritySource s{"audio", SourceKind::cav_weights, metric, {}, Matrix(cavs.size(), dim)};
  for (std::size_t i = 0; i < cavs.size(); ++i) {
    s.ids.push_back(cavs[i].concept_id);
    auto row = s.values.row(i);
    std::ranges::copy(cavs[i].weights, row.begin());
    if (metric == SourceMetric::euclidean_distance) {
      const double norm = std::sqrt(dot(row, row));
      if (norm > 0.0) {
        for (double& v : row) v /= norm;
      }
    }
  }
  return s;
}

AlignmentScore alignment_score(const Hierarchy& h, const SimilaritySource& source) {
  std::vector<std::string> missing;
  for (const auto& id : h.ids) {
    if (std::ranges::find(source.ids, id) == source.ids.end()) missing.push_back(id);
  }
  if (!missing.empty()) {
    std::string msg = "source '" + source.name + "' lacks ids:";
    for (const auto& id : missing) msg += " " + id;
    throw ValidationError(msg);
  }
  std::vector<std::size_t> row(h.size());
  for (std::size_t v = 0; v < h.size(); ++v) row[v] = source.index_of(h.ids[v]);

  std::vector<double> values;
  for (const auto& e : h.edges()) values.push_back(source.between(row[e.child], row[e.parent]));
  if (values.empty()) throw Error("alignment needs a tree with at least one edge");
  return {mean_with_ci(values), source.metric};
}

Hierarchy random_hierarchy(std::vector<std::string> ids, std::uint64_t seed, const Matrix* symmetric) {
  const std::size_t k = ids.size();
  if (k == 0) throw Error("cannot build a random hierarchy over zero concepts");
  Rng rng(derive_seed(seed, "random-hierarchy"));
  Hierarchy h;
  h.insertion_order.resize(k);
  std::iota(h.insertion_order.begin(), h.insertion_order.end(), std::size_t{0});
  std::shuffle(h.insertion_order.begin(), h.insertion_order.end(), rng);
  h.root = h.insertion_order.front();
  h.parent.assign(k, std::nullopt);
  h.edge_similarity.assign(k, 0.0);
  h.centrality.assign(k, 0.0);
  for (std::size_t i = 1; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    const std::size_t child = h.insertion_order[i];
    const std::size_t parent = h.insertion_order[pick(rng)];
    h.parent[child] = parent;
    if (symmetric) h.edge_similarity[child] = (*symmetric)(child, parent);
  }
  h.ids = std::move(ids);
  return h;
}

Hierarchy hierarchy_from_source(const SimilaritySource& source, std::span<const std::string> ids) {
  const std::size_t k = ids.size();
  std::vector<std::size_t> row(k);
  for (std::size_t i = 0; i < k; ++i) row[i] = source.index_of(ids[i]);

  const double sign = source.metric == SourceMetric::euclidean_distance ? -1.0 : 1.0;
  Matrix similarity(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      similarity(i, j) = sign * 0.5 * (source.between(row[i], row[j]) + source.between(row[j], row[i]));
    }
  }
  std::vector<std::string> id_list(ids.begin(), ids.end());
  auto graph = top_pairs_graph(id_list, similarity, k > 0 ? k - 1 : 0);
  return extract_hierarchy(std::move(id_list), similarity, graph);
}

nlohmann::json to_json(const MeanWithCI& m, std::string_view dir) {
  return {{"mean", m.mean}, {"half_width", m.half_width}, {"n", m.n}, {"direction", dir}};
}

nlohmann::json to_json(const StructureReport& r) {
  return {{"label", r.label},
          {"directed", r.directed},
          {"nodes", r.node_count},
          {"edges", r.edge_count},
          {"connected_components", r.connected_components},
          {"isolated_nodes", r.isolated_nodes}};
}

}  // namespace conceptree
