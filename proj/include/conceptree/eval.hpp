#pragma once

#include <map>

#include "conceptree/hierarchy.hpp"

namespace conceptree {

/// Union-find with path halving and union by size.
class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n);

  std::size_t find(std::size_t x);
  /// Returns false when x and y were already joined.
  bool unite(std::size_t x, std::size_t y);
  std::size_t components() const noexcept { return components_; }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
  std::size_t components_;
};

struct StructureReport {
  std::string label;
  bool directed = false;
  std::size_t node_count = 0;
  std::size_t edge_count = 0;
  std::size_t connected_components = 0;
  std::size_t isolated_nodes = 0;
};

/// Edges are counted under the graph's own convention (directed pairs or
/// unordered pairs); components and isolated nodes use the undirected view.
StructureReport structure_metrics(const ConceptGraph& graph);
StructureReport structure_metrics(const Hierarchy& h, std::string label = "H");

struct MeanWithCI {
  double mean = 0.0;
  /// 1.96 * sample sd / sqrt(n); zero for n < 2.
  double half_width = 0.0;
  std::size_t n = 0;
};

MeanWithCI mean_with_ci(std::span<const double> values);

/// Concept id -> cluster label.
using ClusterAssignment = std::map<std::string, std::string, std::less<>>;

ClusterAssignment read_clusters_csv(std::istream& in);
ClusterAssignment load_clusters(const std::filesystem::path& path);
void write_clusters_csv(std::ostream& out, const ClusterAssignment& clusters);

/// Fraction of tree edges whose endpoints share a cluster.
MeanWithCI edge_cluster_accuracy(const Hierarchy& h, const ClusterAssignment& clusters);

/// Mean silhouette for a precomputed distance matrix. Points in singleton
/// clusters, and points with a = b = 0, score 0.
MeanWithCI silhouette_from_distances(const Matrix& distances, std::span<const std::string> labels);

/// Silhouette under the distance 1 - symmetric similarity.
MeanWithCI silhouette(const Matrix& symmetric, std::span<const std::string> ids,
                      const ClusterAssignment& clusters);

enum class SourceMetric { cosine_similarity, euclidean_distance };
enum class SourceKind { embedding_table, precomputed_matrix, cav_weights };

std::string_view to_string(SourceMetric metric);
SourceMetric source_metric_from_string(std::string_view text);
/// "up" when higher values mean closer concepts, "down" otherwise.
std::string_view direction(SourceMetric metric);

/// An external notion of concept similarity. For vector kinds `values` holds
/// one row per concept; for a precomputed matrix it is K x K and read as is.
struct SimilaritySource {
  std::string name;
  SourceKind kind = SourceKind::embedding_table;
  SourceMetric metric = SourceMetric::cosine_similarity;
  std::vector<std::string> ids;
  Matrix values;

  std::size_t index_of(std::string_view id) const;
  /// Metric value between two rows.
  double between(std::size_t a, std::size_t b) const;
};

SimilaritySource source_from_embeddings(std::string name, const EmbeddingStore& store,
                                        SourceMetric metric);
SimilaritySource source_from_matrix(std::string name, std::vector<std::string> ids, Matrix values,
                                    SourceMetric metric);

/// CAV weights as a vector source; Euclidean mode L2-normalises the weights.
SimilaritySource cav_weight_source(std::span<const ConceptVector> cavs,
                                   SourceMetric metric = SourceMetric::euclidean_distance);

struct AlignmentScore {
  MeanWithCI score;
  SourceMetric metric = SourceMetric::cosine_similarity;
};

/// Mean metric value over the tree's child-parent pairs. Throws
/// ValidationError listing every tree id the source lacks.
AlignmentScore alignment_score(const Hierarchy& h, const SimilaritySource& source);

/// Uniform random recursive tree over `ids`: random insertion order, each
/// node attached to a uniformly chosen earlier node. Edge similarities are
/// filled from `symmetric` when given, else left at 0.
Hierarchy random_hierarchy(std::vector<std::string> ids, std::uint64_t seed,
                           const Matrix* symmetric = nullptr);

/// Tree mined from an external source restricted to `ids`: the attachment
/// similarity is the source value (negated for distances) and centrality is
/// computed on its top-(K-1) pair graph.
Hierarchy hierarchy_from_source(const SimilaritySource& source, std::span<const std::string> ids);

nlohmann::json to_json(const MeanWithCI& m, std::string_view direction);
nlohmann::json to_json(const StructureReport& r);

}  // namespace conceptree
