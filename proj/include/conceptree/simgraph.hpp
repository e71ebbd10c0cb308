#pragma once

#include <optional>
#include <utility>

#include "conceptree/cav.hpp"

namespace conceptree {

inline constexpr double kAdjacencyThreshold = 0.5;

/// S[i][j]: mean probability that concept j's vector assigns to the
/// examples of concept i. The diagonal is kept but never becomes an edge.
struct SimilarityMatrix {
  std::vector<std::string> ids;
  Matrix values;

  std::size_t size() const noexcept { return ids.size(); }
};

enum class GraphLabel { adjacency, sparse_adjacency, top1, random_sparse_adjacency, random_top1 };

std::string_view to_string(GraphLabel label);
GraphLabel graph_label_from_string(std::string_view text);

using GraphEdge = std::pair<std::size_t, std::size_t>;

/// Simple graph over concept ids. Undirected edges are stored with
/// first < second; edges are kept sorted.
struct ConceptGraph {
  std::vector<std::string> ids;
  bool directed = false;
  std::vector<GraphEdge> edges;
  GraphLabel label = GraphLabel::adjacency;
  std::optional<std::uint64_t> seed;

  std::size_t node_count() const noexcept { return ids.size(); }
};

SimilarityMatrix similarity_matrix(std::span<const ConceptVector> cavs,
                                   const ConceptCatalog& catalog, const EmbeddingStore& store,
                                   std::size_t workers = 1);

/// Directed edge i -> j iff i != j and S[i][j] >= 1/2.
ConceptGraph adjacency(const SimilarityMatrix& s);

/// (S + S^T) / 2.
Matrix symmetric_similarity(const Matrix& s);
inline Matrix symmetric_similarity(const SimilarityMatrix& s) { return symmetric_similarity(s.values); }

/// Undirected edge {i, j} iff max(S[i][j], S[j][i]) >= 1/2.
ConceptGraph undirected_adjacency(const SimilarityMatrix& s);

/// The `target_edges` unordered pairs with the largest entries of a
/// symmetric matrix; ties at the cutoff go to the lexicographically smaller
/// pair.
ConceptGraph top_pairs_graph(std::vector<std::string> ids, const Matrix& symmetric,
                             std::size_t target_edges);
ConceptGraph sparse_graph(const SimilarityMatrix& s, std::size_t target_edges);

/// One edge from every node to its most similar other node under the
/// symmetric similarity (smallest index on ties).
ConceptGraph top1_graph(const SimilarityMatrix& s);

ConceptGraph random_sparse_graph(std::vector<std::string> ids, std::size_t edges,
                                 std::uint64_t seed);
ConceptGraph random_top1_graph(std::vector<std::string> ids, std::uint64_t seed);

void write_similarity_csv(std::ostream& out, const SimilarityMatrix& s);
SimilarityMatrix read_similarity_csv(std::istream& in);
SimilarityMatrix load_similarity_csv(const std::filesystem::path& path);

nlohmann::json graph_to_json(const ConceptGraph& graph);
ConceptGraph graph_from_json(const nlohmann::json& doc);

}  // namespace conceptree
