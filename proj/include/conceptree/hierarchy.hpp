#pragma once

#include <map>
#include <optional>

#include "conceptree/simgraph.hpp"

namespace conceptree {

struct BetweennessOptions {
  std::size_t workers = 1;
  /// When set, accumulate over this many uniformly drawn sources and rescale
  /// by K / sources. Exact when unset.
  std::optional<std::size_t> sampled_sources;
  std::uint64_t seed = 0;
};

/// Unnormalised betweenness of an undirected graph: for each v, the sum over
/// unordered pairs {s, t} not containing v of sigma_st(v) / sigma_st.
/// Brandes' accumulation; the result does not depend on `workers`.
std::vector<double> betweenness(const ConceptGraph& graph, const BetweennessOptions& options = {});

/// Rooted tree over concepts. Every node except the root has a parent.
struct Hierarchy {
  struct Edge {
    std::size_t child;
    std::size_t parent;
    double similarity;
  };

  std::vector<std::string> ids;
  std::size_t root = 0;
  std::vector<std::optional<std::size_t>> parent;
  /// Similarity between a node and its parent; 0 for the root.
  std::vector<double> edge_similarity;
  std::vector<std::size_t> insertion_order;
  std::vector<double> centrality;

  std::size_t size() const noexcept { return ids.size(); }
  /// Child -> parent edges in insertion order.
  std::vector<Edge> edges() const;
};

/// Throws ValidationError unless `h` is a spanning tree rooted at `h.root`
/// whose insertion order is a permutation starting at the root.
void validate_hierarchy(const Hierarchy& h);

/// Greedy centrality-ordered attachment. Nodes are visited by betweenness on
/// `graph` (descending), then by row sum of `symmetric` (descending), then by
/// id; each joins the already-placed node it is most similar to, earliest
/// placed first on ties. The graph only drives the ordering, so the result
/// is always a single tree.
Hierarchy extract_hierarchy(std::vector<std::string> ids, const Matrix& symmetric,
                            const ConceptGraph& graph, const BetweennessOptions& options = {});

/// Uses the symmetric view (S + S^T) / 2 of `s` as the attachment similarity.
Hierarchy extract_hierarchy(const SimilarityMatrix& s, const ConceptGraph& graph,
                            const BetweennessOptions& options = {});

using NameMap = std::map<std::string, std::string, std::less<>>;

/// DOT digraph with parent -> child edges labelled by similarity (3 decimals)
/// and nodes labelled by name (falls back to the id).
std::string tree_to_dot(const Hierarchy& h, const NameMap& names = {});

nlohmann::json hierarchy_to_json(const Hierarchy& h);
Hierarchy hierarchy_from_json(const nlohmann::json& doc);

}  // namespace conceptree
