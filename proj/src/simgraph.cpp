#include "conceptree/simgraph.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "conceptree/io.hpp"

namespace conceptree {
namespace {

constexpr std::array<std::pair<GraphLabel, std::string_view>, 5> kLabelNames{{
    {GraphLabel::adjacency, "A"},
    {GraphLabel::sparse_adjacency, "sparse-A"},
    {GraphLabel::top1, "top1"},
    {GraphLabel::random_sparse_adjacency, "random-sparse-A"},
    {GraphLabel::random_top1, "random-top1"},
}};

void require_square(const Matrix& m) {
  if (m.rows() != m.cols()) throw Error("similarity matrix must be square");
}

}  // namespace

std::string_view to_string(GraphLabel label) {
  for (const auto& [l, name] : kLabelNames) {
    if (l == label) return name;
  }
  return "?";
}

GraphLabel graph_label_from_string(std::string_view text) {
  for (const auto& [l, name] : kLabelNames) {
    if (name == text) return l;
  }
  throw ValidationError("unknown graph label '" + std::string(text) + "'");
}

SimilarityMatrix similarity_matrix(std::span<const ConceptVector> cavs,
                                   const ConceptCatalog& catalog, const EmbeddingStore& store,
                                   std::size_t workers) {
  const std::size_t k = cavs.size();
  SimilarityMatrix s;
  s.values = Matrix(k, k);
  for (const auto& cav : cavs) {
    if (cav.weights.size() != store.dim()) {
      throw ValidationError("cav '" + cav.concept_id + "' does not match the embedding dimension");
    }
    s.ids.push_back(cav.concept_id);
  }

  parallel_for(k, workers, [&](std::size_t i) {
    const Concept& entry = catalog.at(cavs[i].concept_id);
    if (entry.examples.empty()) {
      throw ValidationError("concept '" + entry.id + "' has no resolvable examples");
    }
    auto row = s.values.row(i);
    for (const auto& id : entry.examples) {
      const auto x = store.vector(id);
      for (std::size_t j = 0; j < k; ++j) row[j] += sigmoid(dot(cavs[j].weights, x) + cavs[j].bias);
    }
    for (double& v : row) v /= static_cast<double>(entry.examples.size());
  });
  return s;
}

ConceptGraph adjacency(const SimilarityMatrix& s) {
  require_square(s.values);
  ConceptGraph g{s.ids, true, {}, GraphLabel::adjacency, std::nullopt};
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (i != j && s.values(i, j) >= kAdjacencyThreshold) g.edges.emplace_back(i, j);
    }
  }
  return g;
}

Matrix symmetric_similarity(const Matrix& s) {
  require_square(s);
  Matrix out(s.rows(), s.cols());
  for (std::size_t i = 0; i < s.rows(); ++i) {
    for (std::size_t j = 0; j < s.cols(); ++j) out(i, j) = 0.5 * (s(i, j) + s(j, i));
  }
  return out;
}

ConceptGraph undirected_adjacency(const SimilarityMatrix& s) {
  require_square(s.values);
  ConceptGraph g{s.ids, false, {}, GraphLabel::adjacency, std::nullopt};
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = i + 1; j < s.size(); ++j) {
      if (std::max(s.values(i, j), s.values(j, i)) >= kAdjacencyThreshold) g.edges.emplace_back(i, j);
    }
  }
  return g;
}

ConceptGraph top_pairs_graph(std::vector<std::string> ids, const Matrix& symmetric,
                             std::size_t target_edges) {
  require_square(symmetric);
  const std::size_t k = ids.size();
  if (symmetric.rows() != k) throw Error("id list does not match the matrix size");
  const std::size_t all_pairs = k < 2 ? 0 : k * (k - 1) / 2;
  if (target_edges > all_pairs) {
    throw Error("target edge count " + std::to_string(target_edges) + " exceeds the " +
                std::to_string(all_pairs) + " available pairs");
  }

  std::vector<GraphEdge> pairs;
  pairs.reserve(all_pairs);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) pairs.emplace_back(i, j);
  }
  const auto by_similarity = [&](const GraphEdge& a, const GraphEdge& b) {
    const double sa = symmetric(a.first, a.second);
    const double sb = symmetric(b.first, b.second);
    if (sa != sb) return sa > sb;
    return a < b;
  };
  std::partial_sort(pairs.begin(), pairs.begin() + static_cast<std::ptrdiff_t>(target_edges),
                    pairs.end(), by_similarity);
  pairs.resize(target_edges);
  std::ranges::sort(pairs);
  return {std::move(ids), false, std::move(pairs), GraphLabel::sparse_adjacency, std::nullopt};
}

ConceptGraph sparse_graph(const SimilarityMatrix& s, std::size_t target_edges) {
  return top_pairs_graph(s.ids, symmetric_similarity(s), target_edges);
}

ConceptGraph top1_graph(const SimilarityMatrix& s) {
  const Matrix sym = symmetric_similarity(s);
  ConceptGraph g{s.ids, true, {}, GraphLabel::top1, std::nullopt};
  const std::size_t k = s.size();
  if (k < 2) return g;
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t best = i == 0 ? 1 : 0;
    for (std::size_t j = best + 1; j < k; ++j) {
      if (j != i && sym(i, j) > sym(i, best)) best = j;
    }
    g.edges.emplace_back(i, best);
  }
  return g;
}

ConceptGraph random_sparse_graph(std::vector<std::string> ids, std::size_t edges,
                                 std::uint64_t seed) {
  const std::size_t k = ids.size();
  const std::size_t all_pairs = k < 2 ? 0 : k * (k - 1) / 2;
  if (edges > all_pairs) throw Error("requested more random edges than node pairs");

  // Selection sampling: every subset of `edges` pair indices is equally
  // likely and indices come out ascending.
  std::vector<std::size_t> picked;
  picked.reserve(edges);
  Rng rng(derive_seed(seed, "random-sparse-A"));
  for (std::size_t index = 0; index < all_pairs && picked.size() < edges; ++index) {
    std::uniform_int_distribution<std::size_t> draw(0, all_pairs - index - 1);
    if (draw(rng) < edges - picked.size()) picked.push_back(index);
  }

  // Pair indices enumerate (0,1), (0,2), ..., (1,2), ... in order.
  ConceptGraph g{std::move(ids), false, {}, GraphLabel::random_sparse_adjacency, seed};
  std::size_t row = 0;
  std::size_t row_start = 0;
  for (std::size_t index : picked) {
    while (index >= row_start + (k - 1 - row)) {
      row_start += k - 1 - row;
      ++row;
    }
    g.edges.emplace_back(row, row + 1 + (index - row_start));
  }
  return g;
}

ConceptGraph random_top1_graph(std::vector<std::string> ids, std::uint64_t seed) {
  const std::size_t k = ids.size();
  ConceptGraph g{std::move(ids), true, {}, GraphLabel::random_top1, seed};
  if (k < 2) return g;
  Rng rng(derive_seed(seed, "random-top1"));
  std::uniform_int_distribution<std::size_t> pick(0, k - 2);
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = pick(rng);
    if (j >= i) ++j;
    g.edges.emplace_back(i, j);
  }
  return g;
}

void write_similarity_csv(std::ostream& out, const SimilarityMatrix& s) {
  write_labeled_matrix(out, s.ids, s.values);
}

SimilarityMatrix read_similarity_csv(std::istream& in) {
  auto [ids, values] = read_labeled_matrix(in);
  for (double v : values.data()) {
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("similarity value outside [0, 1]");
  }
  return {std::move(ids), std::move(values)};
}

SimilarityMatrix load_similarity_csv(const std::filesystem::path& path) {
  auto in = open_input_file(path);
  try {
    return read_similarity_csv(in);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

nlohmann::json graph_to_json(const ConceptGraph& graph) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [a, b] : graph.edges) edges.push_back({a, b});
  return {{"label", to_string(graph.label)},
          {"directed", graph.directed},
          {"ids", graph.ids},
          {"edges", edges},
          {"seed", graph.seed ? nlohmann::json(*graph.seed) : nlohmann::json(nullptr)},
          {"edge_count_convention", graph.directed ? "directed" : "unordered"}};
}

ConceptGraph graph_from_json(const nlohmann::json& doc) {
  ConceptGraph g;
  try {
    g.label = graph_label_from_string(doc.at("label").get<std::string>());
    g.directed = doc.at("directed").get<bool>();
    g.ids = doc.at("ids").get<std::vector<std::string>>();
    for (const auto& e : doc.at("edges")) {
      auto a = e.at(0).get<std::size_t>();
      auto b = e.at(1).get<std::size_t>();
      if (a >= g.ids.size() || b >= g.ids.size() || a == b) {
        throw ValidationError("graph edge with an invalid endpoint or self-loop");
      }
      if (!g.directed && a > b) std::swap(a, b);
      g.edges.emplace_back(a, b);
    }
    if (!doc.at("seed").is_null()) g.seed = doc.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed graph document: ") + e.what());
  }
  std::ranges::sort(g.edges);
  return g;
}

}  // namespace conceptree
