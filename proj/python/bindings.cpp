#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "conceptree/pipeline.hpp"

namespace py = pybind11;
using namespace conceptree;

namespace {

using Rows = std::vector<std::vector<double>>;

Matrix to_matrix(const Rows& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  Matrix m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw ValidationError("ragged matrix at row " + std::to_string(r));
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = rows[r][c];
  }
  return m;
}

Rows to_rows(const Matrix& m) {
  Rows rows(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) rows[r][c] = m(r, c);
  return rows;
}

ConceptGraph undirected(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  ConceptGraph g;
  for (std::size_t i = 0; i < n; ++i) g.ids.push_back(std::to_string(i));
  for (auto [a, b] : edges) {
    if (a >= n || b >= n) throw ValidationError("edge endpoint out of range");
    g.edges.emplace_back(a, b);
  }
  return g;
}

py::dict hierarchy_dict(const Hierarchy& h) {
  py::dict d;
  d["ids"] = h.ids;
  d["root"] = h.ids[h.root];
  py::dict parents;
  for (std::size_t i = 0; i < h.size(); ++i)
    parents[py::str(h.ids[i])] = h.parent[i] ? py::object(py::str(h.ids[*h.parent[i]])) : py::none();
  d["parent"] = parents;
  std::vector<std::string> order;
  for (auto i : h.insertion_order) order.push_back(h.ids[i]);
  d["order"] = order;
  d["centrality"] = h.centrality;
  d["json"] = hierarchy_to_json(h).dump();
  return d;
}

}  // namespace

PYBIND11_MODULE(_conceptree, m) {
  m.doc() = "Concept hierarchies mined from concept activation vectors.";

  // Translators run newest first, so the base class goes in before its subclasses.
  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<MissingInputError>(m, "MissingInputError", error.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", error.ptr());

  m.def(
      "fit_logistic",
      [](const Rows& x, const std::vector<double>& y, double l2_lambda, int max_iterations, double tolerance) {
        auto fit = fit_logistic(to_matrix(x), y, {l2_lambda, max_iterations, tolerance, false});
        py::dict d;
        d["weights"] = fit.weights;
        d["bias"] = fit.bias;
        d["loss"] = fit.loss;
        d["iterations"] = fit.iterations;
        d["converged"] = fit.converged;
        return d;
      },
      py::arg("x"), py::arg("y"), py::arg("l2_lambda") = 1.0, py::arg("max_iterations") = 1000,
      py::arg("tolerance") = 1e-6);

  m.def(
      "betweenness",
      [](std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
        return betweenness(undirected(n, edges));
      },
      py::arg("n"), py::arg("edges"), "Betweenness of an undirected graph over nodes 0..n-1.");

  m.def(
      "adjacency",
      [](const std::vector<std::string>& ids, const Rows& s) {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        for (auto [a, b] : adjacency(SimilarityMatrix{ids, to_matrix(s)}).edges) out.emplace_back(a, b);
        return out;
      },
      py::arg("ids"), py::arg("similarity"));

  m.def(
      "extract_hierarchy",
      [](const std::vector<std::string>& ids, const Rows& s) {
        SimilarityMatrix sim{ids, to_matrix(s)};
        return hierarchy_dict(extract_hierarchy(sim, undirected_adjacency(sim)));
      },
      py::arg("ids"), py::arg("similarity"), "Tree mined from a directed similarity matrix.");

  m.def(
      "silhouette",
      [](const Rows& distances, const std::vector<std::string>& labels) {
        return silhouette_from_distances(to_matrix(distances), labels).mean;
      },
      py::arg("distances"), py::arg("labels"));

  m.def(
      "edge_cluster_accuracy",
      [](const std::string& tree_json, const std::map<std::string, std::string>& clusters) {
        ClusterAssignment assignment(clusters.begin(), clusters.end());
        return edge_cluster_accuracy(hierarchy_from_json(nlohmann::json::parse(tree_json)), assignment).mean;
      },
      py::arg("tree_json"), py::arg("clusters"));

  m.def(
      "synth",
      [](std::size_t dim, std::size_t clusters, std::size_t concepts_per_cluster, std::size_t examples_per_concept,
         std::uint64_t seed) {
        SynthConfig config;
        config.dim = dim;
        config.clusters = clusters;
        config.concepts_per_cluster = concepts_per_cluster;
        config.examples_per_concept = examples_per_concept;
        config.seed = seed;
        auto corpus = generate(config);
        py::dict embeddings;
        for (std::size_t i = 0; i < corpus.store.size(); ++i) {
          auto v = corpus.store.vector(i);
          embeddings[py::str(corpus.store.ids()[i])] = std::vector<double>(v.begin(), v.end());
        }
        py::dict concepts;
        for (const auto& c : corpus.catalog.concepts()) concepts[py::str(c.id)] = c.examples;
        py::dict d;
        d["embeddings"] = embeddings;
        d["concepts"] = concepts;
        d["clusters"] = std::map<std::string, std::string>(corpus.clusters.begin(), corpus.clusters.end());
        return d;
      },
      py::arg("dim") = 16, py::arg("clusters") = 4, py::arg("concepts_per_cluster") = 4,
      py::arg("examples_per_concept") = 40, py::arg("seed") = 0);

  m.def("symmetric_similarity", [](const Rows& s) { return to_rows(symmetric_similarity(to_matrix(s))); });

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "conceptree");
        std::vector<const char*> argv;
        for (auto& a : args) argv.push_back(a.c_str());
        py::gil_scoped_release release;
        return run_cli(static_cast<int>(argv.size()), argv.data());
      },
      py::arg("args"), "Runs the command-line tool in-process and returns its exit code.");
}
