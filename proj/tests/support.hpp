#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "conceptree/pipeline.hpp"

namespace testing {

using conceptree::ConceptGraph;
using conceptree::Matrix;

// Scratch directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("conceptree_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

inline void spit(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::vector<std::string> make_ids(std::size_t n, const std::string& prefix = "n") {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) {
    std::string s = std::to_string(i);
    ids.push_back(prefix + std::string(3 - std::min<std::size_t>(3, s.size()), '0') + s);
  }
  return ids;
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double lo = 0.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = u(rng);
  return m;
}

inline ConceptGraph random_undirected_graph(std::size_t n, double p, std::mt19937_64& rng) {
  ConceptGraph g;
  g.ids = make_ids(n);
  g.directed = false;
  std::bernoulli_distribution coin(p);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (coin(rng)) g.edges.emplace_back(i, j);
  return g;
}

inline std::vector<std::vector<std::size_t>> neighbours(const ConceptGraph& g) {
  std::vector<std::vector<std::size_t>> adj(g.node_count());
  for (auto [a, b] : g.edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  return adj;
}

// Betweenness by enumerating every shortest path explicitly: BFS distances
// from every node, then for each pair count paths through v as
// sigma(s,v) * sigma(v,t) when d(s,v) + d(v,t) = d(s,t).
inline std::vector<double> brute_force_betweenness(const ConceptGraph& g) {
  const std::size_t n = g.node_count();
  const auto adj = neighbours(g);
  constexpr std::size_t inf = std::numeric_limits<std::size_t>::max();
  std::vector<std::vector<std::size_t>> dist(n, std::vector<std::size_t>(n, inf));
  std::vector<std::vector<double>> sigma(n, std::vector<double>(n, 0.0));
  for (std::size_t s = 0; s < n; ++s) {
    std::queue<std::size_t> q;
    dist[s][s] = 0;
    sigma[s][s] = 1;
    q.push(s);
    while (!q.empty()) {
      auto u = q.front();
      q.pop();
      for (auto w : adj[u]) {
        if (dist[s][w] == inf) {
          dist[s][w] = dist[s][u] + 1;
          q.push(w);
        }
        if (dist[s][w] == dist[s][u] + 1) sigma[s][w] += sigma[s][u];
      }
    }
  }
  std::vector<double> b(n, 0.0);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t t = s + 1; t < n; ++t) {
      if (dist[s][t] == inf) continue;
      for (std::size_t v = 0; v < n; ++v) {
        if (v == s || v == t || dist[s][v] == inf || dist[v][t] == inf) continue;
        if (dist[s][v] + dist[v][t] == dist[s][t]) b[v] += sigma[s][v] * sigma[v][t] / sigma[s][t];
      }
    }
  return b;
}

inline std::size_t bfs_components(const ConceptGraph& g) {
  const auto adj = neighbours(g);
  std::vector<bool> seen(g.node_count(), false);
  std::size_t count = 0;
  for (std::size_t s = 0; s < g.node_count(); ++s) {
    if (seen[s]) continue;
    ++count;
    std::vector<std::size_t> stack{s};
    seen[s] = true;
    while (!stack.empty()) {
      auto u = stack.back();
      stack.pop_back();
      for (auto w : adj[u])
        if (!seen[w]) {
          seen[w] = true;
          stack.push_back(w);
        }
    }
  }
  return count;
}

// Silhouette straight from the textbook definition.
inline double brute_force_silhouette(const Matrix& d, const std::vector<std::string>& labels) {
  const std::size_t n = labels.size();
  std::set<std::string> distinct(labels.begin(), labels.end());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t own = 0;
    for (std::size_t j = 0; j < n; ++j) own += labels[j] == labels[i];
    if (own == 1) continue;
    double a = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && labels[j] == labels[i]) a += d(i, j);
    a /= static_cast<double>(own - 1);
    double b = std::numeric_limits<double>::infinity();
    for (const auto& other : distinct) {
      if (other == labels[i]) continue;
      double sum = 0.0;
      std::size_t cnt = 0;
      for (std::size_t j = 0; j < n; ++j)
        if (labels[j] == other) {
          sum += d(i, j);
          ++cnt;
        }
      b = std::min(b, sum / static_cast<double>(cnt));
    }
    const double denom = std::max(a, b);
    total += denom > 0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(n);
}

// Loss evaluated independently of the library, for finite differences.
inline double reference_loss(const std::vector<double>& w, double b, const Matrix& x,
                             const std::vector<double>& y, double lambda) {
  double nll = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double z = b;
    for (std::size_t k = 0; k < x.cols(); ++k) z += w[k] * x(i, k);
    double p = 1.0 / (1.0 + std::exp(-z));
    p = std::clamp(p, 1e-12, 1.0 - 1e-12);
    nll -= y[i] * std::log(p) + (1.0 - y[i]) * std::log(1.0 - p);
  }
  double pen = 0.0;
  for (double v : w) pen += v * v;
  return nll / static_cast<double>(x.rows()) + 0.5 * lambda * pen;
}

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// Runs the CLI entry point with a vector of arguments.
inline int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "conceptree");
  std::vector<const char*> argv;
  for (auto& a : args) argv.push_back(a.c_str());
  return conceptree::run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace testing
