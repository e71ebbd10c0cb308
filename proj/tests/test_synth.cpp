#include "doctest.h"
#include "support.hpp"

using namespace conceptree;

namespace {

std::vector<double> centroid(const SynthCorpus& corpus, const Concept& c) {
  std::vector<double> mean(corpus.store.dim(), 0.0);
  for (const auto& id : c.examples) {
    auto x = corpus.store.vector(id);
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += x[k];
  }
  for (double& v : mean) v /= static_cast<double>(c.examples.size());
  return mean;
}

double distance(std::span<const double> a, std::span<const double> b) {
  double ss = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) ss += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(ss);
}

}  // namespace

TEST_CASE("synth: zero noise gives identical examples") {
  SynthConfig config;
  config.clusters = 1;
  config.concepts_per_cluster = 1;
  config.examples_per_concept = 5;
  config.example_noise = 0.0;
  auto corpus = generate(config);
  REQUIRE(corpus.store.size() == 5);
  for (std::size_t i = 1; i < 5; ++i) {
    auto a = corpus.store.vector(std::size_t{0}), b = corpus.store.vector(i);
    CHECK(std::equal(a.begin(), a.end(), b.begin()));
  }
}

TEST_CASE("synth: shape, labels and id uniqueness") {
  SynthConfig config;
  config.clusters = 3;
  config.concepts_per_cluster = 4;
  config.examples_per_concept = 11;
  config.dim = 5;
  auto corpus = generate(config);
  CHECK(corpus.catalog.size() == 12);
  CHECK(corpus.store.size() == 132);
  CHECK(corpus.clusters.size() == 12);
  std::set<std::string> seen;
  for (const auto& c : corpus.catalog.concepts()) {
    CHECK(c.examples.size() == 11);
    for (const auto& id : c.examples) CHECK(seen.insert(id).second);
    CHECK(corpus.clusters.contains(c.id));
  }
  CHECK(seen.size() == corpus.store.size());
  std::set<std::string> labels;
  for (auto& [id, label] : corpus.clusters) labels.insert(label);
  CHECK(labels.size() == 3);
}

TEST_CASE("synth: same seed is bitwise identical, other seeds differ") {
  SynthConfig config;
  config.seed = 42;
  std::ostringstream a, b, c;
  write_embeddings(a, generate(config).store);
  write_embeddings(b, generate(config).store);
  config.seed = 43;
  write_embeddings(c, generate(config).store);
  CHECK(a.str() == b.str());
  CHECK(a.str() != c.str());
}

TEST_CASE("synth: prototypes") {
  SynthConfig config;
  config.clusters = 3;
  config.dim = 4;
  config.prototype_scale = 2.5;
  auto p = prototypes(config);
  for (std::size_t m = 0; m < 3; ++m)
    for (std::size_t k = 0; k < 4; ++k) CHECK(p(m, k) == (m == k ? 2.5 : 0.0));

  // Scaling by c scales every inter-prototype distance by c.
  auto scaled = config;
  scaled.prototype_scale = 7.5;
  auto q = prototypes(scaled);
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b)
      CHECK(distance(q.row(a), q.row(b)) == doctest::Approx(3.0 * distance(p.row(a), p.row(b))));

  config.orthogonal_prototypes = false;
  config.dim = 2;
  config.clusters = 5;
  auto r = prototypes(config);
  for (std::size_t m = 0; m < 5; ++m) CHECK(std::sqrt(dot(r.row(m), r.row(m))) == doctest::Approx(2.5));
  auto rs = config;
  rs.prototype_scale = 5.0;
  auto r2 = prototypes(rs);
  CHECK(distance(r2.row(0), r2.row(3)) == doctest::Approx(2.0 * distance(r.row(0), r.row(3))));
}

TEST_CASE("synth: validation") {
  SynthConfig config;
  config.dim = 2;
  config.clusters = 3;
  CHECK_THROWS_AS(generate(config), Error);
  config.orthogonal_prototypes = false;
  CHECK_NOTHROW(generate(config));
  config.examples_per_concept = 0;
  CHECK_THROWS_AS(generate(config), Error);
  config = {};
  config.prototype_scale = 0.0;
  CHECK_THROWS_AS(generate(config), Error);
  config = {};
  config.example_noise = -1.0;
  CHECK_THROWS_AS(generate(config), Error);
}

TEST_CASE("synth: inter-cluster distances dwarf intra-cluster ones") {
  SynthConfig config;
  config.clusters = 2;
  config.concepts_per_cluster = 20;
  config.dim = 8;
  config.seed = 3;
  auto corpus = generate(config);
  const auto& concepts = corpus.catalog.concepts();
  double inter = 0.0, intra = 0.0;
  int n_inter = 0, n_intra = 0;
  for (std::size_t a = 0; a < concepts.size(); ++a)
    for (std::size_t b = a + 1; b < concepts.size(); ++b) {
      const double d = distance(centroid(corpus, concepts[a]), centroid(corpus, concepts[b]));
      if (corpus.clusters[concepts[a].id] == corpus.clusters[concepts[b].id]) {
        intra += d;
        ++n_intra;
      } else {
        inter += d;
        ++n_inter;
      }
    }
  inter /= n_inter;
  intra /= n_intra;
  // Concept means differ by 0.5 * sqrt(2) per coordinate, so pairs within a
  // cluster sit near 0.5 * sqrt(2 * 8) = 2, pairs across near 10 * sqrt(2).
  CHECK(inter == doctest::Approx(10.0 * std::sqrt(2.0)).epsilon(0.05));
  CHECK(intra == doctest::Approx(2.0).epsilon(0.2));
  CHECK(inter > 5 * intra);
}

TEST_CASE("synth: point-mass clusters give perfect cross-cluster CAVs and equal similarities") {
  SynthConfig config;
  config.clusters = 2;
  config.concepts_per_cluster = 2;
  config.examples_per_concept = 20;
  config.dim = 3;
  config.concept_spread = 0.0;
  config.example_noise = 0.0;
  auto corpus = generate(config);
  // One concept per cluster, so the classes are the two point masses.
  ConceptCatalog pair;
  pair.add(corpus.catalog.concepts()[0]);
  pair.add(corpus.catalog.concepts()[2]);
  auto splits = split_catalog(pair, 0);
  auto cav = train_cav(pair.concepts()[0].id, pair, corpus.store, splits, TrainConfig{});
  CHECK(cav.test_accuracy == 1.0);

  auto all_splits = split_catalog(corpus.catalog, 0);
  auto cavs = train_cavs(corpus.catalog, corpus.store, all_splits, TrainConfig{});
  auto s = similarity_matrix(cavs, corpus.catalog, corpus.store);
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(s.values(0, j) == s.values(1, j));
    CHECK(s.values(2, j) == s.values(3, j));
  }
}

TEST_CASE("synth: config json") {
  SynthConfig config;
  config.seed = 9;
  auto doc = to_json(config);
  CHECK(doc["seed"] == 9);
  CHECK(doc["dim"] == 16);
  CHECK(doc["orthogonal_prototypes"] == true);
}
