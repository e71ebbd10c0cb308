#include "conceptree/synth.hpp"

#include <cmath>
#include <cstdio>

namespace conceptree {
namespace {

std::string padded(char prefix, std::size_t value, std::size_t count) {
  const int width = static_cast<int>(std::to_string(count > 0 ? count - 1 : 0).size());
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%c%0*zu", prefix, width, value);
  return buffer;
}

}  // namespace

void SynthConfig::validate() const {
  if (dim == 0 || clusters == 0 || concepts_per_cluster == 0 || examples_per_concept == 0) {
    throw Error("synth sizes must be positive");
  }
  if (!(prototype_scale > 0) || concept_spread < 0 || example_noise < 0) {
    throw Error("synth scales must be positive (noise terms non-negative)");
  }
  if (orthogonal_prototypes && dim < clusters) {
    throw Error("orthogonal prototypes need dim >= clusters");
  }
}

Matrix prototypes(const SynthConfig& config) {
  config.validate();
  Matrix protos(config.clusters, config.dim);
  if (config.orthogonal_prototypes) {
    for (std::size_t m = 0; m < config.clusters; ++m) protos(m, m) = config.prototype_scale;
    return protos;
  }
  Rng rng(derive_seed(config.seed, "synth-prototypes"));
  std::normal_distribution<double> normal;
  for (std::size_t m = 0; m < config.clusters; ++m) {
    auto row = protos.row(m);
    double norm = 0.0;
    while (norm == 0.0) {
      for (double& v : row) v = normal(rng);
      norm = std::sqrt(dot(row, row));
    }
    for (double& v : row) v *= config.prototype_scale / norm;
  }
  return protos;
}

SynthCorpus generate(const SynthConfig& config) {
  const Matrix protos = prototypes(config);
  const std::size_t concepts = config.clusters * config.concepts_per_cluster;
  const std::size_t examples = concepts * config.examples_per_concept;

  SynthCorpus corpus{EmbeddingStore(config.dim), {}, {}};
  Rng rng(derive_seed(config.seed, "synth-corpus"));
  std::normal_distribution<double> normal;
  std::vector<double> mean(config.dim);
  std::vector<double> x(config.dim);

  std::size_t example_index = 0;
  for (std::size_t m = 0; m < config.clusters; ++m) {
    for (std::size_t c = 0; c < config.concepts_per_cluster; ++c) {
      const std::size_t concept_index = m * config.concepts_per_cluster + c;
      for (std::size_t k = 0; k < config.dim; ++k) {
        mean[k] = protos(m, k) + config.concept_spread * normal(rng);
      }
      Concept entry;
      entry.id = padded('c', concept_index, concepts);
      entry.name = "cluster " + std::to_string(m) + " concept " + std::to_string(c);
      for (std::size_t e = 0; e < config.examples_per_concept; ++e) {
        for (std::size_t k = 0; k < config.dim; ++k) x[k] = mean[k] + config.example_noise * normal(rng);
        auto id = padded('e', example_index++, examples);
        corpus.store.add(id, x);
        entry.examples.push_back(std::move(id));
      }
      corpus.clusters.emplace(entry.id, padded('k', m, config.clusters));
      corpus.catalog.add(std::move(entry));
    }
  }
  return corpus;
}

nlohmann::json to_json(const SynthConfig& config) {
  return {{"dim", config.dim},
          {"clusters", config.clusters},
          {"concepts_per_cluster", config.concepts_per_cluster},
          {"examples_per_concept", config.examples_per_concept},
          {"prototype_scale", config.prototype_scale},
          {"concept_spread", config.concept_spread},
          {"example_noise", config.example_noise},
          {"seed", config.seed},
          {"orthogonal_prototypes", config.orthogonal_prototypes}};
}

}  // namespace conceptree
