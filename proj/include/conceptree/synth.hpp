#pragma once

#include "conceptree/eval.hpp"

namespace conceptree {

struct SynthConfig {
  std::size_t dim = 16;
  std::size_t clusters = 4;
  std::size_t concepts_per_cluster = 4;
  std::size_t examples_per_concept = 40;
  double prototype_scale = 10.0;
  double concept_spread = 0.5;
  double example_noise = 0.1;
  std::uint64_t seed = 0;
  /// Scaled standard basis vectors as prototypes; random unit vectors otherwise.
  bool orthogonal_prototypes = true;

  void validate() const;
};

struct SynthCorpus {
  EmbeddingStore store;
  ConceptCatalog catalog;
  ClusterAssignment clusters;
};

/// One row per cluster prototype.
Matrix prototypes(const SynthConfig& config);

/// Planted two-level corpus: concept means scatter around their cluster's
/// prototype with sd `concept_spread`, examples around their concept mean
/// with sd `example_noise`. Identical seeds give identical corpora.
SynthCorpus generate(const SynthConfig& config);

nlohmann::json to_json(const SynthConfig& config);

}  // namespace conceptree
