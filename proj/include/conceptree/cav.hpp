#pragma once

#include <cmath>

#include "conceptree/common.hpp"
#include "conceptree/corpus.hpp"

namespace conceptree {

struct TrainConfig {
  double l2_lambda = 1.0;
  int max_iterations = 1000;
  double gradient_tolerance = 1e-6;
  double negatives_per_positive = 1.0;
  double accuracy_threshold = 0.70;
  std::uint64_t seed = 0;

  /// Throws Error if any field is outside its range.
  void validate() const;
};

/// A concept activation vector: the weights and bias of the logistic model
/// separating a concept's examples from sampled negatives.
struct ConceptVector {
  std::string concept_id;
  std::string name;
  std::vector<double> weights;
  double bias = 0.0;
  double test_accuracy = 0.0;
  double validation_accuracy = 0.0;
  bool converged = false;
  bool kept = false;
  int iterations = 0;
};

inline double sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> grad_weights;
  double grad_bias = 0.0;
};

/// Mean negative log-likelihood of the logistic model plus (lambda/2)|w|^2.
/// The bias is not penalised; probabilities are clipped to [1e-12, 1-1e-12]
/// inside the logarithms.
LossAndGradient logistic_loss_grad(std::span<const double> weights, double bias,
                                   const Matrix& features, std::span<const double> labels,
                                   double l2_lambda);

struct FitOptions {
  double l2_lambda = 1.0;
  int max_iterations = 1000;
  double gradient_tolerance = 1e-6;
  bool record_history = false;
};

struct FitResult {
  std::vector<double> weights;
  double bias = 0.0;
  double loss = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Loss after every accepted step, starting with the initial iterate.
  std::vector<double> loss_history;
};

/// Full-batch gradient descent from w = 0, b = 0 with Armijo backtracking
/// (c = 1e-4, shrink 0.5) from a Barzilai-Borwein trial step. Stops
/// when the max-norm of the gradient drops below the tolerance.
FitResult fit_logistic(const Matrix& features, std::span<const double> labels,
                       const FitOptions& options);

enum class SplitPortion { train, validation, test };

struct NegativeSample {
  std::vector<std::string> ids;
  /// True when the pool held fewer ids than requested.
  bool capped = false;
};

/// Draws round(ratio * positive_count) negatives uniformly without
/// replacement from the given portion of every other concept, excluding the
/// concept's own examples. Deterministic per (seed, concept id, portion).
NegativeSample sample_negatives(std::string_view concept_id, const ConceptCatalog& catalog,
                                const SplitAssignment& splits, SplitPortion portion,
                                std::size_t positive_count, double negatives_per_positive,
                                std::uint64_t seed);

ConceptVector train_cav(std::string_view concept_id, const ConceptCatalog& catalog,
                        const EmbeddingStore& store, const SplitAssignment& splits,
                        const TrainConfig& config);

/// Trains every concept in catalog order. The result does not depend on
/// `workers`.
std::vector<ConceptVector> train_cavs(const ConceptCatalog& catalog, const EmbeddingStore& store,
                                      const SplitAssignment& splits, const TrainConfig& config,
                                      std::size_t workers = 1);

/// Concepts with test_accuracy >= threshold that converged, in input order,
/// with `kept` set. Throws Error when nothing survives.
std::vector<ConceptVector> filter_cavs(std::span<const ConceptVector> cavs, double threshold);

double concept_probability(const ConceptVector& cav, std::span<const double> x);

nlohmann::json cavs_to_json(std::span<const ConceptVector> cavs, std::size_t dim,
                            double accuracy_threshold);

struct CavSet {
  std::size_t dim = 0;
  double accuracy_threshold = 0.0;
  std::vector<ConceptVector> concepts;
};

CavSet cavs_from_json(const nlohmann::json& doc);

}  // namespace conceptree
