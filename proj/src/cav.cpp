#include "conceptree/cav.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace conceptree {
namespace {

constexpr double kProbabilityClip = 1e-12;
constexpr double kArmijoC = 1e-4;
constexpr double kShrink = 0.5;
constexpr double kMinStep = 1e-20;
constexpr double kMaxStep = 1e10;

std::string_view portion_name(SplitPortion portion) {
  switch (portion) {
    case SplitPortion::train: return "train";
    case SplitPortion::validation: return "validation";
    case SplitPortion::test: return "test";
  }
  return "?";
}

const std::vector<std::string>& portion_of(const ConceptSplit& split, SplitPortion portion) {
  switch (portion) {
    case SplitPortion::train: return split.train;
    case SplitPortion::validation: return split.validation;
    case SplitPortion::test: return split.test;
  }
  return split.train;
}

double max_abs(std::span<const double> v, double extra) {
  double m = std::abs(extra);
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double accuracy(const ConceptVector& cav, const EmbeddingStore& store,
                std::span<const std::string> positives, std::span<const std::string> negatives) {
  const std::size_t total = positives.size() + negatives.size();
  if (total == 0) return 0.0;
  std::size_t correct = 0;
  for (const auto& id : positives) correct += concept_probability(cav, store.vector(id)) >= 0.5;
  for (const auto& id : negatives) correct += concept_probability(cav, store.vector(id)) < 0.5;
  return static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace

void TrainConfig::validate() const {
  if (!(l2_lambda >= 0)) throw Error("l2_lambda must be non-negative");
  if (max_iterations <= 0) throw Error("max_iterations must be positive");
  if (!(gradient_tolerance > 0)) throw Error("gradient_tolerance must be positive");
  if (!(negatives_per_positive > 0)) throw Error("negatives_per_positive must be positive");
  // Thresholds above 1 are accepted; they simply keep nothing.
  if (!(accuracy_threshold >= 0 && std::isfinite(accuracy_threshold))) {
    throw Error("accuracy_threshold must be a non-negative number");
  }
}

LossAndGradient logistic_loss_grad(std::span<const double> weights, double bias,
                                   const Matrix& features, std::span<const double> labels,
                                   double l2_lambda) {
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  if (weights.size() != d || labels.size() != n) {
    throw Error("logistic_loss_grad: inconsistent shapes");
  }

  LossAndGradient out;
  out.grad_weights.assign(d, 0.0);
  double nll = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = features.row(i);
    const double z = dot(weights, x) + bias;
    const double p = sigmoid(z);
    const double p_pos = std::clamp(p, kProbabilityClip, 1.0 - kProbabilityClip);
    const double p_neg = std::clamp(sigmoid(-z), kProbabilityClip, 1.0 - kProbabilityClip);
    const double y = labels[i];
    nll -= y * std::log(p_pos) + (1.0 - y) * std::log(p_neg);
    const double residual = p - y;
    for (std::size_t k = 0; k < d; ++k) out.grad_weights[k] += residual * x[k];
    out.grad_bias += residual;
  }

  const double inv_n = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;
  out.loss = nll * inv_n;
  out.grad_bias *= inv_n;
  double sq_norm = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    out.grad_weights[k] = out.grad_weights[k] * inv_n + l2_lambda * weights[k];
    sq_norm += weights[k] * weights[k];
  }
  out.loss += 0.5 * l2_lambda * sq_norm;
  return out;
}

FitResult fit_logistic(const Matrix& features, std::span<const double> labels,
                       const FitOptions& options) {
  const std::size_t d = features.cols();
  FitResult fit;
  fit.weights.assign(d, 0.0);

  auto current = logistic_loss_grad(fit.weights, fit.bias, features, labels, options.l2_lambda);
  if (options.record_history) fit.loss_history.push_back(current.loss);

  std::vector<double> trial(d);
  double step = 1.0;
  while (true) {
    if (!std::isfinite(current.loss)) {
      std::ostringstream msg;
      msg << "non-finite logistic loss after " << fit.iterations << " iterations (bias "
          << fit.bias << ", lambda " << options.l2_lambda << ")";
      throw NumericalError(msg.str());
    }
    if (max_abs(current.grad_weights, current.grad_bias) < options.gradient_tolerance) {
      fit.converged = true;
      break;
    }
    if (fit.iterations >= options.max_iterations) break;

    double sq_grad = current.grad_bias * current.grad_bias;
    for (double g : current.grad_weights) sq_grad += g * g;

    bool accepted = false;
    while (step >= kMinStep) {
      for (std::size_t k = 0; k < d; ++k) trial[k] = fit.weights[k] - step * current.grad_weights[k];
      const double trial_bias = fit.bias - step * current.grad_bias;
      auto next = logistic_loss_grad(trial, trial_bias, features, labels, options.l2_lambda);
      if (next.loss <= current.loss - kArmijoC * step * sq_grad) {
        // Barzilai-Borwein trial step for the next iteration: <s,s> / <s,y>.
        double ss = 0.0, sy = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
          const double sk = trial[k] - fit.weights[k];
          ss += sk * sk;
          sy += sk * (next.grad_weights[k] - current.grad_weights[k]);
        }
        const double sb = trial_bias - fit.bias;
        ss += sb * sb;
        sy += sb * (next.grad_bias - current.grad_bias);
        step = sy > 0.0 ? std::clamp(ss / sy, kMinStep, kMaxStep) : 2.0 * step;

        fit.weights = trial;
        fit.bias = trial_bias;
        current = std::move(next);
        accepted = true;
        break;
      }
      step *= kShrink;
    }
    if (!accepted) break;  // no descent possible at machine precision
    ++fit.iterations;
    if (options.record_history) fit.loss_history.push_back(current.loss);
  }
  fit.loss = current.loss;
  return fit;
}

NegativeSample sample_negatives(std::string_view concept_id, const ConceptCatalog& catalog,
                                const SplitAssignment& splits, SplitPortion portion,
                                std::size_t positive_count, double negatives_per_positive,
                                std::uint64_t seed) {
  const Concept& self = catalog.at(concept_id);
  if (catalog.size() < 2) throw Error("cannot learn a concept against an empty complement");

  const std::set<std::string_view> own(self.examples.begin(), self.examples.end());
  std::set<std::string> pool_set;
  for (const auto& other : catalog.concepts()) {
    if (other.id == self.id) continue;
    for (const auto& id : portion_of(splits.at(other.id), portion)) {
      if (!own.contains(id)) pool_set.insert(id);
    }
  }
  if (pool_set.empty()) {
    throw Error("cannot learn a concept against an empty complement ('" + self.id + "')");
  }

  std::vector<std::string> pool(pool_set.begin(), pool_set.end());
  const auto requested = static_cast<std::size_t>(
      std::llround(negatives_per_positive * static_cast<double>(positive_count)));
  NegativeSample sample;
  sample.capped = requested > pool.size();
  const std::size_t count = std::min(requested, pool.size());

  std::string key(concept_id);
  key += '/';
  key += portion_name(portion);
  Rng rng(derive_seed(seed, key));
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(count);
  sample.ids = std::move(pool);
  return sample;
}

ConceptVector train_cav(std::string_view concept_id, const ConceptCatalog& catalog,
                        const EmbeddingStore& store, const SplitAssignment& splits,
                        const TrainConfig& config) {
  config.validate();
  const Concept& entry = catalog.at(concept_id);
  const ConceptSplit& split = splits.at(concept_id);

  const auto negatives_for = [&](SplitPortion portion) {
    return sample_negatives(concept_id, catalog, splits, portion,
                            portion_of(split, portion).size(), config.negatives_per_positive,
                            config.seed)
        .ids;
  };
  const auto train_negatives = negatives_for(SplitPortion::train);

  Matrix features(split.train.size() + train_negatives.size(), store.dim());
  std::vector<double> labels;
  labels.reserve(features.rows());
  std::size_t r = 0;
  for (const auto& id : split.train) {
    std::ranges::copy(store.vector(id), features.row(r++).begin());
    labels.push_back(1.0);
  }
  for (const auto& id : train_negatives) {
    std::ranges::copy(store.vector(id), features.row(r++).begin());
    labels.push_back(0.0);
  }

  FitResult fit;
  try {
    fit = fit_logistic(features, labels,
                       {config.l2_lambda, config.max_iterations, config.gradient_tolerance});
  } catch (const NumericalError& e) {
    throw NumericalError("concept '" + entry.id + "': " + e.what());
  }

  ConceptVector cav;
  cav.concept_id = entry.id;
  cav.name = entry.name;
  cav.weights = std::move(fit.weights);
  cav.bias = fit.bias;
  cav.converged = fit.converged;
  cav.iterations = fit.iterations;
  cav.validation_accuracy =
      accuracy(cav, store, split.validation, negatives_for(SplitPortion::validation));
  cav.test_accuracy = accuracy(cav, store, split.test, negatives_for(SplitPortion::test));
  cav.kept = cav.converged && cav.test_accuracy >= config.accuracy_threshold;
  return cav;
}

std::vector<ConceptVector> train_cavs(const ConceptCatalog& catalog, const EmbeddingStore& store,
                                      const SplitAssignment& splits, const TrainConfig& config,
                                      std::size_t workers) {
  config.validate();
  std::vector<ConceptVector> cavs(catalog.size());
  parallel_for(catalog.size(), workers, [&](std::size_t i) {
    cavs[i] = train_cav(catalog.concepts()[i].id, catalog, store, splits, config);
  });
  return cavs;
}

std::vector<ConceptVector> filter_cavs(std::span<const ConceptVector> cavs, double threshold) {
  std::vector<ConceptVector> kept;
  for (const auto& cav : cavs) {
    if (cav.converged && cav.test_accuracy >= threshold) {
      kept.push_back(cav);
      kept.back().kept = true;
    }
  }
  if (kept.empty()) {
    throw Error("no concept reaches the accuracy threshold; the kept set is empty");
  }
  return kept;
}

double concept_probability(const ConceptVector& cav, std::span<const double> x) {
  if (x.size() != cav.weights.size()) throw Error("concept_probability: dimension mismatch");
  return sigmoid(dot(cav.weights, x) + cav.bias);
}

nlohmann::json cavs_to_json(std::span<const ConceptVector> cavs, std::size_t dim,
                            double accuracy_threshold) {
  nlohmann::json concepts = nlohmann::json::array();
  for (const auto& c : cavs) {
    concepts.push_back({{"id", c.concept_id},
                        {"name", c.name},
                        {"weights", c.weights},
                        {"bias", c.bias},
                        {"test_accuracy", c.test_accuracy},
                        {"validation_accuracy", c.validation_accuracy},
                        {"converged", c.converged},
                        {"kept", c.kept},
                        {"iterations", c.iterations}});
  }
  return {{"dim", dim}, {"accuracy_threshold", accuracy_threshold}, {"concepts", concepts}};
}

CavSet cavs_from_json(const nlohmann::json& doc) {
  CavSet set;
  try {
    set.dim = doc.at("dim").get<std::size_t>();
    set.accuracy_threshold = doc.at("accuracy_threshold").get<double>();
    for (const auto& c : doc.at("concepts")) {
      ConceptVector cav;
      cav.concept_id = c.at("id").get<std::string>();
      cav.name = c.value("name", cav.concept_id);
      cav.weights = c.at("weights").get<std::vector<double>>();
      cav.bias = c.at("bias").get<double>();
      cav.test_accuracy = c.at("test_accuracy").get<double>();
      cav.validation_accuracy = c.value("validation_accuracy", 0.0);
      cav.converged = c.at("converged").get<bool>();
      cav.kept = c.at("kept").get<bool>();
      cav.iterations = c.value("iterations", 0);
      if (cav.weights.size() != set.dim) {
        throw ValidationError("cav '" + cav.concept_id + "' has the wrong number of weights");
      }
      set.concepts.push_back(std::move(cav));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed cavs document: ") + e.what());
  }
  return set;
}

}  // namespace conceptree
