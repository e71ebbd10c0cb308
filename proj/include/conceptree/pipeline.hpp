#pragma once

#include <filesystem>
#include <optional>

#include "conceptree/synth.hpp"

namespace conceptree {

/// An external similarity source for evaluation: a per-concept embeddings
/// CSV or a K x K matrix CSV keyed by concept id.
struct SourceSpec {
  enum class Format { embeddings, matrix };

  std::string name;
  Format format = Format::embeddings;
  SourceMetric metric = SourceMetric::cosine_similarity;
  std::filesystem::path path;

  /// Parses NAME:FORMAT:METRIC:PATH, e.g. "cf:embeddings:euclidean:cf.csv".
  static SourceSpec parse(std::string_view text);
};

struct PipelineConfig {
  std::filesystem::path output_dir = "conceptree_out";
  // Empty paths fall back to the stage defaults inside output_dir.
  std::filesystem::path embeddings;
  std::filesystem::path concepts;
  std::filesystem::path clusters;

  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::size_t min_examples = kDefaultMinExamples;
  TrainConfig train;
  SynthConfig synth;
  double histogram_bin_width = 0.02;
  std::size_t random_baselines = 20;
  SourceMetric audio_metric = SourceMetric::euclidean_distance;
  std::optional<std::size_t> betweenness_samples;
  std::vector<SourceSpec> sources;

  /// Overlays values present in a JSON config document.
  void merge_json(const nlohmann::json& doc);

  /// Parameters that determine the outputs (no paths, no worker count).
  nlohmann::json parameters() const;

  std::filesystem::path embeddings_path() const;
  std::filesystem::path concepts_path() const;
  std::filesystem::path clusters_path() const;
};

struct StageResult {
  std::vector<std::filesystem::path> written;
};

/// Each stage reads its inputs, builds every output in memory and only then
/// replaces the files in output_dir. Outputs already produced by a stage
/// that fails are written with a ".quarantine" suffix instead.
StageResult run_synth(const PipelineConfig& config);
StageResult run_learn(const PipelineConfig& config);
StageResult run_graph(const PipelineConfig& config);
StageResult run_tree(const PipelineConfig& config);
StageResult run_eval(const PipelineConfig& config);
/// Runs synth (only when no embeddings path is configured), learn, graph,
/// tree and eval.
StageResult run_pipeline(const PipelineConfig& config);

/// Bin counts of accuracies in [0, 1] with the given width; 1.0 falls in the
/// last bin.
std::vector<std::size_t> accuracy_histogram(std::span<const double> accuracies, double bin_width);

/// Command-line entry point; returns the process exit code (0 success,
/// 2 missing input, 3 validation failure, 1 other errors).
int run_cli(int argc, const char* const* argv);

}  // namespace conceptree
