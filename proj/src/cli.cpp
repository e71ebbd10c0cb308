#include <cstdlib>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "conceptree/io.hpp"
#include "conceptree/pipeline.hpp"

namespace conceptree {
namespace {

// Flags parsed into optionals so that only values given on the command line
// override the config file.
struct Flags {
  std::optional<std::string> config;
  std::optional<std::string> out;
  std::optional<std::string> embeddings;
  std::optional<std::string> concepts;
  std::optional<std::string> clusters;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::size_t> min_examples;

  std::optional<double> l2_lambda;
  std::optional<int> max_iterations;
  std::optional<double> tolerance;
  std::optional<double> negatives_per_positive;
  std::optional<double> accuracy_threshold;
  std::optional<double> histogram_bin_width;

  std::optional<std::size_t> synth_dim;
  std::optional<std::size_t> synth_clusters;
  std::optional<std::size_t> synth_concepts;
  std::optional<std::size_t> synth_examples;
  std::optional<double> prototype_scale;
  std::optional<double> concept_spread;
  std::optional<double> example_noise;
  bool random_prototypes = false;

  std::optional<std::size_t> betweenness_samples;
  std::vector<std::string> sources;
  std::optional<std::string> audio_metric;
  std::optional<std::size_t> random_baselines;
};

void add_common(CLI::App& app, Flags& f) {
  app.add_option("--config", f.config, "JSON config file; flags override its values");
  app.add_option("--out", f.out, "Output directory (default: $CONCEPTREE_OUT or ./conceptree_out)");
  app.add_option("--seed", f.seed, "Seed for every random choice (default 0)");
}

void add_inputs(CLI::App& app, Flags& f) {
  app.add_option("--embeddings", f.embeddings, "Embeddings CSV (default: <out>/embeddings.csv)");
  app.add_option("--concepts", f.concepts, "Concepts JSONL (default: <out>/concepts.jsonl)");
  app.add_option("--min-examples", f.min_examples, "Minimum resolvable examples per concept (default 10)");
}

void add_train(CLI::App& app, Flags& f) {
  app.add_option("--workers", f.workers, "Threads for concept training (output is identical for any value)");
  app.add_option("--lambda", f.l2_lambda, "L2 penalty on CAV weights (default 1.0)");
  app.add_option("--max-iterations", f.max_iterations, "Gradient descent iteration cap (default 1000)");
  app.add_option("--tolerance", f.tolerance, "Max-norm gradient tolerance (default 1e-6)");
  app.add_option("--negatives-per-positive", f.negatives_per_positive, "Negative sampling ratio (default 1)");
  app.add_option("--accuracy-threshold", f.accuracy_threshold, "Minimum test accuracy to keep a CAV (default 0.70)");
  app.add_option("--histogram-bin-width", f.histogram_bin_width, "Accuracy histogram bin width (default 0.02)");
}

void add_synth(CLI::App& app, Flags& f) {
  app.add_option("--synth-dim", f.synth_dim, "Embedding dimension (default 16)");
  app.add_option("--synth-clusters", f.synth_clusters, "Number of planted clusters (default 4)");
  app.add_option("--synth-concepts", f.synth_concepts, "Concepts per cluster (default 4)");
  app.add_option("--synth-examples", f.synth_examples, "Examples per concept (default 40)");
  app.add_option("--prototype-scale", f.prototype_scale, "Cluster prototype norm (default 10)");
  app.add_option("--concept-spread", f.concept_spread, "Concept mean sd around the prototype (default 0.5)");
  app.add_option("--example-noise", f.example_noise, "Example sd around the concept mean (default 0.1)");
  app.add_flag("--random-prototypes", f.random_prototypes, "Random unit prototypes instead of basis vectors");
}

void add_tree(CLI::App& app, Flags& f) {
  app.add_option("--betweenness-samples", f.betweenness_samples,
                 "Approximate betweenness from this many sampled sources (exact when omitted)");
}

void add_eval(CLI::App& app, Flags& f) {
  app.add_option("--clusters", f.clusters, "Ground-truth clusters CSV (default: <out>/clusters.csv if present)");
  app.add_option("--source", f.sources,
                 "External similarity source NAME:FORMAT:METRIC:PATH with FORMAT embeddings|matrix "
                 "and METRIC cosine|euclidean (repeatable)");
  app.add_option("--audio-metric", f.audio_metric, "Metric for the CAV-weight source: euclidean|cosine");
  app.add_option("--random-baselines", f.random_baselines, "Random hierarchies for the baseline (default 20)");
}

template <typename T, typename U>
void overlay(const std::optional<T>& flag, U& target) {
  if (flag) target = static_cast<U>(*flag);
}

PipelineConfig resolve(const Flags& f) {
  PipelineConfig config;
  if (const char* env = std::getenv("CONCEPTREE_OUT"); env && *env) config.output_dir = env;
  if (f.config) {
    auto in = open_input_file(*f.config);
    try {
      config.merge_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(*f.config + ": " + e.what());
    }
  }
  if (f.out) config.output_dir = *f.out;
  if (f.embeddings) config.embeddings = *f.embeddings;
  if (f.concepts) config.concepts = *f.concepts;
  if (f.clusters) config.clusters = *f.clusters;
  overlay(f.seed, config.seed);
  overlay(f.workers, config.workers);
  overlay(f.min_examples, config.min_examples);
  overlay(f.l2_lambda, config.train.l2_lambda);
  overlay(f.max_iterations, config.train.max_iterations);
  overlay(f.tolerance, config.train.gradient_tolerance);
  overlay(f.negatives_per_positive, config.train.negatives_per_positive);
  overlay(f.accuracy_threshold, config.train.accuracy_threshold);
  overlay(f.histogram_bin_width, config.histogram_bin_width);
  overlay(f.synth_dim, config.synth.dim);
  overlay(f.synth_clusters, config.synth.clusters);
  overlay(f.synth_concepts, config.synth.concepts_per_cluster);
  overlay(f.synth_examples, config.synth.examples_per_concept);
  overlay(f.prototype_scale, config.synth.prototype_scale);
  overlay(f.concept_spread, config.synth.concept_spread);
  overlay(f.example_noise, config.synth.example_noise);
  if (f.random_prototypes) config.synth.orthogonal_prototypes = false;
  if (f.betweenness_samples) config.betweenness_samples = f.betweenness_samples;
  if (f.audio_metric) config.audio_metric = source_metric_from_string(*f.audio_metric);
  overlay(f.random_baselines, config.random_baselines);
  for (const auto& s : f.sources) config.sources.push_back(SourceSpec::parse(s));
  return config;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Learn concept vectors from example sets, mine a concept hierarchy and evaluate it."};
  app.require_subcommand(1);
  Flags flags;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus with planted clusters");
  auto* learn = app.add_subcommand("learn", "Train and filter one concept vector per concept");
  auto* graph = app.add_subcommand("graph", "Compute the similarity matrix and the baseline graphs");
  auto* tree = app.add_subcommand("tree", "Extract the concept hierarchy");
  auto* eval = app.add_subcommand("eval", "Evaluate the hierarchy");
  auto* pipeline = app.add_subcommand("pipeline", "Run every stage (synth only without --embeddings)");

  for (auto* sub : {synth, learn, graph, tree, eval, pipeline}) add_common(*sub, flags);
  for (auto* sub : {learn, graph, pipeline}) add_inputs(*sub, flags);
  for (auto* sub : {learn, pipeline}) add_train(*sub, flags);
  for (auto* sub : {synth, pipeline}) add_synth(*sub, flags);
  for (auto* sub : {tree, pipeline}) add_tree(*sub, flags);
  for (auto* sub : {eval, pipeline}) add_eval(*sub, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    const auto config = resolve(flags);
    StageResult result;
    if (synth->parsed()) result = run_synth(config);
    if (learn->parsed()) result = run_learn(config);
    if (graph->parsed()) result = run_graph(config);
    if (tree->parsed()) result = run_tree(config);
    if (eval->parsed()) result = run_eval(config);
    if (pipeline->parsed()) result = run_pipeline(config);
    for (const auto& path : result.written) std::cout << "wrote " << path.string() << '\n';
    return 0;
  } catch (const MissingInputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace conceptree
