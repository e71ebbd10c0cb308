#include "conceptree/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "conceptree/io.hpp"

namespace conceptree {
namespace fs = std::filesystem;

namespace {

constexpr std::string_view kTool = "conceptree";

class StageOutputs {
 public:
  explicit StageOutputs(fs::path dir) : dir_(std::move(dir)) {}

  void add(std::string name, std::string content) {
    files_.emplace_back(std::move(name), std::move(content));
  }

  void add_json(std::string name, const nlohmann::json& doc) { add(std::move(name), doc.dump(2) + "\n"); }

  std::vector<fs::path> commit() const {
    fs::create_directories(dir_);
    std::vector<fs::path> written;
    for (const auto& [name, content] : files_) {
      const auto target = dir_ / name;
      auto tmp = target;
      tmp += ".tmp";
      write_file(tmp, content);
      fs::rename(tmp, target);
      written.push_back(target);
    }
    return written;
  }

  void quarantine() const noexcept {
    try {
      if (files_.empty()) return;
      fs::create_directories(dir_);
      for (const auto& [name, content] : files_) {
        auto target = dir_ / name;
        target += ".quarantine";
        write_file(target, content);
      }
    } catch (...) {
      // The stage error is what gets reported.
    }
  }

 private:
  static void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw Error("cannot write " + path.string());
  }

  fs::path dir_;
  std::vector<std::pair<std::string, std::string>> files_;
};

template <typename Body>
StageResult run_stage(const PipelineConfig& config, Body&& body) {
  StageOutputs outputs(config.output_dir);
  try {
    body(outputs);
  } catch (...) {
    outputs.quarantine();
    throw;
  }
  return {outputs.commit()};
}

nlohmann::json provenance(const PipelineConfig& config, std::string_view stage) {
  return {{"tool", kTool}, {"stage", stage}, {"seed", config.seed}, {"config", config.parameters()}};
}

nlohmann::json read_json_file(const fs::path& path) {
  auto in = open_input_file(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

template <typename Fn>
auto with_path_context(const fs::path& path, Fn&& fn) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string to_text(const auto& writer) {
  std::ostringstream out;
  writer(out);
  return out.str();
}

TrainConfig effective_train(const PipelineConfig& config) {
  TrainConfig train = config.train;
  train.seed = config.seed;
  return train;
}

std::vector<ConceptVector> kept_cavs(const CavSet& set) {
  std::vector<ConceptVector> kept;
  for (const auto& c : set.concepts) {
    if (c.kept) kept.push_back(c);
  }
  if (kept.empty()) throw ValidationError("cavs file contains no kept concept");
  return kept;
}

SimilaritySource load_source(const SourceSpec& spec) {
  if (spec.format == SourceSpec::Format::embeddings) {
    return source_from_embeddings(spec.name, load_embeddings(spec.path), spec.metric);
  }
  auto in = open_input_file(spec.path);
  auto [ids, values] = with_path_context(spec.path, [&] { return read_labeled_matrix(in); });
  return source_from_matrix(spec.name, std::move(ids), std::move(values), spec.metric);
}

constexpr std::array<GraphLabel, 5> kGraphLabels{
    GraphLabel::adjacency, GraphLabel::sparse_adjacency, GraphLabel::top1,
    GraphLabel::random_sparse_adjacency, GraphLabel::random_top1};

std::string graph_file(GraphLabel label) { return "graph_" + std::string(to_string(label)) + ".json"; }

}  // namespace

SourceSpec SourceSpec::parse(std::string_view text) {
  std::vector<std::string_view> parts;
  for (int i = 0; i < 3; ++i) {
    auto colon = text.find(':');
    if (colon == std::string_view::npos) {
      throw ValidationError("source spec must look like NAME:FORMAT:METRIC:PATH");
    }
    parts.push_back(text.substr(0, colon));
    text.remove_prefix(colon + 1);
  }
  SourceSpec spec;
  spec.name = std::string(parts[0]);
  if (spec.name.empty() || text.empty()) throw ValidationError("source spec needs a name and a path");
  if (parts[1] == "embeddings") {
    spec.format = Format::embeddings;
  } else if (parts[1] == "matrix") {
    spec.format = Format::matrix;
  } else {
    throw ValidationError("source format must be 'embeddings' or 'matrix'");
  }
  spec.metric = source_metric_from_string(parts[2]);
  spec.path = std::string(text);
  return spec;
}

void PipelineConfig::merge_json(const nlohmann::json& doc) {
  try {
    if (doc.contains("out")) output_dir = doc["out"].get<std::string>();
    if (doc.contains("embeddings")) embeddings = doc["embeddings"].get<std::string>();
    if (doc.contains("concepts")) concepts = doc["concepts"].get<std::string>();
    if (doc.contains("clusters")) clusters = doc["clusters"].get<std::string>();
    seed = doc.value("seed", seed);
    workers = doc.value("workers", workers);
    min_examples = doc.value("min_examples", min_examples);
    histogram_bin_width = doc.value("histogram_bin_width", histogram_bin_width);
    random_baselines = doc.value("random_baselines", random_baselines);
    if (doc.contains("audio_metric")) audio_metric = source_metric_from_string(doc["audio_metric"].get<std::string>());
    if (doc.contains("betweenness_samples")) betweenness_samples = doc["betweenness_samples"].get<std::size_t>();
    if (doc.contains("train")) {
      const auto& t = doc["train"];
      train.l2_lambda = t.value("l2_lambda", train.l2_lambda);
      train.max_iterations = t.value("max_iterations", train.max_iterations);
      train.gradient_tolerance = t.value("gradient_tolerance", train.gradient_tolerance);
      train.negatives_per_positive = t.value("negatives_per_positive", train.negatives_per_positive);
      train.accuracy_threshold = t.value("accuracy_threshold", train.accuracy_threshold);
    }
    if (doc.contains("synth")) {
      const auto& s = doc["synth"];
      synth.dim = s.value("dim", synth.dim);
      synth.clusters = s.value("clusters", synth.clusters);
      synth.concepts_per_cluster = s.value("concepts_per_cluster", synth.concepts_per_cluster);
      synth.examples_per_concept = s.value("examples_per_concept", synth.examples_per_concept);
      synth.prototype_scale = s.value("prototype_scale", synth.prototype_scale);
      synth.concept_spread = s.value("concept_spread", synth.concept_spread);
      synth.example_noise = s.value("example_noise", synth.example_noise);
      synth.orthogonal_prototypes = s.value("orthogonal_prototypes", synth.orthogonal_prototypes);
    }
    if (doc.contains("sources")) {
      for (const auto& s : doc["sources"]) {
        SourceSpec spec;
        spec.name = s.at("name").get<std::string>();
        const auto format = s.value("format", std::string("embeddings"));
        if (format != "matrix" && format != "embeddings") {
          throw ValidationError("source format must be 'embeddings' or 'matrix'");
        }
        spec.format = format == "matrix" ? SourceSpec::Format::matrix : SourceSpec::Format::embeddings;
        spec.metric = source_metric_from_string(s.value("metric", std::string("cosine")));
        spec.path = s.at("path").get<std::string>();
        sources.push_back(std::move(spec));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid config: ") + e.what());
  }
}

nlohmann::json PipelineConfig::parameters() const {
  auto synth_json = to_json(synth);
  synth_json.erase("seed");
  nlohmann::json source_list = nlohmann::json::array();
  for (const auto& s : sources) {
    source_list.push_back({{"name", s.name},
                           {"format", s.format == SourceSpec::Format::matrix ? "matrix" : "embeddings"},
                           {"metric", to_string(s.metric)}});
  }
  return {{"min_examples", min_examples},
          {"train",
           {{"l2_lambda", train.l2_lambda},
            {"max_iterations", train.max_iterations},
            {"gradient_tolerance", train.gradient_tolerance},
            {"negatives_per_positive", train.negatives_per_positive},
            {"accuracy_threshold", train.accuracy_threshold}}},
          {"synth", synth_json},
          {"histogram_bin_width", histogram_bin_width},
          {"random_baselines", random_baselines},
          {"audio_metric", to_string(audio_metric)},
          {"betweenness_samples",
           betweenness_samples ? nlohmann::json(*betweenness_samples) : nlohmann::json(nullptr)},
          {"sources", source_list}};
}

fs::path PipelineConfig::embeddings_path() const {
  return embeddings.empty() ? output_dir / "embeddings.csv" : embeddings;
}
fs::path PipelineConfig::concepts_path() const {
  return concepts.empty() ? output_dir / "concepts.jsonl" : concepts;
}
fs::path PipelineConfig::clusters_path() const {
  return clusters.empty() ? output_dir / "clusters.csv" : clusters;
}

std::vector<std::size_t> accuracy_histogram(std::span<const double> accuracies, double bin_width) {
  if (!(bin_width > 0.0 && bin_width <= 1.0)) throw Error("histogram bin width must lie in (0, 1]");
  const auto bins = static_cast<std::size_t>(std::ceil(1.0 / bin_width - 1e-9));
  std::vector<std::size_t> counts(bins, 0);
  for (double a : accuracies) {
    auto bin = static_cast<std::size_t>(std::floor(std::clamp(a, 0.0, 1.0) / bin_width + 1e-9));
    ++counts[std::min(bin, bins - 1)];
  }
  return counts;
}

StageResult run_synth(const PipelineConfig& config) {
  return run_stage(config, [&](StageOutputs& out) {
    SynthConfig synth = config.synth;
    synth.seed = config.seed;
    const auto corpus = generate(synth);
    out.add("embeddings.csv", to_text([&](std::ostream& o) { write_embeddings(o, corpus.store); }));
    out.add("concepts.jsonl", to_text([&](std::ostream& o) { write_concepts(o, corpus.catalog); }));
    out.add("clusters.csv", to_text([&](std::ostream& o) { write_clusters_csv(o, corpus.clusters); }));
    out.add_json("synth.json", {{"provenance", provenance(config, "synth")},
                                {"examples", corpus.store.size()},
                                {"concepts", corpus.catalog.size()}});
  });
}

StageResult run_learn(const PipelineConfig& config) {
  return run_stage(config, [&](StageOutputs& out) {
    const auto train = effective_train(config);
    train.validate();
    const auto store = load_embeddings(config.embeddings_path());
    const auto loaded = load_concepts(config.concepts_path(), store, config.min_examples);
    const auto& catalog = loaded.catalog;
    const auto splits = split_catalog(catalog, config.seed, {}, config.min_examples);
    const auto cavs = train_cavs(catalog, store, splits, train, config.workers);

    std::vector<double> all_acc;
    std::vector<double> kept_acc;
    std::size_t not_converged = 0;
    for (const auto& c : cavs) {
      all_acc.push_back(c.test_accuracy);
      if (c.kept) kept_acc.push_back(c.test_accuracy);
      not_converged += !c.converged;
    }

    nlohmann::json rejected = nlohmann::json::array();
    for (const auto& r : loaded.report.rejected) {
      rejected.push_back({{"id", r.concept_id}, {"resolvable_examples", r.resolvable}});
    }
    nlohmann::json unresolved = nlohmann::json::array();
    for (const auto& u : loaded.report.unresolved) {
      unresolved.push_back({{"id", u.concept_id}, {"dropped_examples", u.dropped}});
    }

    auto splits_doc = splits_to_json(splits);
    splits_doc["provenance"] = provenance(config, "learn");
    out.add_json("splits.json", splits_doc);

    auto cavs_doc = cavs_to_json(cavs, store.dim(), train.accuracy_threshold);
    cavs_doc["provenance"] = provenance(config, "learn");
    out.add_json("cavs.json", cavs_doc);

    nlohmann::json report = {
        {"provenance", provenance(config, "learn")},
        {"concepts_trained", cavs.size()},
        {"concepts_kept", kept_acc.size()},
        {"concepts_not_converged", not_converged},
        {"rejected_at_load", rejected},
        {"unresolved_examples", unresolved},
        {"test_accuracy_all", all_acc.empty() ? nlohmann::json(nullptr) : to_json(mean_with_ci(all_acc), "up")},
        {"test_accuracy_kept", kept_acc.empty() ? nlohmann::json(nullptr) : to_json(mean_with_ci(kept_acc), "up")},
        {"histogram",
         {{"bin_width", config.histogram_bin_width},
          {"counts", accuracy_histogram(all_acc, config.histogram_bin_width)}}}};
    out.add_json("learn_report.json", report);

    filter_cavs(cavs, train.accuracy_threshold);
  });
}

StageResult run_graph(const PipelineConfig& config) {
  return run_stage(config, [&](StageOutputs& out) {
    const auto cavs_path = config.output_dir / "cavs.json";
    const auto set = with_path_context(cavs_path, [&] { return cavs_from_json(read_json_file(cavs_path)); });
    const auto kept = with_path_context(cavs_path, [&] { return kept_cavs(set); });
    const auto store = load_embeddings(config.embeddings_path());
    if (store.dim() != set.dim) throw ValidationError("cavs dimension does not match the embeddings");
    const auto loaded = load_concepts(config.concepts_path(), store, config.min_examples);

    const auto s = similarity_matrix(kept, loaded.catalog, store);
    const std::size_t k = s.size();
    const std::size_t sparse_edges = k > 0 ? k - 1 : 0;

    out.add("similarity.csv", to_text([&](std::ostream& o) { write_similarity_csv(o, s); }));
    const std::array<ConceptGraph, 5> graphs{
        adjacency(s), sparse_graph(s, sparse_edges), top1_graph(s),
        random_sparse_graph(s.ids, sparse_edges, derive_seed(config.seed, "graph")),
        random_top1_graph(s.ids, derive_seed(config.seed, "graph"))};
    for (const auto& g : graphs) {
      auto doc = graph_to_json(g);
      doc["provenance"] = provenance(config, "graph");
      out.add_json(graph_file(g.label), doc);
    }
  });
}

StageResult run_tree(const PipelineConfig& config) {
  return run_stage(config, [&](StageOutputs& out) {
    const auto s = load_similarity_csv(config.output_dir / "similarity.csv");
    NameMap names;
    const auto cavs_path = config.output_dir / "cavs.json";
    if (fs::exists(cavs_path)) {
      for (const auto& c : with_path_context(cavs_path, [&] { return cavs_from_json(read_json_file(cavs_path)); }).concepts) {
        names.emplace(c.concept_id, c.name);
      }
    }
    BetweennessOptions options;
    options.sampled_sources = config.betweenness_samples;
    options.seed = derive_seed(config.seed, "tree");
    const auto h = extract_hierarchy(s, undirected_adjacency(s), options);

    auto doc = hierarchy_to_json(h);
    doc["provenance"] = provenance(config, "tree");
    out.add_json("tree.json", doc);
    out.add("tree.dot", tree_to_dot(h, names));
  });
}

StageResult run_eval(const PipelineConfig& config) {
  return run_stage(config, [&](StageOutputs& out) {
    const auto tree_path = config.output_dir / "tree.json";
    const auto h = with_path_context(tree_path, [&] { return hierarchy_from_json(read_json_file(tree_path)); });
    const auto s = load_similarity_csv(config.output_dir / "similarity.csv");
    const Matrix sym = symmetric_similarity(s);
    {
      auto tree_ids = h.ids;
      auto matrix_ids = s.ids;
      std::ranges::sort(tree_ids);
      std::ranges::sort(matrix_ids);
      if (tree_ids != matrix_ids) {
        throw ValidationError("tree and similarity matrix cover different concepts");
      }
    }

    nlohmann::json structure = nlohmann::json::array();
    structure.push_back(to_json(structure_metrics(h)));
    for (auto label : kGraphLabels) {
      const auto path = config.output_dir / graph_file(label);
      if (!fs::exists(path)) continue;
      const auto g = with_path_context(path, [&] { return graph_from_json(read_json_file(path)); });
      structure.push_back(to_json(structure_metrics(g)));
    }

    nlohmann::json report = {{"provenance", provenance(config, "eval")}, {"structure", structure}};

    std::vector<Hierarchy> baselines;
    for (std::size_t r = 0; r < config.random_baselines; ++r) {
      baselines.push_back(random_hierarchy(s.ids, derive_seed(config.seed, "baseline-" + std::to_string(r)), &sym));
    }

    const auto clusters_path = config.clusters_path();
    if (fs::exists(clusters_path)) {
      const auto clusters = load_clusters(clusters_path);
      nlohmann::json cluster_report = {{"edge_accuracy", to_json(edge_cluster_accuracy(h, clusters), "up")}};
      if (!baselines.empty() && h.size() > 1) {
        std::vector<double> random_acc;
        for (const auto& b : baselines) random_acc.push_back(edge_cluster_accuracy(b, clusters).mean);
        cluster_report["random_edge_accuracy"] = to_json(mean_with_ci(random_acc), "up");
      }
      std::set<std::string> labels;
      for (const auto& id : s.ids) {
        auto it = clusters.find(id);
        if (it == clusters.end()) throw ValidationError("concept '" + id + "' has no cluster label");
        labels.insert(it->second);
      }
      cluster_report["silhouette"] =
          labels.size() >= 2 ? to_json(silhouette(sym, s.ids, clusters), "up") : nlohmann::json(nullptr);
      report["clusters"] = cluster_report;
    } else if (!config.clusters.empty()) {
      throw MissingInputError("missing input file: " + clusters_path.string());
    }

    nlohmann::json alignment = nlohmann::json::array();
    if (h.size() > 1) {
      const auto cavs_path = config.output_dir / "cavs.json";
      const auto set = with_path_context(cavs_path, [&] { return cavs_from_json(read_json_file(cavs_path)); });
      std::vector<SimilaritySource> sources{cav_weight_source(kept_cavs(set), config.audio_metric)};
      for (const auto& spec : config.sources) sources.push_back(load_source(spec));

      std::vector<std::pair<std::string, Hierarchy>> trees;
      trees.emplace_back("H", h);
      for (std::size_t i = 1; i < sources.size(); ++i) {
        trees.emplace_back("H(" + sources[i].name + ")", hierarchy_from_source(sources[i], s.ids));
      }
      if (!baselines.empty()) trees.emplace_back("Random", baselines.front());

      for (const auto& [tree_name, tree] : trees) {
        for (const auto& source : sources) {
          const auto score = alignment_score(tree, source);
          auto row = to_json(score.score, direction(score.metric));
          row["tree"] = tree_name;
          row["source"] = source.name;
          row["metric"] = to_string(score.metric);
          alignment.push_back(row);
        }
      }
    }
    report["alignment"] = alignment;
    out.add_json("eval_report.json", report);
  });
}

StageResult run_pipeline(const PipelineConfig& config) {
  StageResult all;
  const auto append = [&](StageResult r) {
    all.written.insert(all.written.end(), r.written.begin(), r.written.end());
  };
  if (config.embeddings.empty() && config.concepts.empty()) append(run_synth(config));
  append(run_learn(config));
  append(run_graph(config));
  append(run_tree(config));
  append(run_eval(config));
  return all;
}

}  // namespace conceptree
