#include "doctest.h"
#include "support.hpp"

using namespace conceptree;
using testing::cli;

namespace {

const char* const kOutputs[] = {
    "embeddings.csv", "concepts.jsonl", "clusters.csv", "synth.json", "splits.json",
    "cavs.json", "learn_report.json", "similarity.csv", "graph_A.json", "graph_sparse-A.json",
    "graph_top1.json", "graph_random-sparse-A.json", "graph_random-top1.json", "tree.json",
    "tree.dot", "eval_report.json"};

// Silences stdout/stderr while the CLI runs and hands back what was printed.
class Capture {
 public:
  Capture() : out_(std::cout.rdbuf(out_buf_.rdbuf())), err_(std::cerr.rdbuf(err_buf_.rdbuf())) {}
  ~Capture() {
    std::cout.rdbuf(out_);
    std::cerr.rdbuf(err_);
  }
  std::string out() const { return out_buf_.str(); }
  std::string err() const { return err_buf_.str(); }

 private:
  std::ostringstream out_buf_, err_buf_;
  std::streambuf* out_;
  std::streambuf* err_;
};

int quiet(std::vector<std::string> args, std::string* err = nullptr) {
  Capture capture;
  const int rc = cli(std::move(args));
  if (err) *err = capture.err();
  return rc;
}

nlohmann::json read_json(const std::filesystem::path& p) { return nlohmann::json::parse(testing::slurp(p)); }

}  // namespace

TEST_CASE("pipeline on the default synthetic corpus emits every artifact") {
  testing::TempDir dir;
  const auto out = (dir / "run").string();
  REQUIRE(quiet({"pipeline", "--out", out, "--seed", "3"}) == 0);
  for (const char* name : kOutputs) CHECK(std::filesystem::exists(dir / "run" / name));

  auto cavs = read_json(dir / "run" / "cavs.json");
  CHECK(cavs["dim"] == 16);
  CHECK(cavs["concepts"].size() == 16);
  CHECK(cavs["provenance"]["seed"] == 3);
  CHECK(cavs["provenance"]["stage"] == "learn");
  CHECK(cavs["provenance"]["config"]["train"]["l2_lambda"] == 1.0);

  auto report = read_json(dir / "run" / "learn_report.json");
  CHECK(report["histogram"]["counts"].size() == 50);
  std::size_t total = 0;
  for (auto& c : report["histogram"]["counts"]) total += c.get<std::size_t>();
  CHECK(total == 16);
  CHECK(report["test_accuracy_all"]["n"] == 16);
  CHECK(report["test_accuracy_all"]["direction"] == "up");

  auto tree = read_json(dir / "run" / "tree.json");
  const std::size_t k = tree["order"].size();
  CHECK(tree["edges"].size() == k - 1);
  CHECK(tree["provenance"]["stage"] == "tree");

  auto eval = read_json(dir / "run" / "eval_report.json");
  CHECK(eval["structure"][0]["label"] == "H");
  CHECK(eval["structure"][0]["connected_components"] == 1);
  CHECK(eval["structure"][0]["isolated_nodes"] == 0);
  CHECK(eval["structure"].size() == 6);
  CHECK(eval["clusters"]["edge_accuracy"]["mean"].get<double>() >
        eval["clusters"]["random_edge_accuracy"]["mean"].get<double>());
  CHECK(eval["alignment"].size() == 2);
  CHECK(eval["alignment"][0]["source"] == "audio");
  CHECK(eval["alignment"][0]["direction"] == "down");

  auto sparse = read_json(dir / "run" / "graph_sparse-A.json");
  CHECK(sparse["edges"].size() == k - 1);
  CHECK(sparse["seed"].is_null());
  auto top1 = read_json(dir / "run" / "graph_top1.json");
  CHECK(top1["edges"].size() == k);
  CHECK(top1["edge_count_convention"] == "directed");

  const auto dot = testing::slurp(dir / "run" / "tree.dot");
  CHECK(dot.find("cluster 0 concept 0") != std::string::npos);
}

TEST_CASE("stages are idempotent and rerunning tree is byte-identical") {
  testing::TempDir dir;
  const auto out = (dir / "run").string();
  REQUIRE(quiet({"pipeline", "--out", out, "--seed", "5"}) == 0);
  const auto tree = testing::slurp(dir / "run" / "tree.json");
  const auto eval = testing::slurp(dir / "run" / "eval_report.json");
  REQUIRE(quiet({"tree", "--out", out, "--seed", "5"}) == 0);
  CHECK(testing::slurp(dir / "run" / "tree.json") == tree);
  REQUIRE(quiet({"eval", "--out", out, "--seed", "5"}) == 0);
  CHECK(testing::slurp(dir / "run" / "eval_report.json") == eval);
  CHECK_FALSE(std::filesystem::exists(dir / "run" / "tree.json.tmp"));
}

TEST_CASE("separate stages reproduce the pipeline byte for byte") {
  testing::TempDir dir;
  const auto a = (dir / "a").string(), b = (dir / "b").string();
  REQUIRE(quiet({"pipeline", "--out", a, "--seed", "8", "--workers", "3"}) == 0);
  for (const char* stage : {"synth", "learn", "graph", "tree", "eval"})
    REQUIRE(quiet({stage, "--out", b, "--seed", "8"}) == 0);
  for (const char* name : kOutputs) CHECK(testing::slurp(dir / "a" / name) == testing::slurp(dir / "b" / name));
}

TEST_CASE("empty kept set fails the learn stage and quarantines its outputs") {
  testing::TempDir dir;
  const auto out = (dir / "run").string();
  REQUIRE(quiet({"synth", "--out", out}) == 0);
  REQUIRE(quiet({"learn", "--out", out}) == 0);
  const auto good = testing::slurp(dir / "run" / "cavs.json");

  std::string err;
  CHECK(quiet({"learn", "--out", out, "--accuracy-threshold", "1.01"}, &err) == 1);
  CHECK(err.find("kept set is empty") != std::string::npos);
  CHECK(testing::slurp(dir / "run" / "cavs.json") == good);
  CHECK(std::filesystem::exists(dir / "run" / "cavs.json.quarantine"));
  CHECK(read_json(dir / "run" / "cavs.json.quarantine")["accuracy_threshold"] == 1.01);
}

TEST_CASE("missing upstream files exit with 2 and name the path") {
  testing::TempDir dir;
  const auto out = (dir / "empty").string();
  std::string err;
  CHECK(quiet({"learn", "--out", out}, &err) == 2);
  CHECK(err.find("embeddings.csv") != std::string::npos);
  CHECK(quiet({"graph", "--out", out}, &err) == 2);
  CHECK(err.find("cavs.json") != std::string::npos);
  CHECK(quiet({"tree", "--out", out}, &err) == 2);
  CHECK(err.find("similarity.csv") != std::string::npos);
  CHECK(quiet({"eval", "--out", out}, &err) == 2);
  CHECK(err.find("tree.json") != std::string::npos);
}

TEST_CASE("validation failures exit with 3 and carry row diagnostics") {
  testing::TempDir dir;
  testing::spit(dir / "emb.csv", "id,v0,v1\nt1,0.5,1\nt2,0.5\n");
  testing::spit(dir / "concepts.jsonl", "");
  std::string err;
  CHECK(quiet({"learn", "--out", (dir / "o").string(), "--embeddings", (dir / "emb.csv").string(),
               "--concepts", (dir / "concepts.jsonl").string()},
              &err) == 3);
  CHECK(err.find("dimension mismatch at row 3") != std::string::npos);

  testing::spit(dir / "emb.csv", "id,v0\nt1,1\n");
  testing::spit(dir / "concepts.jsonl", "{\"id\":\"c1\",\"name\":\"x\",\"examples\":[\"t1\"]}\n{broken\n");
  CHECK(quiet({"learn", "--out", (dir / "o").string(), "--embeddings", (dir / "emb.csv").string(),
               "--concepts", (dir / "concepts.jsonl").string()},
              &err) == 3);
  CHECK(err.find("line 2") != std::string::npos);

  CHECK(quiet({"eval", "--out", (dir / "o").string(), "--source", "bad-spec"}, &err) == 3);
}

TEST_CASE("usage errors and help") {
  {
    Capture capture;
    CHECK(cli({}) != 0);
  }
  Capture capture;
  CHECK(cli({"pipeline", "--help"}) == 0);
  const auto help = capture.out();
  for (const char* flag :
       {"--config", "--out", "--seed", "--embeddings", "--concepts", "--min-examples", "--workers", "--lambda",
        "--max-iterations", "--tolerance", "--negatives-per-positive", "--accuracy-threshold",
        "--histogram-bin-width", "--synth-dim", "--synth-clusters", "--synth-concepts", "--synth-examples",
        "--prototype-scale", "--concept-spread", "--example-noise", "--random-prototypes",
        "--betweenness-samples", "--clusters", "--source", "--audio-metric", "--random-baselines"})
    CHECK_MESSAGE(help.find(flag) != std::string::npos, flag);
  CHECK(help.find("CONCEPTREE_OUT") != std::string::npos);
}

TEST_CASE("config file values apply and flags override them") {
  testing::TempDir dir;
  testing::spit(dir / "cfg.json", R"({"seed": 4, "out": ")" + (dir / "from_cfg").string() +
                                      R"(", "synth": {"dim": 6, "clusters": 2}, "train": {"l2_lambda": 0.5}})");
  REQUIRE(quiet({"synth", "--config", (dir / "cfg.json").string()}) == 0);
  auto synth = read_json(dir / "from_cfg" / "synth.json");
  CHECK(synth["provenance"]["seed"] == 4);
  CHECK(synth["provenance"]["config"]["synth"]["dim"] == 6);
  CHECK(synth["provenance"]["config"]["train"]["l2_lambda"] == 0.5);

  REQUIRE(quiet({"synth", "--config", (dir / "cfg.json").string(), "--out", (dir / "flag").string(), "--seed",
                 "9", "--synth-dim", "7"}) == 0);
  auto over = read_json(dir / "flag" / "synth.json");
  CHECK(over["provenance"]["seed"] == 9);
  CHECK(over["provenance"]["config"]["synth"]["dim"] == 7);
  CHECK(over["provenance"]["config"]["synth"]["clusters"] == 2);

  CHECK(quiet({"synth", "--config", (dir / "nope.json").string()}) == 2);
  testing::spit(dir / "bad.json", "{not json");
  CHECK(quiet({"synth", "--config", (dir / "bad.json").string()}) == 3);
}

TEST_CASE("CONCEPTREE_OUT sets the default output directory") {
  testing::TempDir dir;
  const auto target = (dir / "env_out").string();
  ::setenv("CONCEPTREE_OUT", target.c_str(), 1);
  const int rc = quiet({"synth", "--synth-dim", "4", "--synth-clusters", "2"});
  ::unsetenv("CONCEPTREE_OUT");
  CHECK(rc == 0);
  CHECK(std::filesystem::exists(dir / "env_out" / "embeddings.csv"));
}

TEST_CASE("external sources join the alignment report") {
  testing::TempDir dir;
  const auto out = (dir / "run").string();
  REQUIRE(quiet({"pipeline", "--out", out, "--seed", "2"}) == 0);

  // Concept-level embeddings: each concept's cluster one-hot, plus a precomputed matrix.
  auto clusters = load_clusters(dir / "run" / "clusters.csv");
  std::ostringstream emb, mat;
  emb << "id,v0,v1,v2,v3\n";
  std::vector<std::string> ids;
  for (auto& [id, label] : clusters) ids.push_back(id);
  for (auto& id : ids) {
    emb << id;
    for (int k = 0; k < 4; ++k) emb << ',' << (clusters[id] == "k" + std::to_string(k) ? 1 : 0);
    emb << '\n';
  }
  mat << "id";
  for (auto& id : ids) mat << ',' << id;
  mat << '\n';
  for (auto& a : ids) {
    mat << a;
    for (auto& b : ids) mat << ',' << (clusters[a] == clusters[b] ? 1.0 : 0.0);
    mat << '\n';
  }
  testing::spit(dir / "cf.csv", emb.str());
  testing::spit(dir / "sem.csv", mat.str());

  REQUIRE(quiet({"eval", "--out", out, "--seed", "2", "--source", "cf:embeddings:cosine:" + (dir / "cf.csv").string(),
                 "--source", "sem:matrix:cosine:" + (dir / "sem.csv").string(), "--audio-metric", "cosine"}) == 0);
  auto eval = read_json(dir / "run" / "eval_report.json");
  // Trees: H, H(cf), H(sem), Random; sources: audio, cf, sem.
  CHECK(eval["alignment"].size() == 12);
  std::map<std::pair<std::string, std::string>, double> score;
  for (auto& row : eval["alignment"]) score[{row["tree"], row["source"]}] = row["mean"];
  // 16 concepts in 4 clusters: any spanning tree crosses clusters at least 3 times.
  CHECK(score.at({"H(cf)", "cf"}) == doctest::Approx(12.0 / 15.0));
  CHECK(score.at({"H", "cf"}) > score.at({"Random", "cf"}));
  CHECK(eval["alignment"][0]["direction"] == "up");

  std::string err;
  CHECK(quiet({"eval", "--out", out, "--source", "x:embeddings:cosine:" + (dir / "missing.csv").string()}, &err) == 2);
  testing::spit(dir / "short.csv", "id,v0\nc00,1\n");
  CHECK(quiet({"eval", "--out", out, "--source", "x:embeddings:cosine:" + (dir / "short.csv").string()}, &err) == 3);
  CHECK(err.find("lacks id") != std::string::npos);
}

TEST_CASE("accuracy_histogram") {
  std::vector<double> acc{0.0, 0.019, 0.02, 0.5, 0.999, 1.0};
  auto h = accuracy_histogram(acc, 0.02);
  REQUIRE(h.size() == 50);
  CHECK(h[0] == 2);
  CHECK(h[1] == 1);
  CHECK(h[25] == 1);
  CHECK(h[49] == 2);
  CHECK(accuracy_histogram(acc, 0.25).size() == 4);
  CHECK_THROWS_AS(accuracy_histogram(acc, 0.0), Error);
}

TEST_CASE("SourceSpec::parse") {
  auto s = SourceSpec::parse("cf:embeddings:euclidean:/tmp/a:b.csv");
  CHECK(s.name == "cf");
  CHECK(s.format == SourceSpec::Format::embeddings);
  CHECK(s.metric == SourceMetric::euclidean_distance);
  CHECK(s.path == "/tmp/a:b.csv");
  CHECK(SourceSpec::parse("w:matrix:cosine:m.csv").format == SourceSpec::Format::matrix);
  CHECK_THROWS_AS(SourceSpec::parse("w:table:cosine:m.csv"), ValidationError);
  CHECK_THROWS_AS(SourceSpec::parse("w:matrix:dot:m.csv"), ValidationError);
  CHECK_THROWS_AS(SourceSpec::parse("w:matrix:cosine:"), ValidationError);
  CHECK_THROWS_AS(SourceSpec::parse("nothing"), ValidationError);
}
