#include "conceptree/corpus.hpp"

#include "conceptree/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace conceptree {
namespace {

std::string row_error(std::string_view what, std::size_t row) {
  std::ostringstream msg;
  msg << what << " at row " << row;
  return msg.str();
}

}  // namespace

EmbeddingStore::EmbeddingStore(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw ValidationError("embedding dimension must be positive");
}

std::span<const double> EmbeddingStore::vector(std::string_view id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw ValidationError("unknown example id '" + std::string(id) + "'");
  return vector(it->second);
}

void EmbeddingStore::add(std::string id, std::span<const double> values) {
  if (id.empty()) throw ValidationError("empty example id");
  if (values.size() != dim_) throw ValidationError("dimension mismatch for id '" + id + "'");
  if (!std::ranges::all_of(values, [](double v) { return std::isfinite(v); })) {
    throw ValidationError("non-finite value for id '" + id + "'");
  }
  if (contains(id)) throw ValidationError("duplicate id '" + id + "'");
  index_.emplace(id, ids_.size());
  ids_.push_back(std::move(id));
  values_.insert(values_.end(), values.begin(), values.end());
}

EmbeddingStore read_embeddings(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty embeddings file");
  auto header = split_csv_line(strip_cr(line));
  if (header.size() < 2 || header[0] != "id") {
    throw ValidationError("embeddings header must be 'id,v0,...' at row 1");
  }
  for (std::size_t k = 1; k < header.size(); ++k) {
    if (header[k] != "v" + std::to_string(k - 1)) {
      throw ValidationError(row_error("unexpected column name '" + std::string(header[k]) + "'", 1));
    }
  }

  EmbeddingStore store(header.size() - 1);
  std::vector<double> values(store.dim());
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    auto text = strip_cr(line);
    if (text.empty()) continue;
    auto fields = split_csv_line(text);
    if (fields.size() != header.size()) throw ValidationError(row_error("dimension mismatch", row));
    if (fields[0].empty()) throw ValidationError(row_error("empty id", row));
    for (std::size_t k = 1; k < fields.size(); ++k) {
      auto field = fields[k];
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
      if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw ValidationError(row_error("unparsable value '" + std::string(field) + "'", row));
      }
      if (!std::isfinite(value)) throw ValidationError(row_error("non-finite value", row));
      values[k - 1] = value;
    }
    std::string id(fields[0]);
    if (store.contains(id)) throw ValidationError(row_error("duplicate id '" + id + "'", row));
    store.add(std::move(id), values);
  }
  return store;
}

EmbeddingStore load_embeddings(const std::filesystem::path& path) {
  auto in = open_input_file(path);
  try {
    return read_embeddings(in);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_embeddings(std::ostream& out, const EmbeddingStore& store) {
  out << "id";
  for (std::size_t k = 0; k < store.dim(); ++k) out << ",v" << k;
  out << '\n';
  for (std::size_t i = 0; i < store.size(); ++i) {
    out << store.ids()[i];
    for (double v : store.vector(i)) out << ',' << format_double(v);
    out << '\n';
  }
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingStore& store) {
  std::ofstream out(path);
  write_embeddings(out, store);
}

void ConceptCatalog::add(Concept entry) {
  if (entry.id.empty()) throw ValidationError("empty concept id");
  if (index_.contains(entry.id)) {
    throw ValidationError("duplicate concept id '" + entry.id + "'");
  }
  index_.emplace(entry.id, concepts_.size());
  concepts_.push_back(std::move(entry));
}

const Concept* ConceptCatalog::find(std::string_view id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &concepts_[it->second];
}

const Concept& ConceptCatalog::at(std::string_view id) const {
  if (const auto* c = find(id)) return *c;
  throw ValidationError("unknown concept id '" + std::string(id) + "'");
}

LoadedConcepts read_concepts(std::istream& in, const EmbeddingStore& store,
                             std::size_t min_examples) {
  LoadedConcepts result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto text = strip_cr(line);
    if (text.find_first_not_of(" \t") == std::string_view::npos) continue;

    Concept entry;
    std::vector<std::string> raw;
    try {
      auto obj = nlohmann::json::parse(text);
      entry.id = obj.at("id").get<std::string>();
      entry.name = obj.at("name").get<std::string>();
      raw = obj.at("examples").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("concepts line " + std::to_string(line_no) + ": " + e.what());
    }
    if (entry.id.empty()) {
      throw ValidationError("concepts line " + std::to_string(line_no) + ": empty concept id");
    }

    std::set<std::string, std::less<>> seen;
    for (auto& id : raw) {
      if (store.contains(id) && seen.insert(id).second) entry.examples.push_back(std::move(id));
    }
    if (auto dropped = raw.size() - entry.examples.size(); dropped > 0) {
      result.report.unresolved.push_back({entry.id, dropped});
    }
    if (entry.examples.size() < min_examples) {
      result.report.rejected.push_back({entry.id, entry.examples.size()});
      continue;
    }
    try {
      result.catalog.add(std::move(entry));
    } catch (const ValidationError& e) {
      throw ValidationError("concepts line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return result;
}

LoadedConcepts load_concepts(const std::filesystem::path& path, const EmbeddingStore& store,
                             std::size_t min_examples) {
  auto in = open_input_file(path);
  try {
    return read_concepts(in, store, min_examples);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_concepts(std::ostream& out, const ConceptCatalog& catalog) {
  for (const auto& c : catalog.concepts()) {
    nlohmann::json obj = {{"id", c.id}, {"name", c.name}, {"examples", c.examples}};
    out << obj.dump() << '\n';
  }
}

ConceptSplit split_concept(std::span<const std::string> example_ids, std::string_view concept_id,
                           std::uint64_t seed, const SplitRatios& ratios,
                           std::size_t min_examples) {
  if (ratios.train < 0 || ratios.validation < 0 || ratios.test < 0 ||
      std::abs(ratios.train + ratios.validation + ratios.test - 1.0) > 1e-9) {
    throw Error("split ratios must be non-negative and sum to 1");
  }
  const std::size_t n = example_ids.size();
  if (n < min_examples) {
    throw Error("concept '" + std::string(concept_id) + "' has " + std::to_string(n) +
                " examples, fewer than " + std::to_string(min_examples));
  }

  std::vector<std::string> ids(example_ids.begin(), example_ids.end());
  std::ranges::sort(ids);
  if (std::ranges::adjacent_find(ids) != ids.end()) {
    throw Error("concept '" + std::string(concept_id) + "' lists an example twice");
  }
  Rng rng(derive_seed(seed, concept_id));
  std::shuffle(ids.begin(), ids.end(), rng);

  // Products such as n * 0.1 may land a few ulps below an integer.
  const auto portion = [n](double r) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * r + 1e-9));
  };
  const std::size_t n_val = portion(ratios.validation);
  const std::size_t n_test = portion(ratios.test);

  ConceptSplit split;
  auto it = ids.begin();
  split.validation.assign(std::make_move_iterator(it), std::make_move_iterator(it + n_val));
  it += n_val;
  split.test.assign(std::make_move_iterator(it), std::make_move_iterator(it + n_test));
  it += n_test;
  split.train.assign(std::make_move_iterator(it), std::make_move_iterator(ids.end()));
  return split;
}

const ConceptSplit& SplitAssignment::at(std::string_view concept_id) const {
  auto it = concepts.find(concept_id);
  if (it == concepts.end()) {
    throw ValidationError("no split for concept '" + std::string(concept_id) + "'");
  }
  return it->second;
}

SplitAssignment split_catalog(const ConceptCatalog& catalog, std::uint64_t seed,
                              const SplitRatios& ratios, std::size_t min_examples) {
  SplitAssignment splits;
  splits.seed = seed;
  for (const auto& c : catalog.concepts()) {
    splits.concepts.emplace(c.id, split_concept(c.examples, c.id, seed, ratios, min_examples));
  }
  return splits;
}

nlohmann::json splits_to_json(const SplitAssignment& splits) {
  nlohmann::json concepts = nlohmann::json::object();
  for (const auto& [id, s] : splits.concepts) {
    concepts[id] = {{"train", s.train}, {"val", s.validation}, {"test", s.test}};
  }
  return {{"seed", splits.seed}, {"concepts", concepts}};
}

}  // namespace conceptree
