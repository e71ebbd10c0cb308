#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "conceptree/common.hpp"
#include "json.hpp"

namespace conceptree {

inline constexpr std::size_t kDefaultMinExamples = 10;

/// Fixed-dimension embedding vectors keyed by example id, in insertion order.
class EmbeddingStore {
 public:
  explicit EmbeddingStore(std::size_t dim);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return ids_.size(); }
  bool contains(std::string_view id) const { return index_.find(id) != index_.end(); }

  /// Throws ValidationError for an unknown id.
  std::span<const double> vector(std::string_view id) const;
  std::span<const double> vector(std::size_t index) const {
    return {values_.data() + index * dim_, dim_};
  }
  const std::vector<std::string>& ids() const noexcept { return ids_; }

  /// Rejects empty or duplicate ids, wrong length and non-finite components.
  void add(std::string id, std::span<const double> values);

 private:
  std::size_t dim_;
  std::vector<std::string> ids_;
  std::vector<double> values_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

/// Parses the embeddings CSV (`id,v0,...,v{d-1}` header). Rows are numbered
/// from 1 with the header as row 1.
EmbeddingStore read_embeddings(std::istream& in);
EmbeddingStore load_embeddings(const std::filesystem::path& path);
void write_embeddings(std::ostream& out, const EmbeddingStore& store);
void save_embeddings(const std::filesystem::path& path, const EmbeddingStore& store);

struct Concept {
  std::string id;
  std::string name;
  std::vector<std::string> examples;
};

class ConceptCatalog {
 public:
  /// Throws ValidationError on duplicate concept id.
  void add(Concept entry);

  const std::vector<Concept>& concepts() const noexcept { return concepts_; }
  std::size_t size() const noexcept { return concepts_.size(); }
  const Concept* find(std::string_view id) const;
  const Concept& at(std::string_view id) const;

 private:
  std::vector<Concept> concepts_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

struct ConceptLoadReport {
  struct Unresolved {
    std::string concept_id;
    std::size_t dropped = 0;
  };
  struct Rejected {
    std::string concept_id;
    std::size_t resolvable = 0;
  };
  std::vector<Unresolved> unresolved;
  std::vector<Rejected> rejected;
};

struct LoadedConcepts {
  ConceptCatalog catalog;
  ConceptLoadReport report;
};

/// Parses concepts JSONL. Example ids missing from `store` (and repeats
/// within a concept) are dropped and counted; concepts left with fewer than
/// `min_examples` ids are rejected into the report.
LoadedConcepts read_concepts(std::istream& in, const EmbeddingStore& store,
                             std::size_t min_examples = kDefaultMinExamples);
LoadedConcepts load_concepts(const std::filesystem::path& path, const EmbeddingStore& store,
                             std::size_t min_examples = kDefaultMinExamples);
void write_concepts(std::ostream& out, const ConceptCatalog& catalog);

struct SplitRatios {
  double train = 0.7;
  double validation = 0.1;
  double test = 0.2;
};

struct ConceptSplit {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
};

/// Deterministic split of one concept's examples. The result depends only on
/// the set of ids, the seed and the concept id: validation gets
/// floor(n * validation), test floor(n * test), train the remainder.
ConceptSplit split_concept(std::span<const std::string> example_ids, std::string_view concept_id,
                           std::uint64_t seed, const SplitRatios& ratios = {},
                           std::size_t min_examples = kDefaultMinExamples);

struct SplitAssignment {
  std::uint64_t seed = 0;
  std::map<std::string, ConceptSplit, std::less<>> concepts;

  const ConceptSplit& at(std::string_view concept_id) const;
};

SplitAssignment split_catalog(const ConceptCatalog& catalog, std::uint64_t seed,
                              const SplitRatios& ratios = {},
                              std::size_t min_examples = kDefaultMinExamples);

nlohmann::json splits_to_json(const SplitAssignment& splits);

}  // namespace conceptree
