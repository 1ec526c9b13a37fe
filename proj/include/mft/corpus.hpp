#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mft/foundation.hpp"

namespace mft::corpus {

inline constexpr std::string_view kSchema = "mft-embed/1";
inline constexpr std::size_t kDefaultDim = 768;

struct EmbeddingRecord {
  std::string id;
  std::optional<std::string> text_digest;
  DomainTag domain = DomainTag::kTwitter;
  FoundationSet labels;
  std::vector<double> embedding;

  bool is_positive(Foundation f) const { return labels.contains(f); }
};

/// Reads a corpus JSONL file. Line 1 must be {"schema":"mft-embed/1","dim":N}
/// with N == expected_dim. Errors carry the 1-based line number.
std::vector<EmbeddingRecord> load_jsonl(const std::filesystem::path& path,
                                        std::size_t expected_dim);
/// Same as load_jsonl but takes the dimension from the header.
std::vector<EmbeddingRecord> load_jsonl(const std::filesystem::path& path);

void save_jsonl(const std::filesystem::path& path,
                std::span<const EmbeddingRecord> records, std::size_t dim);

/// Label-only view used for gold files and annotator files. Accepts either a
/// corpus file (header skipped, embeddings ignored) or bare {"id","labels"}
/// lines.
struct LabelRecord {
  std::string id;
  FoundationSet labels;
};
std::vector<LabelRecord> load_labels(const std::filesystem::path& path);

struct ClassWeights {
  double negative = 0.0;
  double positive = 0.0;
  bool degenerate = false;  // one class absent
};

/// weight_c = (N - N_c) / N for the positive and negative class of f.
ClassWeights class_weights(std::span<const EmbeddingRecord> records, Foundation f);

struct SplitFractions {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
  bool operator==(const SplitFractions&) const = default;
};

struct SplitAssignment {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
  std::uint64_t seed = 0;
};

/// Split sizes follow largest-remainder rounding of N * fraction; positives
/// for f are spread across the splits in proportion to split size.
SplitAssignment stratified_split(std::span<const EmbeddingRecord> records,
                                 SplitFractions fractions, Foundation f,
                                 std::uint64_t seed);

struct CorpusStats {
  std::size_t total = 0;
  std::array<std::size_t, kNumFoundations> per_foundation_positive{};
  double neutral_fraction = 0.0;
  std::map<DomainTag, std::size_t> per_domain;
};

CorpusStats corpus_stats(std::span<const EmbeddingRecord> records);

/// Distinct domains present, in enumeration order. Index in this list is the
/// domain class used by the adversarial head.
std::vector<DomainTag> domains_present(std::span<const EmbeddingRecord> records);

}  // namespace mft::corpus
