#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mft/corpus.hpp"
#include "mft/foundation.hpp"

namespace mft::prompt {

/// One short description per foundation, indexed by Foundation.
struct DescriptionTable {
  std::array<std::string, kNumFoundations> text;

  const std::string& of(Foundation f) const { return text[index_of(f)]; }
};

DescriptionTable default_descriptions();
/// JSON object {"care": "...", ...}; every foundation must be present.
DescriptionTable load_descriptions(const std::filesystem::path& path);

enum class Genre { kRock, kPop, kCountry, kHipHop, kRnB, kSoul, kFolk, kBlues, kJazz };

std::string_view to_string(Genre g);
std::optional<Genre> genre_from_string(std::string_view name);

struct ArtistEntry {
  std::string name;
  Genre genre = Genre::kPop;
  double popularity = 0.0;
  bool operator==(const ArtistEntry&) const = default;
};

using ArtistCatalog = std::vector<ArtistEntry>;

/// JSONL lines {"artist": ..., "genre": ..., "popularity": ...}.
ArtistCatalog load_catalog(const std::filesystem::path& path);

/// Probability of a lyric carrying 1, 2 or 3 foundations.
struct ComboWeights {
  std::array<double, 3> p{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  void validate() const;
};

/// Empirical 1/2/3 distribution over annotated songs carrying 1-3 labels;
/// uniform when no such song exists.
ComboWeights combo_weights_from_annotations(std::span<const corpus::LabelRecord> annotations);

struct GenerationPromptSpec {
  std::vector<Foundation> foundations;  // canonical order, 1-3 entries, no repeats
  ArtistEntry artist;
  std::string rendered;
  bool operator==(const GenerationPromptSpec&) const = default;
};

/// Draws the foundation count from weights, the foundations without
/// replacement, then an artist weighted by popularity.
GenerationPromptSpec sample_spec(const ArtistCatalog& catalog, const ComboWeights& weights,
                                 std::uint64_t seed);

/// n specs; spec i is sample_spec(..., stream seed derived from (seed, i)).
std::vector<GenerationPromptSpec> sample_specs(const ArtistCatalog& catalog,
                                               const ComboWeights& weights, std::size_t n,
                                               std::uint64_t seed);

/// The three substitutable slots of the generation template.
struct GenerationSlots {
  std::string moral_tags;
  std::string description_tags;
  std::string artist_tags;
};

GenerationSlots generation_slots(const GenerationPromptSpec& spec, const DescriptionTable& descriptions);
std::string render_generation_prompt(const GenerationSlots& slots);
std::string build_generation_prompt(const GenerationPromptSpec& spec, const DescriptionTable& descriptions);

std::string build_classification_prompt(std::string_view lyrics, const DescriptionTable& descriptions);

/// Accepts a JSON array of foundation names, or an object whose single
/// array-valued field holds them. Markdown code fences are stripped.
FoundationSet parse_classification_response(std::string_view raw);

/// ["care","loyalty"] for the set; inverse of the parser.
std::string render_label_list(const FoundationSet& labels);

}  // namespace mft::prompt
