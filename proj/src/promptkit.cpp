#include "mft/promptkit.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <random>

#include "json.hpp"
#include "mft/error.hpp"

namespace mft::prompt {

using nlohmann::json;

DescriptionTable default_descriptions() {
  DescriptionTable t;
  t.text = {
      "kindness, compassion, nurturing and shielding the vulnerable from suffering",
      "cruelty, violence, and deliberately inflicting pain or suffering on others",
      "justice, equality, reciprocity and equal treatment under shared rules",
      "injustice, fraud, exploitation and taking more than one's fair share",
      "solidarity, patriotism, devotion and self-sacrifice for one's group",
      "treachery, disloyalty, and abandoning or turning against one's own group",
      "respect for tradition, legitimate leadership, duty and social order",
      "rebellion, defiance of leaders, and disrespect for tradition and hierarchy",
      "sanctity, chastity, spiritual cleanliness and living in an elevated, noble way",
      "impurity, contamination, disgust and debasement of the body or spirit",
  };
  return t;
}

DescriptionTable load_descriptions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kSchema, path.string() + ": expected an object");
  DescriptionTable t;
  for (auto f : kAllFoundations) {
    const std::string key(to_string(f));
    if (!j.contains(key) || !j.at(key).is_string() || j.at(key).get<std::string>().empty()) {
      throw Error(ErrorCode::kSchema, path.string() + ": missing description for '" + key + "'");
    }
    t.text[index_of(f)] = j.at(key).get<std::string>();
  }
  for (const auto& [key, _] : j.items()) {
    if (!foundation_from_string(key)) {
      throw Error(ErrorCode::kUnknownLabel, path.string() + ": unknown foundation '" + key + "'");
    }
  }
  return t;
}

namespace {

constexpr std::array<std::string_view, 9> kGenreNames = {
    "Rock", "Pop", "Country", "Hip Hop", "R&B", "Soul", "Folk", "Blues", "Jazz"};

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::string_view to_string(Genre g) { return kGenreNames[static_cast<std::size_t>(g)]; }

std::optional<Genre> genre_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kGenreNames.size(); ++i) {
    if (kGenreNames[i] == name) return static_cast<Genre>(i);
  }
  return std::nullopt;
}

ArtistCatalog load_catalog(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  ArtistCatalog catalog;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) continue;
    const auto where = path.string() + ":" + std::to_string(line) + ": ";
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kParse, where + "malformed JSON: " + e.what());
    }
    if (!j.is_object() || !j.contains("artist") || !j.at("artist").is_string() ||
        !j.contains("genre") || !j.at("genre").is_string() || !j.contains("popularity") ||
        !j.at("popularity").is_number()) {
      throw Error(ErrorCode::kSchema, where + "expected {\"artist\",\"genre\",\"popularity\"}");
    }
    const auto genre_name = j.at("genre").get<std::string>();
    const auto genre = genre_from_string(genre_name);
    if (!genre) throw Error(ErrorCode::kSchema, where + "unknown genre '" + genre_name + "'");
    ArtistEntry entry{j.at("artist").get<std::string>(), *genre, j.at("popularity").get<double>()};
    if (entry.popularity < 0.0) throw Error(ErrorCode::kSchema, where + "popularity must be >= 0");
    catalog.push_back(std::move(entry));
  }
  return catalog;
}

void ComboWeights::validate() const {
  double sum = 0.0;
  for (double w : p) {
    if (!(w >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "combo weights must be >= 0");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorCode::kInvalidArgument, "combo weights must sum to 1");
}

ComboWeights combo_weights_from_annotations(std::span<const corpus::LabelRecord> annotations) {
  std::array<double, 3> counts{};
  for (const auto& a : annotations) {
    const auto n = a.labels.size();
    if (n >= 1 && n <= 3) counts[n - 1] += 1.0;
  }
  const double total = counts[0] + counts[1] + counts[2];
  ComboWeights w;
  if (total == 0.0) return w;
  for (std::size_t k = 0; k < 3; ++k) w.p[k] = counts[k] / total;
  return w;
}

GenerationPromptSpec sample_spec(const ArtistCatalog& catalog, const ComboWeights& weights,
                                 std::uint64_t seed) {
  if (catalog.empty()) throw Error(ErrorCode::kInvalidArgument, "sample_spec: empty artist catalog");
  weights.validate();
  std::mt19937_64 rng(seed);

  std::discrete_distribution<int> count_dist(weights.p.begin(), weights.p.end());
  const auto count = static_cast<std::size_t>(count_dist(rng)) + 1;

  std::vector<Foundation> pool(kAllFoundations.begin(), kAllFoundations.end());
  std::vector<Foundation> chosen;
  for (std::size_t k = 0; k < count; ++k) {
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    const auto i = pick(rng);
    chosen.push_back(pool[i]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(i));
  }
  std::sort(chosen.begin(), chosen.end());

  std::vector<double> popularity;
  popularity.reserve(catalog.size());
  for (const auto& a : catalog) popularity.push_back(a.popularity);
  if (std::accumulate(popularity.begin(), popularity.end(), 0.0) <= 0.0) {
    std::fill(popularity.begin(), popularity.end(), 1.0);
  }
  std::discrete_distribution<std::size_t> artist_dist(popularity.begin(), popularity.end());

  GenerationPromptSpec spec;
  spec.foundations = std::move(chosen);
  spec.artist = catalog[artist_dist(rng)];
  spec.rendered = build_generation_prompt(spec, default_descriptions());
  return spec;
}

std::vector<GenerationPromptSpec> sample_specs(const ArtistCatalog& catalog,
                                               const ComboWeights& weights, std::size_t n,
                                               std::uint64_t seed) {
  std::vector<GenerationPromptSpec> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32)};
    std::array<std::uint32_t, 2> words{};
    seq.generate(words.begin(), words.end());
    out.push_back(sample_spec(catalog, weights, (std::uint64_t{words[1]} << 32) | words[0]));
  }
  return out;
}

namespace {

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

void check_slot(const std::string& slot, const char* name) {
  if (lowercase(slot).find("moral foundation") != std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("generation prompt: the ") + name + " slot may not mention moral foundations");
  }
}

}  // namespace

GenerationSlots generation_slots(const GenerationPromptSpec& spec, const DescriptionTable& descriptions) {
  if (spec.foundations.empty() || spec.foundations.size() > 3) {
    throw Error(ErrorCode::kInvalidArgument, "generation prompt: spec needs 1-3 foundations");
  }
  FoundationSet seen;
  std::vector<std::string> tags, descs;
  for (auto f : spec.foundations) {
    if (seen.contains(f)) throw Error(ErrorCode::kInvalidArgument, "generation prompt: duplicate foundation");
    seen.insert(f);
    if (descriptions.of(f).empty()) {
      throw Error(ErrorCode::kSchema,
                  "generation prompt: no description for '" + std::string(to_string(f)) + "'");
    }
    tags.push_back(display_name(f));
    descs.push_back(descriptions.of(f));
  }
  GenerationSlots slots{join(tags, ", "), join(descs, "; "), spec.artist.name};
  check_slot(slots.moral_tags, "moral tag");
  check_slot(slots.description_tags, "description");
  check_slot(slots.artist_tags, "artist");
  return slots;
}

std::string render_generation_prompt(const GenerationSlots& slots) {
  return "You are an assistant to a songwriter, you need to assist in writing lyrics related to "
         "the Moral foundations described in the Moral Foundation Theory. Given the " +
         slots.moral_tags + ", which represent " + slots.description_tags +
         ", write original lyrics of a song expressing these moral foundations. "
         "DO NOT directly mention these moral foundations. "
         "DO NOT explicitly talk about morality. "
         "Write it in the style of " + slots.artist_tags + ".";
}

std::string build_generation_prompt(const GenerationPromptSpec& spec, const DescriptionTable& descriptions) {
  return render_generation_prompt(generation_slots(spec, descriptions));
}

std::string build_classification_prompt(std::string_view lyrics, const DescriptionTable& descriptions) {
  if (lyrics.empty()) throw Error(ErrorCode::kInvalidArgument, "classification prompt: empty lyrics");
  std::vector<std::string> tags, explained;
  for (auto f : kAllFoundations) {
    tags.push_back(display_name(f));
    explained.push_back(display_name(f) + ": " + descriptions.of(f));
  }
  std::string out =
      "You will be provided with song lyrics. The song lyrics will be delimited with #### "
      "characters. Classify each lyric into 10 Possible Moral Foundations as defined in Moral "
      "Foundation Theory The available Moral Foundations are: " +
      join(tags, ", ") +
      ".\nThe explanation of the moral foundations is as follows:\n" + join(explained, "\n") +
      ".\nThis is a multi-label classification problem: where it's possible to assign one or "
      "multiple categories simultaneously. Report the results in JSON format such that the keys "
      "of the correct moral values are reported in a list.\n\n####\n";
  out += lyrics;
  out += "\n####";
  return out;
}

namespace {

std::string_view strip_fences(std::string_view raw) {
  auto trim = [](std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  };
  raw = trim(raw);
  if (raw.starts_with("```")) {
    const auto nl = raw.find('\n');
    raw = nl == std::string_view::npos ? std::string_view{} : raw.substr(nl + 1);
    if (raw.ends_with("```")) raw.remove_suffix(3);
    raw = trim(raw);
  }
  return raw;
}

}  // namespace

FoundationSet parse_classification_response(std::string_view raw) {
  json j;
  try {
    j = json::parse(strip_fences(raw));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string("classification response is not JSON: ") + e.what());
  }
  const json* list = nullptr;
  if (j.is_array()) {
    list = &j;
  } else if (j.is_object()) {
    for (const auto& [key, value] : j.items()) {
      if (!value.is_array()) continue;
      if (list) throw Error(ErrorCode::kParse, "classification response has several array fields");
      list = &value;
    }
  }
  if (!list) throw Error(ErrorCode::kParse, "classification response holds no label list");

  FoundationSet labels;
  for (const auto& item : *list) {
    if (!item.is_string()) throw Error(ErrorCode::kParse, "classification labels must be strings");
    const auto token = item.get<std::string>();
    const auto f = foundation_from_string_loose(token);
    if (!f) throw Error(ErrorCode::kUnknownLabel, "unknown foundation label '" + token + "'");
    labels.insert(*f);
  }
  return labels;
}

std::string render_label_list(const FoundationSet& labels) {
  json arr = json::array();
  for (auto f : labels.to_vector()) arr.push_back(to_string(f));
  return arr.dump();
}

}  // namespace mft::prompt
