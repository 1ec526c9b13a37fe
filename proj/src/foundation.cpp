#include "mft/foundation.hpp"

#include <algorithm>
#include <cctype>

namespace mft {

namespace {

constexpr std::array<std::string_view, kNumFoundations> kFoundationNames = {
    "care",      "harm",       "fairness", "cheating", "loyalty",
    "betrayal",  "authority",  "subversion", "purity", "degradation"};

constexpr std::array<std::string_view, kNumDomainTags> kDomainNames = {
    "twitter", "reddit", "facebook", "synthetic_lyrics", "real_lyrics"};

}  // namespace

std::string_view to_string(Foundation f) { return kFoundationNames[index_of(f)]; }

std::optional<Foundation> foundation_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kNumFoundations; ++i) {
    if (kFoundationNames[i] == name) return static_cast<Foundation>(i);
  }
  return std::nullopt;
}

std::optional<Foundation> foundation_from_string_loose(std::string_view name) {
  while (!name.empty() && std::isspace(static_cast<unsigned char>(name.front()))) name.remove_prefix(1);
  while (!name.empty() && std::isspace(static_cast<unsigned char>(name.back()))) name.remove_suffix(1);
  std::string lowered(name);
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return foundation_from_string(lowered);
}

std::string display_name(Foundation f) {
  std::string name(to_string(f));
  name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
  return name;
}

bool is_virtue(Foundation f) { return index_of(f) % 2 == 0; }

Foundation paired(Foundation f) {
  return static_cast<Foundation>(index_of(f) ^ 1U);
}

std::vector<Foundation> FoundationSet::to_vector() const {
  std::vector<Foundation> out;
  for (auto f : kAllFoundations) {
    if (contains(f)) out.push_back(f);
  }
  return out;
}

std::string_view to_string(DomainTag d) { return kDomainNames[static_cast<std::size_t>(d)]; }

std::optional<DomainTag> domain_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kNumDomainTags; ++i) {
    if (kDomainNames[i] == name) return static_cast<DomainTag>(i);
  }
  return std::nullopt;
}

}  // namespace mft
