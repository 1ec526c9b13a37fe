#pragma once

#include <array>
#include <bitset>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mft {

// The five virtue/vice pairs. Order is canonical everywhere (files, reports).
enum class Foundation : std::uint8_t {
  kCare,
  kHarm,
  kFairness,
  kCheating,
  kLoyalty,
  kBetrayal,
  kAuthority,
  kSubversion,
  kPurity,
  kDegradation,
};

inline constexpr std::size_t kNumFoundations = 10;

inline constexpr std::array<Foundation, kNumFoundations> kAllFoundations = {
    Foundation::kCare,      Foundation::kHarm,       Foundation::kFairness,
    Foundation::kCheating,  Foundation::kLoyalty,    Foundation::kBetrayal,
    Foundation::kAuthority, Foundation::kSubversion, Foundation::kPurity,
    Foundation::kDegradation};

std::string_view to_string(Foundation f);
/// Case-sensitive canonical lookup ("care", "harm", ...).
std::optional<Foundation> foundation_from_string(std::string_view name);
/// Case-insensitive lookup, tolerant of surrounding whitespace.
std::optional<Foundation> foundation_from_string_loose(std::string_view name);
/// "Care", "Harm", ... as used in prompt tag lists.
std::string display_name(Foundation f);

bool is_virtue(Foundation f);
Foundation paired(Foundation f);

inline std::size_t index_of(Foundation f) { return static_cast<std::size_t>(f); }

/// Set of foundations; the empty set is a neutral instance.
class FoundationSet {
 public:
  FoundationSet() = default;
  FoundationSet(std::initializer_list<Foundation> fs) {
    for (auto f : fs) insert(f);
  }

  void insert(Foundation f) { bits_.set(index_of(f)); }
  void erase(Foundation f) { bits_.reset(index_of(f)); }
  bool contains(Foundation f) const { return bits_.test(index_of(f)); }
  bool empty() const { return bits_.none(); }
  std::size_t size() const { return bits_.count(); }

  std::vector<Foundation> to_vector() const;

  bool operator==(const FoundationSet&) const = default;

 private:
  std::bitset<kNumFoundations> bits_;
};

enum class DomainTag : std::uint8_t {
  kTwitter,
  kReddit,
  kFacebook,
  kSyntheticLyrics,
  kRealLyrics,
};

inline constexpr std::size_t kNumDomainTags = 5;

std::string_view to_string(DomainTag d);
std::optional<DomainTag> domain_from_string(std::string_view name);

}  // namespace mft
