#include "mft/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "mft/error.hpp"

namespace mft::corpus {

using nlohmann::json;

namespace {

std::string at_line(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

json parse_line(const std::string& text, const std::filesystem::path& path,
                std::size_t line) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, at_line(path, line) + "malformed JSON: " + e.what());
  }
}

FoundationSet parse_labels(const json& obj, const std::filesystem::path& path,
                           std::size_t line) {
  FoundationSet labels;
  if (!obj.contains("labels")) return labels;
  const auto& arr = obj.at("labels");
  if (!arr.is_array()) {
    throw Error(ErrorCode::kSchema, at_line(path, line) + "'labels' must be an array");
  }
  for (const auto& item : arr) {
    if (!item.is_string()) {
      throw Error(ErrorCode::kSchema, at_line(path, line) + "label entries must be strings");
    }
    const auto name = item.get<std::string>();
    auto f = foundation_from_string(name);
    if (!f) {
      throw Error(ErrorCode::kUnknownLabel,
                  at_line(path, line) + "unknown foundation '" + name + "'");
    }
    labels.insert(*f);
  }
  return labels;
}

std::string require_string(const json& obj, const char* key,
                           const std::filesystem::path& path, std::size_t line) {
  if (!obj.contains(key) || !obj.at(key).is_string()) {
    throw Error(ErrorCode::kSchema,
                at_line(path, line) + "missing or non-string field '" + key + "'");
  }
  return obj.at(key).get<std::string>();
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return in;
}

std::vector<EmbeddingRecord> load_impl(const std::filesystem::path& path,
                                       std::optional<std::size_t> expected_dim) {
  auto in = open_input(path);
  std::string text;
  if (!std::getline(in, text)) {
    throw Error(ErrorCode::kSchema, at_line(path, 1) + "missing schema header");
  }
  const json header = parse_line(text, path, 1);
  if (!header.is_object() || header.value("schema", "") != kSchema ||
      !header.contains("dim") || !header.at("dim").is_number_unsigned()) {
    throw Error(ErrorCode::kSchema, at_line(path, 1) +
                                        "header must be {\"schema\":\"mft-embed/1\",\"dim\":<int>}");
  }
  const auto dim = header.at("dim").get<std::size_t>();
  if (dim == 0) throw Error(ErrorCode::kSchema, at_line(path, 1) + "dim must be positive");
  if (expected_dim && dim != *expected_dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                at_line(path, 1) + "header dim " + std::to_string(dim) + " != expected " +
                    std::to_string(*expected_dim));
  }

  std::vector<EmbeddingRecord> records;
  std::unordered_set<std::string> seen;
  std::size_t line = 1;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) continue;
    const json obj = parse_line(text, path, line);
    if (!obj.is_object()) throw Error(ErrorCode::kSchema, at_line(path, line) + "record must be an object");

    EmbeddingRecord rec;
    rec.id = require_string(obj, "id", path, line);
    if (!seen.insert(rec.id).second) {
      throw Error(ErrorCode::kDuplicateId, at_line(path, line) + "duplicate id '" + rec.id + "'");
    }
    if (obj.contains("text_digest") && !obj.at("text_digest").is_null()) {
      rec.text_digest = require_string(obj, "text_digest", path, line);
    }
    const auto domain_name = require_string(obj, "domain", path, line);
    auto domain = domain_from_string(domain_name);
    if (!domain) {
      throw Error(ErrorCode::kUnknownLabel,
                  at_line(path, line) + "unknown domain '" + domain_name + "'");
    }
    rec.domain = *domain;
    rec.labels = parse_labels(obj, path, line);

    if (!obj.contains("embedding") || !obj.at("embedding").is_array()) {
      throw Error(ErrorCode::kSchema, at_line(path, line) + "record '" + rec.id + "' has no embedding array");
    }
    const auto& emb = obj.at("embedding");
    if (emb.size() != dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  at_line(path, line) + "record '" + rec.id + "' has " +
                      std::to_string(emb.size()) + " values, expected " + std::to_string(dim));
    }
    rec.embedding.reserve(dim);
    for (const auto& v : emb) {
      if (!v.is_number()) {
        throw Error(ErrorCode::kSchema, at_line(path, line) + "record '" + rec.id + "' has a non-numeric embedding value");
      }
      rec.embedding.push_back(v.get<double>());
    }
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace

std::vector<EmbeddingRecord> load_jsonl(const std::filesystem::path& path,
                                        std::size_t expected_dim) {
  return load_impl(path, expected_dim);
}

std::vector<EmbeddingRecord> load_jsonl(const std::filesystem::path& path) {
  return load_impl(path, std::nullopt);
}

void save_jsonl(const std::filesystem::path& path, std::span<const EmbeddingRecord> records,
                std::size_t dim) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << json{{"schema", kSchema}, {"dim", dim}}.dump() << '\n';
  for (const auto& rec : records) {
    if (rec.embedding.size() != dim) {
      throw Error(ErrorCode::kDimensionMismatch, "record '" + rec.id + "' does not match dim");
    }
    json obj;
    obj["id"] = rec.id;
    if (rec.text_digest) obj["text_digest"] = *rec.text_digest;
    obj["domain"] = to_string(rec.domain);
    json labels = json::array();
    for (auto f : rec.labels.to_vector()) labels.push_back(to_string(f));
    obj["labels"] = std::move(labels);
    obj["embedding"] = rec.embedding;
    out << obj.dump() << '\n';
  }
}

std::vector<LabelRecord> load_labels(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<LabelRecord> out;
  std::unordered_set<std::string> seen;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) continue;
    const json obj = parse_line(text, path, line);
    if (!obj.is_object()) throw Error(ErrorCode::kSchema, at_line(path, line) + "expected an object");
    if (obj.contains("schema")) continue;
    LabelRecord rec;
    rec.id = require_string(obj, "id", path, line);
    if (!seen.insert(rec.id).second) {
      throw Error(ErrorCode::kDuplicateId, at_line(path, line) + "duplicate id '" + rec.id + "'");
    }
    rec.labels = parse_labels(obj, path, line);
    out.push_back(std::move(rec));
  }
  return out;
}

ClassWeights class_weights(std::span<const EmbeddingRecord> records, Foundation f) {
  if (records.empty()) throw Error(ErrorCode::kInvalidArgument, "class_weights: empty corpus");
  const auto n = static_cast<double>(records.size());
  const auto positives = static_cast<double>(
      std::count_if(records.begin(), records.end(),
                    [f](const EmbeddingRecord& r) { return r.is_positive(f); }));
  const double negatives = n - positives;
  ClassWeights w;
  w.positive = (n - positives) / n;
  w.negative = (n - negatives) / n;
  if (positives == 0.0 || negatives == 0.0) {
    w.degenerate = true;
    warn("class_weights: foundation '" + std::string(to_string(f)) +
         "' has only one class present; the absent class gets weight 0");
  }
  return w;
}

namespace {

// Largest-remainder apportionment of `total` by `shares` (sum 1). Ties go to
// the lower index.
std::array<std::size_t, 3> apportion(std::size_t total, const std::array<double, 3>& shares) {
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainders{};
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    const double exact = static_cast<double>(total) * shares[k];
    counts[k] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    remainders[k] = exact - static_cast<double>(counts[k]);
    assigned += counts[k];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
  for (std::size_t i = 0; assigned < total; i = (i + 1) % 3) {
    ++counts[order[i]];
    ++assigned;
  }
  while (assigned > total) {
    for (std::size_t k = 3; k-- > 0 && assigned > total;) {
      if (counts[k] > 0) {
        --counts[k];
        --assigned;
      }
    }
  }
  return counts;
}

}  // namespace

SplitAssignment stratified_split(std::span<const EmbeddingRecord> records,
                                 SplitFractions fractions, Foundation f, std::uint64_t seed) {
  const std::array<double, 3> shares{fractions.train, fractions.validation, fractions.test};
  for (double s : shares) {
    if (!(s >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "split fractions must be >= 0");
  }
  if (std::abs(shares[0] + shares[1] + shares[2] - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidArgument, "split fractions must sum to 1");
  }
  if (records.size() < 3) {
    throw Error(ErrorCode::kInvalidArgument, "stratified_split needs at least 3 records");
  }

  const auto sizes = apportion(records.size(), shares);
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < records.size(); ++i) {
    (records[i].is_positive(f) ? pos : neg).push_back(i);
  }

  std::array<double, 3> size_shares{};
  for (std::size_t k = 0; k < 3; ++k) {
    size_shares[k] = static_cast<double>(sizes[k]) / static_cast<double>(records.size());
  }
  auto pos_counts = apportion(pos.size(), size_shares);
  // Rounding can push a split's positive quota past its size; move the excess.
  for (std::size_t k = 0; k < 3; ++k) {
    while (pos_counts[k] > sizes[k]) {
      --pos_counts[k];
      for (std::size_t j = 0; j < 3; ++j) {
        if (pos_counts[j] < sizes[j] && j != k) {
          ++pos_counts[j];
          break;
        }
      }
    }
  }

  std::mt19937_64 rng(seed);
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);

  std::vector<int> which(records.size(), 0);
  std::size_t pi = 0, ni = 0;
  for (int k = 0; k < 3; ++k) {
    for (std::size_t c = 0; c < pos_counts[k]; ++c) which[pos[pi++]] = k;
    for (std::size_t c = 0; c < sizes[k] - pos_counts[k]; ++c) which[neg[ni++]] = k;
  }

  SplitAssignment out;
  out.seed = seed;
  std::array<std::vector<std::string>*, 3> lists{&out.train, &out.validation, &out.test};
  for (std::size_t i = 0; i < records.size(); ++i) lists[which[i]]->push_back(records[i].id);

  constexpr std::array<const char*, 3> names{"train", "validation", "test"};
  for (std::size_t k = 0; k < 3; ++k) {
    if (shares[k] > 0.0 && sizes[k] == 0) {
      warn(std::string("stratified_split: ") + names[k] + " fraction rounds to zero records");
    }
  }
  return out;
}

CorpusStats corpus_stats(std::span<const EmbeddingRecord> records) {
  CorpusStats s;
  s.total = records.size();
  std::size_t neutral = 0;
  for (const auto& r : records) {
    if (r.labels.empty()) ++neutral;
    for (auto f : kAllFoundations) {
      if (r.labels.contains(f)) ++s.per_foundation_positive[index_of(f)];
    }
    ++s.per_domain[r.domain];
  }
  s.neutral_fraction =
      s.total == 0 ? 0.0 : static_cast<double>(neutral) / static_cast<double>(s.total);
  return s;
}

std::vector<DomainTag> domains_present(std::span<const EmbeddingRecord> records) {
  std::array<bool, kNumDomainTags> seen{};
  for (const auto& r : records) seen[static_cast<std::size_t>(r.domain)] = true;
  std::vector<DomainTag> out;
  for (std::size_t i = 0; i < kNumDomainTags; ++i) {
    if (seen[i]) out.push_back(static_cast<DomainTag>(i));
  }
  return out;
}

}  // namespace mft::corpus
