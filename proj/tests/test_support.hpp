#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include "mft/corpus.hpp"
#include "mft/error.hpp"

namespace mft::testing {

/// Temporary directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::string pattern = (std::filesystem::temp_directory_path() / "mft-test-XXXXXX").string();
    if (mkdtemp(pattern.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
    path_ = pattern;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Collects warnings for the lifetime of the object.
class WarningCapture {
 public:
  WarningCapture() {
    previous_ = set_warning_handler([this](std::string_view m) { messages.emplace_back(m); });
  }
  ~WarningCapture() { set_warning_handler(std::move(previous_)); }

  std::vector<std::string> messages;

 private:
  WarningHandler previous_;
};

inline corpus::EmbeddingRecord make_record(std::string id, std::vector<double> emb, FoundationSet labels = {},
                                           DomainTag domain = DomainTag::kTwitter) {
  corpus::EmbeddingRecord r;
  r.id = std::move(id);
  r.embedding = std::move(emb);
  r.labels = labels;
  r.domain = domain;
  return r;
}

/// Label for `f` is the sign of coordinate 0; everything else is noise.
inline std::vector<corpus::EmbeddingRecord> separable_corpus(std::size_t n, std::size_t dim,
                                                             Foundation f, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<corpus::EmbeddingRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> e(dim);
    for (double& v : e) v = noise(rng);
    const bool positive = i % 2 == 0;
    e[0] = (positive ? 1.0 : -1.0) * (0.5 + std::abs(noise(rng)));
    FoundationSet labels;
    if (positive) labels.insert(f);
    out.push_back(make_record("r" + std::to_string(i), std::move(e), labels));
  }
  return out;
}

/// Two domains: coordinate 1 encodes the domain (+-shift plus noise), coordinate 0 the label for f.
inline std::vector<corpus::EmbeddingRecord> two_domain_corpus(std::size_t n, std::size_t dim, Foundation f,
                                                              std::uint64_t seed, double shift = 2.0,
                                                              double domain_noise = 0.5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  std::vector<corpus::EmbeddingRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> e(dim);
    for (double& v : e) v = noise(rng);
    const bool positive = coin(rng);
    const bool reddit = coin(rng);
    e[0] = (positive ? 1.0 : -1.0) * (0.5 + std::abs(noise(rng)));
    e[1] = (reddit ? 1.0 : -1.0) * shift + domain_noise * noise(rng);
    FoundationSet labels;
    if (positive) labels.insert(f);
    out.push_back(make_record("d" + std::to_string(i), std::move(e), labels,
                              reddit ? DomainTag::kReddit : DomainTag::kTwitter));
  }
  return out;
}

}  // namespace mft::testing
