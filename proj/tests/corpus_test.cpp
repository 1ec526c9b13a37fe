#include <fstream>
#include <set>

#include "doctest.h"
#include "mft/corpus.hpp"
#include "test_support.hpp"

using namespace mft;
using namespace mft::corpus;
using mft::testing::make_record;

namespace {

void write(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

std::vector<EmbeddingRecord> with_positives(std::size_t n, std::size_t positives, Foundation f) {
  std::vector<EmbeddingRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    FoundationSet labels;
    if (i < positives) labels.insert(f);
    out.push_back(make_record("r" + std::to_string(i), {0.0}, labels));
  }
  return out;
}

}  // namespace

TEST_CASE("foundation names are bijective with the enumeration") {
  std::set<std::string_view> names;
  for (auto f : kAllFoundations) {
    names.insert(to_string(f));
    CHECK(foundation_from_string(to_string(f)) == f);
    CHECK(is_virtue(f) != is_virtue(paired(f)));
    CHECK(paired(paired(f)) == f);
  }
  CHECK(names.size() == 10);
  CHECK_FALSE(foundation_from_string("Care").has_value());
  CHECK(foundation_from_string_loose(" Care ") == Foundation::kCare);
}

TEST_CASE("load_jsonl reads a minimal file") {
  testing::TempDir dir;
  write(dir / "c.jsonl",
        "{\"schema\":\"mft-embed/1\",\"dim\":4}\n"
        "{\"id\":\"a\",\"domain\":\"twitter\",\"labels\":[\"care\"],\"embedding\":[1,2,3,4]}\n");
  const auto recs = load_jsonl(dir / "c.jsonl", 4);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].id == "a");
  CHECK(recs[0].labels == FoundationSet{Foundation::kCare});
  CHECK(recs[0].embedding == std::vector<double>{1, 2, 3, 4});
  CHECK_FALSE(recs[0].text_digest.has_value());
}

TEST_CASE("load_jsonl rejects contract violations") {
  testing::TempDir dir;
  const std::string header = "{\"schema\":\"mft-embed/1\",\"dim\":4}\n";

  SUBCASE("short vector names the id") {
    write(dir / "c.jsonl", header + "{\"id\":\"short-one\",\"domain\":\"twitter\",\"labels\":[],\"embedding\":[1,2,3]}\n");
    try {
      load_jsonl(dir / "c.jsonl", 4);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kDimensionMismatch);
      CHECK(std::string(e.what()).find("short-one") != std::string::npos);
    }
  }
  SUBCASE("malformed line reports its line number") {
    write(dir / "c.jsonl", header + "{\"id\":\"a\",\"domain\":\"twitter\",\"embedding\":[1,2,3,4]}\n{not json\n");
    try {
      load_jsonl(dir / "c.jsonl", 4);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kParse);
      CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }
  }
  SUBCASE("duplicate id") {
    const std::string rec = "{\"id\":\"a\",\"domain\":\"twitter\",\"embedding\":[1,2,3,4]}\n";
    write(dir / "c.jsonl", header + rec + rec);
    CHECK_THROWS_AS(load_jsonl(dir / "c.jsonl", 4), Error);
  }
  SUBCASE("unknown domain") {
    write(dir / "c.jsonl", header + "{\"id\":\"a\",\"domain\":\"myspace\",\"embedding\":[1,2,3,4]}\n");
    CHECK_THROWS_WITH_AS(load_jsonl(dir / "c.jsonl", 4), doctest::Contains("myspace"), Error);
  }
  SUBCASE("unknown foundation") {
    write(dir / "c.jsonl", header + "{\"id\":\"a\",\"domain\":\"reddit\",\"labels\":[\"kindness\"],\"embedding\":[1,2,3,4]}\n");
    CHECK_THROWS_WITH_AS(load_jsonl(dir / "c.jsonl", 4), doctest::Contains("kindness"), Error);
  }
  SUBCASE("header dim differs from expected") {
    write(dir / "c.jsonl", header);
    CHECK_THROWS_AS(load_jsonl(dir / "c.jsonl", 768), Error);
  }
  SUBCASE("missing header") {
    write(dir / "c.jsonl", "{\"id\":\"a\",\"domain\":\"twitter\",\"embedding\":[1,2,3,4]}\n");
    CHECK_THROWS_AS(load_jsonl(dir / "c.jsonl", 4), Error);
  }
}

TEST_CASE("save_jsonl then load_jsonl is the identity") {
  testing::TempDir dir;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  std::uniform_int_distribution<int> label_bits(0, 1023);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<EmbeddingRecord> recs;
    for (int i = 0; i < 15; ++i) {
      std::vector<double> e(6);
      for (double& v : e) v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 20) - 10);
      FoundationSet labels;
      const int bits = label_bits(rng);
      for (auto f : kAllFoundations) {
        if (bits & (1 << index_of(f))) labels.insert(f);
      }
      auto r = make_record("t" + std::to_string(trial) + "-" + std::to_string(i), e, labels,
                           static_cast<DomainTag>(rng() % kNumDomainTags));
      if (i % 3 == 0) r.text_digest = "abc" + std::to_string(i);
      recs.push_back(std::move(r));
    }
    save_jsonl(dir / "rt.jsonl", recs, 6);
    const auto back = load_jsonl(dir / "rt.jsonl", 6);
    REQUIRE(back.size() == recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
      CHECK(back[i].id == recs[i].id);
      CHECK(back[i].labels == recs[i].labels);
      CHECK(back[i].domain == recs[i].domain);
      CHECK(back[i].text_digest == recs[i].text_digest);
      CHECK(back[i].embedding == recs[i].embedding);
    }
  }
}

TEST_CASE("load_labels accepts corpus files and bare label files") {
  testing::TempDir dir;
  write(dir / "c.jsonl",
        "{\"schema\":\"mft-embed/1\",\"dim\":1}\n"
        "{\"id\":\"a\",\"domain\":\"twitter\",\"labels\":[\"care\",\"harm\"],\"embedding\":[1]}\n");
  write(dir / "l.jsonl", "{\"id\":\"a\",\"labels\":[\"purity\"]}\n{\"id\":\"b\",\"labels\":[]}\n");
  const auto c = load_labels(dir / "c.jsonl");
  REQUIRE(c.size() == 1);
  CHECK(c[0].labels == FoundationSet{Foundation::kCare, Foundation::kHarm});
  const auto l = load_labels(dir / "l.jsonl");
  REQUIRE(l.size() == 2);
  CHECK(l[1].labels.empty());
}

TEST_CASE("class_weights follow (N - N_c) / N") {
  const auto f = Foundation::kLoyalty;
  {
    const auto w = class_weights(with_positives(100, 25, f), f);
    CHECK(w.negative == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(w.positive == doctest::Approx(0.75).epsilon(1e-15));
    CHECK_FALSE(w.degenerate);
  }
  {
    const auto w = class_weights(with_positives(100, 50, f), f);
    CHECK(w.negative == 0.5);
    CHECK(w.positive == 0.5);
  }
  {
    testing::WarningCapture warnings;
    const auto w = class_weights(with_positives(100, 0, f), f);
    CHECK(w.negative == 0.0);
    CHECK(w.positive == 1.0);
    CHECK(w.degenerate);
    CHECK(warnings.messages.size() == 1);
  }
  CHECK_THROWS_AS(class_weights(std::vector<EmbeddingRecord>{}, f), Error);

  for (std::size_t p = 1; p < 100; p += 7) {
    const auto w = class_weights(with_positives(100, p, f), f);
    CHECK(w.negative + w.positive == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("stratified_split rounding, determinism and partition") {
  const auto f = Foundation::kCare;
  const auto recs = with_positives(10, 3, f);
  const auto a = stratified_split(recs, {0.8, 0.1, 0.1}, f, 7);
  CHECK(a.train.size() == 8);
  CHECK(a.validation.size() == 1);
  CHECK(a.test.size() == 1);
  const auto b = stratified_split(recs, {0.8, 0.1, 0.1}, f, 7);
  CHECK(a.train == b.train);
  CHECK(a.validation == b.validation);
  CHECK(a.test == b.test);

  CHECK_THROWS_AS(stratified_split(with_positives(2, 1, f), {0.8, 0.1, 0.1}, f, 0), Error);
  CHECK_THROWS_AS(stratified_split(recs, {0.8, 0.1, 0.2}, f, 0), Error);
  CHECK_THROWS_AS(stratified_split(recs, {1.2, -0.1, -0.1}, f, 0), Error);

  testing::WarningCapture warnings;
  const auto c = stratified_split(with_positives(5, 2, f), {0.9, 0.05, 0.05}, f, 1);
  CHECK(c.validation.size() + c.test.size() <= 1);
  CHECK_FALSE(warnings.messages.empty());
}

TEST_CASE("stratified_split partitions the corpus for every seed") {
  const auto f = Foundation::kAuthority;
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 3 + rng() % 200;
    const std::size_t pos = rng() % (n + 1);
    const auto recs = with_positives(n, pos, f);
    const double t = 0.5 + 0.4 * static_cast<double>(rng() % 100) / 100.0;
    const double v = (1.0 - t) / 2.0;
    const auto s = stratified_split(recs, {t, v, 1.0 - t - v}, f, rng());
    std::multiset<std::string> all(s.train.begin(), s.train.end());
    all.insert(s.validation.begin(), s.validation.end());
    all.insert(s.test.begin(), s.test.end());
    CHECK(all.size() == n);
    std::set<std::string> unique(all.begin(), all.end());
    CHECK(unique.size() == n);
  }
}

TEST_CASE("stratified_split keeps positive rate within two points") {
  const auto f = Foundation::kFairness;
  std::mt19937_64 rng(2024);
  std::bernoulli_distribution positive(0.3);
  std::vector<EmbeddingRecord> recs;
  for (int i = 0; i < 10000; ++i) {
    FoundationSet labels;
    if (positive(rng)) labels.insert(f);
    recs.push_back(make_record("s" + std::to_string(i), {0.0}, labels));
  }
  std::set<std::string> pos_ids;
  for (const auto& r : recs) {
    if (r.is_positive(f)) pos_ids.insert(r.id);
  }
  const auto s = stratified_split(recs, {0.8, 0.1, 0.1}, f, 99);
  for (const auto* part : {&s.train, &s.validation, &s.test}) {
    std::size_t p = 0;
    for (const auto& id : *part) p += pos_ids.count(id);
    const double rate = static_cast<double>(p) / static_cast<double>(part->size());
    CHECK(rate >= 0.28);
    CHECK(rate <= 0.32);
  }
}

TEST_CASE("corpus_stats counts") {
  std::vector<EmbeddingRecord> recs{make_record("a", {0.0}, {Foundation::kCare}),
                                    make_record("b", {0.0}, {}, DomainTag::kReddit)};
  const auto s = corpus_stats(recs);
  CHECK(s.total == 2);
  CHECK(s.per_foundation_positive[index_of(Foundation::kCare)] == 1);
  CHECK(s.neutral_fraction == 0.5);
  CHECK(s.per_domain.at(DomainTag::kTwitter) == 1);
  CHECK(s.per_domain.at(DomainTag::kReddit) == 1);

  const auto empty = corpus_stats(std::vector<EmbeddingRecord>{});
  CHECK(empty.total == 0);
  CHECK(empty.neutral_fraction == 0.0);

  CHECK(domains_present(recs) == std::vector<DomainTag>{DomainTag::kTwitter, DomainTag::kReddit});
}
