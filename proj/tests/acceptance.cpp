// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli_support.hpp"
#include "gradcheck.hpp"
#include "mft/checkpoint.hpp"
#include "mft/digest.hpp"
#include "mft/metrics.hpp"
#include "mft/promptkit.hpp"
#include "mft/trainer.hpp"
#include "test_support.hpp"

using namespace mft;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---- gradients --------------------------------------------------------------

Outcome gradient_correctness() {
  const auto t0 = Clock::now();
  model::ModelConfig c;
  c.embed_dim = 8;
  c.hidden_dim = 8;
  c.num_domains = 3;
  c.regularizers_enabled = true;
  c.init_seed = 21;
  const auto r = testing::check_model_gradients(model::init_params(c), testing::random_batch(4, 8, 3, 5),
                                                {0.35, 0.65}, c, 1e-4);
  const double secs = seconds_since(t0);
  return {r.max_rel_error < 1e-4 && secs < 5.0, fmt("max rel error %.2e, %.3f s", r.max_rel_error, secs)};
}

Outcome single_domain_rule() {
  model::ModelConfig c;
  c.embed_dim = 8;
  c.hidden_dim = 8;
  c.num_domains = 1;
  c.init_seed = 3;
  auto p = model::init_params(c);
  const auto b = testing::random_batch(4, 8, 1, 10);
  const model::MoralWeights w{0.4, 0.6};
  const auto loss = model::total_loss(p, b, w, c);
  bool ok = loss.total == loss.ce_moral && loss.ce_domain == 0.0 && loss.l_norm == 0.0 && loss.l_rec == 0.0;

  ok = ok && !c.adversarial();

  model::backward(p, b, w, c);
  std::size_t nonzero = 0;
  for (const auto* t : {&p.domain_hidden, &p.domain_hidden_bias, &p.domain_out, &p.domain_out_bias, &p.w_rec}) {
    for (double g : t->grad.flat()) nonzero += g != 0.0;
  }
  // W_inv gradient must be ce_m only: no pull towards identity.
  auto detached = p;
  model::backward(detached, b, w, c, model::SharedPath::kDetached);
  const bool w_inv_same = detached.w_inv.grad == p.w_inv.grad;

  // Through the trainer: regularizers requested, one domain present.
  const auto recs = testing::separable_corpus(40, 8, Foundation::kCare, 4);
  train::TrainConfig tc;
  tc.epochs = 2;
  tc.learning_rate = 1e-2;
  tc.model.hidden_dim = 8;
  const auto head = train::train_head(recs, Foundation::kCare, tc);
  bool telemetry_clean = !head.model_config.adversarial();
  for (const auto& e : head.epochs) telemetry_clean = telemetry_clean && e.total == e.ce_moral;
  return {ok && nonzero == 0 && w_inv_same && telemetry_clean,
          fmt("total == ce_m, %zu non-zero domain/regularizer gradient entries", nonzero)};
}

// ---- metrics ----------------------------------------------------------------

Outcome metric_oracles() {
  double worst = 0.0;
  auto track = [&](double got, double want) { worst = std::max(worst, std::abs(got - want)); };

  const auto prf = metrics::binary_prf({2, 1, 1, 0});
  track(prf.precision, 2.0 / 3.0);
  track(prf.recall, 2.0 / 3.0);
  track(prf.f1, 2.0 / 3.0);
  const auto degenerate = metrics::binary_prf({0, 0, 5, 0});
  track(degenerate.f1, 0.0);
  track(metrics::binary_prf({5, 0, 0, 0}).f1, 1.0);
  track(metrics::f1_weighted(metrics::ConfusionCounts{2, 1, 1, 6}), 0.8);

  const std::vector<int> ones{1, 1, 0, 0};
  track(metrics::cohens_kappa(ones, ones), 1.0);
  track(metrics::cohens_kappa(std::vector<int>{1, 1, 0, 0}, std::vector<int>{1, 0, 1, 0}), 0.0);
  track(metrics::cohens_kappa(std::vector<int>{1, 1, 1, 0}, std::vector<int>{1, 1, 0, 0}), 0.5);

  // Independent oracle: per-class confusion tables built from scratch.
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng() % 200;
    std::vector<int> p(n), g(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = static_cast<int>(rng() % 2);
      g[i] = static_cast<int>(rng() % 2);
    }
    double f[2] = {0, 0}, support[2] = {0, 0};
    for (int cls = 0; cls < 2; ++cls) {
      double tp = 0, fp = 0, fn = 0;
      for (std::size_t i = 0; i < n; ++i) {
        tp += p[i] == cls && g[i] == cls;
        fp += p[i] == cls && g[i] != cls;
        fn += p[i] != cls && g[i] == cls;
      }
      support[cls] = tp + fn;
      f[cls] = tp > 0 ? 2 * tp / (2 * tp + fp + fn) : 0.0;
    }
    track(metrics::binary_f1_metric(p, g), f[1]);
    track(metrics::f1_weighted(p, g), (support[0] * f[0] + support[1] * f[1]) / static_cast<double>(n));
  }
  return {worst <= 1e-12 && degenerate.degenerate, fmt("max abs deviation %.1e over fixtures and 50 oracle cases", worst)};
}

Outcome threshold_search() {
  const auto grid = train::default_threshold_grid();
  bool grid_ok = grid.size() == 19;
  for (std::size_t k = 0; k < grid.size(); ++k) grid_ok = grid_ok && std::abs(grid[k] - 0.05 * (k + 1)) < 1e-12;

  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int mismatches = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 10 + rng() % 90;
    std::vector<double> p(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = trial % 4 == 0 ? grid[rng() % grid.size()] : u(rng);
      y[i] = u(rng) < 0.3 ? 1 : 0;
    }
    y[rng() % n] = 1;
    double best = -1.0, best_t = 0.0;
    for (double t : grid) {
      int tp = 0, fp = 0, fn = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const int pred = p[i] > t;
        tp += pred && y[i];
        fp += pred && !y[i];
        fn += !pred && y[i];
      }
      const double f1 = tp ? 2.0 * tp / (2.0 * tp + fp + fn) : 0.0;
      if (f1 > best) {
        best = f1;
        best_t = t;
      }
    }
    const auto r = train::search_threshold(p, y, grid);
    mismatches += r.threshold != best_t || std::abs(r.f1 - best) > 1e-12;
  }
  return {grid_ok && mismatches == 0, fmt("%d of 200 instances differ from brute force", mismatches)};
}

Outcome bootstrap_calibration() {
  std::mt19937_64 rng(8);
  std::bernoulli_distribution correct(0.8);
  const std::size_t n = 200;
  std::vector<int> gold(n), pred(n);
  for (std::size_t i = 0; i < n; ++i) {
    gold[i] = static_cast<int>(rng() % 2);
    pred[i] = correct(rng) ? gold[i] : 1 - gold[i];
  }
  const auto r = metrics::bootstrap(pred, gold, metrics::accuracy, 1000, 42);
  const auto s = metrics::bootstrap_serial(pred, gold, metrics::accuracy, 1000, 42);
  const double analytic = std::sqrt(0.8 * 0.2 / n);
  const double rel = std::abs(r.std - analytic) / analytic;
  return {rel <= 0.15 && r.std == s.std && r.mean == s.mean,
          fmt("std %.4f vs analytic %.4f (%.1f%% off), parallel == serial", r.std, analytic, 100 * rel)};
}

// ---- training ---------------------------------------------------------------

double f1_on(const train::TrainedHead& head, const std::vector<corpus::EmbeddingRecord>& recs, Foundation f) {
  const auto preds = train::predict_labels(head, recs);
  std::vector<int> p, g;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    p.push_back(preds[i].label);
    g.push_back(recs[i].labels.contains(f) ? 1 : 0);
  }
  return metrics::binary_f1_metric(p, g);
}

Outcome convergence() {
  const auto t0 = Clock::now();
  const auto recs = testing::separable_corpus(500, 32, Foundation::kCare, 3);
  train::TrainConfig c;
  c.epochs = 20;
  c.learning_rate = 1e-2;
  c.model.hidden_dim = 32;
  const auto head = train::train_head(recs, Foundation::kCare, c);
  const double f1 = f1_on(head, recs, Foundation::kCare);
  const double secs = seconds_since(t0);
  return {f1 >= 0.99 && secs < 30.0, fmt("binary F1 %.4f after 20 epochs, %.2f s", f1, secs)};
}

struct ProbeData {
  std::vector<std::vector<double>> h;
  std::vector<int> domain;
};

ProbeData frozen_h(const model::ModelParams& p, const std::vector<corpus::EmbeddingRecord>& recs) {
  ProbeData d;
  for (const auto& r : recs) {
    d.h.push_back(model::forward(p, r.embedding).h);
    d.domain.push_back(r.domain == DomainTag::kReddit ? 1 : 0);
  }
  return d;
}

// Logistic-regression probe from zero with a fixed optimisation budget
// (full-batch gradient descent), scored on held-out records.
double probe_accuracy(const ProbeData& train, const ProbeData& test, int steps, double lr) {
  const std::size_t dim = train.h[0].size();
  std::vector<double> w(dim, 0.0);
  double b = 0.0;
  for (int s = 0; s < steps; ++s) {
    std::vector<double> gw(dim, 0.0);
    double gb = 0.0;
    for (std::size_t i = 0; i < train.h.size(); ++i) {
      double z = b;
      for (std::size_t k = 0; k < dim; ++k) z += w[k] * train.h[i][k];
      const double err = 1.0 / (1.0 + std::exp(-z)) - train.domain[i];
      for (std::size_t k = 0; k < dim; ++k) gw[k] += err * train.h[i][k];
      gb += err;
    }
    const double scale = lr / static_cast<double>(train.h.size());
    for (std::size_t k = 0; k < dim; ++k) w[k] -= scale * gw[k];
    b -= scale * gb;
  }
  std::size_t hit = 0;
  for (std::size_t i = 0; i < test.h.size(); ++i) {
    double z = b;
    for (std::size_t k = 0; k < dim; ++k) z += w[k] * test.h[i][k];
    hit += (z > 0.0) == (test.domain[i] == 1);
  }
  return static_cast<double>(hit) / static_cast<double>(test.h.size());
}

Outcome adversarial_property() {
  constexpr std::size_t kDim = 16;
  constexpr int kProbeSteps = 20;
  constexpr double kProbeLr = 0.1;
  bool all = true;
  std::ostringstream detail;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto train_set = testing::two_domain_corpus(400, kDim, Foundation::kCare, 1 + 2 * seed, 0.7, 0.5);
    const auto test_set = testing::two_domain_corpus(400, kDim, Foundation::kCare, 2 + 2 * seed, 0.7, 0.5);
    double probe[2], converged[2], f1[2];
    for (int k = 0; k < 2; ++k) {
      train::TrainConfig c;
      c.epochs = 30;
      c.learning_rate = 5e-2;
      c.shuffle_seed = seed;
      c.model.init_seed = seed;
      c.model.hidden_dim = kDim;
      c.model.lambda = k == 0 ? 0.0 : 1.0;
      const auto head = train::train_head(train_set, Foundation::kCare, c);
      const auto ptrain = frozen_h(head.params, train_set);
      const auto ptest = frozen_h(head.params, test_set);
      probe[k] = probe_accuracy(ptrain, ptest, kProbeSteps, kProbeLr);
      converged[k] = probe_accuracy(ptrain, ptest, 2000, 0.5);
      f1[k] = f1_on(head, test_set, Foundation::kCare);
    }
    const double probe_drop = 100.0 * (probe[0] - probe[1]);
    const double f1_drop = 100.0 * (f1[0] - f1[1]);
    const bool ok = probe_drop >= 5.0 && f1_drop < 5.0;
    all = all && ok;
    detail << fmt("%sseed %llu: probe %.1f->%.1f (converged %.1f->%.1f), F1 %.1f->%.1f", seed ? "; " : "",
                  static_cast<unsigned long long>(seed), 100 * probe[0], 100 * probe[1], 100 * converged[0],
                  100 * converged[1], 100 * f1[0], 100 * f1[1]);
  }
  return {all, detail.str()};
}

Outcome determinism() {
  testing::TempDir dir;
  std::vector<corpus::EmbeddingRecord> recs = testing::two_domain_corpus(120, 24, Foundation::kCare, 9);
  std::mt19937_64 rng(1);
  for (auto& r : recs) {
    for (auto f : kAllFoundations) {
      if (rng() % 4 == 0) r.labels.insert(f);
    }
  }
  corpus::save_jsonl(dir / "corpus.jsonl", recs, 24);
  auto run = [&](const std::string& out) {
    return testing::run_cli({"train", "--corpus", (dir / "corpus.jsonl").string(), "--foundation", "all", "--out",
                             (dir / out).string(), "--epochs", "3", "--hidden-dim", "16", "--learning-rate", "0.01",
                             "--seed", "7"});
  };
  const auto a = run("a");
  const auto b = run("b");
  if (a.status != 0 || b.status != 0) return {false, "train failed: " + a.err + b.err};
  std::size_t identical = 0;
  for (auto f : kAllFoundations) {
    identical += testing::slurp(checkpoint::head_path(dir / "a", f)) ==
                 testing::slurp(checkpoint::head_path(dir / "b", f));
  }
  return {identical == kNumFoundations, fmt("%zu of 10 checkpoints byte-identical", identical)};
}

// ---- prompts ----------------------------------------------------------------

Outcome prompt_fidelity() {
  const auto d = prompt::default_descriptions();
  const auto catalog = prompt::load_catalog(std::string(MFT_DATA_DIR) + "/sample_catalog.jsonl");
  const auto specs = prompt::sample_specs(catalog, prompt::ComboWeights{}, 200, 5);
  std::size_t bad = 0;
  for (const auto& s : specs) {
    const auto p = prompt::build_generation_prompt(s, d);
    bad += !p.starts_with("You are an assistant to a songwriter, you need to assist in writing lyrics related to "
                          "the Moral foundations described in the Moral Foundation Theory. Given the ");
    bad += p.find("write original lyrics of a song expressing these moral foundations. "
                  "DO NOT directly mention these moral foundations. DO NOT explicitly talk about morality. "
                  "Write it in the style of " + s.artist.name + ".") == std::string::npos;
  }
  const auto c = prompt::build_classification_prompt("verse\nchorus", d);
  const bool cls_ok =
      c.starts_with("You will be provided with song lyrics. The song lyrics will be delimited with #### "
                    "characters. Classify each lyric into 10 Possible Moral Foundations") &&
      c.find("possible to assign one or multiple categories simultaneously") != std::string::npos &&
      c.find("Report the results in JSON format such that the keys of the correct moral values are reported in a "
             "list") != std::string::npos &&
      c.ends_with("\n\n####\nverse\nchorus\n####");
  return {bad == 0 && cls_ok, fmt("%zu clause violations in 200 generation prompts; classification framing %s", bad,
                                  cls_ok ? "ok" : "wrong")};
}

// ---- end to end -------------------------------------------------------------

// Text embedder standing in for the exporter: hash-seeded noise plus one bump
// per foundation name mentioned in the text.
std::vector<double> mock_embed(const std::string& text, std::size_t dim) {
  const auto digest = sha256({reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
  std::uint64_t seed = 0;
  for (int i = 0; i < 8; ++i) seed = seed << 8 | digest[i];
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> e(dim);
  for (double& v : e) v = n(rng);
  for (std::size_t k = 0; k < kNumFoundations; ++k) {
    if (text.find(display_name(kAllFoundations[k])) != std::string::npos) e[k * 7] += 3.0;
  }
  return e;
}

std::string between(const std::string& s, const std::string& open, const std::string& close) {
  const auto a = s.find(open);
  if (a == std::string::npos) return {};
  const auto b = s.find(close, a + open.size());
  return s.substr(a + open.size(), b == std::string::npos ? std::string::npos : b - a - open.size());
}

void write_exporter_file(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows,
                         const std::string& domain, const std::string& text_key, std::size_t dim) {
  std::ofstream out(path);
  out << nlohmann::json{{"schema", "mft-embed/1"}, {"dim", dim}}.dump() << '\n';
  for (const auto& r : rows) {
    if (r.contains("schema")) continue;
    const std::string text = r.at(text_key);
    out << nlohmann::json{{"id", r.at("id")},
                          {"text_digest", sha256_hex(text)},
                          {"domain", domain},
                          {"labels", r.value("labels", nlohmann::json::array())},
                          {"truncated", false},
                          {"embedding", mock_embed(text, dim)}}
               .dump()
        << '\n';
  }
}

Outcome end_to_end() {
  const auto t0 = Clock::now();
  testing::TempDir dir;
  setenv("MFT_API_KEY", "sk-mock", 1);
  const std::size_t dim = corpus::kDefaultDim;
  const std::string catalog = std::string(MFT_DATA_DIR) + "/sample_catalog.jsonl";
  auto fail = [](const std::string& step, const testing::CliResult& r) {
    return Outcome{false, step + " failed: " + r.err};
  };
  const cli::Environment quiet{nullptr, [](std::chrono::milliseconds) {}};

  // 1. Generation prompts answered by a mock LLM.
  auto r = testing::run_cli({"prompts", "gen", "--catalog", catalog, "--n", "300", "--seed", "11", "--out",
                             (dir / "gen_prompts.jsonl").string()});
  if (r.status) return fail("prompts gen", r);
  chat::MockTransport songwriter;
  songwriter.set_fallback([](const std::string& body) {
    const std::string prompt = nlohmann::json::parse(body)["messages"][0]["content"];
    const auto tags = between(prompt, "Given the ", ", which represent");
    return chat::HttpResponse{200, chat::MockTransport::completion_body("a song touching on " + tags)};
  });
  songwriter.push({429, ""});
  auto env = quiet;
  env.transport = &songwriter;
  r = testing::run_cli({"llm", "run", "--prompts", (dir / "gen_prompts.jsonl").string(), "--endpoint",
                        "http://mock/v1", "--out", (dir / "synthetic.jsonl").string()},
                       env);
  if (r.status) return fail("llm run (generation)", r);

  // 2. Synthetic labels come with the responses; embed them in exporter format.
  write_exporter_file(dir / "train.jsonl", testing::read_rows(dir / "synthetic.jsonl"), "synthetic_lyrics", "text",
                      dim);

  // 3. Real lyrics labelled by the zero-shot classifier.
  {
    std::ofstream lyr(dir / "lyrics.jsonl");
    std::mt19937_64 rng(5);
    for (int i = 0; i < 60; ++i) {
      std::string text = "real song " + std::to_string(i) + ":";
      for (auto f : kAllFoundations) {
        if (rng() % 4 == 0) text += " " + display_name(f);
      }
      lyr << nlohmann::json{{"id", "real-" + std::to_string(i)}, {"lyrics", text}}.dump() << '\n';
    }
  }
  r = testing::run_cli({"prompts", "classify", "--lyrics", (dir / "lyrics.jsonl").string(), "--out",
                        (dir / "cls_prompts.jsonl").string()});
  if (r.status) return fail("prompts classify", r);
  chat::MockTransport annotator;
  annotator.set_fallback([](const std::string& body) {
    const std::string prompt = nlohmann::json::parse(body)["messages"][0]["content"];
    const auto lyric = between(prompt, "\n####\n", "\n####");
    nlohmann::json labels = nlohmann::json::array();
    for (auto f : kAllFoundations) {
      if (lyric.find(display_name(f)) != std::string::npos) labels.push_back(display_name(f));
    }
    return chat::HttpResponse{200, chat::MockTransport::completion_body("```json\n" + labels.dump() + "\n```")};
  });
  env.transport = &annotator;
  r = testing::run_cli({"llm", "run", "--prompts", (dir / "cls_prompts.jsonl").string(), "--endpoint",
                        "http://mock/v1", "--out", (dir / "gold.jsonl").string()},
                       env);
  if (r.status) return fail("llm run (classification)", r);
  {
    auto gold = testing::read_rows(dir / "gold.jsonl");
    const auto lyrics = testing::read_rows(dir / "lyrics.jsonl");
    for (std::size_t i = 1; i < gold.size(); ++i) gold[i]["lyrics"] = lyrics[i - 1]["lyrics"];
    write_exporter_file(dir / "test.jsonl", gold, "real_lyrics", "lyrics", dim);
  }

  // 4. Train, predict, evaluate.
  r = testing::run_cli({"train", "--corpus", (dir / "train.jsonl").string(), "--foundation", "all", "--out",
                        (dir / "heads").string(), "--hidden-dim", "64", "--learning-rate", "1e-3"});
  if (r.status) return fail("train", r);
  r = testing::run_cli({"predict", "--heads", (dir / "heads").string(), "--corpus", (dir / "test.jsonl").string(),
                        "--out", (dir / "preds.jsonl").string()});
  if (r.status) return fail("predict", r);
  r = testing::run_cli({"eval", "--preds", (dir / "preds.jsonl").string(), "--gold", (dir / "test.jsonl").string(),
                        "--bootstrap", "1000", "--seed", "0", "--out", (dir / "metrics.json").string()});
  if (r.status) return fail("eval", r);
  unsetenv("MFT_API_KEY");

  const auto doc = nlohmann::json::parse(testing::slurp(dir / "metrics.json"));
  const auto& per = doc["report"]["foundations"];
  std::size_t covered = 0, out_of_range = 0;
  double f1_sum = 0.0;
  for (auto f : kAllFoundations) {
    const std::string name(to_string(f));
    if (!per.contains(name)) continue;
    ++covered;
    for (const char* m : {"precision_binary", "recall_binary", "f1_binary", "f1_weighted"}) {
      for (const char* k : {"point", "boot_mean", "boot_std"}) {
        const double v = per[name][m][k];
        out_of_range += !(v >= 0.0 && v <= 1.0);
      }
    }
    f1_sum += per[name]["f1_binary"]["point"].get<double>();
  }
  const double secs = seconds_since(t0);
  return {covered == 10 && out_of_range == 0 && secs < 300.0,
          fmt("%zu foundations scored, %zu values outside [0,1], mean binary F1 %.3f, %.1f s", covered, out_of_range,
              f1_sum / 10.0, secs)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient correctness", gradient_correctness},
      {"single-domain rule", single_domain_rule},
      {"metric oracles", metric_oracles},
      {"threshold search vs brute force", threshold_search},
      {"bootstrap calibration", bootstrap_calibration},
      {"convergence smoke", convergence},
      {"adversarial property", adversarial_property},
      {"determinism", determinism},
      {"prompt fidelity", prompt_fidelity},
      {"end-to-end smoke", end_to_end},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
