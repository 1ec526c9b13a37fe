#include "mft/cli.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>
#include <unordered_map>

#include "CLI11.hpp"
#include "json.hpp"
#include "mft/checkpoint.hpp"
#include "mft/corpus.hpp"
#include "mft/digest.hpp"
#include "mft/error.hpp"
#include "mft/metrics.hpp"
#include "mft/promptkit.hpp"
#include "mft/trainer.hpp"

namespace mft::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string file_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return sha256_hex(bytes);
}

// Every artifact carries the resolved configuration, its digest and the
// digests of its inputs. Nothing time-dependent goes in here.
json provenance(std::string_view command, const json& config, const json& inputs) {
  return json{{"command", command},
              {"config", config},
              {"config_digest", sha256_hex(config.dump())},
              {"inputs", inputs}};
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  return out;
}

// Timestamps live only in this sidecar.
void write_sidecar(const fs::path& path, std::string_view command,
                   std::chrono::steady_clock::time_point started) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  std::ofstream log(path, std::ios::app);
  if (!log) return;
  std::tm tm{};
  gmtime_r(&now, &tm);
  log << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ") << ' ' << command << " elapsed_s=" << elapsed << '\n';
}

fs::path sidecar_for(const fs::path& out) { return fs::path(out.string() + ".log"); }

std::vector<json> read_jsonl(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<json> rows;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) continue;
    try {
      rows.push_back(json::parse(text));
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kParse, path.string() + ":" + std::to_string(line) + ": malformed JSON: " + e.what());
    }
    if (!rows.back().is_object()) {
      throw Error(ErrorCode::kSchema, path.string() + ":" + std::to_string(line) + ": expected an object");
    }
  }
  return rows;
}

std::string require_str(const json& obj, const char* key, const fs::path& path) {
  if (!obj.contains(key) || !obj.at(key).is_string()) {
    throw Error(ErrorCode::kSchema, path.string() + ": record missing string field '" + key + "'");
  }
  return obj.at(key).get<std::string>();
}

json labels_json(const FoundationSet& set) {
  json arr = json::array();
  for (auto f : set.to_vector()) arr.push_back(to_string(f));
  return arr;
}

prompt::DescriptionTable descriptions_from(const std::string& path) {
  return path.empty() ? prompt::default_descriptions() : prompt::load_descriptions(path);
}

// ---- prompts gen -----------------------------------------------------------

struct PromptsGenArgs {
  std::string catalog, annotations, descriptions, out;
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

void run_prompts_gen(const PromptsGenArgs& a) {
  const auto started = std::chrono::steady_clock::now();
  const auto catalog = prompt::load_catalog(a.catalog);
  prompt::ComboWeights weights;
  json inputs{{"catalog", file_digest(a.catalog)}};
  if (!a.annotations.empty()) {
    weights = prompt::combo_weights_from_annotations(corpus::load_labels(a.annotations));
    inputs["annotations"] = file_digest(a.annotations);
  }
  if (!a.descriptions.empty()) inputs["descriptions"] = file_digest(a.descriptions);
  const auto table = descriptions_from(a.descriptions);
  const auto specs = prompt::sample_specs(catalog, weights, a.n, a.seed);

  const json config{{"n", a.n}, {"seed", a.seed}, {"combo_weights", weights.p}};
  auto out = open_output(a.out);
  out << json{{"schema", "mft-prompts/1"}, {"provenance", provenance("prompts gen", config, inputs)}}.dump() << '\n';
  for (std::size_t i = 0; i < specs.size(); ++i) {
    std::ostringstream id;
    id << "gen-" << std::setw(6) << std::setfill('0') << i;
    json foundations = json::array();
    for (auto f : specs[i].foundations) foundations.push_back(to_string(f));
    out << json{{"id", id.str()},
                {"kind", "generation"},
                {"foundations", foundations},
                {"artist", specs[i].artist.name},
                {"genre", prompt::to_string(specs[i].artist.genre)},
                {"prompt", prompt::build_generation_prompt(specs[i], table)}}
               .dump()
        << '\n';
  }
  write_sidecar(sidecar_for(a.out), "prompts gen", started);
}

// ---- prompts classify ------------------------------------------------------

struct PromptsClassifyArgs {
  std::string lyrics, descriptions, out;
};

void run_prompts_classify(const PromptsClassifyArgs& a) {
  const auto started = std::chrono::steady_clock::now();
  const auto table = descriptions_from(a.descriptions);
  const auto rows = read_jsonl(a.lyrics);
  json inputs{{"lyrics", file_digest(a.lyrics)}};
  if (!a.descriptions.empty()) inputs["descriptions"] = file_digest(a.descriptions);

  auto out = open_output(a.out);
  out << json{{"schema", "mft-prompts/1"}, {"provenance", provenance("prompts classify", json::object(), inputs)}}.dump()
      << '\n';
  for (const auto& row : rows) {
    if (row.contains("schema")) continue;
    const auto id = require_str(row, "id", a.lyrics);
    const auto text = row.contains("lyrics") ? require_str(row, "lyrics", a.lyrics) : require_str(row, "text", a.lyrics);
    out << json{{"id", "cls-" + id}, {"source_id", id}, {"kind", "classification"},
                {"prompt", prompt::build_classification_prompt(text, table)}}
               .dump()
        << '\n';
  }
  write_sidecar(sidecar_for(a.out), "prompts classify", started);
}

// ---- llm run ---------------------------------------------------------------

struct LlmRunArgs {
  std::string prompts, endpoint, out, model = "gpt-4";
  double temperature = 1.0;
  int max_tokens = 1024;
  std::size_t max_in_flight = 4;
  std::size_t max_retries = 5;
  std::int64_t initial_backoff_ms = 500;
};

void run_llm(const LlmRunArgs& a, const Environment& env) {
  const auto started = std::chrono::steady_clock::now();
  const auto rows = read_jsonl(a.prompts);
  std::vector<json> prompts;
  std::vector<chat::ChatRequest> requests;
  for (const auto& row : rows) {
    if (row.contains("schema")) continue;
    prompts.push_back(row);
    chat::ChatRequest req;
    req.endpoint = a.endpoint;
    req.model = a.model;
    req.temperature = a.temperature;
    req.max_tokens = a.max_tokens;
    req.messages.push_back({"user", require_str(row, "prompt", a.prompts)});
    requests.push_back(std::move(req));
  }
  if (const char* key = std::getenv(chat::kApiKeyEnv); key == nullptr || *key == '\0') {
    throw Error(ErrorCode::kMissingCredential, std::string("environment variable ") + chat::kApiKeyEnv + " is not set");
  }

  chat::HttpTransport http;
  chat::Transport& transport = env.transport ? *env.transport : http;
  chat::RetryPolicy policy;
  policy.max_retries = a.max_retries;
  policy.initial_backoff = std::chrono::milliseconds(a.initial_backoff_ms);
  const auto sleeper = env.sleeper ? env.sleeper : chat::default_sleeper();
  const auto results = chat::chat_complete_batch(requests, transport, a.max_in_flight, policy, sleeper);

  const json config{{"endpoint", a.endpoint}, {"model", a.model}, {"temperature", a.temperature},
                    {"max_tokens", a.max_tokens}, {"max_in_flight", a.max_in_flight},
                    {"max_retries", a.max_retries}};
  auto out = open_output(a.out);
  out << json{{"schema", "mft-responses/1"},
              {"provenance", provenance("llm run", config, {{"prompts", file_digest(a.prompts)}})}}
             .dump()
      << '\n';
  std::size_t failures = 0;
  std::string first_error;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& p = prompts[i];
    const auto kind = p.value("kind", std::string("generation"));
    json rec{{"prompt_id", p.at("id")}, {"kind", kind}};
    if (!results[i].response) {
      ++failures;
      if (first_error.empty()) first_error = results[i].error;
      rec["id"] = p.at("id");
      rec["error"] = results[i].error;
      out << rec.dump() << '\n';
      continue;
    }
    const auto& r = *results[i].response;
    std::vector<std::int64_t> backoff;
    for (auto d : r.backoff) backoff.push_back(d.count());
    rec["finish_reason"] = r.finish_reason;
    rec["usage"] = {{"prompt_tokens", r.prompt_tokens}, {"completion_tokens", r.completion_tokens},
                    {"total_tokens", r.total_tokens}};
    rec["retries"] = r.retries;
    rec["backoff_ms"] = backoff;
    if (kind == "classification") {
      rec["id"] = p.value("source_id", p.at("id").get<std::string>());
      rec["content"] = r.content;
      try {
        rec["labels"] = labels_json(prompt::parse_classification_response(r.content));
      } catch (const Error& e) {
        ++failures;
        if (first_error.empty()) first_error = e.what();
        rec["error"] = e.what();
      }
    } else {
      // A synthetic lyric, labelled with the foundations it was asked to express.
      rec["id"] = p.at("id");
      rec["text"] = r.content;
      rec["domain"] = to_string(DomainTag::kSyntheticLyrics);
      rec["labels"] = p.value("foundations", json::array());
    }
    out << rec.dump() << '\n';
  }
  write_sidecar(sidecar_for(a.out), "llm run", started);
  if (failures > 0) {
    throw Error(ErrorCode::kHttp, std::to_string(failures) + " of " + std::to_string(results.size()) +
                                      " requests failed; first: " + first_error);
  }
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string corpus, foundation = "all", config, out;
  std::optional<std::size_t> epochs, batch_size, hidden_dim;
  std::optional<double> learning_rate, lambda;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> threshold_source;
};

std::vector<Foundation> parse_foundation_arg(const std::string& name) {
  if (name == "all") return {kAllFoundations.begin(), kAllFoundations.end()};
  const auto f = foundation_from_string(name);
  if (!f) throw Error(ErrorCode::kUnknownLabel, "unknown foundation '" + name + "'");
  return {*f};
}

void run_train(const TrainArgs& a) {
  const auto started = std::chrono::steady_clock::now();
  train::TrainConfig config;
  if (!a.config.empty()) {
    std::ifstream in(a.config);
    if (!in) throw Error(ErrorCode::kIo, "cannot open " + a.config);
    try {
      config = train::train_config_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kParse, a.config + ": " + e.what());
    }
  }
  if (a.epochs) config.epochs = *a.epochs;
  if (a.batch_size) config.batch_size = *a.batch_size;
  if (a.hidden_dim) config.model.hidden_dim = *a.hidden_dim;
  if (a.learning_rate) config.learning_rate = *a.learning_rate;
  if (a.lambda) config.model.lambda = *a.lambda;
  if (a.seed) {
    config.shuffle_seed = *a.seed;
    config.model.init_seed = *a.seed;
    config.split_seed = *a.seed;
  }
  if (a.threshold_source) config.threshold_source = train::threshold_source_from_string(*a.threshold_source);
  config.validate();

  const auto foundations = parse_foundation_arg(a.foundation);
  const auto records = corpus::load_jsonl(a.corpus);
  const auto heads = train::train_heads(records, foundations, config);

  fs::create_directories(a.out);
  for (const auto& head : heads) checkpoint::save(head, checkpoint::head_path(a.out, head.foundation));
  write_sidecar(fs::path(a.out) / "train.log", "train", started);
}

// ---- predict ---------------------------------------------------------------

struct PredictArgs {
  std::string heads, corpus, out;
};

std::vector<train::TrainedHead> load_heads(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::kIo, "not a directory: " + dir.string());
  std::vector<train::TrainedHead> heads;
  for (auto f : kAllFoundations) {
    const auto path = checkpoint::head_path(dir, f);
    if (fs::exists(path)) {
      heads.push_back(checkpoint::load(path));
      if (heads.back().foundation != f) {
        throw Error(ErrorCode::kIntegrity, path.string() + ": file name does not match its foundation");
      }
    }
  }
  if (heads.empty()) throw Error(ErrorCode::kIo, "no head checkpoints in " + dir.string());
  return heads;
}

void run_predict(const PredictArgs& a) {
  const auto started = std::chrono::steady_clock::now();
  const auto heads = load_heads(a.heads);
  const auto records = corpus::load_jsonl(a.corpus);

  std::vector<std::vector<train::Prediction>> per_head;
  json head_info = json::object();
  json foundations = json::array();
  for (const auto& h : heads) {
    per_head.push_back(train::predict_labels(h, records));
    head_info[std::string(to_string(h.foundation))] = {{"threshold", h.threshold}, {"config_digest", h.config_digest}};
    foundations.push_back(to_string(h.foundation));
  }
  const json config{{"heads", head_info}};
  auto out = open_output(a.out);
  out << json{{"schema", "mft-preds/1"},
              {"foundations", foundations},
              {"provenance", provenance("predict", config, {{"corpus", file_digest(a.corpus)}})}}
             .dump()
      << '\n';
  for (std::size_t i = 0; i < records.size(); ++i) {
    json preds = json::object();
    FoundationSet predicted;
    for (std::size_t h = 0; h < heads.size(); ++h) {
      const auto& p = per_head[h][i];
      preds[std::string(to_string(heads[h].foundation))] = {{"prob", p.positive_prob}, {"label", p.label}};
      if (p.label) predicted.insert(heads[h].foundation);
    }
    out << json{{"id", records[i].id}, {"predictions", preds}, {"labels", labels_json(predicted)}}.dump() << '\n';
  }
  write_sidecar(sidecar_for(a.out), "predict", started);
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string preds, gold, out;
  std::size_t bootstrap = 1000;
  std::uint64_t seed = 0;
};

std::vector<Foundation> foundations_in_header(const fs::path& path) {
  std::ifstream in(path);
  std::string first;
  if (!in || !std::getline(in, first)) return {kAllFoundations.begin(), kAllFoundations.end()};
  json header;
  try {
    header = json::parse(first);
  } catch (const json::parse_error&) {
    return {kAllFoundations.begin(), kAllFoundations.end()};
  }
  if (!header.is_object() || !header.contains("schema") || !header.contains("foundations")) {
    return {kAllFoundations.begin(), kAllFoundations.end()};
  }
  std::vector<Foundation> out;
  for (const auto& name : header.at("foundations")) {
    const auto f = foundation_from_string(name.get<std::string>());
    if (!f) throw Error(ErrorCode::kUnknownLabel, path.string() + ": unknown foundation in header");
    out.push_back(*f);
  }
  return out;
}

void run_eval(const EvalArgs& a) {
  const auto started = std::chrono::steady_clock::now();
  const auto preds = corpus::load_labels(a.preds);
  const auto gold = corpus::load_labels(a.gold);
  const auto foundations = foundations_in_header(a.preds);

  std::unordered_map<std::string, const corpus::LabelRecord*> gold_by_id;
  for (const auto& g : gold) gold_by_id.emplace(g.id, &g);
  if (preds.empty()) throw Error(ErrorCode::kInvalidArgument, a.preds + ": no predictions");

  metrics::MetricReport report;
  for (auto f : foundations) {
    std::vector<int> p, y;
    p.reserve(preds.size());
    y.reserve(preds.size());
    for (const auto& pr : preds) {
      const auto it = gold_by_id.find(pr.id);
      if (it == gold_by_id.end()) throw Error(ErrorCode::kSchema, a.gold + ": no gold labels for id '" + pr.id + "'");
      p.push_back(pr.labels.contains(f) ? 1 : 0);
      y.push_back(it->second->labels.contains(f) ? 1 : 0);
    }
    report.foundations.push_back(metrics::evaluate_foundation(f, p, y, a.bootstrap, a.seed));
  }
  const json config{{"bootstrap", a.bootstrap}, {"seed", a.seed}};
  auto out = open_output(a.out);
  json doc{{"schema", "mft-metrics/1"},
           {"provenance", provenance("eval", config, {{"preds", file_digest(a.preds)}, {"gold", file_digest(a.gold)}})},
           {"seed", a.seed},
           {"n_resamples", a.bootstrap},
           {"report", metrics::to_json(report)}};
  out << doc.dump(2) << '\n';
  write_sidecar(sidecar_for(a.out), "eval", started);
}

// ---- kappa -----------------------------------------------------------------

struct KappaArgs {
  std::string a, b, out;
};

void run_kappa(const KappaArgs& k) {
  const auto started = std::chrono::steady_clock::now();
  const auto first = corpus::load_labels(k.a);
  const auto second = corpus::load_labels(k.b);
  std::unordered_map<std::string, const corpus::LabelRecord*> by_id;
  for (const auto& r : second) by_id.emplace(r.id, &r);
  if (first.size() != second.size()) {
    throw Error(ErrorCode::kSchema, "kappa: annotation files cover different item sets");
  }
  if (first.empty()) throw Error(ErrorCode::kInvalidArgument, "kappa: no annotations");

  json per = json::object();
  double sum = 0.0;
  for (auto f : kAllFoundations) {
    std::vector<int> a1, a2;
    for (const auto& r : first) {
      const auto it = by_id.find(r.id);
      if (it == by_id.end()) throw Error(ErrorCode::kSchema, k.b + ": missing id '" + r.id + "'");
      a1.push_back(r.labels.contains(f) ? 1 : 0);
      a2.push_back(it->second->labels.contains(f) ? 1 : 0);
    }
    const double kappa = metrics::cohens_kappa(a1, a2);
    per[std::string(to_string(f))] = kappa;
    sum += kappa;
  }
  auto out = open_output(k.out);
  json doc{{"schema", "mft-kappa/1"},
           {"provenance", provenance("kappa", json::object(), {{"a", file_digest(k.a)}, {"b", file_digest(k.b)}})},
           {"n_items", first.size()},
           {"foundations", per},
           {"average", sum / static_cast<double>(kNumFoundations)}};
  out << doc.dump(2) << '\n';
  write_sidecar(sidecar_for(k.out), "kappa", started);
}

// ---- stats -----------------------------------------------------------------

void run_stats(const std::string& path, std::ostream& out) {
  const auto records = corpus::load_jsonl(path);
  const auto s = corpus::corpus_stats(records);
  json per_f = json::object();
  for (auto f : kAllFoundations) per_f[std::string(to_string(f))] = s.per_foundation_positive[index_of(f)];
  json per_d = json::object();
  for (const auto& [d, n] : s.per_domain) per_d[std::string(to_string(d))] = n;
  out << json{{"total", s.total},
              {"neutral_fraction", s.neutral_fraction},
              {"per_foundation_positive", per_f},
              {"per_domain", per_d},
              {"dim", records.empty() ? 0 : records.front().embedding.size()}}
             .dump(2)
      << '\n';
}

void report_error(std::ostream& err, std::string_view kind, std::string_view message) {
  err << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int dispatch(std::span<const std::string> args, std::ostream& out, std::ostream& err,
             const Environment& env) {
  CLI::App app{"Moral foundation detection toolkit", "mft"};
  app.require_subcommand(1);

  auto* prompts = app.add_subcommand("prompts", "Build generation or classification prompts");
  prompts->require_subcommand(1);
  PromptsGenArgs gen;
  auto* gen_cmd = prompts->add_subcommand("gen", "Sample generation specs and render prompts");
  gen_cmd->add_option("--catalog", gen.catalog, "Artist catalog JSONL")->required();
  gen_cmd->add_option("--annotations", gen.annotations, "Annotated songs for 1/2/3 combination weights");
  gen_cmd->add_option("--descriptions", gen.descriptions, "Foundation description table (JSON)");
  gen_cmd->add_option("--n", gen.n, "Number of prompts")->required();
  gen_cmd->add_option("--seed", gen.seed, "Sampling seed");
  gen_cmd->add_option("--out", gen.out, "Output JSONL")->required();

  PromptsClassifyArgs cls;
  auto* cls_cmd = prompts->add_subcommand("classify", "Render zero-shot classification prompts");
  cls_cmd->add_option("--lyrics", cls.lyrics, "Lyrics JSONL ({id, lyrics})")->required();
  cls_cmd->add_option("--descriptions", cls.descriptions, "Foundation description table (JSON)");
  cls_cmd->add_option("--out", cls.out, "Output JSONL")->required();

  auto* llm = app.add_subcommand("llm", "Chat-completion calls");
  llm->require_subcommand(1);
  LlmRunArgs run;
  auto* run_cmd = llm->add_subcommand("run", "Send a prompt batch to the endpoint");
  run_cmd->add_option("--prompts", run.prompts, "Prompt JSONL")->required();
  run_cmd->add_option("--endpoint", run.endpoint, "Base URL of the chat endpoint")->required();
  run_cmd->add_option("--out", run.out, "Output JSONL")->required();
  run_cmd->add_option("--model", run.model, "Model identifier");
  run_cmd->add_option("--temperature", run.temperature, "Sampling temperature");
  run_cmd->add_option("--max-tokens", run.max_tokens, "Completion token cap");
  run_cmd->add_option("--max-in-flight", run.max_in_flight, "Concurrent request cap");
  run_cmd->add_option("--max-retries", run.max_retries, "Retries on 429/5xx");
  run_cmd->add_option("--initial-backoff-ms", run.initial_backoff_ms, "First retry delay");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train per-foundation heads");
  train_cmd->add_option("--corpus", tr.corpus, "Corpus JSONL")->required();
  train_cmd->add_option("--foundation", tr.foundation, "Foundation name or 'all'");
  train_cmd->add_option("--config", tr.config, "Training config JSON");
  train_cmd->add_option("--out", tr.out, "Checkpoint directory")->required();
  train_cmd->add_option("--epochs", tr.epochs);
  train_cmd->add_option("--batch-size", tr.batch_size);
  train_cmd->add_option("--hidden-dim", tr.hidden_dim);
  train_cmd->add_option("--learning-rate", tr.learning_rate);
  train_cmd->add_option("--lambda", tr.lambda);
  train_cmd->add_option("--seed", tr.seed, "Sets shuffle, init and split seeds");
  train_cmd->add_option("--threshold-source", tr.threshold_source, "train | validation");

  PredictArgs pr;
  auto* predict_cmd = app.add_subcommand("predict", "Apply trained heads to a corpus");
  predict_cmd->add_option("--heads", pr.heads, "Checkpoint directory")->required();
  predict_cmd->add_option("--corpus", pr.corpus, "Corpus JSONL")->required();
  predict_cmd->add_option("--out", pr.out, "Predictions JSONL")->required();

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Score predictions against gold labels");
  eval_cmd->add_option("--preds", ev.preds, "Predictions (or any label JSONL)")->required();
  eval_cmd->add_option("--gold", ev.gold, "Gold labels (corpus or label JSONL)")->required();
  eval_cmd->add_option("--bootstrap", ev.bootstrap, "Bootstrap resamples (0 disables)");
  eval_cmd->add_option("--seed", ev.seed, "Bootstrap seed");
  eval_cmd->add_option("--out", ev.out, "Report JSON")->required();

  KappaArgs kp;
  auto* kappa_cmd = app.add_subcommand("kappa", "Per-foundation Cohen's kappa between two annotators");
  kappa_cmd->add_option("--a", kp.a, "First annotator JSONL")->required();
  kappa_cmd->add_option("--b", kp.b, "Second annotator JSONL")->required();
  kappa_cmd->add_option("--out", kp.out, "Output JSON")->required();

  std::string stats_corpus;
  auto* stats_cmd = app.add_subcommand("stats", "Corpus statistics");
  stats_cmd->add_option("--corpus", stats_corpus, "Corpus JSONL")->required();

  std::vector<const char*> argv{"mft"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    report_error(err, "usage", e.what());
    return 2;
  }

  try {
    if (gen_cmd->parsed()) run_prompts_gen(gen);
    else if (cls_cmd->parsed()) run_prompts_classify(cls);
    else if (run_cmd->parsed()) run_llm(run, env);
    else if (train_cmd->parsed()) run_train(tr);
    else if (predict_cmd->parsed()) run_predict(pr);
    else if (eval_cmd->parsed()) run_eval(ev);
    else if (kappa_cmd->parsed()) run_kappa(kp);
    else if (stats_cmd->parsed()) run_stats(stats_corpus, out);
  } catch (const Error& e) {
    report_error(err, to_string(e.code()), e.what());
    return 1;
  } catch (const std::exception& e) {
    report_error(err, "internal", e.what());
    return 1;
  }
  return 0;
}

}  // namespace mft::cli
