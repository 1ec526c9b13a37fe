#include "mft/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>
#include <unordered_set>

#include "mft/digest.hpp"
#include "mft/error.hpp"
#include "mft/metrics.hpp"
#include "mft/netops.hpp"

namespace mft::train {

using nlohmann::json;

std::string_view to_string(ThresholdSource s) {
  return s == ThresholdSource::kTrain ? "train" : "validation";
}

ThresholdSource threshold_source_from_string(std::string_view name) {
  if (name == "train") return ThresholdSource::kTrain;
  if (name == "validation") return ThresholdSource::kValidation;
  throw Error(ErrorCode::kInvalidArgument, "unknown threshold source '" + std::string(name) + "'");
}

std::vector<double> default_threshold_grid() {
  std::vector<double> grid;
  for (int k = 1; k <= 19; ++k) grid.push_back(k / 20.0);
  return grid;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw Error(ErrorCode::kInvalidArgument, "train: epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::kInvalidArgument, "train: learning_rate must be > 0");
  if (batch_size < 1) throw Error(ErrorCode::kInvalidArgument, "train: batch_size must be >= 1");
  if (threshold_grid.empty()) throw Error(ErrorCode::kInvalidArgument, "train: empty threshold grid");
  for (std::size_t i = 0; i < threshold_grid.size(); ++i) {
    const double g = threshold_grid[i];
    if (!(g > 0.0 && g < 1.0) || (i > 0 && !(g > threshold_grid[i - 1]))) {
      throw Error(ErrorCode::kInvalidArgument,
                  "train: threshold grid must be strictly increasing within (0,1)");
    }
  }
  if (model.lambda < 0.0) throw Error(ErrorCode::kInvalidArgument, "train: lambda must be >= 0");
}

json to_json(const TrainConfig& c) {
  return json{
      {"epochs", c.epochs},
      {"learning_rate", c.learning_rate},
      {"batch_size", c.batch_size},
      {"shuffle_seed", c.shuffle_seed},
      {"threshold_grid", c.threshold_grid},
      {"threshold_source", to_string(c.threshold_source)},
      {"split", {{"train", c.split_fractions.train},
                 {"validation", c.split_fractions.validation},
                 {"test", c.split_fractions.test}}},
      {"split_seed", c.split_seed},
      {"model", {{"hidden_dim", c.model.hidden_dim},
                 {"lambda", c.model.lambda},
                 {"regularizers_enabled", c.model.regularizers_enabled},
                 {"use_bias", c.model.use_bias},
                 {"init_seed", c.model.init_seed},
                 {"init_noise", c.model.init_noise},
                 {"norm_penalty", model::to_string(c.model.norm_penalty)}}},
  };
}

namespace {

template <typename T>
void read_key(const json& obj, const char* key, T& dst) {
  if (!obj.contains(key)) return;
  try {
    dst = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchema, std::string("config: bad value for '") + key + "': " + e.what());
  }
}

void reject_unknown(const json& obj, std::initializer_list<std::string_view> known, const char* where) {
  for (const auto& [key, _] : obj.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw Error(ErrorCode::kSchema, std::string("config: unknown key '") + key + "' in " + where);
    }
  }
}

}  // namespace

TrainConfig train_config_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kSchema, "config: expected a JSON object");
  reject_unknown(j, {"epochs", "learning_rate", "batch_size", "shuffle_seed", "threshold_grid",
                     "threshold_source", "split", "split_seed", "model"},
                 "top level");
  TrainConfig c;
  read_key(j, "epochs", c.epochs);
  read_key(j, "learning_rate", c.learning_rate);
  read_key(j, "batch_size", c.batch_size);
  read_key(j, "shuffle_seed", c.shuffle_seed);
  read_key(j, "threshold_grid", c.threshold_grid);
  read_key(j, "split_seed", c.split_seed);
  if (j.contains("threshold_source")) {
    c.threshold_source = threshold_source_from_string(j.at("threshold_source").get<std::string>());
  }
  if (j.contains("split")) {
    const auto& s = j.at("split");
    reject_unknown(s, {"train", "validation", "test"}, "split");
    read_key(s, "train", c.split_fractions.train);
    read_key(s, "validation", c.split_fractions.validation);
    read_key(s, "test", c.split_fractions.test);
  }
  if (j.contains("model")) {
    const auto& m = j.at("model");
    reject_unknown(m, {"hidden_dim", "lambda", "regularizers_enabled", "use_bias", "init_seed",
                       "init_noise", "norm_penalty"},
                   "model");
    read_key(m, "hidden_dim", c.model.hidden_dim);
    read_key(m, "lambda", c.model.lambda);
    read_key(m, "regularizers_enabled", c.model.regularizers_enabled);
    read_key(m, "use_bias", c.model.use_bias);
    read_key(m, "init_seed", c.model.init_seed);
    read_key(m, "init_noise", c.model.init_noise);
    if (m.contains("norm_penalty")) {
      c.model.norm_penalty = model::norm_penalty_from_string(m.at("norm_penalty").get<std::string>());
    }
  }
  c.validate();
  return c;
}

std::string config_digest(const TrainConfig& config) { return sha256_hex(to_json(config).dump()); }

Matrix stack_embeddings(std::span<const corpus::EmbeddingRecord> records,
                        std::span<const std::size_t> indices) {
  const std::size_t dim = records.empty() ? 0 : records[indices.empty() ? 0 : indices[0]].embedding.size();
  Matrix m(indices.size(), dim);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto& emb = records[indices[r]].embedding;
    if (emb.size() != dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "record '" + records[indices[r]].id + "' has a different embedding length");
    }
    std::copy(emb.begin(), emb.end(), m.row(r).begin());
  }
  return m;
}

ThresholdResult search_threshold(std::span<const double> positive_probs, std::span<const int> labels,
                                 std::span<const double> grid) {
  if (positive_probs.size() != labels.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "search_threshold: length mismatch");
  }
  if (labels.empty()) throw Error(ErrorCode::kInvalidArgument, "search_threshold: empty input");
  if (grid.empty()) throw Error(ErrorCode::kInvalidArgument, "search_threshold: empty grid");

  const bool any_positive = std::any_of(labels.begin(), labels.end(), [](int y) { return y != 0; });
  if (!any_positive) {
    warn("search_threshold: no positive labels, F1 undefined for every threshold; using 0.5");
    return {0.5, 0.0, true};
  }

  ThresholdResult best{grid[0], -1.0, false};
  std::vector<int> preds(labels.size());
  for (double theta : grid) {
    for (std::size_t i = 0; i < preds.size(); ++i) preds[i] = positive_probs[i] > theta ? 1 : 0;
    const double f1 = metrics::binary_prf(metrics::confusion(preds, labels)).f1;
    if (f1 > best.f1 || (f1 == best.f1 && theta < best.threshold)) {
      best.threshold = theta;
      best.f1 = f1;
    }
  }
  return best;
}

namespace {

std::vector<std::size_t> select_ids(std::span<const corpus::EmbeddingRecord> corpus,
                                    const std::vector<std::string>& ids) {
  std::unordered_set<std::string> wanted(ids.begin(), ids.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (wanted.count(corpus[i].id)) out.push_back(i);
  }
  return out;
}

void round_to_float(model::ModelParams& params) {
  for (auto* t : params.tensors()) {
    for (double& v : t->value.flat()) v = static_cast<double>(static_cast<float>(v));
  }
}

}  // namespace

TrainedHead train_head(std::span<const corpus::EmbeddingRecord> corpus, Foundation f,
                       const TrainConfig& config) {
  config.validate();
  if (corpus.empty()) throw Error(ErrorCode::kInvalidArgument, "train_head: empty corpus");
  const auto positives = std::count_if(corpus.begin(), corpus.end(),
                                       [f](const auto& r) { return r.is_positive(f); });
  if (positives == 0 || static_cast<std::size_t>(positives) == corpus.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "train_head: corpus has a single class for '" + std::string(to_string(f)) + "'");
  }

  std::span<const corpus::EmbeddingRecord> train_view = corpus;
  std::vector<corpus::EmbeddingRecord> train_subset;
  std::vector<std::size_t> tune_idx(corpus.size());
  std::iota(tune_idx.begin(), tune_idx.end(), 0);
  if (config.threshold_source == ThresholdSource::kValidation) {
    const auto split = corpus::stratified_split(corpus, config.split_fractions, f, config.split_seed);
    for (auto i : select_ids(corpus, split.train)) train_subset.push_back(corpus[i]);
    tune_idx = select_ids(corpus, split.validation);
    if (tune_idx.empty()) throw Error(ErrorCode::kInvalidArgument, "train_head: validation split is empty");
    train_view = train_subset;
  }

  const auto weights_c = corpus::class_weights(train_view, f);
  const auto domains = corpus::domains_present(train_view);

  TrainedHead head;
  head.foundation = f;
  head.train_config = config;
  head.config_digest = config_digest(config);
  head.domains = domains;
  head.model_config = config.model;
  head.model_config.embed_dim = corpus.front().embedding.size();
  head.model_config.num_domains = domains.size();
  head.model_config.regularizers_enabled = config.model.regularizers_enabled && domains.size() >= 2;
  const auto& mc = head.model_config;

  std::array<int, kNumDomainTags> domain_index{};
  for (std::size_t i = 0; i < domains.size(); ++i) domain_index[static_cast<std::size_t>(domains[i])] = static_cast<int>(i);

  head.params = model::init_params(mc);
  std::vector<netops::AdamState> adam;
  for (const auto* t : head.params.tensors()) adam.emplace_back(t->value.size());

  const model::MoralWeights weights{weights_c.negative, weights_c.positive};
  const std::size_t n = train_view.size();
  std::vector<std::size_t> order(n);
  std::size_t batch_counter = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::seed_seq seq{static_cast<std::uint32_t>(config.shuffle_seed),
                      static_cast<std::uint32_t>(config.shuffle_seed >> 32),
                      static_cast<std::uint32_t>(epoch)};
    std::mt19937_64 rng(seq);
    std::shuffle(order.begin(), order.end(), rng);

    EpochTelemetry tel;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size, ++batch_counter) {
      const std::size_t end = std::min(n, start + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      model::Batch batch;
      batch.embeddings = stack_embeddings(train_view, idx);
      for (auto i : idx) {
        batch.moral_targets.push_back(train_view[i].is_positive(f) ? 1 : 0);
        batch.domain_targets.push_back(domain_index[static_cast<std::size_t>(train_view[i].domain)]);
      }
      model::LossComponents loss;
      try {
        loss = model::backward(head.params, batch, weights, mc);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNumeric) throw;
        throw Error(ErrorCode::kNumeric, "train_head: epoch " + std::to_string(epoch) + " batch " +
                                             std::to_string(batch_counter) + ": " + e.what());
      }
      if (!std::isfinite(loss.total)) {
        throw Error(ErrorCode::kNumeric, "train_head: non-finite loss at epoch " +
                                             std::to_string(epoch) + " batch " +
                                             std::to_string(batch_counter));
      }
      auto tensors = head.params.tensors();
      for (std::size_t t = 0; t < tensors.size(); ++t) {
        try {
          netops::adam_step(*tensors[t], adam[t], config.learning_rate);
        } catch (const Error& e) {
          throw Error(e.code(), "train_head: batch " + std::to_string(batch_counter) + ": " + e.what());
        }
      }
      tel.ce_moral += loss.ce_moral;
      tel.ce_domain += loss.ce_domain;
      tel.l_norm += loss.l_norm;
      tel.l_rec += loss.l_rec;
      tel.total += loss.total;
      ++batches;
    }
    const auto nb = static_cast<double>(batches);
    tel.ce_moral /= nb;
    tel.ce_domain /= nb;
    tel.l_norm /= nb;
    tel.l_rec /= nb;
    tel.total /= nb;
    head.epochs.push_back(tel);
  }
  head.params.zero_grad();
  round_to_float(head.params);

  const auto tune_embeddings = stack_embeddings(corpus, tune_idx);
  const auto probs = model::positive_probabilities(head.params, tune_embeddings);
  std::vector<int> labels;
  labels.reserve(tune_idx.size());
  for (auto i : tune_idx) labels.push_back(corpus[i].is_positive(f) ? 1 : 0);
  head.threshold = search_threshold(probs, labels, config.threshold_grid).threshold;
  return head;
}

std::vector<TrainedHead> train_heads(std::span<const corpus::EmbeddingRecord> corpus,
                                     std::span<const Foundation> foundations,
                                     const TrainConfig& config) {
  std::vector<TrainedHead> heads(foundations.size());
  std::vector<std::exception_ptr> errors(foundations.size());
  const auto count = static_cast<std::int64_t>(foundations.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < count; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      heads[k] = train_head(corpus, foundations[k], config);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return heads;
}

std::vector<Prediction> predict_labels(const TrainedHead& head,
                                       std::span<const corpus::EmbeddingRecord> records) {
  std::vector<Prediction> out;
  if (records.empty()) return out;
  std::vector<std::size_t> idx(records.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (const auto& r : records) {
    if (r.embedding.size() != head.model_config.embed_dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "predict: record '" + r.id + "' has " + std::to_string(r.embedding.size()) +
                      " values, head expects " + std::to_string(head.model_config.embed_dim));
    }
  }
  const auto probs = model::positive_probabilities(head.params, stack_embeddings(records, idx));
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    out.push_back({records[i].id, probs[i], probs[i] > head.threshold ? 1 : 0});
  }
  return out;
}

}  // namespace mft::train
