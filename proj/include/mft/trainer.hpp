#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mft/corpus.hpp"
#include "mft/model.hpp"

namespace mft::train {

enum class ThresholdSource { kTrain, kValidation };

std::string_view to_string(ThresholdSource s);
ThresholdSource threshold_source_from_string(std::string_view name);

/// 0.05, 0.10, ..., 0.95.
std::vector<double> default_threshold_grid();

struct TrainConfig {
  std::size_t epochs = 20;
  double learning_rate = 5e-5;
  std::size_t batch_size = 16;
  std::uint64_t shuffle_seed = 0;
  std::vector<double> threshold_grid = default_threshold_grid();
  ThresholdSource threshold_source = ThresholdSource::kTrain;
  corpus::SplitFractions split_fractions{};
  std::uint64_t split_seed = 0;
  // embed_dim and num_domains are taken from the corpus;
  // regularizers_enabled means "when more than one domain is present".
  model::ModelConfig model{.regularizers_enabled = true};

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

nlohmann::json to_json(const TrainConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
TrainConfig train_config_from_json(const nlohmann::json& j);
/// SHA-256 over the canonical JSON form.
std::string config_digest(const TrainConfig& config);

struct EpochTelemetry {
  double ce_moral = 0.0;
  double ce_domain = 0.0;
  double l_norm = 0.0;
  double l_rec = 0.0;
  double total = 0.0;
  bool operator==(const EpochTelemetry&) const = default;
};

struct TrainedHead {
  Foundation foundation = Foundation::kCare;
  model::ModelConfig model_config;
  model::ModelParams params;
  double threshold = 0.5;
  TrainConfig train_config;
  std::string config_digest;
  std::vector<DomainTag> domains;
  std::vector<EpochTelemetry> epochs;

  bool operator==(const TrainedHead&) const = default;
};

/// Trains the single-foundation head. Parameters are rounded to float32 at
/// the end so the checkpoint format stores them exactly.
TrainedHead train_head(std::span<const corpus::EmbeddingRecord> corpus, Foundation f,
                       const TrainConfig& config);

/// Trains several heads; runs them concurrently when OpenMP has threads.
std::vector<TrainedHead> train_heads(std::span<const corpus::EmbeddingRecord> corpus,
                                     std::span<const Foundation> foundations,
                                     const TrainConfig& config);

struct ThresholdResult {
  double threshold = 0.5;
  double f1 = 0.0;
  bool degenerate = false;  // no positive labels; fell back to 0.5
};

/// Smallest grid value maximizing binary F1 of (prob > threshold).
ThresholdResult search_threshold(std::span<const double> positive_probs,
                                 std::span<const int> labels, std::span<const double> grid);

struct Prediction {
  std::string id;
  double positive_prob = 0.0;
  int label = 0;
};

std::vector<Prediction> predict_labels(const TrainedHead& head,
                                       std::span<const corpus::EmbeddingRecord> records);

/// Stacks embeddings of the given records into a B x dim matrix.
Matrix stack_embeddings(std::span<const corpus::EmbeddingRecord> records,
                        std::span<const std::size_t> indices);

}  // namespace mft::train
