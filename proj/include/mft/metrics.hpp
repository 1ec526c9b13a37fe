#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mft/foundation.hpp"

namespace mft::metrics {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  bool operator==(const ConfusionCounts&) const = default;
};

ConfusionCounts confusion(std::span<const int> preds, std::span<const int> gold);

struct PrfScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // Set when any of the three was a 0/0 and reported as 0.
  bool degenerate = false;
};

PrfScores binary_prf(const ConfusionCounts& counts);

/// Support-weighted mean of the positive-class and negative-class F1.
double f1_weighted(std::span<const int> preds, std::span<const int> gold);
double f1_weighted(const ConfusionCounts& counts);

double accuracy(std::span<const int> preds, std::span<const int> gold);

/// Chance-corrected agreement between two binary annotations.
double cohens_kappa(std::span<const int> a1, std::span<const int> a2);

using MetricFn = std::function<double(std::span<const int> preds, std::span<const int> gold)>;

struct BootstrapEstimate {
  double mean = 0.0;
  double std = 0.0;  // population std over resamples
  std::size_t n_resamples = 0;
};

/// Resamples instance indices with replacement. Resample r draws from a
/// generator seeded by (seed, r), so results do not depend on thread count.
BootstrapEstimate bootstrap(std::span<const int> preds, std::span<const int> gold,
                            const MetricFn& metric, std::size_t n_resamples, std::uint64_t seed);

/// Serial reference of bootstrap(); identical output.
BootstrapEstimate bootstrap_serial(std::span<const int> preds, std::span<const int> gold,
                                   const MetricFn& metric, std::size_t n_resamples,
                                   std::uint64_t seed);

double binary_precision_metric(std::span<const int> preds, std::span<const int> gold);
double binary_recall_metric(std::span<const int> preds, std::span<const int> gold);
double binary_f1_metric(std::span<const int> preds, std::span<const int> gold);

struct MetricValue {
  double point = 0.0;
  std::optional<BootstrapEstimate> boot;
};

struct FoundationReport {
  Foundation foundation = Foundation::kCare;
  ConfusionCounts counts;
  MetricValue precision_binary;
  MetricValue recall_binary;
  MetricValue f1_binary;
  MetricValue f1_weighted;
  bool degenerate = false;
  std::size_t n_instances = 0;
};

struct MetricReport {
  std::vector<FoundationReport> foundations;
};

/// Scores one foundation; n_resamples == 0 skips the bootstrap.
FoundationReport evaluate_foundation(Foundation f, std::span<const int> preds,
                                     std::span<const int> gold, std::size_t n_resamples,
                                     std::uint64_t seed);

nlohmann::json to_json(const MetricReport& report);

}  // namespace mft::metrics
