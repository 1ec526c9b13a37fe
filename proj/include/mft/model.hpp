#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "mft/corpus.hpp"
#include "mft/tensor.hpp"

namespace mft::model {

/// Which penalty keeps the invariant projection well conditioned.
enum class NormPenalty {
  kIdentity,       // ||W_inv - I||_F^2
  kOrthogonality,  // ||W_inv^T W_inv - I||_F^2
};

std::string_view to_string(NormPenalty p);
NormPenalty norm_penalty_from_string(std::string_view name);

struct ModelConfig {
  std::size_t embed_dim = corpus::kDefaultDim;
  std::size_t hidden_dim = corpus::kDefaultDim;
  std::size_t num_classes = 2;
  std::size_t num_domains = 1;
  double lambda = 1.0;
  // Domain head and the two regularizers; only legal with num_domains >= 2.
  bool regularizers_enabled = false;
  bool use_bias = true;
  std::uint64_t init_seed = 0;
  double init_noise = 0.01;
  NormPenalty norm_penalty = NormPenalty::kIdentity;

  /// Throws on an inconsistent configuration.
  void validate() const;
  bool adversarial() const { return regularizers_enabled && num_domains >= 2; }
  bool operator==(const ModelConfig&) const = default;
};

enum class ParamGroup { kShared, kMoralHead, kDomainHead, kReconstruction };

struct ModelParams {
  Tensor w_inv;          // embed x embed
  Tensor moral_hidden;   // hidden x embed
  Tensor moral_hidden_bias;
  Tensor moral_out;      // classes x hidden
  Tensor moral_out_bias;
  Tensor domain_hidden;  // hidden x embed
  Tensor domain_hidden_bias;
  Tensor domain_out;     // domains x hidden
  Tensor domain_out_bias;
  Tensor w_rec;          // embed x embed

  static constexpr std::size_t kNumTensors = 10;
  static const std::array<std::string_view, kNumTensors>& names();
  static const std::array<ParamGroup, kNumTensors>& groups();

  std::array<Tensor*, kNumTensors> tensors();
  std::array<const Tensor*, kNumTensors> tensors() const;

  void zero_grad();
  std::size_t parameter_count() const;
  bool operator==(const ModelParams&) const = default;
};

/// Near-identity W_inv / W_rec, Glorot-uniform heads, zero biases.
ModelParams init_params(const ModelConfig& config);

struct ForwardTrace {
  std::vector<double> h;
  std::vector<double> moral_probs;   // length c
  std::vector<double> domain_probs;  // length d
  std::vector<double> e_rec;
  // Cached pre-activations.
  std::vector<double> moral_pre;
  std::vector<double> domain_pre;
};

ForwardTrace forward(const ModelParams& params, std::span<const double> embedding);

/// Batch-major inputs for the loss. embeddings is B x embed_dim.
struct Batch {
  Matrix embeddings;
  std::vector<int> moral_targets;   // 0 = absent, 1 = present
  std::vector<int> domain_targets;  // index into the head's domain list

  std::size_t size() const { return moral_targets.size(); }
};

struct MoralWeights {
  double negative = 1.0;
  double positive = 1.0;
  double of(int target) const { return target == 1 ? positive : negative; }
};

struct LossComponents {
  double total = 0.0;
  double ce_moral = 0.0;
  double ce_domain = 0.0;
  double l_norm = 0.0;
  double l_rec = 0.0;
  std::size_t clamped = 0;  // probabilities floored at 1e-12
};

/// ce_m - lambda * ce_d + l_norm + l_rec when adversarial, ce_m otherwise.
LossComponents total_loss(const ModelParams& params, const Batch& batch,
                          const MoralWeights& weights, const ModelConfig& config);

/// Which domain contribution reaches the shared projection in backward().
enum class SharedPath {
  kReversed,      // -lambda * d(ce_d)/d(shared), the training path
  kDetached,      // no domain contribution
  kDomainOnly,    // +d(ce_d)/d(shared) alone, nothing else on W_inv
};

/// Overwrites every gradient buffer in params. The domain head descends ce_d;
/// the shared projection receives the reversed domain gradient. Returns the
/// same components total_loss() reports.
LossComponents backward(ModelParams& params, const Batch& batch, const MoralWeights& weights,
                        const ModelConfig& config, SharedPath path = SharedPath::kReversed);

/// Positive-class probability for each row of embeddings.
std::vector<double> positive_probabilities(const ModelParams& params, const Matrix& embeddings);

}  // namespace mft::model
