#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mft/tensor.hpp"

namespace mft::netops {

/// Numerically stable softmax (max-subtracted). Throws on non-finite input.
std::vector<double> softmax(std::span<const double> logits);

inline constexpr double kProbabilityFloor = 1e-12;

/// -class_weight * ln(probs[target]); probs[target] is clamped to 1e-12.
double weighted_cross_entropy(std::span<const double> probs, std::size_t target,
                              double class_weight);

/// Backward pass of the gradient reversal layer: -lambda * upstream.
/// The forward pass is the identity and needs no function.
std::vector<double> grad_reverse(std::span<const double> upstream, double lambda);
void grad_reverse_inplace(std::span<double> upstream, double lambda);

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;
  AdamHyper hyper;

  AdamState() = default;
  explicit AdamState(std::size_t n, AdamHyper h = {}) : m(n, 0.0), v(n, 0.0), hyper(h) {}
};

/// One bias-corrected Adam update of param.value from param.grad. The
/// gradient buffer is left untouched; the caller zeroes it.
void adam_step(Tensor& param, AdamState& state, double lr);

/// Loss evaluated at a full flat parameter vector.
using FlatLoss = std::function<double(std::span<const double>)>;

/// Max over coordinates of |analytic - numeric| / max(1e-8, |numeric|), where
/// numeric is the central difference (f(w+eps) - f(w-eps)) / (2 eps).
double finite_diff_check(const FlatLoss& loss, std::span<const double> params,
                         std::span<const double> analytic, double eps);

/// True iff every entry is finite.
bool all_finite(std::span<const double> values);

}  // namespace mft::netops
