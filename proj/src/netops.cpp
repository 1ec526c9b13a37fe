#include "mft/netops.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mft/error.hpp"

namespace mft::netops {

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double x) { return std::isfinite(x); });
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw Error(ErrorCode::kInvalidArgument, "softmax: empty input");
  if (!all_finite(logits)) throw Error(ErrorCode::kNumeric, "softmax: non-finite logit");
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    total += out[i];
  }
  for (double& p : out) p /= total;
  return out;
}

double weighted_cross_entropy(std::span<const double> probs, std::size_t target,
                              double class_weight) {
  if (target >= probs.size()) throw Error(ErrorCode::kInvalidArgument, "cross_entropy: target out of range");
  if (class_weight < 0.0) throw Error(ErrorCode::kInvalidArgument, "cross_entropy: negative class weight");
  double p = probs[target];
  if (p < kProbabilityFloor) {
    warn("cross_entropy: target probability below 1e-12, clamped");
    p = kProbabilityFloor;
  }
  if (class_weight == 0.0) return 0.0;
  return -class_weight * std::log(p);
}

std::vector<double> grad_reverse(std::span<const double> upstream, double lambda) {
  std::vector<double> out(upstream.begin(), upstream.end());
  grad_reverse_inplace(out, lambda);
  return out;
}

void grad_reverse_inplace(std::span<double> upstream, double lambda) {
  if (lambda < 0.0) throw Error(ErrorCode::kInvalidArgument, "grad_reverse: lambda must be >= 0");
  for (double& g : upstream) g = -lambda * g;
}

void adam_step(Tensor& param, AdamState& state, double lr) {
  if (!(lr > 0.0)) throw Error(ErrorCode::kInvalidArgument, "adam_step: lr must be > 0");
  auto values = param.value.flat();
  const auto grads = param.grad.flat();
  if (state.m.size() != values.size() || state.v.size() != values.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "adam_step: state shape does not match parameter");
  }
  if (!all_finite(grads)) throw Error(ErrorCode::kNumeric, "adam_step: non-finite gradient");

  const auto& h = state.hyper;
  ++state.t;
  const double t = static_cast<double>(state.t);
  const double correction1 = 1.0 - std::pow(h.beta1, t);
  const double correction2 = 1.0 - std::pow(h.beta2, t);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double g = grads[i];
    state.m[i] = h.beta1 * state.m[i] + (1.0 - h.beta1) * g;
    state.v[i] = h.beta2 * state.v[i] + (1.0 - h.beta2) * g * g;
    const double m_hat = state.m[i] / correction1;
    const double v_hat = state.v[i] / correction2;
    values[i] -= lr * m_hat / (std::sqrt(v_hat) + h.epsilon);
  }
}

double finite_diff_check(const FlatLoss& loss, std::span<const double> params,
                         std::span<const double> analytic, double eps) {
  if (params.size() != analytic.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "finite_diff_check: gradient size mismatch");
  }
  if (!(eps >= 1e-6 && eps <= 1e-3)) {
    throw Error(ErrorCode::kInvalidArgument, "finite_diff_check: eps must lie in [1e-6, 1e-3]");
  }
  std::vector<double> w(params.begin(), params.end());
  const double base = loss(w);
  if (loss(w) != base) {
    throw Error(ErrorCode::kNonDeterministic, "finite_diff_check: loss is not deterministic");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double original = w[i];
    w[i] = original + eps;
    const double up = loss(w);
    w[i] = original - eps;
    const double down = loss(w);
    w[i] = original;
    const double numeric = (up - down) / (2.0 * eps);
    const double err = std::abs(analytic[i] - numeric) / std::max(1e-8, std::abs(numeric));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace mft::netops
