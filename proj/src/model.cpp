#include "mft/model.hpp"

#include <cmath>
#include <random>

#include "mft/error.hpp"
#include "mft/kernels.hpp"
#include "mft/netops.hpp"

namespace mft::model {

namespace k = kernels::parallel;

std::string_view to_string(NormPenalty p) {
  return p == NormPenalty::kIdentity ? "identity" : "orthogonality";
}

NormPenalty norm_penalty_from_string(std::string_view name) {
  if (name == "identity") return NormPenalty::kIdentity;
  if (name == "orthogonality") return NormPenalty::kOrthogonality;
  throw Error(ErrorCode::kInvalidArgument, "unknown norm penalty '" + std::string(name) + "'");
}

void ModelConfig::validate() const {
  if (embed_dim == 0 || hidden_dim == 0) {
    throw Error(ErrorCode::kInvalidArgument, "model: dimensions must be positive");
  }
  if (num_classes != 2) throw Error(ErrorCode::kInvalidArgument, "model: num_classes must be 2");
  if (num_domains < 1) throw Error(ErrorCode::kInvalidArgument, "model: num_domains must be >= 1");
  if (lambda < 0.0) throw Error(ErrorCode::kInvalidArgument, "model: lambda must be >= 0");
  if (regularizers_enabled && num_domains < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "model: regularizers require multi-domain training (num_domains >= 2)");
  }
}

const std::array<std::string_view, ModelParams::kNumTensors>& ModelParams::names() {
  static const std::array<std::string_view, kNumTensors> n = {
      "w_inv",         "moral_hidden",       "moral_hidden_bias", "moral_out",
      "moral_out_bias", "domain_hidden",     "domain_hidden_bias", "domain_out",
      "domain_out_bias", "w_rec"};
  return n;
}

const std::array<ParamGroup, ModelParams::kNumTensors>& ModelParams::groups() {
  using G = ParamGroup;
  static const std::array<ParamGroup, kNumTensors> g = {
      G::kShared,     G::kMoralHead,  G::kMoralHead,  G::kMoralHead,  G::kMoralHead,
      G::kDomainHead, G::kDomainHead, G::kDomainHead, G::kDomainHead, G::kReconstruction};
  return g;
}

std::array<Tensor*, ModelParams::kNumTensors> ModelParams::tensors() {
  return {&w_inv,         &moral_hidden, &moral_hidden_bias, &moral_out,       &moral_out_bias,
          &domain_hidden, &domain_hidden_bias, &domain_out,  &domain_out_bias, &w_rec};
}

std::array<const Tensor*, ModelParams::kNumTensors> ModelParams::tensors() const {
  return {&w_inv,         &moral_hidden, &moral_hidden_bias, &moral_out,       &moral_out_bias,
          &domain_hidden, &domain_hidden_bias, &domain_out,  &domain_out_bias, &w_rec};
}

void ModelParams::zero_grad() {
  for (auto* t : tensors()) t->zero_grad();
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto* t : tensors()) n += t->value.size();
  return n;
}

ModelParams init_params(const ModelConfig& config) {
  config.validate();
  const auto e = config.embed_dim;
  const auto hid = config.hidden_dim;
  std::mt19937_64 rng(config.init_seed);

  auto near_identity = [&](std::size_t n) {
    Tensor t(Matrix::identity(n));
    if (config.init_noise > 0.0) {
      std::uniform_real_distribution<double> noise(-config.init_noise, config.init_noise);
      for (double& v : t.value.flat()) v += noise(rng);
    }
    return t;
  };
  auto glorot = [&](std::size_t rows, std::size_t cols) {
    Tensor t(rows, cols);
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : t.value.flat()) v = dist(rng);
    return t;
  };

  ModelParams p;
  p.w_inv = near_identity(e);
  p.moral_hidden = glorot(hid, e);
  p.moral_hidden_bias = Tensor(hid, 1);
  p.moral_out = glorot(config.num_classes, hid);
  p.moral_out_bias = Tensor(config.num_classes, 1);
  p.domain_hidden = glorot(hid, e);
  p.domain_hidden_bias = Tensor(hid, 1);
  p.domain_out = glorot(config.num_domains, hid);
  p.domain_out_bias = Tensor(config.num_domains, 1);
  p.w_rec = near_identity(e);
  return p;
}

namespace {

struct Activations {
  Matrix h;
  Matrix moral_pre, moral_act, moral_probs;
  Matrix domain_pre, domain_act, domain_probs;
  Matrix e_rec;
};

void relu(const Matrix& pre, Matrix& act) {
  const auto src = pre.flat();
  auto dst = act.flat();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > 0.0 ? src[i] : 0.0;
}

void softmax_rows(const Matrix& logits, Matrix& probs) {
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto p = netops::softmax(logits.row(r));
    std::copy(p.begin(), p.end(), probs.row(r).begin());
  }
}

// Forward over a batch. The domain branch and reconstruction are evaluated
// only when requested.
Activations run_forward(const ModelParams& p, const Matrix& e, bool domain_branch,
                        bool reconstruction) {
  if (e.cols() != p.w_inv.value.cols()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "model: embedding has " + std::to_string(e.cols()) + " values, expected " +
                    std::to_string(p.w_inv.value.cols()));
  }
  const auto batch = e.rows();
  const auto hid = p.moral_hidden.value.rows();
  Activations a;
  a.h = Matrix(batch, p.w_inv.value.rows());
  k::affine(e, p.w_inv.value, nullptr, a.h);

  a.moral_pre = Matrix(batch, hid);
  a.moral_act = Matrix(batch, hid);
  a.moral_probs = Matrix(batch, p.moral_out.value.rows());
  k::affine(a.h, p.moral_hidden.value, &p.moral_hidden_bias.value, a.moral_pre);
  relu(a.moral_pre, a.moral_act);
  Matrix logits(batch, p.moral_out.value.rows());
  k::affine(a.moral_act, p.moral_out.value, &p.moral_out_bias.value, logits);
  softmax_rows(logits, a.moral_probs);

  if (domain_branch) {
    a.domain_pre = Matrix(batch, p.domain_hidden.value.rows());
    a.domain_act = Matrix(batch, p.domain_hidden.value.rows());
    a.domain_probs = Matrix(batch, p.domain_out.value.rows());
    k::affine(a.h, p.domain_hidden.value, &p.domain_hidden_bias.value, a.domain_pre);
    relu(a.domain_pre, a.domain_act);
    Matrix dlogits(batch, p.domain_out.value.rows());
    k::affine(a.domain_act, p.domain_out.value, &p.domain_out_bias.value, dlogits);
    softmax_rows(dlogits, a.domain_probs);
  }
  if (reconstruction) {
    a.e_rec = Matrix(batch, p.w_rec.value.rows());
    k::affine(a.h, p.w_rec.value, nullptr, a.e_rec);
  }
  return a;
}

double clamped_log(double p, std::size_t& clamped) {
  if (p < netops::kProbabilityFloor) {
    ++clamped;
    p = netops::kProbabilityFloor;
  }
  return std::log(p);
}

double norm_penalty(const Matrix& w, NormPenalty kind) {
  const auto n = w.rows();
  double acc = 0.0;
  if (kind == NormPenalty::kIdentity) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double d = w(i, j) - (i == j ? 1.0 : 0.0);
        acc += d * d;
      }
    }
    return acc;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double g = 0.0;
      for (std::size_t r = 0; r < n; ++r) g += w(r, i) * w(r, j);
      const double d = g - (i == j ? 1.0 : 0.0);
      acc += d * d;
    }
  }
  return acc;
}

void add_norm_penalty_grad(const Matrix& w, NormPenalty kind, Matrix& grad) {
  const auto n = w.rows();
  if (kind == NormPenalty::kIdentity) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) grad(i, j) += 2.0 * (w(i, j) - (i == j ? 1.0 : 0.0));
    }
    return;
  }
  // d/dW ||W^T W - I||^2 = 4 W (W^T W - I)
  Matrix gram(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double g = 0.0;
      for (std::size_t r = 0; r < n; ++r) g += w(r, i) * w(r, j);
      gram(i, j) = g - (i == j ? 1.0 : 0.0);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t r = 0; r < n; ++r) acc += w(i, r) * gram(r, j);
      grad(i, j) += 4.0 * acc;
    }
  }
}

void check_batch(const Batch& batch, const ModelConfig& config) {
  config.validate();
  if (batch.size() == 0) throw Error(ErrorCode::kInvalidArgument, "model: empty batch");
  if (batch.embeddings.rows() != batch.size() || batch.domain_targets.size() != batch.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "model: batch arrays disagree in length");
  }
  for (std::size_t b = 0; b < batch.size(); ++b) {
    if (batch.moral_targets[b] != 0 && batch.moral_targets[b] != 1) {
      throw Error(ErrorCode::kInvalidArgument, "model: moral target must be 0 or 1");
    }
    if (batch.domain_targets[b] < 0 ||
        static_cast<std::size_t>(batch.domain_targets[b]) >= config.num_domains) {
      throw Error(ErrorCode::kInvalidArgument, "model: domain target out of range");
    }
  }
}

LossComponents compute_loss(const ModelParams& p, const Activations& a, const Batch& batch,
                            const MoralWeights& weights, const ModelConfig& config) {
  const auto n = static_cast<double>(batch.size());
  LossComponents out;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const int y = batch.moral_targets[b];
    const double w = weights.of(y);
    const double logp = clamped_log(a.moral_probs(b, static_cast<std::size_t>(y)), out.clamped);
    if (w != 0.0) out.ce_moral -= w * logp;
  }
  out.ce_moral /= n;
  out.total = out.ce_moral;
  if (!config.adversarial()) return out;

  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto d = static_cast<std::size_t>(batch.domain_targets[b]);
    out.ce_domain -= clamped_log(a.domain_probs(b, d), out.clamped);
  }
  out.ce_domain /= n;
  out.l_norm = norm_penalty(p.w_inv.value, config.norm_penalty);
  double rec = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    for (std::size_t i = 0; i < a.e_rec.cols(); ++i) {
      const double d = a.e_rec(b, i) - batch.embeddings(b, i);
      rec += d * d;
    }
  }
  out.l_rec = rec / n;
  out.total = out.ce_moral - config.lambda * out.ce_domain + out.l_norm + out.l_rec;
  return out;
}

void relu_backward(const Matrix& pre, Matrix& grad) {
  const auto src = pre.flat();
  auto g = grad.flat();
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (!(src[i] > 0.0)) g[i] = 0.0;
  }
}

}  // namespace

ForwardTrace forward(const ModelParams& params, std::span<const double> embedding) {
  Matrix e(1, embedding.size());
  std::copy(embedding.begin(), embedding.end(), e.row(0).begin());
  const auto a = run_forward(params, e, true, true);
  auto row = [](const Matrix& m) {
    const auto r = m.row(0);
    return std::vector<double>(r.begin(), r.end());
  };
  ForwardTrace t;
  t.h = row(a.h);
  t.moral_probs = row(a.moral_probs);
  t.domain_probs = row(a.domain_probs);
  t.e_rec = row(a.e_rec);
  t.moral_pre = row(a.moral_pre);
  t.domain_pre = row(a.domain_pre);
  return t;
}

LossComponents total_loss(const ModelParams& params, const Batch& batch,
                          const MoralWeights& weights, const ModelConfig& config) {
  check_batch(batch, config);
  const bool adv = config.adversarial();
  const auto a = run_forward(params, batch.embeddings, adv, adv);
  return compute_loss(params, a, batch, weights, config);
}

LossComponents backward(ModelParams& p, const Batch& batch, const MoralWeights& weights,
                        const ModelConfig& config, SharedPath path) {
  check_batch(batch, config);
  const bool adv = config.adversarial();
  const auto a = run_forward(p, batch.embeddings, adv, adv);
  const auto loss = compute_loss(p, a, batch, weights, config);
  p.zero_grad();

  const auto n = static_cast<double>(batch.size());
  const auto bsz = batch.size();
  const auto embed = p.w_inv.value.rows();
  Matrix* no_bias = nullptr;

  // Moral head: d(ce_m)/d(logits) = w_y / B * (probs - onehot).
  Matrix d_logits(bsz, p.moral_out.value.rows());
  for (std::size_t b = 0; b < bsz; ++b) {
    const int y = batch.moral_targets[b];
    const double scale = weights.of(y) / n;
    for (std::size_t c = 0; c < d_logits.cols(); ++c) {
      const double target = static_cast<int>(c) == y ? 1.0 : 0.0;
      d_logits(b, c) = scale * (a.moral_probs(b, c) - target);
    }
  }
  k::affine_accumulate(d_logits, a.moral_act, p.moral_out.grad,
                       config.use_bias ? &p.moral_out_bias.grad : no_bias);
  Matrix d_hidden(bsz, p.moral_hidden.value.rows());
  k::affine_backward_input(d_logits, p.moral_out.value, d_hidden);
  relu_backward(a.moral_pre, d_hidden);
  k::affine_accumulate(d_hidden, a.h, p.moral_hidden.grad,
                       config.use_bias ? &p.moral_hidden_bias.grad : no_bias);

  Matrix d_h(bsz, embed);
  if (path != SharedPath::kDomainOnly) {
    k::affine_backward_input(d_hidden, p.moral_hidden.value, d_h);
  }

  if (adv) {
    // Domain head descends ce_d.
    Matrix d_dlogits(bsz, p.domain_out.value.rows());
    for (std::size_t b = 0; b < bsz; ++b) {
      const auto y = static_cast<std::size_t>(batch.domain_targets[b]);
      for (std::size_t c = 0; c < d_dlogits.cols(); ++c) {
        d_dlogits(b, c) = (a.domain_probs(b, c) - (c == y ? 1.0 : 0.0)) / n;
      }
    }
    k::affine_accumulate(d_dlogits, a.domain_act, p.domain_out.grad,
                         config.use_bias ? &p.domain_out_bias.grad : no_bias);
    Matrix d_dhidden(bsz, p.domain_hidden.value.rows());
    k::affine_backward_input(d_dlogits, p.domain_out.value, d_dhidden);
    relu_backward(a.domain_pre, d_dhidden);
    k::affine_accumulate(d_dhidden, a.h, p.domain_hidden.grad,
                         config.use_bias ? &p.domain_hidden_bias.grad : no_bias);

    if (path != SharedPath::kDetached) {
      Matrix d_h_domain(bsz, embed);
      k::affine_backward_input(d_dhidden, p.domain_hidden.value, d_h_domain);
      // Gradient reversal between h and the domain head.
      if (path == SharedPath::kReversed) netops::grad_reverse_inplace(d_h_domain.flat(), config.lambda);
      auto dst = d_h.flat();
      const auto src = d_h_domain.flat();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }

    // Reconstruction: d(l_rec)/d(e_rec) = 2/B (e_rec - e).
    Matrix d_rec(bsz, embed);
    for (std::size_t b = 0; b < bsz; ++b) {
      for (std::size_t i = 0; i < embed; ++i) {
        d_rec(b, i) = 2.0 / n * (a.e_rec(b, i) - batch.embeddings(b, i));
      }
    }
    k::affine_accumulate(d_rec, a.h, p.w_rec.grad, nullptr);
    if (path != SharedPath::kDomainOnly) {
      Matrix d_h_rec(bsz, embed);
      k::affine_backward_input(d_rec, p.w_rec.value, d_h_rec);
      auto dst = d_h.flat();
      const auto src = d_h_rec.flat();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
      add_norm_penalty_grad(p.w_inv.value, config.norm_penalty, p.w_inv.grad);
    }
  }

  k::affine_accumulate(d_h, batch.embeddings, p.w_inv.grad, nullptr);
  return loss;
}

std::vector<double> positive_probabilities(const ModelParams& params, const Matrix& embeddings) {
  const auto a = run_forward(params, embeddings, false, false);
  std::vector<double> out(embeddings.rows());
  for (std::size_t b = 0; b < out.size(); ++b) out[b] = a.moral_probs(b, 1);
  return out;
}

}  // namespace mft::model
