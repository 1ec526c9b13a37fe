#include "mft/kernels.hpp"

#include <cstdint>

#include "mft/error.hpp"

namespace mft::kernels {

namespace {

constexpr std::size_t kTile = 64;

void check_affine(const Matrix& in, const Matrix& weight, const Matrix* bias, const Matrix& out) {
  if (in.cols() != weight.cols() || out.rows() != in.rows() || out.cols() != weight.rows() ||
      (bias && (bias->rows() != weight.rows() || bias->cols() != 1))) {
    throw Error(ErrorCode::kDimensionMismatch, "affine: shape mismatch");
  }
}

void check_backward_input(const Matrix& grad_out, const Matrix& weight, const Matrix& grad_in) {
  if (grad_out.cols() != weight.rows() || grad_in.rows() != grad_out.rows() ||
      grad_in.cols() != weight.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "affine_backward_input: shape mismatch");
  }
}

void check_accumulate(const Matrix& grad_out, const Matrix& in, const Matrix& grad_w,
                      const Matrix* grad_b) {
  if (grad_out.rows() != in.rows() || grad_w.rows() != grad_out.cols() ||
      grad_w.cols() != in.cols() || (grad_b && grad_b->rows() != grad_w.rows())) {
    throw Error(ErrorCode::kDimensionMismatch, "affine_accumulate: shape mismatch");
  }
}

// The per-element bodies below are shared by both drivers so the floating
// point summation order cannot drift between them.

inline double affine_entry(const Matrix& in, const Matrix& weight, const Matrix* bias,
                           std::size_t b, std::size_t o) {
  const auto x = in.row(b);
  const auto w = weight.row(o);
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * w[i];
  if (bias) acc += (*bias)(o, 0);
  return acc;
}

inline void backward_input_tile(const Matrix& grad_out, const Matrix& weight, Matrix& grad_in,
                                std::size_t b, std::size_t i0) {
  const std::size_t i1 = std::min(i0 + kTile, weight.cols());
  auto dst = grad_in.row(b);
  for (std::size_t i = i0; i < i1; ++i) dst[i] = 0.0;
  for (std::size_t o = 0; o < weight.rows(); ++o) {
    const double g = grad_out(b, o);
    if (g == 0.0) continue;
    const auto w = weight.row(o);
    for (std::size_t i = i0; i < i1; ++i) dst[i] += g * w[i];
  }
}

inline void accumulate_row(const Matrix& grad_out, const Matrix& in, Matrix& grad_w,
                           Matrix* grad_b, std::size_t o) {
  auto dst = grad_w.row(o);
  double bias_acc = 0.0;
  for (std::size_t b = 0; b < in.rows(); ++b) {
    const double g = grad_out(b, o);
    bias_acc += g;
    if (g == 0.0) continue;
    const auto x = in.row(b);
    for (std::size_t i = 0; i < x.size(); ++i) dst[i] += g * x[i];
  }
  if (grad_b) (*grad_b)(o, 0) += bias_acc;
}

bool worth_parallel(std::size_t work) { return work >= kParallelWorkThreshold; }

}  // namespace

namespace serial {

void affine(const Matrix& in, const Matrix& weight, const Matrix* bias, Matrix& out) {
  check_affine(in, weight, bias, out);
  for (std::size_t b = 0; b < in.rows(); ++b) {
    for (std::size_t o = 0; o < weight.rows(); ++o) out(b, o) = affine_entry(in, weight, bias, b, o);
  }
}

void affine_backward_input(const Matrix& grad_out, const Matrix& weight, Matrix& grad_in) {
  check_backward_input(grad_out, weight, grad_in);
  for (std::size_t b = 0; b < grad_out.rows(); ++b) {
    for (std::size_t i0 = 0; i0 < weight.cols(); i0 += kTile) {
      backward_input_tile(grad_out, weight, grad_in, b, i0);
    }
  }
}

void affine_accumulate(const Matrix& grad_out, const Matrix& in, Matrix& grad_w, Matrix* grad_b) {
  check_accumulate(grad_out, in, grad_w, grad_b);
  for (std::size_t o = 0; o < grad_w.rows(); ++o) accumulate_row(grad_out, in, grad_w, grad_b, o);
}

}  // namespace serial

namespace parallel {

void affine(const Matrix& in, const Matrix& weight, const Matrix* bias, Matrix& out) {
  check_affine(in, weight, bias, out);
  const auto batch = static_cast<std::int64_t>(in.rows());
  const auto outs = static_cast<std::int64_t>(weight.rows());
  const bool par = worth_parallel(in.rows() * weight.rows() * weight.cols());
#pragma omp parallel for collapse(2) schedule(static) if (par)
  for (std::int64_t b = 0; b < batch; ++b) {
    for (std::int64_t o = 0; o < outs; ++o) {
      out(static_cast<std::size_t>(b), static_cast<std::size_t>(o)) =
          affine_entry(in, weight, bias, static_cast<std::size_t>(b), static_cast<std::size_t>(o));
    }
  }
}

void affine_backward_input(const Matrix& grad_out, const Matrix& weight, Matrix& grad_in) {
  check_backward_input(grad_out, weight, grad_in);
  const auto batch = static_cast<std::int64_t>(grad_out.rows());
  const auto tiles = static_cast<std::int64_t>((weight.cols() + kTile - 1) / kTile);
  const bool par = worth_parallel(grad_out.rows() * weight.rows() * weight.cols());
#pragma omp parallel for collapse(2) schedule(static) if (par)
  for (std::int64_t b = 0; b < batch; ++b) {
    for (std::int64_t t = 0; t < tiles; ++t) {
      backward_input_tile(grad_out, weight, grad_in, static_cast<std::size_t>(b),
                          static_cast<std::size_t>(t) * kTile);
    }
  }
}

void affine_accumulate(const Matrix& grad_out, const Matrix& in, Matrix& grad_w, Matrix* grad_b) {
  check_accumulate(grad_out, in, grad_w, grad_b);
  const auto outs = static_cast<std::int64_t>(grad_w.rows());
  const bool par = worth_parallel(in.rows() * grad_w.rows() * grad_w.cols());
#pragma omp parallel for schedule(static) if (par)
  for (std::int64_t o = 0; o < outs; ++o) {
    accumulate_row(grad_out, in, grad_w, grad_b, static_cast<std::size_t>(o));
  }
}

}  // namespace parallel

}  // namespace mft::kernels
