#pragma once

// Dense kernels behind the adversarial head. Every kernel exists twice: a
// plain serial reference and an OpenMP version whose outer loop is split
// across threads. Inner summation order is identical in both, so results are
// bit-identical and independent of the thread count.
//
// Batches are row-major: one instance per row.

#include <cstddef>

#include "mft/tensor.hpp"

namespace mft::kernels {

namespace serial {

/// out = in * W^T (+ bias). in: B x I, W: O x I, bias: O x 1 or empty, out: B x O.
void affine(const Matrix& in, const Matrix& weight, const Matrix* bias, Matrix& out);
/// grad_in = grad_out * W.  grad_out: B x O, W: O x I, grad_in: B x I.
void affine_backward_input(const Matrix& grad_out, const Matrix& weight, Matrix& grad_in);
/// grad_w += grad_out^T * in; grad_b += column sums of grad_out (if non-null).
void affine_accumulate(const Matrix& grad_out, const Matrix& in, Matrix& grad_w, Matrix* grad_b);

}  // namespace serial

namespace parallel {

void affine(const Matrix& in, const Matrix& weight, const Matrix* bias, Matrix& out);
void affine_backward_input(const Matrix& grad_out, const Matrix& weight, Matrix& grad_in);
void affine_accumulate(const Matrix& grad_out, const Matrix& in, Matrix& grad_w, Matrix* grad_b);

}  // namespace parallel

/// Below this many multiply-adds the parallel kernels run on one thread.
inline constexpr std::size_t kParallelWorkThreshold = 1U << 15;

}  // namespace mft::kernels
