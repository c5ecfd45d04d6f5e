#pragma once

#include "mpmg/ell_matrix.hpp"
#include "mpmg/traffic.hpp"
#include "mpmg/vector.hpp"

namespace mpmg {

/// y = A * x in the matrix's storage precision. A and x must share one
/// precision; binary16 partial sums accumulate per ctx.fp16_accumulation.
void spmv(const EllMatrix& A, const PVector& x, PVector& y, const ExecContext& ctx);
PVector spmv(const EllMatrix& A, const PVector& x, const ExecContext& ctx);

/// out = y + alpha * x, rounded per element in the common storage precision.
/// alpha is rounded into that precision first. out may alias x or y.
void axpy(double alpha, const PVector& x, const PVector& y, PVector& out, const ExecContext& ctx);
PVector axpy(double alpha, const PVector& x, const PVector& y, const ExecContext& ctx);

/// out_i = a_i * b_i in the common storage precision. out may alias inputs.
void vec_multiply(const PVector& a, const PVector& b, PVector& out, const ExecContext& ctx);
PVector vec_multiply(const PVector& a, const PVector& b, const ExecContext& ctx);

/// Fused refinement update: u += alpha * widen(c) and r -= alpha * A * widen(c),
/// all computed and stored in binary64. c may be stored in any precision and is
/// widened on read; each operand is touched once.
void update_residuum_correction(PVector& r, PVector& u, const EllMatrix& A, const PVector& c,
                                double alpha, const ExecContext& ctx);

/// out_i = round_target(x_i / scale): precision conversion fused with the
/// residuum scaling of the refinement loop. The division runs in binary64.
void cast_vector(const PVector& x, Precision target, double scale, PVector& out,
                 const ExecContext& ctx);
PVector cast_vector(const PVector& x, Precision target, double scale, const ExecContext& ctx);

/// Euclidean dot product / norm with binary64 accumulation in a fixed
/// (sequential) order, regardless of the storage precision.
double dot_fp64(const PVector& x, const PVector& y, const ExecContext& ctx);
double norm2_fp64(const PVector& x, const ExecContext& ctx);

}  // namespace mpmg
