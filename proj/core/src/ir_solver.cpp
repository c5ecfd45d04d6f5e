#include "mpmg/ir_solver.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

#include "mpmg/errors.hpp"
#include "mpmg/rng.hpp"

namespace mpmg {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

double residual_norm(const EllMatrix& A, const PVector& u, const PVector& b,
                     const ExecContext& ctx) {
  require(A.precision() == Precision::FP64 && u.precision() == Precision::FP64 &&
              b.precision() == Precision::FP64,
          "residual_norm: binary64 operands required");
  require(A.rows() == A.cols() && u.size() == A.rows() && b.size() == A.rows(),
          "residual_norm: dimension mismatch");
  const auto vals = A.f64();
  const auto cols = A.col_data();
  const auto us = u.f64();
  const auto bs = b.f64();
  const int rw = A.row_width();
  const std::size_t n = A.rows();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t base = i * static_cast<std::size_t>(rw);
    double s = 0.0;
    for (int j = 0; j < rw; ++j) s = std::fma(vals[base + j], us[cols[base + j]], s);
    const double r = bs[i] - s;
    acc = std::fma(r, r, acc);
  }
  if (ctx.traffic) {
    const std::uint64_t slots = n * static_cast<std::uint64_t>(rw);
    ctx.traffic->value_bytes_read += slots * 8 * 2 + n * 8;
    ctx.traffic->index_bytes_read += slots * sizeof(std::int32_t);
    ctx.traffic->flops += 2 * slots + 3 * n + 1;
  }
  return std::sqrt(acc);
}

IrResult ir_solve(const EllMatrix& A_high, const PVector& b_high, MgHierarchy& hierarchy,
                  const IrConfig& config, const ExecContext& caller_ctx) {
  require(A_high.precision() == Precision::FP64 && b_high.precision() == Precision::FP64,
          "ir_solve: the outer system must be binary64");
  require(A_high.rows() == A_high.cols() && b_high.size() == A_high.rows(),
          "ir_solve: dimension mismatch");
  require(A_high.rows() == hierarchy.level(hierarchy.levels() - 1).unknowns(),
          "ir_solve: hierarchy does not match the system size");
  require(config.outer_tolerance > 0.0, "ir_solve: tolerance must be positive");

  const auto t_start = std::chrono::steady_clock::now();

  IrResult result;
  SolveReport& report = result.report;
  const ExecContext ctx = caller_ctx.with_counter(&report.outer_traffic);
  hierarchy.reset_traffic();

  const std::size_t n = A_high.rows();
  const Precision mg_precision = hierarchy.finest_precision();
  const bool scale_enabled = [&] {
    switch (config.scaling) {
      case IrConfig::Scaling::ForceOn: return true;
      case IrConfig::Scaling::ForceOff: return false;
      default: return hierarchy.variant() != MgVariant::D_MG;
    }
  }();

  PVector& u = result.u;
  u = PVector(n, Precision::FP64);
  if (config.initial_guess == IrConfig::InitialGuess::SeededRandom01) {
    SplitMix64 rng(config.seed);
    auto ud = u.f64();
    for (std::size_t i = 0; i < n; ++i) ud[i] = rng.next_double();
  }

  PVector r(n, Precision::FP64);
  PVector t(n, Precision::FP64);
  PVector r_low(n, mg_precision);
  PVector c_low(n, mg_precision);

  // r = b - A u0
  spmv(A_high, u, t, ctx);
  axpy(-1.0, t, b_high, r, ctx);

  while (true) {
    const double alpha = norm2_fp64(r, ctx);
    report.residual_history.push_back(alpha);
    if (!std::isfinite(alpha)) {
      throw DivergedError(report.iterations,
                          "ir_solve: non-finite residual norm at iteration " +
                              std::to_string(report.iterations));
    }
    if (alpha < config.outer_tolerance) {
      report.converged = true;
      break;
    }
    if (report.iterations >= config.max_outer_iterations) break;

    const double scale = scale_enabled && alpha > 0.0 ? alpha : 1.0;
    cast_vector(r, mg_precision, scale, r_low, ctx);
    hierarchy.v_cycle(r_low, c_low, caller_ctx);
    update_residuum_correction(r, u, A_high, c_low, scale, ctx);
    ++report.iterations;

    if (config.residual_refresh_interval > 0 &&
        report.iterations % config.residual_refresh_interval == 0) {
      spmv(A_high, u, t, ctx);
      axpy(-1.0, t, b_high, r, ctx);
    }
  }

  report.final_residual = residual_norm(A_high, u, b_high, ctx);
  report.level_traffic = hierarchy.level_traffic();
  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return result;
}

}  // namespace mpmg
