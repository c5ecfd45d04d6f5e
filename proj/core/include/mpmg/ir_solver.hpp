#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mpmg/multigrid.hpp"

namespace mpmg {

/// Outer iterative-refinement loop configuration.
struct IrConfig {
  enum class InitialGuess { Zeros, SeededRandom01 };
  enum class Scaling { VariantDefault, ForceOn, ForceOff };

  double outer_tolerance = 1e-9;  // euclidean residual norm bound
  int max_outer_iterations = 100;
  InitialGuess initial_guess = InitialGuess::Zeros;
  std::uint64_t seed = 0;
  /// Residuum scaling of the cast into the multigrid precision. The variant
  /// default scales for every variant except the FP64 baseline.
  Scaling scaling = Scaling::VariantDefault;
  int residual_refresh_interval = 10;  // from-scratch recomputation period
};

struct SolveReport {
  bool converged = false;
  int iterations = 0;
  /// Residual norms as seen by the convergence test: one entry per loop test,
  /// starting with the initial residual. Length is iterations + 1.
  std::vector<double> residual_history;
  /// ||b - A u|| recomputed from scratch after the loop.
  double final_residual = 0.0;
  TrafficCounter outer_traffic;
  std::vector<TrafficCounter> level_traffic;
  double wall_time_s = 0.0;
  std::optional<double> final_error_l2;

  TrafficCounter total_traffic() const {
    TrafficCounter t = outer_traffic;
    for (const auto& lt : level_traffic) t += lt;
    return t;
  }
};

struct IrResult {
  PVector u;
  SolveReport report;
};

/// Euclidean norm of b - A u with binary64 accumulation in a fixed order.
double residual_norm(const EllMatrix& A, const PVector& u, const PVector& b,
                     const ExecContext& ctx);

/// Mixed-precision iterative refinement with residuum scaling: FP64 residual
/// and update around one multigrid V-cycle per iteration. Throws
/// DivergedError if the residual norm becomes non-finite; returns a
/// non-converged report when the iteration budget runs out.
IrResult ir_solve(const EllMatrix& A_high, const PVector& b_high, MgHierarchy& hierarchy,
                  const IrConfig& config, const ExecContext& ctx);

}  // namespace mpmg
