#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "mpmg/ell_matrix.hpp"
#include "mpmg/kernels.hpp"
#include "mpmg/mesh_fem.hpp"
#include "mpmg/traffic.hpp"
#include "mpmg/vector.hpp"

namespace mpmg {

/// Precision cascade of the multigrid cycle. Names read fine-to-coarse:
/// DSH runs the fine levels in FP64 and the base in FP16, HSD the reverse.
enum class MgVariant { D_MG, H_MG, DSH_MG, HSD_MG };

std::string_view variant_name(MgVariant v);
std::optional<MgVariant> parse_variant(std::string_view name);

/// Per-level precision assignment of a variant.
struct VariantConfig {
  MgVariant variant = MgVariant::D_MG;
  std::vector<Precision> level_precision;  // index 0 = coarsest
  bool rescale_fp16_restrictions = false;  // extra residuum scaling (DSH only)

  static VariantConfig make(MgVariant v, int levels);
};

struct SmootherConfig {
  int pre_steps = 3;
  int post_steps = 3;
  double omega = 2.0 / 3.0;
};

/// Base-level CG stopping rule. The residual norm is always accumulated in
/// binary64; the tolerance applies relative to the norm of the base-level
/// right-hand side so that the stopping rule is invariant under the residuum
/// scaling of the outer loop (see README notes on the FP64 baseline).
struct BaseSolverConfig {
  enum class ToleranceMode { RelativeToRhs, Absolute };
  double tolerance = 1e-4;
  int max_iterations = 0;  // 0 = 10x the base-level unknown count
  ToleranceMode mode = ToleranceMode::RelativeToRhs;
};

struct CgResult {
  int iterations = 0;
  bool converged = false;
  double final_residual = 0.0;
};

/// One grid level: operator, Jacobi diagonal and the transfer pair that
/// connects it to the next finer level (absent on the finest level). A, the
/// inverse diagonal, P and R all share the level's storage precision.
struct GridLevel {
  Precision precision = Precision::FP64;
  EllMatrix A;
  PVector inv_diag;
  EllMatrix prolong_to_finer;
  EllMatrix restrict_from_finer;
  bool has_finer = false;

  // scratch owned by one in-flight solve
  PVector u, b, r, t;

  std::size_t unknowns() const { return A.rows(); }
};

/// Damped Jacobi relaxation: u <- u + omega * inv_diag .* (b - A u), applied
/// `steps` times entirely in the level's precision.
void jacobi_smooth(GridLevel& level, const PVector& b, PVector& u, int steps, double omega,
                   const ExecContext& ctx);

/// Conjugate gradients from a zero initial guess in the storage precision of
/// A and b, with binary64 dot products. Stops on the from-scratch residual
/// norm ||b - A u||, never fails on reaching max_iterations (returns the best
/// iterate seen, flagged as not converged).
CgResult cg_solve(const EllMatrix& A, const PVector& b, PVector& u, const BaseSolverConfig& cfg,
                  const ExecContext& ctx);

/// r_coarse = cast(R * r_fine) with the product computed in the precision of
/// the finer level. When `rescale` is set and the target is binary16 the
/// product is divided by its euclidean norm before the cast; the scale factor
/// is returned so the prolonged correction can compensate it exactly once
/// (1.0 when no rescaling happened or the product was zero).
double restrict_with_cast(const EllMatrix& R, const PVector& r_fine, Precision coarse_precision,
                          bool rescale, PVector& r_coarse, const ExecContext& ctx);

/// c_fine = cast(scale * (P * c_coarse)) with the product computed in the
/// coarse level's precision and the scale applied in binary64 during the cast.
void prolong_with_cast(const EllMatrix& P, const PVector& c_coarse, Precision fine_precision,
                       double scale, PVector& c_fine, const ExecContext& ctx);

/// Precision-tagged level hierarchy executing one V-cycle per call. A
/// hierarchy owns mutable per-level scratch: run one solve at a time per
/// instance; independent instances may run concurrently.
class MgHierarchy {
 public:
  /// Assembles every level in FP64 and casts matrices, transfers and the
  /// inverse diagonal to the variant's per-level precision. Throws
  /// HierarchyBuildError if a binary16 cast overflows.
  static MgHierarchy build(const ProblemSpec& spec, MgVariant variant,
                           const SmootherConfig& smoother = {}, const BaseSolverConfig& base = {},
                           const ArithmeticPolicy& policy = {});

  /// Builds from prepared levels (tests and custom systems). Level precisions
  /// are taken from the levels themselves.
  static MgHierarchy from_levels(std::vector<GridLevel> levels, const SmootherConfig& smoother,
                                 const BaseSolverConfig& base, bool rescale_fp16_restrictions);

  int levels() const { return static_cast<int>(levels_.size()); }
  GridLevel& level(int l) { return levels_[static_cast<std::size_t>(l)]; }
  const GridLevel& level(int l) const { return levels_[static_cast<std::size_t>(l)]; }
  Precision finest_precision() const { return levels_.back().precision; }
  MgVariant variant() const { return variant_; }
  const SmootherConfig& smoother() const { return smoother_; }
  const BaseSolverConfig& base_solver() const { return base_; }

  /// One V-cycle for the correction equation A c = b on the finest level,
  /// starting from zero guesses on every level. b and c carry the finest
  /// level's precision.
  void v_cycle(const PVector& b, PVector& c, const ExecContext& ctx);

  /// Traffic of the cycles run since the last reset, split by level.
  const std::vector<TrafficCounter>& level_traffic() const { return level_traffic_; }
  void reset_traffic();
  TrafficCounter cycle_traffic() const;

 private:
  void cycle_at(int l, const PVector& rhs, PVector& u, const ExecContext& ctx);

  std::vector<GridLevel> levels_;
  std::vector<TrafficCounter> level_traffic_;
  MgVariant variant_ = MgVariant::D_MG;
  SmootherConfig smoother_;
  BaseSolverConfig base_;
  bool rescale_fp16_restrictions_ = false;
};

}  // namespace mpmg
