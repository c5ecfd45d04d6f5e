#include "mpmg/multigrid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "mpmg/errors.hpp"

namespace mpmg {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// Raw copy used for solver bookkeeping (best-iterate tracking, result
// handoff); not part of the traffic model.
void copy_untracked(const PVector& src, PVector& dst) {
  ExecContext ctx;
  cast_vector(src, dst.precision(), 1.0, dst, ctx);
}

EllMatrix cast_checked(const EllMatrix& m, Precision target, const ArithmeticPolicy& policy,
                       int level) {
  if (target == Precision::FP16 && m.max_abs_value() > kFp16Max) {
    throw HierarchyBuildError(level, "binary16 overflow while casting level " +
                                         std::to_string(level) + " (max |entry| = " +
                                         std::to_string(m.max_abs_value()) + ")");
  }
  return m.cast_to(target, policy);
}

}  // namespace

std::string_view variant_name(MgVariant v) {
  switch (v) {
    case MgVariant::D_MG: return "d_mg";
    case MgVariant::H_MG: return "h_mg";
    case MgVariant::DSH_MG: return "dsh_mg";
    default: return "hsd_mg";
  }
}

std::optional<MgVariant> parse_variant(std::string_view name) {
  if (name == "d_mg") return MgVariant::D_MG;
  if (name == "h_mg") return MgVariant::H_MG;
  if (name == "dsh_mg") return MgVariant::DSH_MG;
  if (name == "hsd_mg") return MgVariant::HSD_MG;
  return std::nullopt;
}

VariantConfig VariantConfig::make(MgVariant v, int levels) {
  require(levels >= 1, "VariantConfig: level count must be positive");
  VariantConfig cfg;
  cfg.variant = v;
  cfg.level_precision.resize(static_cast<std::size_t>(levels));
  for (int l = 0; l < levels; ++l) {
    Precision p = Precision::FP64;
    switch (v) {
      case MgVariant::D_MG: p = Precision::FP64; break;
      case MgVariant::H_MG: p = Precision::FP16; break;
      case MgVariant::HSD_MG:
        // base solver and one more level in FP64, one FP32 transition level,
        // the fine remainder in FP16
        p = l <= 1 ? Precision::FP64 : (l == 2 ? Precision::FP32 : Precision::FP16);
        break;
      case MgVariant::DSH_MG:
        p = l <= 1 ? Precision::FP16 : (l == 2 ? Precision::FP32 : Precision::FP64);
        break;
    }
    cfg.level_precision[static_cast<std::size_t>(l)] = p;
  }
  cfg.rescale_fp16_restrictions = v == MgVariant::DSH_MG;
  return cfg;
}

void jacobi_smooth(GridLevel& level, const PVector& b, PVector& u, int steps, double omega,
                   const ExecContext& ctx) {
  require(steps >= 0, "jacobi_smooth: steps must be non-negative");
  require(omega > 0.0 && omega <= 1.0, "jacobi_smooth: omega must be in (0, 1]");
  for (int s = 0; s < steps; ++s) {
    spmv(level.A, u, level.t, ctx);             // t = A u
    axpy(-1.0, level.t, b, level.r, ctx);       // r = b - t
    vec_multiply(level.inv_diag, level.r, level.t, ctx);
    axpy(omega, level.t, u, u, ctx);            // u += omega * D^-1 r
  }
}

CgResult cg_solve(const EllMatrix& A, const PVector& b, PVector& u, const BaseSolverConfig& cfg,
                  const ExecContext& ctx) {
  require(A.rows() == A.cols(), "cg_solve: A must be square");
  require(A.precision() == b.precision(), "cg_solve: precision mismatch");
  require(b.size() == A.rows() && u.size() == A.rows(), "cg_solve: dimension mismatch");
  require(u.precision() == b.precision(), "cg_solve: precision mismatch");
  require(cfg.tolerance > 0.0, "cg_solve: tolerance must be positive");

  const std::size_t n = A.rows();
  const Precision p = b.precision();
  const int max_it =
      cfg.max_iterations > 0 ? cfg.max_iterations : 10 * static_cast<int>(n);

  u.fill_zero();
  PVector r = cast_vector(b, p, 1.0, ctx);  // r = b - A*0
  PVector pv = cast_vector(r, p, 1.0, ctx);
  PVector Ap(n, p);
  PVector scratch(n, p);

  const double norm_b = norm2_fp64(b, ctx);
  if (norm_b == 0.0) return {0, true, 0.0};  // zero rhs: u = 0 is exact
  const double threshold = cfg.mode == BaseSolverConfig::ToleranceMode::RelativeToRhs
                               ? cfg.tolerance * norm_b
                               : cfg.tolerance;

  double rz = dot_fp64(r, r, ctx);
  double true_res = norm_b;
  double best_res = true_res;
  PVector best_u(n, p);

  int it = 0;
  while (true_res >= threshold && it < max_it) {
    spmv(A, pv, Ap, ctx);
    const double pAp = dot_fp64(pv, Ap, ctx);
    if (!(pAp > 0.0) || !std::isfinite(pAp)) break;  // breakdown in low precision
    const double alpha = rz / pAp;
    axpy(alpha, pv, u, u, ctx);
    axpy(-alpha, Ap, r, r, ctx);
    const double rz_new = dot_fp64(r, r, ctx);
    ++it;

    spmv(A, u, scratch, ctx);
    axpy(-1.0, scratch, b, scratch, ctx);
    true_res = norm2_fp64(scratch, ctx);
    if (true_res < best_res) {
      best_res = true_res;
      copy_untracked(u, best_u);
    }

    if (rz == 0.0) break;
    const double beta = rz_new / rz;
    axpy(beta, pv, r, pv, ctx);  // p = r + beta p
    rz = rz_new;
  }

  if (true_res > best_res) {
    copy_untracked(best_u, u);
    true_res = best_res;
  }
  return {it, true_res < threshold, true_res};
}

namespace {

template <Precision P>
void transfer_product(const EllMatrix& M, const PVector& x, std::vector<double>& out,
                      const ExecContext& ctx) {
  const auto cols = M.col_data();
  const int rw = M.row_width();
  const std::size_t n = M.rows();
  out.resize(n);
  thread_local std::vector<double> wx;
  wx.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) wx[i] = x.get(i);

  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t base = r * static_cast<std::size_t>(rw);
    if constexpr (P == Precision::FP16) {
      double acc = 0.0;
      for (int j = 0; j < rw; ++j) {
        const double mv = quantize_fp16(M.value(r, j), ctx.policy.flush_subnormals_to_zero);
        acc = fp16_fma_value(mv, wx[cols[base + j]], acc, ctx.policy);
      }
      out[r] = acc;
    } else if constexpr (P == Precision::FP32) {
      float acc = 0.0f;
      for (int j = 0; j < rw; ++j) {
        acc = ftz_fp32(ctx.policy.fused_multiply_add
                           ? std::fmaf(static_cast<float>(M.value(r, j)),
                                       static_cast<float>(wx[cols[base + j]]), acc)
                           : static_cast<float>(M.value(r, j)) *
                                     static_cast<float>(wx[cols[base + j]]) +
                                 acc,
                       ctx.policy.flush_subnormals_to_zero);
      }
      out[r] = static_cast<double>(acc);
    } else {
      double acc = 0.0;
      for (int j = 0; j < rw; ++j) {
        acc = ctx.policy.fused_multiply_add ? std::fma(M.value(r, j), wx[cols[base + j]], acc)
                                            : M.value(r, j) * wx[cols[base + j]] + acc;
      }
      out[r] = acc;
    }
  }

  if (ctx.traffic) {
    const std::uint64_t slots = n * static_cast<std::uint64_t>(rw);
    ctx.traffic->value_bytes_read +=
        slots * static_cast<std::uint64_t>(bytes_per_value(M.precision())) +
        slots * static_cast<std::uint64_t>(bytes_per_value(x.precision()));
    ctx.traffic->index_bytes_read += slots * sizeof(std::int32_t);
    ctx.traffic->flops += 2 * slots;
  }
}

// Transfer products run in the precision of the data being moved (the finer
// level for restriction, the coarser one for prolongation); matrix entries
// are re-rounded to that precision on the fly. The interpolation weights are
// powers of two, so this conversion is exact for assembled transfers.
void transfer_product_dispatch(const EllMatrix& M, const PVector& x, Precision compute,
                               std::vector<double>& out, const ExecContext& ctx) {
  switch (compute) {
    case Precision::FP16: transfer_product<Precision::FP16>(M, x, out, ctx); break;
    case Precision::FP32: transfer_product<Precision::FP32>(M, x, out, ctx); break;
    case Precision::FP64: transfer_product<Precision::FP64>(M, x, out, ctx); break;
  }
}

void store_scaled(const std::vector<double>& values, double inv_or_mul_scale, bool divide,
                  PVector& out, const ExecContext& ctx) {
  const ArithmeticPolicy& p = ctx.policy;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = divide ? values[i] / inv_or_mul_scale : values[i] * inv_or_mul_scale;
    out.set(i, v, p);
  }
  if (ctx.traffic) {
    ctx.traffic->value_bytes_written +=
        values.size() * static_cast<std::uint64_t>(bytes_per_value(out.precision()));
    ctx.traffic->flops += values.size();
  }
}

}  // namespace

double restrict_with_cast(const EllMatrix& R, const PVector& r_fine, Precision coarse_precision,
                          bool rescale, PVector& r_coarse, const ExecContext& ctx) {
  require(R.cols() == r_fine.size(), "restrict_with_cast: dimension mismatch");
  require(R.rows() == r_coarse.size(), "restrict_with_cast: output dimension mismatch");
  require(r_coarse.precision() == coarse_precision, "restrict_with_cast: output precision mismatch");

  thread_local std::vector<double> prod;
  transfer_product_dispatch(R, r_fine, r_fine.precision(), prod, ctx);

  double scale = 1.0;
  if (rescale && coarse_precision == Precision::FP16) {
    double acc = 0.0;
    for (const double v : prod) acc = std::fma(v, v, acc);
    const double norm = std::sqrt(acc);
    if (norm > 0.0 && std::isfinite(norm)) scale = norm;
    if (ctx.traffic) {
      ctx.traffic->value_bytes_read +=
          prod.size() * static_cast<std::uint64_t>(bytes_per_value(r_fine.precision()));
      ctx.traffic->flops += 2 * prod.size() + 1;
    }
  }

  store_scaled(prod, scale, /*divide=*/true, r_coarse, ctx);
  if (ctx.validate) {
    for (std::size_t i = 0; i < r_coarse.size(); ++i) {
      if (!std::isfinite(r_coarse.get(i))) {
        throw ValidationError("restrict_with_cast: non-finite entry at index " +
                              std::to_string(i));
      }
    }
  }
  return scale;
}

void prolong_with_cast(const EllMatrix& P, const PVector& c_coarse, Precision fine_precision,
                       double scale, PVector& c_fine, const ExecContext& ctx) {
  require(P.cols() == c_coarse.size(), "prolong_with_cast: dimension mismatch");
  require(P.rows() == c_fine.size(), "prolong_with_cast: output dimension mismatch");
  require(c_fine.precision() == fine_precision, "prolong_with_cast: output precision mismatch");
  require(scale > 0.0 && std::isfinite(scale), "prolong_with_cast: scale must be positive");

  thread_local std::vector<double> prod;
  transfer_product_dispatch(P, c_coarse, c_coarse.precision(), prod, ctx);
  store_scaled(prod, scale, /*divide=*/false, c_fine, ctx);
}

MgHierarchy MgHierarchy::build(const ProblemSpec& spec, MgVariant variant,
                               const SmootherConfig& smoother, const BaseSolverConfig& base,
                               const ArithmeticPolicy& policy) {
  spec.validate();
  require(spec.levels >= 2, "MgHierarchy: at least two levels required");
  const VariantConfig vc = VariantConfig::make(variant, spec.levels);

  std::vector<GridLevel> levels(static_cast<std::size_t>(spec.levels));
  for (int l = 0; l < spec.levels; ++l) {
    GridLevel& lvl = levels[static_cast<std::size_t>(l)];
    lvl.precision = vc.level_precision[static_cast<std::size_t>(l)];
    const StructuredGrid grid{spec.dim, spec.nodes_at_level(l)};
    const EllMatrix A64 = assemble_stiffness(grid);

    PVector inv64(A64.rows(), Precision::FP64);
    for (std::size_t row = 0; row < A64.rows(); ++row) {
      double diag = 0.0;
      for (int s = 0; s < A64.row_width(); ++s) {
        if (A64.col(row, s) == static_cast<std::int32_t>(row)) {
          diag = A64.value(row, s);
          break;
        }
      }
      inv64.set(row, 1.0 / diag);
    }

    lvl.A = cast_checked(A64, lvl.precision, policy, l);
    ExecContext build_ctx{policy};
    lvl.inv_diag = cast_vector(inv64, lvl.precision, 1.0, build_ctx);

    if (l < spec.levels - 1) {
      const StructuredGrid fine{spec.dim, spec.nodes_at_level(l + 1)};
      auto [P, R] = assemble_transfer(fine, grid);
      lvl.prolong_to_finer = cast_checked(P, lvl.precision, policy, l);
      lvl.restrict_from_finer = cast_checked(R, lvl.precision, policy, l);
      lvl.has_finer = true;
    }
  }
  MgHierarchy h = from_levels(std::move(levels), smoother, base, vc.rescale_fp16_restrictions);
  h.variant_ = variant;
  return h;
}

MgHierarchy MgHierarchy::from_levels(std::vector<GridLevel> levels, const SmootherConfig& smoother,
                                     const BaseSolverConfig& base, bool rescale_fp16_restrictions) {
  require(!levels.empty(), "MgHierarchy: empty level list");
  MgHierarchy h;
  h.levels_ = std::move(levels);
  h.smoother_ = smoother;
  h.base_ = base;
  h.rescale_fp16_restrictions_ = rescale_fp16_restrictions;
  for (auto& lvl : h.levels_) {
    const std::size_t n = lvl.A.rows();
    lvl.u = PVector(n, lvl.precision);
    lvl.b = PVector(n, lvl.precision);
    lvl.r = PVector(n, lvl.precision);
    lvl.t = PVector(n, lvl.precision);
  }
  h.level_traffic_.assign(h.levels_.size(), TrafficCounter{});
  return h;
}

void MgHierarchy::reset_traffic() {
  for (auto& t : level_traffic_) t.reset();
}

TrafficCounter MgHierarchy::cycle_traffic() const {
  TrafficCounter total;
  for (const auto& t : level_traffic_) total += t;
  return total;
}

void MgHierarchy::v_cycle(const PVector& b, PVector& c, const ExecContext& ctx) {
  require(b.precision() == finest_precision(), "v_cycle: rhs precision mismatch");
  require(c.precision() == finest_precision(), "v_cycle: output precision mismatch");
  require(b.size() == levels_.back().unknowns(), "v_cycle: dimension mismatch");
  require(c.size() == levels_.back().unknowns(), "v_cycle: output dimension mismatch");
  cycle_at(levels() - 1, b, c, ctx);
}

void MgHierarchy::cycle_at(int l, const PVector& rhs, PVector& u, const ExecContext& caller_ctx) {
  GridLevel& lvl = levels_[static_cast<std::size_t>(l)];
  const ExecContext ctx = caller_ctx.with_counter(&level_traffic_[static_cast<std::size_t>(l)]);
  if (caller_ctx.validate) {
    if (rhs.precision() != lvl.precision || u.precision() != lvl.precision) {
      throw ValidationError("v_cycle: vector precision does not match level " + std::to_string(l));
    }
  }

  if (l == 0) {
    cg_solve(lvl.A, rhs, u, base_, ctx);
    return;
  }

  u.fill_zero();
  jacobi_smooth(lvl, rhs, u, smoother_.pre_steps, smoother_.omega, ctx);

  spmv(lvl.A, u, lvl.t, ctx);
  axpy(-1.0, lvl.t, rhs, lvl.r, ctx);

  GridLevel& coarse = levels_[static_cast<std::size_t>(l - 1)];
  const bool rescale = rescale_fp16_restrictions_ && coarse.precision == Precision::FP16;
  const double scale =
      restrict_with_cast(coarse.restrict_from_finer, lvl.r, coarse.precision, rescale, coarse.b, ctx);

  cycle_at(l - 1, coarse.b, coarse.u, caller_ctx);

  prolong_with_cast(coarse.prolong_to_finer, coarse.u, lvl.precision, scale, lvl.t, ctx);
  axpy(1.0, lvl.t, u, u, ctx);

  jacobi_smooth(lvl, rhs, u, smoother_.post_steps, smoother_.omega, ctx);
}

}  // namespace mpmg
