#include "mpmg/mesh_fem.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace mpmg {

namespace {

// 2-point Gauss rule on [0,1]: weights 1/2, points 1/2 +- 1/(2*sqrt(3)).
constexpr double kGaussHalfSpread = 0.28867513459481287;  // 1/(2*sqrt(3))
constexpr std::array<double, 2> kGaussPoint = {0.5 - kGaussHalfSpread, 0.5 + kGaussHalfSpread};
constexpr double kGaussWeight = 0.5;

double shape1d(int node, double t) { return node == 0 ? 1.0 - t : t; }
double dshape1d(int node) { return node == 0 ? -1.0 : 1.0; }

// Reference-element stiffness integral sum_g w_g grad(phi_a) . grad(phi_b)
// on [0,1]^dim; the physical element matrix is h^(dim-2) times this.
double reference_stiffness_entry(int dim, int a, int b) {
  const int n_points = dim == 2 ? 4 : 8;
  double acc = 0.0;
  for (int g = 0; g < n_points; ++g) {
    std::array<double, 3> xi{};
    std::array<int, 3> ga{};
    int gg = g;
    for (int d = 0; d < dim; ++d) {
      ga[d] = gg & 1;
      gg >>= 1;
      xi[d] = kGaussPoint[ga[d]];
    }
    double w = 1.0;
    for (int d = 0; d < dim; ++d) w *= kGaussWeight;
    double dot = 0.0;
    for (int d = 0; d < dim; ++d) {
      double da = dshape1d((a >> d) & 1);
      double db = dshape1d((b >> d) & 1);
      for (int e = 0; e < dim; ++e) {
        if (e == d) continue;
        da *= shape1d((a >> e) & 1, xi[e]);
        db *= shape1d((b >> e) & 1, xi[e]);
      }
      dot += da * db;
    }
    acc += w * dot;
  }
  return acc;
}

int slot_count(int dim) { return dim == 2 ? 9 : 27; }

}  // namespace

void ProblemSpec::validate() const {
  if (dim != 2 && dim != 3) throw std::invalid_argument("ProblemSpec: dim must be 2 or 3");
  if (k < 1) throw std::invalid_argument("ProblemSpec: k must be positive");
  if (levels < 1) throw std::invalid_argument("ProblemSpec: levels must be positive");
  if (finest_nodes_per_dim < 3) throw std::invalid_argument("ProblemSpec: grid too small");
  const int steps = levels - 1;
  if ((finest_nodes_per_dim - 1) % (1 << steps) != 0) {
    throw std::invalid_argument("ProblemSpec: finest grid is not 2^m*(base-1)+1 for the level count");
  }
  if (base_nodes_per_dim() < 3) {
    throw std::invalid_argument("ProblemSpec: base grid must have at least 3 nodes per dimension");
  }
}

EllMatrix assemble_stiffness(const StructuredGrid& grid) {
  if (grid.dim != 2 && grid.dim != 3) throw std::invalid_argument("assemble_stiffness: dim must be 2 or 3");
  if (grid.nodes_per_dim < 3) throw std::invalid_argument("assemble_stiffness: grid too small");
  const int dim = grid.dim;
  const int n = grid.nodes_per_dim;
  const int m = grid.interior_per_dim();
  const int local_nodes = 1 << dim;
  const int slots = slot_count(dim);
  const double h = grid.h();
  const double h_scale = dim == 2 ? 1.0 : h;

  std::array<double, 64> element{};
  for (int a = 0; a < local_nodes; ++a) {
    for (int b = 0; b < local_nodes; ++b) {
      element[static_cast<std::size_t>(a * local_nodes + b)] =
          h_scale * reference_stiffness_entry(dim, a, b);
    }
  }

  // delta-indexed accumulation slots per interior node, deterministic element order
  std::vector<double> acc(grid.unknowns() * static_cast<std::size_t>(slots), 0.0);
  const int ez_count = dim == 3 ? n - 1 : 1;
  for (int ez = 0; ez < ez_count; ++ez) {
    for (int ey = 0; ey < n - 1; ++ey) {
      for (int ex = 0; ex < n - 1; ++ex) {
        for (int a = 0; a < local_nodes; ++a) {
          const int ax = ex + (a & 1);
          const int ay = ey + ((a >> 1) & 1);
          const int az = dim == 3 ? ez + ((a >> 2) & 1) : 1;
          if (!grid.is_interior(ax) || !grid.is_interior(ay) ||
              (dim == 3 && !grid.is_interior(az))) {
            continue;
          }
          const std::size_t row = grid.interior_index(ax, ay, az);
          for (int b = 0; b < local_nodes; ++b) {
            const int bx = ex + (b & 1);
            const int by = ey + ((b >> 1) & 1);
            const int bz = dim == 3 ? ez + ((b >> 2) & 1) : 1;
            if (!grid.is_interior(bx) || !grid.is_interior(by) ||
                (dim == 3 && !grid.is_interior(bz))) {
              continue;
            }
            const int dx = bx - ax + 1;
            const int dy = by - ay + 1;
            const int dz = dim == 3 ? bz - az + 1 : 0;
            const int slot = (dz * 3 + dy) * 3 + dx;
            acc[row * static_cast<std::size_t>(slots) + static_cast<std::size_t>(slot)] +=
                element[static_cast<std::size_t>(a * local_nodes + b)];
          }
        }
      }
    }
  }

  EllMatrix A(grid.unknowns(), grid.unknowns(), slots, Precision::FP64);
  const int z_lo = dim == 3 ? -1 : 0;
  const int z_hi = dim == 3 ? 1 : 0;
  const int iz_count = dim == 3 ? m : 1;
  for (int iz = 1; iz <= iz_count; ++iz) {
    for (int iy = 1; iy <= m; ++iy) {
      for (int ix = 1; ix <= m; ++ix) {
        const std::size_t row = grid.interior_index(ix, iy, iz);
        int out_slot = 0;
        for (int dz = z_lo; dz <= z_hi; ++dz) {
          for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
              const int jx = ix + dx;
              const int jy = iy + dy;
              const int jz = iz + dz;
              if (!grid.is_interior(jx) || !grid.is_interior(jy) ||
                  (dim == 3 && !grid.is_interior(jz))) {
                continue;
              }
              const int slot = ((dim == 3 ? dz + 1 : 0) * 3 + (dy + 1)) * 3 + (dx + 1);
              A.set_slot(row, out_slot++, static_cast<std::int32_t>(grid.interior_index(jx, jy, jz)),
                         acc[row * static_cast<std::size_t>(slots) + static_cast<std::size_t>(slot)]);
            }
          }
        }
        A.pad_row(row, out_slot);
      }
    }
  }
  return A;
}

PVector assemble_rhs(const StructuredGrid& grid, int k) {
  if (k < 1) throw std::invalid_argument("assemble_rhs: k must be positive");
  const int dim = grid.dim;
  const int n = grid.nodes_per_dim;
  const double h = grid.h();
  const double kpi = k * std::numbers::pi;
  const double amplitude = dim * kpi * kpi;
  const int local_nodes = 1 << dim;
  const int n_points = 1 << dim;
  double jacobian = 1.0;
  for (int d = 0; d < dim; ++d) jacobian *= h;

  PVector b(grid.unknowns(), Precision::FP64);
  auto bd = b.f64();
  const int ez_count = dim == 3 ? n - 1 : 1;
  for (int ez = 0; ez < ez_count; ++ez) {
    for (int ey = 0; ey < n - 1; ++ey) {
      for (int ex = 0; ex < n - 1; ++ex) {
        const std::array<int, 3> e = {ex, ey, ez};
        for (int g = 0; g < n_points; ++g) {
          std::array<double, 3> xi{};
          double w = jacobian;
          for (int d = 0; d < dim; ++d) {
            xi[d] = kGaussPoint[(g >> d) & 1];
            w *= kGaussWeight;
          }
          double f = amplitude;
          for (int d = 0; d < dim; ++d) f *= std::sin(kpi * h * (e[d] + xi[d]));
          for (int a = 0; a < local_nodes; ++a) {
            const int ax = ex + (a & 1);
            const int ay = ey + ((a >> 1) & 1);
            const int az = dim == 3 ? ez + ((a >> 2) & 1) : 1;
            if (!grid.is_interior(ax) || !grid.is_interior(ay) ||
                (dim == 3 && !grid.is_interior(az))) {
              continue;
            }
            double phi = 1.0;
            for (int d = 0; d < dim; ++d) phi *= shape1d((a >> d) & 1, xi[d]);
            bd[grid.interior_index(ax, ay, az)] += w * f * phi;
          }
        }
      }
    }
  }
  return b;
}

std::pair<EllMatrix, EllMatrix> assemble_transfer(const StructuredGrid& fine,
                                                  const StructuredGrid& coarse) {
  if (fine.dim != coarse.dim) throw std::invalid_argument("assemble_transfer: dimension mismatch");
  if (fine.nodes_per_dim != 2 * coarse.nodes_per_dim - 1) {
    throw std::invalid_argument("assemble_transfer: grids are not nested (n_f != 2*n_c - 1)");
  }
  const int dim = fine.dim;
  const int mf = fine.interior_per_dim();
  const int mc = coarse.interior_per_dim();

  // P: one row per fine interior node; parents per dimension are the
  // coincident coarse node (weight 1) or the two straddling ones (weight 1/2).
  EllMatrix P(fine.unknowns(), coarse.unknowns(), 1 << dim, Precision::FP64);
  struct DimEntry {
    int count;
    std::array<int, 2> idx;
    std::array<double, 2> w;
  };
  auto parents = [&](int jf) {
    DimEntry d{};
    if (jf % 2 == 0) {
      d.count = 1;
      d.idx[0] = jf / 2;
      d.w[0] = 1.0;
    } else {
      d.count = 0;
      for (int s = 0; s < 2; ++s) {
        const int jc = (jf - 1) / 2 + s;
        if (jc >= 1 && jc <= mc) {
          d.idx[d.count] = jc;
          d.w[d.count] = 0.5;
          ++d.count;
        }
      }
    }
    return d;
  };

  const int fz_count = dim == 3 ? mf : 1;
  for (int fz = 1; fz <= fz_count; ++fz) {
    for (int fy = 1; fy <= mf; ++fy) {
      for (int fx = 1; fx <= mf; ++fx) {
        const std::size_t row = fine.interior_index(fx, fy, fz);
        const DimEntry dx = parents(fx);
        const DimEntry dy = parents(fy);
        const DimEntry dz = dim == 3 ? parents(fz) : DimEntry{1, {1, 0}, {1.0, 0.0}};
        int slot = 0;
        for (int c = 0; c < dz.count; ++c) {
          for (int b = 0; b < dy.count; ++b) {
            for (int a = 0; a < dx.count; ++a) {
              P.set_slot(row, slot++,
                         static_cast<std::int32_t>(
                             coarse.interior_index(dx.idx[a], dy.idx[b], dz.idx[c])),
                         dx.w[a] * dy.w[b] * (dim == 3 ? dz.w[c] : 1.0));
            }
          }
        }
        P.pad_row(row, slot);
      }
    }
  }

  // R = P^T: one row per coarse interior node gathering the 3^dim fine
  // neighbors of its coincident fine node; all of them are interior.
  EllMatrix R(coarse.unknowns(), fine.unknowns(), dim == 2 ? 9 : 27, Precision::FP64);
  const int cz_count = dim == 3 ? mc : 1;
  for (int cz = 1; cz <= cz_count; ++cz) {
    for (int cy = 1; cy <= mc; ++cy) {
      for (int cx = 1; cx <= mc; ++cx) {
        const std::size_t row = coarse.interior_index(cx, cy, cz);
        int slot = 0;
        const int z_lo = dim == 3 ? -1 : 0;
        const int z_hi = dim == 3 ? 1 : 0;
        for (int dz = z_lo; dz <= z_hi; ++dz) {
          for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
              const int jx = 2 * cx + dx;
              const int jy = 2 * cy + dy;
              const int jz = dim == 3 ? 2 * cz + dz : 1;
              double w = (dx == 0 ? 1.0 : 0.5) * (dy == 0 ? 1.0 : 0.5);
              if (dim == 3) w *= dz == 0 ? 1.0 : 0.5;
              R.set_slot(row, slot++, static_cast<std::int32_t>(fine.interior_index(jx, jy, jz)),
                         w);
            }
          }
        }
        R.pad_row(row, slot);
      }
    }
  }
  return {std::move(P), std::move(R)};
}

PVector exact_solution(const StructuredGrid& grid, int k) {
  const int dim = grid.dim;
  const int m = grid.interior_per_dim();
  const double h = grid.h();
  const double kpi = k * std::numbers::pi;
  PVector u(grid.unknowns(), Precision::FP64);
  auto ud = u.f64();
  const int iz_count = dim == 3 ? m : 1;
  for (int iz = 1; iz <= iz_count; ++iz) {
    for (int iy = 1; iy <= m; ++iy) {
      for (int ix = 1; ix <= m; ++ix) {
        double v = std::sin(kpi * ix * h) * std::sin(kpi * iy * h);
        if (dim == 3) v *= std::sin(kpi * iz * h);
        ud[grid.interior_index(ix, iy, iz)] = v;
      }
    }
  }
  return u;
}

double nodal_l2_error(const PVector& u, const PVector& v, const StructuredGrid& grid) {
  if (u.size() != v.size()) throw std::invalid_argument("nodal_l2_error: dimension mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = u.get(i) - v.get(i);
    acc = std::fma(d, d, acc);
  }
  double scale = 1.0;
  for (int d = 0; d < grid.dim; ++d) scale *= grid.h();
  return std::sqrt(scale * acc);
}

Problem build_problem(const ProblemSpec& spec) {
  spec.validate();
  Problem p;
  p.spec = spec;
  p.grid = StructuredGrid{spec.dim, spec.finest_nodes_per_dim};
  p.A = assemble_stiffness(p.grid);
  p.b = assemble_rhs(p.grid, spec.k);
  p.u_exact = exact_solution(p.grid, spec.k);
  return p;
}

}  // namespace mpmg
