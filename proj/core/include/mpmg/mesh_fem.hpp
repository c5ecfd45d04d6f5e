#pragma once

#include <cstddef>
#include <utility>

#include "mpmg/ell_matrix.hpp"
#include "mpmg/vector.hpp"

namespace mpmg {

/// Poisson model problem on the unit square/cube with homogeneous Dirichlet
/// boundary, manufactured solution u = prod_d sin(k pi x_d), discretized with
/// Q1 (bilinear/trilinear) elements on a nested hierarchy of uniform grids.
struct ProblemSpec {
  int dim = 2;                   // 2 or 3
  int k = 1;                     // oscillation parameter of the exact solution
  int finest_nodes_per_dim = 65; // nodes including boundary, 2^m*(base-1)+1
  int levels = 2;                // hierarchy depth; level 0 is the coarsest

  int nodes_at_level(int level) const {
    return ((finest_nodes_per_dim - 1) >> (levels - 1 - level)) + 1;
  }
  int base_nodes_per_dim() const { return nodes_at_level(0); }

  /// Throws std::invalid_argument unless the grid sizes form a nested
  /// refinement chain n_l = 2*n_{l-1} - 1 down to a base of >= 3 nodes.
  void validate() const;
};

/// Uniform grid on [0,1]^dim. Unknowns are the interior nodes in
/// lexicographic order (x fastest); boundary values are eliminated.
struct StructuredGrid {
  int dim = 2;
  int nodes_per_dim = 3;

  double h() const { return 1.0 / (nodes_per_dim - 1); }
  int interior_per_dim() const { return nodes_per_dim - 2; }
  std::size_t unknowns() const {
    const auto m = static_cast<std::size_t>(interior_per_dim());
    return dim == 2 ? m * m : m * m * m;
  }
  bool is_interior(int i) const { return i >= 1 && i <= nodes_per_dim - 2; }
  /// Linear index of interior node (ix, iy[, iz]) with coordinates in
  /// [1, nodes_per_dim-2].
  std::size_t interior_index(int ix, int iy, int iz = 1) const {
    const auto m = static_cast<std::size_t>(interior_per_dim());
    std::size_t idx = static_cast<std::size_t>(iy - 1) * m + static_cast<std::size_t>(ix - 1);
    if (dim == 3) idx += static_cast<std::size_t>(iz - 1) * m * m;
    return idx;
  }
};

/// Q1 stiffness matrix of -Laplace over the interior nodes, assembled with
/// tensor-product 2-point Gauss quadrature (exact for Q1). Interior rows form
/// the 9-point (2D) / 27-point (3D) stencil; row_width is 9 or 27.
EllMatrix assemble_stiffness(const StructuredGrid& grid);

/// Load vector b_i = integral of f * phi_i with f = dim*k^2*pi^2*prod sin(k pi x_d),
/// integrated with the same per-element 2-point Gauss rule.
PVector assemble_rhs(const StructuredGrid& grid, int k);

/// Interpolation P (coarse -> fine, bilinear/trilinear) and restriction
/// R = P^T, both over interior nodes and stored explicitly in ELLPACK.
std::pair<EllMatrix, EllMatrix> assemble_transfer(const StructuredGrid& fine,
                                                  const StructuredGrid& coarse);

/// Samples the manufactured solution at the interior nodes.
PVector exact_solution(const StructuredGrid& grid, int k);

/// Scaled nodal L2 distance sqrt(h^dim * sum_i (u_i - v_i)^2).
double nodal_l2_error(const PVector& u, const PVector& v, const StructuredGrid& grid);

/// Finest-level FP64 system plus the exact solution samples.
struct Problem {
  ProblemSpec spec;
  StructuredGrid grid;
  EllMatrix A;
  PVector b;
  PVector u_exact;
};

Problem build_problem(const ProblemSpec& spec);

}  // namespace mpmg
