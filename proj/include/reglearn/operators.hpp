#pragma once

#include "reglearn/grid.hpp"
#include "reglearn/types.hpp"

namespace reglearn {

/// Sparse linear operator in compressed column storage with a symmetry tag.
/// SPD solves require the symmetric flag.
struct SparseOperator {
  SparseMatrix matrix;
  bool symmetric = false;

  Index rows() const { return matrix.rows(); }
  Index cols() const { return matrix.cols(); }
  Vector apply(const Vector& v) const { return matrix * v; }
};

/// Five-point discretization of -gamma*Laplace + id on the interior nodes,
/// homogeneous Dirichlet data (out-of-range neighbours read zero):
///   (A y)_ij = gamma*(4 y_ij - y_{i+-1,j} - y_{i,j+-1})/h^2 + y_ij.
SparseOperator assemble_helmholtz(const Grid& grid, Real gamma);

/// P1 stiffness operator for -div(c grad y) on the interior nodes. Each grid
/// cell is split into two triangles along the (i,j)->(i+1,j+1) diagonal and
/// the element coefficient is the mean of c over the triangle's vertices,
/// which keeps the assembly linear in c. Throws if c is not strictly
/// positive everywhere (an iterate escaped positivity; apply the smoothed
/// projection first).
SparseOperator assemble_diffusion_p1(const Grid& grid, const ScalarField& coeff);

/// Penalty operators: which=1 is the identity, which=2/3 are forward
/// differences (u_{i+1,j}-u_{i,j})/h along x1 resp. x2, supported on the
/// corresponding edge lattice.
ScalarField apply_penalty(const Grid& grid, int which, const ScalarField& u);

/// Discrete adjoint of apply_penalty with respect to the h^2-weighted inner
/// products on both sides; exact transpose, so <K u, w> = <u, K* w> up to
/// roundoff.
ScalarField apply_penalty_adjoint(const Grid& grid, int which, const ScalarField& w);

FieldSupport penalty_support(int which);

/// Matrix form of apply_penalty (rows on the edge lattice, columns AllNodes).
SparseMatrix penalty_matrix(const Grid& grid, int which);

/// Gram matrix K_i^T K_i on AllNodes.
SparseMatrix penalty_gram(const Grid& grid, int which);

namespace fem {

/// Fixed split of cell (ci,cj): lower triangle (n00,n10,n11) and upper
/// triangle (n00,n11,n01). Element stiffness matrices are h-independent.
struct Triangle {
  Index node[3];
  const Real (*stiffness)[3];
};

/// Calls fn(Triangle) for the 2*(n-1)^2 triangles of the structured mesh.
template <typename Fn>
void for_each_triangle(const Grid& grid, Fn&& fn) {
  static constexpr Real lower[3][3] = {{0.5, -0.5, 0.0}, {-0.5, 1.0, -0.5}, {0.0, -0.5, 0.5}};
  static constexpr Real upper[3][3] = {{0.5, 0.0, -0.5}, {0.0, 0.5, -0.5}, {-0.5, -0.5, 1.0}};
  const int n = grid.n;
  for (int ci = 0; ci < n - 1; ++ci) {
    for (int cj = 0; cj < n - 1; ++cj) {
      const Index n00 = grid.all_index(ci, cj);
      const Index n10 = grid.all_index(ci + 1, cj);
      const Index n01 = grid.all_index(ci, cj + 1);
      const Index n11 = grid.all_index(ci + 1, cj + 1);
      fn(Triangle{{n00, n10, n11}, lower});
      fn(Triangle{{n00, n11, n01}, upper});
    }
  }
}

}  // namespace fem

}  // namespace reglearn
