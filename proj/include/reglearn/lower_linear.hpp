#pragma once

#include <memory>
#include <vector>

#include "reglearn/problem_data.hpp"
#include "reglearn/solvers.hpp"

namespace reglearn {

/// Matrix-free reduced Hessian of the linear lower-level problem,
///   H(alpha) = B* A^{-*} A^{-1} B + sum_i alpha_i K_i* K_i,
/// with B the interior restriction and A the five-point Helmholtz operator.
/// A is never inverted explicitly; every application performs two nested CG
/// solves at inner_tol.
///
/// For the active sets {2} and {3} alone H is singular: fields supported on
/// the two grid edges orthogonal to the differenced direction are invisible
/// to both the data term and the penalty. null_basis() returns an
/// orthonormal basis of that subspace (empty otherwise); solves deflate it
/// and return the minimum-norm representative.
class ReducedHessianMap {
 public:
  ReducedHessianMap(const Grid& grid, Real gamma, const RegConfig& reg, Real inner_tol = 1e-12);

  Vector apply(const Vector& v_all) const;

  /// Right-hand side of the reduced normal equations, B* A^{-*} ybar.
  Vector data_rhs(const Vector& ybar_interior) const;

  /// State reconstruction y = A^{-1} B u.
  Vector state_of(const Vector& u_all) const;

  const SparseOperator& helmholtz() const { return helmholtz_; }
  const Grid& grid() const { return grid_; }
  const RegConfig& reg() const { return reg_; }
  const std::vector<Vector>& null_basis() const { return null_basis_; }

  /// SPD approximation of H^{-1} built from the penalty part plus the
  /// interior indicator; used to precondition the outer CG.
  LinearMap preconditioner() const;

 private:
  Grid grid_;
  Real gamma_;
  RegConfig reg_;
  Real inner_tol_;
  Index inner_max_iter_;
  SparseOperator helmholtz_;
  std::vector<SparseMatrix> grams_;
  std::vector<Vector> null_basis_;
  std::shared_ptr<void> precond_factor_;
};

ScalarField apply_reduced_hessian(const ReducedHessianMap& hmap, const ScalarField& v);

struct LowerLinearSolution {
  ScalarField u;  // AllNodes
  ScalarField y;  // InteriorNodes
};

/// Solves H(alpha) u = B* A^{-*} ybar to relative residual tol by CG on the
/// matrix-free map (inner Helmholtz solves run at tol/100), then reconstructs
/// y = A^{-1} B u. alpha_override, when given, replaces problem.reg.alpha.
LowerLinearSolution solve_lower_linear(const LearnProblem& problem, Real tol,
                                       const ScalarField* warm_u = nullptr,
                                       const Vector* alpha_override = nullptr);

/// Normalized optimality residual ||H(alpha) u - B* A^{-*} ybar|| /
/// max(1, ||B* A^{-*} ybar||), with the right-hand side deflated for the
/// rank-deficient active sets.
Real lower_residual_linear(const LearnProblem& problem, const ScalarField& u);

/// Lower-level objective (1/2m) sum_j h^2 ||y - yd_j||^2
/// + sum_i (alpha_i/2) h^2 ||K_i u||^2 at the given pair.
Real lower_objective_linear(const LearnProblem& problem, const ScalarField& u,
                            const ScalarField& y);

}  // namespace reglearn
