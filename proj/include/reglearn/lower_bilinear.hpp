#pragma once

#include <optional>

#include "reglearn/problem_data.hpp"
#include "reglearn/solvers.hpp"

namespace reglearn {

/// State solve of the relaxed bilinear equation: y with
/// assemble_diffusion_p1(grid, phi(u)) y = f to relative residual tol.
/// phi keeps the coefficient positive for any control iterate.
ScalarField solve_state_bilinear(const Grid& grid, const ScalarField& u, const ScalarField& f,
                                 const PhiParams& phi_params, Real tol,
                                 const ScalarField* warm_y = nullptr);

/// Lower-level adjoint: p with assemble_diffusion_p1(grid, phi(u)) p = -(y - ybar).
ScalarField lower_adjoint_p(const Grid& grid, const ScalarField& u, const ScalarField& y,
                            const ScalarField& ybar, const PhiParams& phi_params, Real tol);

/// Exact gradient of the discrete reduced lower-level objective:
/// sum_i alpha_i K_i* K_i u + G(u, y, p), where G is the element assembly of
/// phi'(u) grad y . grad p against the control basis (one third of each
/// triangle's energy product scattered to its vertices).
ScalarField reduced_gradient_u(const Grid& grid, const ScalarField& y, const ScalarField& p,
                               const ScalarField& u, const RegConfig& reg,
                               const PhiParams& phi_params);

struct BilinearLowerSolution {
  ScalarField y;  // InteriorNodes
  ScalarField u;  // AllNodes
  ScalarField p;  // InteriorNodes
  int iterations = 0;
  Real gradient_norm = 0;
  Real objective = 0;
};

/// Thrown when the reduced-space solver runs out of iterations; carries the
/// best iterate seen and its gradient norm.
class LowerLevelError : public SolveError {
 public:
  LowerLevelError(const std::string& message, ScalarField best_u, Real gradient_norm, Index iterations)
      : SolveError(message, gradient_norm, iterations), best_u_(std::move(best_u)) {}

  const ScalarField& best_u() const { return best_u_; }

 private:
  ScalarField best_u_;
};

/// Reduced-space quasi-Newton solve of the relaxed bilinear lower-level
/// problem: limited-memory BFGS on the control with Armijo backtracking,
/// state and adjoint re-solved at every evaluation. Stops when the reduced
/// gradient satisfies ||g|| <= tol * max(1, ||g0||); the objective decreases
/// monotonically across accepted steps. u0 defaults to the constant
/// (a + b)/2, inside the identity region of phi.
BilinearLowerSolution solve_lower_bilinear(const LearnProblem& problem, const Vector& alpha,
                                           const ScalarField* u0, Real tol, int max_iter);

struct KktResiduals {
  Real adjoint = 0;   // y - ybar - div(phi(u) grad p)
  Real gradient = 0;  // sum alpha_i K_i* K_i u + phi'(u) grad y . grad p
  Real state = 0;     // -div(phi(u) grad y) - f
};

/// Normalized residual norms of the three relaxed KKT equations.
KktResiduals lower_kkt_residual_bilinear(const LearnProblem& problem, const Vector& alpha,
                                         const ScalarField& y, const ScalarField& u,
                                         const ScalarField& p);

namespace fem {

/// Assembly of the control-coupling gradient: out_j = weight_j / 3 *
/// sum_{triangles T containing j} w^T S_T v, with w and v interior fields
/// extended by zero. With weight = phi'(u) this is the derivative of
/// w^T K(phi(u)) v with respect to the control.
Vector control_gradient(const Grid& grid, const Vector& weight_all, const Vector& w_interior,
                        const Vector& v_interior);

/// Sparse Jacobian E with E q = K(weight .* q) w for control-space q; rows on
/// the interior nodes, columns on all nodes.
SparseMatrix control_jacobian(const Grid& grid, const Vector& weight_all, const Vector& w_interior);

}  // namespace fem

}  // namespace reglearn
