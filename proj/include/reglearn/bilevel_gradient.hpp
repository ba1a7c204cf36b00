#pragma once

#include <optional>

#include "reglearn/lower_linear.hpp"
#include "reglearn/problem_data.hpp"

namespace reglearn {

/// Squared distance of the recovered control to the exact one in the lumped
/// L2 norm: h^2 sum_nodes (u - uex)^2.
Real bilevel_cost(const ScalarField& u, const ScalarField& uex);

/// Adjoint of the learning problem with a linear state equation: q solving
/// H(alpha) q = -(u - uex) on the matrix-free reduced Hessian. For the
/// rank-deficient active sets the right-hand side is deflated; the gradient
/// is then exact along the minimum-norm solution path.
ScalarField adjoint_q_linear(const LearnProblem& problem, const Vector& alpha,
                             const ScalarField& u, Real tol);

struct BilinearAdjoint {
  ScalarField q1;  // InteriorNodes
  ScalarField q2;  // AllNodes
  ScalarField q3;  // InteriorNodes
};

/// Coupled adjoint system of the learning problem with the relaxed bilinear
/// state equation, assembled as one sparse symmetric block system in
/// (q1, q2, q3) and solved by sparse LU:
///   q1 + K(phi'(u) q2) p + K(phi(u)) q3              = 0
///   E_p^T q1 + [sum_b alpha_b K_b* K_b + D] q2 + E_y^T q3 = -(u - uex)
///   K(phi(u)) q1 + K(phi'(u) q2) y                   = 0
/// with D the diagonal carrying phi''(u) grad y . grad p. A singular or
/// ill-conditioned system signals failure of second-order sufficiency at the
/// iterate and raises SolveError.
BilinearAdjoint adjoint_q_bilinear(const LearnProblem& problem, const Vector& alpha,
                                   const ScalarField& y, const ScalarField& u,
                                   const ScalarField& p, Real tol);

/// Components g_i = h^2 <K_i q_control, K_i u> for the active operators;
/// the derivative of the bilevel cost is dJ/dalpha_i = 2 g_i. q_control is q
/// in the linear case and q2 in the bilinear case.
Vector gradient_alpha(const ScalarField& u, const ScalarField& q_control, const RegConfig& reg);

/// One fully evaluated outer iterate.
struct BilevelIterate {
  Vector alpha;
  ScalarField u;
  ScalarField y;
  std::optional<ScalarField> p;  // bilinear only
  Real cost = 0;
  Vector grad;  // the g vector; dJ/dalpha = 2 g
};

}  // namespace reglearn
