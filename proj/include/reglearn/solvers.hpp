#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "reglearn/operators.hpp"
#include "reglearn/types.hpp"

namespace reglearn {

/// Thrown when an iterative solve does not reach its tolerance or a direct
/// factorization meets a singular matrix.
class SolveError : public std::runtime_error {
 public:
  SolveError(const std::string& message, Real residual, Index iterations)
      : std::runtime_error(message), residual_(residual), iterations_(iterations) {}

  Real residual() const { return residual_; }
  Index iterations() const { return iterations_; }

 private:
  Real residual_;
  Index iterations_;
};

using LinearMap = std::function<Vector(const Vector&)>;

struct CgOptions {
  Real tol = 1e-10;
  Index max_iter = 0;  // 0 means 10 * dimension
  const Vector* x0 = nullptr;
  LinearMap precondition;  // approximate inverse; identity when empty
  // Orthonormal vectors spanning a known null space. The right-hand side and
  // the initial iterate are projected onto their complement, and the
  // convergence contract holds for the projected system (minimum-norm
  // convention on the deflated directions).
  const std::vector<Vector>* deflate = nullptr;
};

/// Conjugate gradients on a symmetric positive (semi-)definite map.
/// Returns x with ||op(x) - rhs|| <= tol * max(1, ||rhs||), rhs taken after
/// deflation; the true residual is re-verified before returning. Throws
/// SolveError on non-convergence, carrying the final residual.
Vector cg_solve(const LinearMap& op, const Vector& rhs, const CgOptions& options);

/// Diagonally preconditioned CG on a sparse SPD operator (the symmetric flag
/// is required). Same convergence contract as cg_solve.
Vector solve_spd(const SparseOperator& op, const Vector& rhs, Real tol, Index max_iter,
                 const Vector* x0 = nullptr);

/// Direct dense factorization, intended for tests and small systems only
/// (dimension capped at 10^4). Throws SolveError on singular matrices.
Vector solve_dense_oracle(const SparseOperator& op, const Vector& rhs);

}  // namespace reglearn
