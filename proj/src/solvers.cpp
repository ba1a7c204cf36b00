#include "reglearn/solvers.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace reglearn {

namespace {

void project_out(const std::vector<Vector>* basis, Vector& v) {
  if (!basis) return;
  for (const Vector& q : *basis) {
    v -= q.dot(v) * q;
  }
}

}  // namespace

Vector cg_solve(const LinearMap& op, const Vector& rhs, const CgOptions& options) {
  const Index dim = rhs.size();
  const Index max_iter = options.max_iter > 0 ? options.max_iter : std::max<Index>(10 * dim, 50);

  Vector b = rhs;
  project_out(options.deflate, b);
  const Real tol_abs = options.tol * std::max(Real(1), b.norm());

  Vector x;
  if (options.x0) {
    if (options.x0->size() != dim) throw std::invalid_argument("cg_solve: warm start dimension mismatch");
    x = *options.x0;
    project_out(options.deflate, x);
  } else {
    x = Vector::Zero(dim);
  }

  Index used = 0;
  Real residual_norm = 0;
  // Outer restart loop: the recurrence residual can drift from the true one,
  // so convergence is re-verified against b - op(x) before returning.
  while (true) {
    Vector r = b - op(x);
    project_out(options.deflate, r);
    residual_norm = r.norm();
    if (residual_norm <= tol_abs) return x;
    if (used >= max_iter) break;

    Vector z = options.precondition ? options.precondition(r) : r;
    project_out(options.deflate, z);
    Vector p = z;
    Real rz = r.dot(z);
    if (!(rz > 0)) {
      throw SolveError("cg_solve: preconditioned residual product not positive (operator or "
                       "preconditioner is not SPD on the working subspace)",
                       residual_norm, used);
    }

    bool recurrence_done = false;
    while (used < max_iter && !recurrence_done) {
      Vector ap = op(p);
      project_out(options.deflate, ap);
      const Real pap = p.dot(ap);
      if (!(pap > 0)) {
        throw SolveError("cg_solve: curvature p'Ap not positive (operator is not SPD on the "
                         "working subspace)",
                         residual_norm, used);
      }
      const Real step = rz / pap;
      x += step * p;
      r -= step * ap;
      ++used;
      residual_norm = r.norm();
      if (residual_norm <= tol_abs) {
        recurrence_done = true;
        break;
      }
      Vector znew = options.precondition ? options.precondition(r) : r;
      project_out(options.deflate, znew);
      const Real rz_new = r.dot(znew);
      if (!(rz_new > 0)) {
        throw SolveError("cg_solve: preconditioned residual product not positive", residual_norm, used);
      }
      p = znew + (rz_new / rz) * p;
      rz = rz_new;
    }
    if (!recurrence_done && used >= max_iter) {
      // fall through to the final true-residual check below
      Vector rt = b - op(x);
      project_out(options.deflate, rt);
      residual_norm = rt.norm();
      if (residual_norm <= tol_abs) return x;
      break;
    }
  }
  throw SolveError("cg_solve: no convergence within " + std::to_string(max_iter) +
                       " iterations (residual " + std::to_string(residual_norm) + ")",
                   residual_norm, used);
}

Vector solve_spd(const SparseOperator& op, const Vector& rhs, Real tol, Index max_iter,
                 const Vector* x0) {
  if (!op.symmetric) {
    throw std::invalid_argument("solve_spd: operator is not flagged symmetric");
  }
  if (op.rows() != op.cols() || rhs.size() != op.rows()) {
    throw std::invalid_argument("solve_spd: dimension mismatch");
  }
  Vector inv_diag(op.rows());
  for (Index k = 0; k < op.rows(); ++k) {
    const Real d = op.matrix.coeff(k, k);
    if (!(d > 0)) {
      throw SolveError("solve_spd: nonpositive diagonal entry, operator cannot be SPD", 0.0, 0);
    }
    inv_diag[k] = Real(1) / d;
  }
  CgOptions options;
  options.tol = tol;
  options.max_iter = max_iter;
  options.x0 = x0;
  options.precondition = [&inv_diag](const Vector& r) -> Vector { return inv_diag.cwiseProduct(r); };
  return cg_solve([&op](const Vector& v) { return op.matrix * v; }, rhs, options);
}

Vector solve_dense_oracle(const SparseOperator& op, const Vector& rhs) {
  if (op.rows() > 10000) {
    throw std::invalid_argument("solve_dense_oracle: dimension guard exceeded (test oracle only)");
  }
  if (op.rows() != op.cols() || rhs.size() != op.rows()) {
    throw std::invalid_argument("solve_dense_oracle: dimension mismatch");
  }
  const Matrix dense = Matrix(op.matrix);
  Eigen::FullPivLU<Matrix> lu(dense);
  if (!lu.isInvertible()) {
    throw SolveError("solve_dense_oracle: matrix is singular", 0.0, 0);
  }
  return lu.solve(rhs);
}

}  // namespace reglearn
