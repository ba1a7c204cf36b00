#include "reglearn/bilevel_gradient.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "reglearn/lower_bilinear.hpp"
#include "reglearn/operators.hpp"

namespace reglearn {

Real bilevel_cost(const ScalarField& u, const ScalarField& uex) {
  require_same_layout(u, uex);
  return u.grid.h * u.grid.h * (u.values - uex.values).squaredNorm();
}

ScalarField adjoint_q_linear(const LearnProblem& problem, const Vector& alpha,
                             const ScalarField& u, Real tol) {
  if (!problem.is_linear()) {
    throw std::invalid_argument("adjoint_q_linear: problem kind is not linear");
  }
  RegConfig reg = problem.reg;
  reg.alpha = alpha;
  const ReducedHessianMap hmap(problem.grid, problem.linear().gamma, reg, tol / 100);
  const Vector rhs = -(u.values - problem.uex.values);

  CgOptions options;
  options.tol = tol;
  options.max_iter = std::max<Index>(20 * problem.grid.num_all(), 200);
  options.precondition = hmap.preconditioner();
  if (!hmap.null_basis().empty()) options.deflate = &hmap.null_basis();
  const Vector q = cg_solve([&hmap](const Vector& v) { return hmap.apply(v); }, rhs, options);
  return ScalarField(problem.grid, FieldSupport::AllNodes, q);
}

BilinearAdjoint adjoint_q_bilinear(const LearnProblem& problem, const Vector& alpha,
                                   const ScalarField& y, const ScalarField& u,
                                   const ScalarField& p, Real tol) {
  if (problem.is_linear()) {
    throw std::invalid_argument("adjoint_q_bilinear: problem kind is not bilinear");
  }
  const Grid& grid = problem.grid;
  const BilinearEquation& eq = problem.bilinear();
  RegConfig reg = problem.reg;
  reg.alpha = alpha;

  const Index ni = grid.num_interior();
  const Index na = grid.num_all();
  const Index dim = 2 * ni + na;
  const Index off_q1 = 0;
  const Index off_q2 = ni;
  const Index off_q3 = ni + na;

  const ScalarField coeff(grid, FieldSupport::AllNodes, phi(u.values, eq.phi_params));
  const SparseOperator stiffness = assemble_diffusion_p1(grid, coeff);
  const Vector dphi = phi_d1(u.values, eq.phi_params);
  const SparseMatrix coupling_p = fem::control_jacobian(grid, dphi, p.values);
  const SparseMatrix coupling_y = fem::control_jacobian(grid, dphi, y.values);
  const Vector curvature_diag =
      fem::control_gradient(grid, phi_d2(u.values, eq.phi_params), y.values, p.values);

  std::vector<Triplet> entries;
  entries.reserve(std::size_t(stiffness.matrix.nonZeros()) * 2 +
                  std::size_t(coupling_p.nonZeros() + coupling_y.nonZeros()) * 2 +
                  std::size_t(na) * 10 + std::size_t(ni));

  const auto add_block = [&entries](const SparseMatrix& m, Index row_off, Index col_off,
                                    bool transpose) {
    for (int k = 0; k < m.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
        if (transpose) {
          entries.emplace_back(row_off + it.col(), col_off + it.row(), it.value());
        } else {
          entries.emplace_back(row_off + it.row(), col_off + it.col(), it.value());
        }
      }
    }
  };

  for (Index k = 0; k < ni; ++k) entries.emplace_back(off_q1 + k, off_q1 + k, Real(1));
  add_block(coupling_p, off_q1, off_q2, false);
  add_block(stiffness.matrix, off_q1, off_q3, false);

  add_block(coupling_p, off_q2, off_q1, true);
  for (int k = 0; k < reg.count(); ++k) {
    const SparseMatrix gram = penalty_gram(grid, reg.active_ops[std::size_t(k)]);
    for (int c = 0; c < gram.outerSize(); ++c) {
      for (SparseMatrix::InnerIterator it(gram, c); it; ++it) {
        entries.emplace_back(off_q2 + it.row(), off_q2 + it.col(), reg.alpha[k] * it.value());
      }
    }
  }
  for (Index k = 0; k < na; ++k) entries.emplace_back(off_q2 + k, off_q2 + k, curvature_diag[k]);
  add_block(coupling_y, off_q2, off_q3, true);

  add_block(stiffness.matrix, off_q3, off_q1, false);
  add_block(coupling_y, off_q3, off_q2, false);

  SparseMatrix system(dim, dim);
  system.setFromTriplets(entries.begin(), entries.end());
  system.makeCompressed();

  Vector rhs = Vector::Zero(dim);
  rhs.segment(off_q2, na) = -(u.values - problem.uex.values);

  Eigen::SparseLU<SparseMatrix> lu;
  lu.analyzePattern(system);
  lu.factorize(system);
  if (lu.info() != Eigen::Success) {
    throw SolveError("adjoint_q_bilinear: block system factorization failed (second-order "
                     "sufficiency may not hold at this iterate)",
                     0.0, 0);
  }
  const Vector solution = lu.solve(rhs);
  const Real residual = (system * solution - rhs).norm();
  const Real bound = tol * std::max(Real(1), rhs.norm());
  if (!(residual <= bound)) {
    throw SolveError("adjoint_q_bilinear: block system solve residual " + std::to_string(residual) +
                         " exceeds tolerance (ill-conditioned adjoint system)",
                     residual, 0);
  }

  BilinearAdjoint adj;
  adj.q1 = ScalarField(grid, FieldSupport::InteriorNodes, solution.segment(off_q1, ni));
  adj.q2 = ScalarField(grid, FieldSupport::AllNodes, solution.segment(off_q2, na));
  adj.q3 = ScalarField(grid, FieldSupport::InteriorNodes, solution.segment(off_q3, ni));
  return adj;
}

Vector gradient_alpha(const ScalarField& u, const ScalarField& q_control, const RegConfig& reg) {
  require_same_layout(u, q_control);
  Vector g(reg.count());
  for (int k = 0; k < reg.count(); ++k) {
    const int op = reg.active_ops[std::size_t(k)];
    g[k] = dot_h2(apply_penalty(u.grid, op, q_control), apply_penalty(u.grid, op, u));
  }
  return g;
}

}  // namespace reglearn
