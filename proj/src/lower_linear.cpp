#include "reglearn/lower_linear.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "reglearn/operators.hpp"

namespace reglearn {

namespace {

using PenaltyLlt = Eigen::SimplicialLLT<SparseMatrix>;

std::vector<Vector> edge_null_basis(const Grid& grid, const std::vector<int>& active) {
  // Singular only for {2} alone (x2 = const edges decouple) or {3} alone.
  if (active.size() != 1 || (active[0] != 2 && active[0] != 3)) return {};
  const int n = grid.n;
  const Real scale = Real(1) / std::sqrt(Real(n));
  std::vector<Vector> basis;
  for (int edge = 0; edge < 2; ++edge) {
    Vector v = Vector::Zero(grid.num_all());
    const int fixed = edge == 0 ? 0 : n - 1;
    for (int k = 0; k < n; ++k) {
      const Index idx = active[0] == 2 ? grid.all_index(k, fixed) : grid.all_index(fixed, k);
      v[idx] = scale;
    }
    basis.push_back(std::move(v));
  }
  return basis;
}

}  // namespace

ReducedHessianMap::ReducedHessianMap(const Grid& grid, Real gamma, const RegConfig& reg,
                                     Real inner_tol)
    : grid_(grid), gamma_(gamma), reg_(reg), inner_tol_(inner_tol) {
  reg_.validate();
  helmholtz_ = assemble_helmholtz(grid_, gamma_);
  inner_max_iter_ = std::max<Index>(20 * grid_.num_interior(), 200);
  grams_.reserve(reg_.active_ops.size());
  for (int op : reg_.active_ops) {
    grams_.push_back(penalty_gram(grid_, op));
  }
  null_basis_ = edge_null_basis(grid_, reg_.active_ops);

  // Penalty part plus the interior indicator approximates H away from the
  // smooth data modes; a small shift keeps the factorization positive even
  // for the rank-deficient active sets.
  SparseMatrix precond(grid_.num_all(), grid_.num_all());
  std::vector<Triplet> entries;
  for (int i = 1; i <= grid_.n - 2; ++i) {
    for (int j = 1; j <= grid_.n - 2; ++j) {
      entries.emplace_back(grid_.all_index(i, j), grid_.all_index(i, j), Real(1));
    }
  }
  const Real shift = 1e-10 * (Real(1) + reg_.alpha.sum());
  for (Index k = 0; k < grid_.num_all(); ++k) entries.emplace_back(k, k, shift);
  precond.setFromTriplets(entries.begin(), entries.end());
  for (std::size_t k = 0; k < grams_.size(); ++k) {
    precond += reg_.alpha[Index(k)] * grams_[k];
  }
  auto llt = std::make_shared<PenaltyLlt>();
  llt->compute(precond);
  if (llt->info() == Eigen::Success) {
    precond_factor_ = llt;
  }
}

Vector ReducedHessianMap::apply(const Vector& v_all) const {
  if (v_all.size() != grid_.num_all()) {
    throw std::invalid_argument("ReducedHessianMap::apply: expected an AllNodes vector");
  }
  const Vector restricted = restrict_interior(grid_, v_all);
  const Vector s1 = solve_spd(helmholtz_, restricted, inner_tol_, inner_max_iter_);
  const Vector s2 = solve_spd(helmholtz_, s1, inner_tol_, inner_max_iter_);
  Vector out = extend_by_zero(grid_, s2);
  for (std::size_t k = 0; k < grams_.size(); ++k) {
    out += reg_.alpha[Index(k)] * (grams_[k] * v_all);
  }
  return out;
}

Vector ReducedHessianMap::data_rhs(const Vector& ybar_interior) const {
  const Vector s = solve_spd(helmholtz_, ybar_interior, inner_tol_, inner_max_iter_);
  return extend_by_zero(grid_, s);
}

Vector ReducedHessianMap::state_of(const Vector& u_all) const {
  return solve_spd(helmholtz_, restrict_interior(grid_, u_all), inner_tol_, inner_max_iter_);
}

LinearMap ReducedHessianMap::preconditioner() const {
  if (!precond_factor_) return {};
  auto llt = std::static_pointer_cast<PenaltyLlt>(precond_factor_);
  return [llt](const Vector& r) -> Vector { return llt->solve(r); };
}

ScalarField apply_reduced_hessian(const ReducedHessianMap& hmap, const ScalarField& v) {
  if (v.support != FieldSupport::AllNodes || !(v.grid == hmap.grid())) {
    throw std::invalid_argument("apply_reduced_hessian: expected an AllNodes field on the map's grid");
  }
  return ScalarField(hmap.grid(), FieldSupport::AllNodes, hmap.apply(v.values));
}

LowerLinearSolution solve_lower_linear(const LearnProblem& problem, Real tol,
                                       const ScalarField* warm_u, const Vector* alpha_override) {
  if (!problem.is_linear()) {
    throw std::invalid_argument("solve_lower_linear: problem kind is not linear");
  }
  const Grid& grid = problem.grid;
  RegConfig reg = problem.reg;
  if (alpha_override) reg.alpha = *alpha_override;
  const ReducedHessianMap hmap(grid, problem.linear().gamma, reg, tol / 100);
  const ScalarField ybar = mean_measurement(problem.measurements);
  const Vector rhs = hmap.data_rhs(ybar.values);

  CgOptions options;
  options.tol = tol;
  options.max_iter = std::max<Index>(20 * grid.num_all(), 200);
  options.precondition = hmap.preconditioner();
  if (!hmap.null_basis().empty()) options.deflate = &hmap.null_basis();
  Vector x0;
  if (warm_u) {
    if (warm_u->support != FieldSupport::AllNodes || !(warm_u->grid == grid)) {
      throw std::invalid_argument("solve_lower_linear: warm start layout mismatch");
    }
    x0 = warm_u->values;
    options.x0 = &x0;
  }

  const Vector u = cg_solve([&hmap](const Vector& v) { return hmap.apply(v); }, rhs, options);
  LowerLinearSolution solution;
  solution.u = ScalarField(grid, FieldSupport::AllNodes, u);
  solution.y = ScalarField(grid, FieldSupport::InteriorNodes, hmap.state_of(u));
  return solution;
}

Real lower_residual_linear(const LearnProblem& problem, const ScalarField& u) {
  if (!problem.is_linear()) {
    throw std::invalid_argument("lower_residual_linear: problem kind is not linear");
  }
  const ReducedHessianMap hmap(problem.grid, problem.linear().gamma, problem.reg, 1e-13);
  const ScalarField ybar = mean_measurement(problem.measurements);
  Vector rhs = hmap.data_rhs(ybar.values);
  for (const Vector& q : hmap.null_basis()) rhs -= q.dot(rhs) * q;
  const Real denom = std::max(Real(1), rhs.norm());
  return (hmap.apply(u.values) - rhs).norm() / denom;
}

Real lower_objective_linear(const LearnProblem& problem, const ScalarField& u,
                            const ScalarField& y) {
  const Grid& grid = problem.grid;
  Real data = 0;
  for (const ScalarField& yd : problem.measurements.fields) {
    require_same_layout(y, yd);
    data += (y.values - yd.values).squaredNorm();
  }
  data *= grid.h * grid.h / (2 * Real(problem.measurements.count()));
  Real penalty = 0;
  for (int k = 0; k < problem.reg.count(); ++k) {
    const ScalarField ku = apply_penalty(grid, problem.reg.active_ops[std::size_t(k)], u);
    penalty += problem.reg.alpha[k] / 2 * grid.h * grid.h * ku.values.squaredNorm();
  }
  return data + penalty;
}

}  // namespace reglearn
