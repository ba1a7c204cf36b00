#include "reglearn/outer_loop.hpp"

#include <algorithm>
#include <cmath>

#include "reglearn/lower_bilinear.hpp"
#include "reglearn/lower_linear.hpp"
#include "reglearn/solvers.hpp"

namespace reglearn {

const char* step_kind_name(StepKind kind) {
  switch (kind) {
    case StepKind::Warmup: return "warmup";
    case StepKind::Bfgs: return "bfgs";
    case StepKind::Gd: return "gd";
  }
  return "?";
}

const char* termination_name(Termination termination) {
  switch (termination) {
    case Termination::GradTol: return "GradTol";
    case Termination::LineSearchFail: return "LineSearchFail";
    case Termination::MaxIter: return "MaxIter";
  }
  return "?";
}

BilevelIterate evaluate_lower(const LearnProblem& problem, const Vector& alpha, Real lower_tol,
                              int lower_max_iter, const ScalarField* warm_u) {
  BilevelIterate iterate;
  iterate.alpha = alpha;
  if (problem.is_linear()) {
    LowerLinearSolution solution = solve_lower_linear(problem, lower_tol, warm_u, &alpha);
    iterate.u = std::move(solution.u);
    iterate.y = std::move(solution.y);
  } else {
    BilinearLowerSolution solution = solve_lower_bilinear(problem, alpha, warm_u, lower_tol, lower_max_iter);
    iterate.u = std::move(solution.u);
    iterate.y = std::move(solution.y);
    iterate.p = std::move(solution.p);
  }
  iterate.cost = bilevel_cost(iterate.u, problem.uex);
  return iterate;
}

void attach_gradient(const LearnProblem& problem, BilevelIterate& iterate, Real adjoint_tol) {
  if (problem.is_linear()) {
    const ScalarField q = adjoint_q_linear(problem, iterate.alpha, iterate.u, adjoint_tol);
    iterate.grad = gradient_alpha(iterate.u, q, problem.reg);
  } else {
    const BilinearAdjoint adj = adjoint_q_bilinear(problem, iterate.alpha, iterate.y, iterate.u,
                                                   *iterate.p, adjoint_tol);
    iterate.grad = gradient_alpha(iterate.u, adj.q2, problem.reg);
  }
}

BilevelIterate evaluate_bilevel(const LearnProblem& problem, const Vector& alpha, Real lower_tol,
                                Real adjoint_tol, int lower_max_iter, const ScalarField* warm_u) {
  BilevelIterate iterate = evaluate_lower(problem, alpha, lower_tol, lower_max_iter, warm_u);
  attach_gradient(problem, iterate, adjoint_tol);
  return iterate;
}

std::optional<ArmijoResult> armijo_step(const std::function<Real(const Vector&)>& cost,
                                        const Vector& alpha, Real cost_at_alpha,
                                        const Vector& direction, const Vector& grad2,
                                        const ArmijoConfig& config, const Vector& lower,
                                        const Vector& upper) {
  const Real slope = grad2.dot(direction);
  Real step = config.step0;
  for (int k = 0; k <= config.max_backtracks; ++k) {
    const Vector trial = (alpha + step * direction).cwiseMax(lower).cwiseMin(upper);
    const Real trial_cost = cost(trial);
    if (trial_cost <= cost_at_alpha + config.c_dec * step * slope) {
      ArmijoResult result;
      result.alpha_new = trial;
      result.step_length = step;
      result.backtracks = k;
      result.cost_new = trial_cost;
      return result;
    }
    step *= config.sigma;
  }
  return std::nullopt;
}

Vector bfgs_direction(const Matrix& h_inv, const Vector& grad2) { return -(h_inv * grad2); }

Matrix bfgs_update(const Matrix& h_inv, const Vector& s, const Vector& delta_grad2) {
  const Real sy = s.dot(delta_grad2);
  const Index r = s.size();
  const Matrix identity = Matrix::Identity(r, r);
  const Matrix left = identity - (s * delta_grad2.transpose()) / sy;
  return left * h_inv * left.transpose() + (s * s.transpose()) / sy;
}

namespace {

struct VarSpace {
  bool log_scale = false;

  Vector to_var(const Vector& alpha) const {
    return log_scale ? Vector(alpha.array().log()) : alpha;
  }
  Vector to_alpha(const Vector& var) const {
    return log_scale ? Vector(var.array().exp()) : var;
  }
  // Chain rule: d/d(log alpha) = alpha * d/d(alpha).
  Vector grad(const Vector& g_alpha, const Vector& alpha) const {
    return log_scale ? Vector(g_alpha.cwiseProduct(alpha)) : g_alpha;
  }
};

}  // namespace

LearnResult learn(const LearnProblem& problem, const Vector& alpha0, const OuterConfig& config) {
  problem.reg.validate();
  const int r = problem.reg.count();
  if (alpha0.size() != r) throw std::invalid_argument("learn: alpha0 length must match the active set");
  for (Index k = 0; k < r; ++k) {
    if (!(problem.reg.alpha_lo[k] <= alpha0[k] && alpha0[k] <= problem.reg.alpha_hi[k])) {
      throw std::invalid_argument("learn: alpha0 outside the admissible box");
    }
  }

  const VarSpace space{config.log_alpha};
  const Vector lower = space.to_var(problem.reg.alpha_lo);
  const Vector upper = space.to_var(problem.reg.alpha_hi);

  LearnResult result;
  BilevelIterate current;
  try {
    current = evaluate_bilevel(problem, alpha0, config.lower_tol, config.adjoint_tol,
                               config.lower_max_iter);
  } catch (const SolveError& err) {
    throw LearnError(std::string("learn: lower-level failure at the initial iterate: ") + err.what(),
                     {});
  }
  Vector var = space.to_var(current.alpha);
  Vector g_var = space.grad(current.grad, current.alpha);

  result.initial_cost = current.cost;
  result.initial_grad_norm_sq = g_var.squaredNorm();
  const Real threshold = config.tol_grad_sq * result.initial_grad_norm_sq;

  Matrix h_inv = Matrix::Identity(r, r);
  ScalarField warm_u = current.u;

  // Cost closure for the line search; remembers the last evaluated iterate so
  // the accepted trial does not have to be re-solved.
  BilevelIterate last_eval;
  bool have_last = false;
  const auto cost_of_var = [&](const Vector& trial_var) -> Real {
    const Vector alpha = space.to_alpha(trial_var);
    last_eval = evaluate_lower(problem, alpha, config.lower_tol, config.lower_max_iter, &warm_u);
    have_last = true;
    return last_eval.cost;
  };

  int iterations = 0;
  while (true) {
    const Real gsq = g_var.squaredNorm();
    if (gsq <= threshold) {
      result.termination = Termination::GradTol;
      break;
    }
    if (iterations >= config.max_outer) {
      result.termination = Termination::MaxIter;
      break;
    }

    const Vector g2 = 2 * g_var;
    StepKind kind;
    Vector direction;
    if (iterations < config.warm_start_steps) {
      kind = StepKind::Warmup;
      direction = -g2;
    } else {
      const Vector bfgs_dir = bfgs_direction(h_inv, g2);
      const Real dd = bfgs_dir.squaredNorm();
      if (g_var.dot(bfgs_dir) < -std::min(config.c1, config.c2 * dd) * dd) {
        kind = StepKind::Bfgs;
        direction = bfgs_dir;
      } else {
        kind = StepKind::Gd;
        h_inv = Matrix::Identity(r, r);
        direction = -g2;
      }
    }

    std::optional<ArmijoResult> accepted;
    try {
      have_last = false;
      accepted = armijo_step(cost_of_var, var, current.cost, direction, g2, config.armijo, lower, upper);
    } catch (const SolveError& err) {
      throw LearnError(std::string("learn: lower-level failure during line search: ") + err.what(),
                       result.trace);
    }
    if (!accepted) {
      result.termination = Termination::LineSearchFail;
      break;
    }

    // The accepted trial is always the line search's last evaluation.
    BilevelIterate next;
    if (have_last) {
      next = std::move(last_eval);
    } else {
      next = evaluate_lower(problem, space.to_alpha(accepted->alpha_new), config.lower_tol,
                            config.lower_max_iter, &warm_u);
    }
    try {
      attach_gradient(problem, next, config.adjoint_tol);
    } catch (const SolveError& err) {
      throw LearnError(std::string("learn: adjoint failure after an accepted step: ") + err.what(),
                       result.trace);
    }

    const Vector new_var = accepted->alpha_new;
    const Vector g_var_next = space.grad(next.grad, next.alpha);
    const Vector s = new_var - var;
    const Vector delta_g2 = 2 * g_var_next - g2;

    if (kind == StepKind::Warmup) h_inv = Matrix::Identity(r, r);
    if (kind != StepKind::Gd && s.dot(delta_g2) > 1e-12 * s.norm() * delta_g2.norm()) {
      h_inv = bfgs_update(h_inv, s, delta_g2);
    }

    ++iterations;
    TraceRecord record;
    record.iter = iterations;
    record.alpha = next.alpha;
    record.cost = next.cost;
    record.grad_norm_sq = g_var_next.squaredNorm();
    record.kind = kind;
    record.step_length = accepted->step_length;
    record.backtracks = accepted->backtracks;
    result.trace.push_back(record);
    if (config.on_step) config.on_step(record);

    current = std::move(next);
    var = new_var;
    g_var = g_var_next;
    warm_u = current.u;
  }

  result.alpha_star = current.alpha;
  result.u_star = std::move(current.u);
  result.y_star = std::move(current.y);
  return result;
}

}  // namespace reglearn
