#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "reglearn/bilevel_gradient.hpp"
#include "reglearn/problem_data.hpp"

namespace reglearn {

enum class StepKind { Warmup, Bfgs, Gd };
enum class Termination { GradTol, LineSearchFail, MaxIter };

const char* step_kind_name(StepKind kind);
const char* termination_name(Termination termination);

struct TraceRecord {
  int iter = 0;
  Vector alpha;
  Real cost = 0;
  Real grad_norm_sq = 0;
  StepKind kind = StepKind::Warmup;
  Real step_length = 0;
  int backtracks = 0;
};

struct ArmijoConfig {
  Real sigma = 0.5;       // step reduction factor
  Real c_dec = 1e-4;      // sufficient decrease constant
  int max_backtracks = 30;
  Real step0 = 1.0;
};

struct OuterConfig {
  Real tol_grad_sq = 1e-10;  // threshold on ||g||^2, relative to the initial value
  int max_outer = 200;
  int warm_start_steps = 5;  // initial gradient descent steps
  Real c1 = 1e-4;            // descent test <g,d> < -min{c1, c2 ||d||^2} ||d||^2
  Real c2 = 1e-2;
  ArmijoConfig armijo;
  Real lower_tol = 1e-10;
  Real adjoint_tol = 1e-10;
  int lower_max_iter = 2000;  // bilinear reduced-space iterations
  bool log_alpha = false;     // optimize in log(alpha) with chain-ruled gradients
  std::function<void(const TraceRecord&)> on_step;
};

struct LearnResult {
  Vector alpha_star;
  ScalarField u_star;
  ScalarField y_star;
  std::vector<TraceRecord> trace;
  Termination termination = Termination::GradTol;
  Real initial_cost = 0;
  Real initial_grad_norm_sq = 0;
};

/// Raised when a lower-level solve fails inside learn(); carries the trace
/// accumulated so far so the harness can still flush it.
class LearnError : public std::runtime_error {
 public:
  LearnError(const std::string& message, std::vector<TraceRecord> trace)
      : std::runtime_error(message), trace_(std::move(trace)) {}

  const std::vector<TraceRecord>& trace() const { return trace_; }

 private:
  std::vector<TraceRecord> trace_;
};

struct ArmijoResult {
  Vector alpha_new;
  Real step_length = 0;
  int backtracks = 0;
  Real cost_new = 0;
};

/// Armijo backtracking along d with box projection: accepts the largest
/// t = step0 * sigma^k, k <= max_backtracks, with
///   J(clip(alpha + t d)) <= J(alpha) + c_dec * t * <grad2, d>.
/// Returns nullopt when no trial succeeds; that outcome drives termination
/// and is a value, not an exception.
std::optional<ArmijoResult> armijo_step(const std::function<Real(const Vector&)>& cost,
                                        const Vector& alpha, Real cost_at_alpha,
                                        const Vector& direction, const Vector& grad2,
                                        const ArmijoConfig& config, const Vector& lower,
                                        const Vector& upper);

/// Inverse-BFGS machinery on the tiny (r <= 3) outer Hessian approximation.
Vector bfgs_direction(const Matrix& h_inv, const Vector& grad2);
Matrix bfgs_update(const Matrix& h_inv, const Vector& s, const Vector& delta_grad2);

/// Globalized quasi-Newton iteration on the regularization weights:
/// warm-start gradient descent steps, then BFGS directions guarded by the
/// descent test (failures reset the Hessian approximation to the identity
/// and fall back to gradient descent), Armijo line search with box
/// projection, curvature-guarded updates. Terminates on the gradient
/// threshold, a failed line search, or max_outer.
LearnResult learn(const LearnProblem& problem, const Vector& alpha0, const OuterConfig& config);

/// Lower-level solve plus bilevel cost at alpha (no gradient).
BilevelIterate evaluate_lower(const LearnProblem& problem, const Vector& alpha, Real lower_tol,
                              int lower_max_iter, const ScalarField* warm_u = nullptr);

/// Adjoint solve filling iterate.grad.
void attach_gradient(const LearnProblem& problem, BilevelIterate& iterate, Real adjoint_tol);

/// Full evaluation: lower level, cost, adjoint and gradient.
BilevelIterate evaluate_bilevel(const LearnProblem& problem, const Vector& alpha, Real lower_tol,
                                Real adjoint_tol, int lower_max_iter = 2000,
                                const ScalarField* warm_u = nullptr);

}  // namespace reglearn
