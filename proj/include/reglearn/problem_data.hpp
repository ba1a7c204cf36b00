#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "reglearn/grid.hpp"
#include "reglearn/phi.hpp"
#include "reglearn/types.hpp"

namespace reglearn {

/// Active penalty-operator subset, current regularization weights and the
/// admissible box. alpha, alpha_lo and alpha_hi are indexed by position in
/// active_ops.
struct RegConfig {
  std::vector<int> active_ops;  // nonempty ordered subset of {1,2,3}
  Vector alpha;
  Vector alpha_lo;
  Vector alpha_hi;

  int count() const { return int(active_ops.size()); }
  void validate() const;
};

RegConfig make_reg_config(std::vector<int> active_ops, const Vector& alpha, const Vector& alpha_lo,
                          const Vector& alpha_hi);

/// Noisy measurements of the exact state on the interior nodes.
struct MeasurementSet {
  std::vector<ScalarField> fields;
  Real noise_level = 0.0;
  std::uint64_t seed = 0;

  Index count() const { return Index(fields.size()); }
};

struct LinearEquation {
  Real gamma;  // state equation -gamma*Laplace(y) + y = u
};

struct BilinearEquation {
  ScalarField f;  // interior load of -div(phi(u) grad y) = f
  PhiParams phi_params;
};

/// Everything a learning run needs: equation kind and constants, exact
/// control, measurement set and regularization configuration.
struct LearnProblem {
  Grid grid{};
  std::variant<LinearEquation, BilinearEquation> equation;
  ScalarField uex;  // AllNodes
  MeasurementSet measurements;
  RegConfig reg;

  bool is_linear() const { return std::holds_alternative<LinearEquation>(equation); }
  const LinearEquation& linear() const { return std::get<LinearEquation>(equation); }
  const BilinearEquation& bilinear() const { return std::get<BilinearEquation>(equation); }
};

/// Piecewise exact control of the source-identification experiment:
/// 2.5 inside the square window |x1-0.4|<0.3, |x2-0.4|<0.3, and
/// 2.5(sin^2(2 pi x1) + x2^2) elsewhere.
ScalarField exact_control_linear(const Grid& grid);

/// Exact state solving the discrete five-point system A y = B uex.
ScalarField exact_state_linear(const Grid& grid, Real gamma, const ScalarField& uex);

struct BilinearExactData {
  ScalarField uex;  // AllNodes
  ScalarField yex;  // InteriorNodes, nodal interpolant of (x1^4-x1^2)(x2^2-1)
  ScalarField f;    // InteriorNodes, manufactured discretely
};

/// Exact pair of the diffusion-coefficient experiment. The load f is
/// manufactured discretely as assemble_diffusion_p1(grid, phi(uex)) * yex so
/// the pair satisfies the discrete state equation exactly at any resolution.
BilinearExactData exact_pair_bilinear(const Grid& grid,
                                      const PhiParams& phi_params = PhiParams(0.05, 2.0, 0.01));

/// Pointwise y_j = yex + eps*xi with eps = noise_level * max|yex| and
/// standard normal xi. Deterministic for a fixed seed; measurement j draws
/// from the substream seeded with seed xor j.
MeasurementSet generate_measurements(const ScalarField& yex, Real noise_level, int m,
                                     std::uint64_t seed);

/// Arithmetic mean of the measurement fields.
ScalarField mean_measurement(const MeasurementSet& ms);

}  // namespace reglearn
