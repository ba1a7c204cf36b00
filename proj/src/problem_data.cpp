#include "reglearn/problem_data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "reglearn/operators.hpp"
#include "reglearn/solvers.hpp"

namespace reglearn {

void RegConfig::validate() const {
  if (active_ops.empty()) throw std::invalid_argument("RegConfig: active operator set is empty");
  for (int op : active_ops) {
    if (op < 1 || op > 3) throw std::invalid_argument("RegConfig: operator indices must be in {1,2,3}");
  }
  std::vector<int> sorted = active_ops;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw std::invalid_argument("RegConfig: duplicate operator index");
  }
  const Index r = Index(active_ops.size());
  if (alpha.size() != r || alpha_lo.size() != r || alpha_hi.size() != r) {
    throw std::invalid_argument("RegConfig: alpha vectors must match the active operator count");
  }
  for (Index k = 0; k < r; ++k) {
    if (!(alpha_lo[k] > 0)) throw std::invalid_argument("RegConfig: alpha_lo must be positive");
    if (!(alpha_lo[k] <= alpha_hi[k])) throw std::invalid_argument("RegConfig: alpha_lo must not exceed alpha_hi");
    if (!(alpha_lo[k] <= alpha[k] && alpha[k] <= alpha_hi[k])) {
      throw std::invalid_argument("RegConfig: alpha must lie in [alpha_lo, alpha_hi]");
    }
  }
}

RegConfig make_reg_config(std::vector<int> active_ops, const Vector& alpha, const Vector& alpha_lo,
                          const Vector& alpha_hi) {
  RegConfig reg;
  reg.active_ops = std::move(active_ops);
  reg.alpha = alpha;
  reg.alpha_lo = alpha_lo;
  reg.alpha_hi = alpha_hi;
  reg.validate();
  return reg;
}

ScalarField exact_control_linear(const Grid& grid) {
  ScalarField u(grid, FieldSupport::AllNodes);
  for (int i = 0; i < grid.n; ++i) {
    const Real x1 = grid.coord(i);
    for (int j = 0; j < grid.n; ++j) {
      const Real x2 = grid.coord(j);
      Real v;
      if (std::abs(x1 - 0.4) < 0.3 && std::abs(x2 - 0.4) < 0.3) {
        v = 2.5;
      } else {
        const Real s = std::sin(2 * std::numbers::pi_v<Real> * x1);
        v = 2.5 * (s * s + x2 * x2);
      }
      u.values[grid.all_index(i, j)] = v;
    }
  }
  return u;
}

ScalarField exact_state_linear(const Grid& grid, Real gamma, const ScalarField& uex) {
  const SparseOperator a = assemble_helmholtz(grid, gamma);
  const Vector rhs = restrict_interior(grid, uex.values);
  const Vector y = solve_spd(a, rhs, 1e-13, 20 * grid.num_interior());
  return ScalarField(grid, FieldSupport::InteriorNodes, y);
}

BilinearExactData exact_pair_bilinear(const Grid& grid, const PhiParams& phi_params) {
  BilinearExactData data;
  data.uex = ScalarField(grid, FieldSupport::AllNodes);
  for (int i = 0; i < grid.n; ++i) {
    const Real x1 = grid.coord(i);
    for (int j = 0; j < grid.n; ++j) {
      const Real x2 = grid.coord(j);
      const Real r = std::sqrt(x1 * x1 + x2 * x2);
      data.uex.values[grid.all_index(i, j)] = r <= 0.5 ? 1 + x2 * x2 : 0.1 + x1 * x1;
    }
  }
  data.yex = ScalarField(grid, FieldSupport::InteriorNodes);
  for (int i = 1; i <= grid.n - 2; ++i) {
    const Real x1 = grid.coord(i);
    for (int j = 1; j <= grid.n - 2; ++j) {
      const Real x2 = grid.coord(j);
      data.yex.values[grid.interior_index(i, j)] = (x1 * x1 * x1 * x1 - x1 * x1) * (x2 * x2 - 1);
    }
  }
  const ScalarField coeff(grid, FieldSupport::AllNodes, phi(data.uex.values, phi_params));
  const SparseOperator k = assemble_diffusion_p1(grid, coeff);
  data.f = ScalarField(grid, FieldSupport::InteriorNodes, k.apply(data.yex.values));
  return data;
}

namespace {

// Box-Muller on top of mt19937_64 keeps the generated streams identical
// across standard libraries.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

  Real next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const Real u1 = Real((engine_() >> 11) + 1) * 0x1p-53;  // (0, 1]
    const Real u2 = Real(engine_() >> 11) * 0x1p-53;        // [0, 1)
    const Real radius = std::sqrt(-2 * std::log(u1));
    const Real angle = 2 * std::numbers::pi_v<Real> * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  Real spare_ = 0;
};

}  // namespace

MeasurementSet generate_measurements(const ScalarField& yex, Real noise_level, int m,
                                     std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("generate_measurements: need at least one measurement");
  if (noise_level < 0) throw std::invalid_argument("generate_measurements: negative noise level");
  MeasurementSet ms;
  ms.noise_level = noise_level;
  ms.seed = seed;
  ms.fields.reserve(std::size_t(m));
  const Real eps = noise_level * (yex.size() > 0 ? yex.values.cwiseAbs().maxCoeff() : Real(0));
  for (int j = 0; j < m; ++j) {
    GaussianStream stream(seed ^ std::uint64_t(j));
    ScalarField field = yex;
    for (Index k = 0; k < field.size(); ++k) {
      field.values[k] += eps * stream.next();
    }
    ms.fields.push_back(std::move(field));
  }
  return ms;
}

ScalarField mean_measurement(const MeasurementSet& ms) {
  if (ms.fields.empty()) throw std::invalid_argument("mean_measurement: empty measurement set");
  ScalarField mean = ms.fields.front();
  for (std::size_t j = 1; j < ms.fields.size(); ++j) {
    require_same_layout(mean, ms.fields[j]);
    mean.values += ms.fields[j].values;
  }
  mean.values /= Real(ms.fields.size());
  return mean;
}

}  // namespace reglearn
