#include "reglearn/grid.hpp"

#include <stdexcept>
#include <string>

namespace reglearn {

Grid build_grid(int n_per_dim, Real x_lo, Real x_hi) {
  if (n_per_dim < 3) {
    throw std::invalid_argument("build_grid: n_per_dim must be >= 3 (grid needs an interior node), got " +
                                std::to_string(n_per_dim));
  }
  if (!(x_lo < x_hi)) {
    throw std::invalid_argument("build_grid: x_lo must be strictly below x_hi");
  }
  Grid g;
  g.n = n_per_dim;
  g.x_lo = x_lo;
  g.x_hi = x_hi;
  g.h = (x_hi - x_lo) / Real(n_per_dim - 1);
  return g;
}

Index support_size(const Grid& grid, FieldSupport support) {
  const Index n = grid.n;
  switch (support) {
    case FieldSupport::AllNodes: return n * n;
    case FieldSupport::InteriorNodes: return (n - 2) * (n - 2);
    case FieldSupport::EdgesX1: return (n - 1) * n;
    case FieldSupport::EdgesX2: return n * (n - 1);
  }
  throw std::logic_error("support_size: unknown support");
}

const char* support_name(FieldSupport support) {
  switch (support) {
    case FieldSupport::AllNodes: return "AllNodes";
    case FieldSupport::InteriorNodes: return "InteriorNodes";
    case FieldSupport::EdgesX1: return "EdgesX1";
    case FieldSupport::EdgesX2: return "EdgesX2";
  }
  return "?";
}

ScalarField::ScalarField(const Grid& g, FieldSupport s, Vector v)
    : grid(g), support(s), values(std::move(v)) {
  if (values.size() != support_size(grid, support)) {
    throw std::invalid_argument(std::string("ScalarField: value count does not match support ") +
                                support_name(support));
  }
}

void require_same_layout(const ScalarField& a, const ScalarField& b) {
  if (!(a.grid == b.grid) || a.support != b.support) {
    throw std::invalid_argument(std::string("field layout mismatch: ") + support_name(a.support) +
                                " vs " + support_name(b.support));
  }
}

Real dot_h2(const ScalarField& a, const ScalarField& b) {
  require_same_layout(a, b);
  return a.grid.h * a.grid.h * a.values.dot(b.values);
}

Real norm_h2_sq(const ScalarField& a) { return a.grid.h * a.grid.h * a.values.squaredNorm(); }

Vector restrict_interior(const Grid& grid, const Vector& all_values) {
  if (all_values.size() != grid.num_all()) {
    throw std::invalid_argument("restrict_interior: expected an AllNodes vector");
  }
  Vector out(grid.num_interior());
  const int n = grid.n;
  for (int i = 1; i <= n - 2; ++i) {
    for (int j = 1; j <= n - 2; ++j) {
      out[grid.interior_index(i, j)] = all_values[grid.all_index(i, j)];
    }
  }
  return out;
}

Vector extend_by_zero(const Grid& grid, const Vector& interior_values) {
  if (interior_values.size() != grid.num_interior()) {
    throw std::invalid_argument("extend_by_zero: expected an InteriorNodes vector");
  }
  Vector out = Vector::Zero(grid.num_all());
  const int n = grid.n;
  for (int i = 1; i <= n - 2; ++i) {
    for (int j = 1; j <= n - 2; ++j) {
      out[grid.all_index(i, j)] = interior_values[grid.interior_index(i, j)];
    }
  }
  return out;
}

}  // namespace reglearn
