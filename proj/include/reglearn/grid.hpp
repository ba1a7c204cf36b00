#pragma once

#include "reglearn/types.hpp"

namespace reglearn {

/// Uniform tensor grid on [x_lo, x_hi]^2 with n nodes per dimension,
/// boundary nodes included. Node (i, j) sits at (x_lo + i*h, x_lo + j*h).
struct Grid {
  int n = 0;
  Real x_lo = 0.0;
  Real x_hi = 0.0;
  Real h = 0.0;

  int interior_per_dim() const { return n - 2; }
  Index num_all() const { return Index(n) * n; }
  Index num_interior() const { return Index(n - 2) * (n - 2); }
  Real coord(int k) const { return x_lo + k * h; }
  bool is_interior(int i, int j) const { return i >= 1 && i <= n - 2 && j >= 1 && j <= n - 2; }

  // i-major linear indices; i runs along x1, j along x2.
  Index all_index(int i, int j) const { return Index(i) * n + j; }
  Index interior_index(int i, int j) const { return Index(i - 1) * (n - 2) + (j - 1); }

  friend bool operator==(const Grid&, const Grid&) = default;
};

Grid build_grid(int n_per_dim, Real x_lo, Real x_hi);

/// Node sets a field can live on. EdgesX1/EdgesX2 are the forward-difference
/// lattices produced by the derivative penalty operators.
enum class FieldSupport { AllNodes, InteriorNodes, EdgesX1, EdgesX2 };

Index support_size(const Grid& grid, FieldSupport support);
const char* support_name(FieldSupport support);

/// Grid-aligned real-valued vector tagged with the node set it lives on.
struct ScalarField {
  Grid grid{};
  FieldSupport support = FieldSupport::AllNodes;
  Vector values;

  ScalarField() = default;
  ScalarField(const Grid& g, FieldSupport s)
      : grid(g), support(s), values(Vector::Zero(support_size(g, s))) {}
  ScalarField(const Grid& g, FieldSupport s, Vector v);

  Index size() const { return values.size(); }
};

/// Throws std::invalid_argument unless both fields share grid and support.
void require_same_layout(const ScalarField& a, const ScalarField& b);

/// Lumped L2 inner product. Every discrete pairing in this library carries
/// the cell weight h^2 so adjoints and gradients stay mesh-consistent.
Real dot_h2(const ScalarField& a, const ScalarField& b);
Real norm_h2_sq(const ScalarField& a);

/// Interior restriction (the operator B) and its adjoint, extension by zero.
/// Both node sets carry the same h^2 weight, so the adjoint is the plain
/// transpose of the restriction.
Vector restrict_interior(const Grid& grid, const Vector& all_values);
Vector extend_by_zero(const Grid& grid, const Vector& interior_values);

}  // namespace reglearn
