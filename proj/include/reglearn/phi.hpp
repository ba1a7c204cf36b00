#pragma once

#include "reglearn/types.hpp"

namespace reglearn {

/// Parameters of the C^3 smoothed pointwise projection onto [a, b]. The
/// smoothing width eps must leave room for the identity region,
/// eps < (b - a)/2.
struct PhiParams {
  Real a;
  Real b;
  Real eps;

  PhiParams(Real a_, Real b_, Real eps_);
};

/// Smoothed projection: identity on [a+eps, b-eps], constant a below a,
/// constant b above b, degree-7 junction polynomials in between. phi is C^3
/// and maps the real line into [a, b].
Real phi(Real t, const PhiParams& p);
Real phi_d1(Real t, const PhiParams& p);
Real phi_d2(Real t, const PhiParams& p);

Vector phi(const Vector& t, const PhiParams& p);
Vector phi_d1(const Vector& t, const PhiParams& p);
Vector phi_d2(const Vector& t, const PhiParams& p);

}  // namespace reglearn
