#include "reglearn/phi.hpp"

#include <stdexcept>

namespace reglearn {

namespace {

// Junction polynomial f(x) = -10/e^6 x^7 + 36/e^5 x^6 - 45/e^4 x^5 + 20/e^3 x^4 + a.
// f(0) = a, f(eps) = a + eps, and f', f'', f''' vanish at 0 and match the
// identity branch at eps (coefficient sums 1, 0, 0).
Real junction(Real x, Real eps, Real a) {
  const Real s = x / eps;
  const Real s4 = s * s * s * s;
  return eps * s4 * (((-10 * s + 36) * s - 45) * s + 20) + a;
}

Real junction_d1(Real x, Real eps) {
  const Real s = x / eps;
  const Real s3 = s * s * s;
  return s3 * (((-70 * s + 216) * s - 225) * s + 80);
}

Real junction_d2(Real x, Real eps) {
  const Real s = x / eps;
  const Real s2 = s * s;
  return s2 * (((-420 * s + 1080) * s - 900) * s + 240) / eps;
}

}  // namespace

PhiParams::PhiParams(Real a_, Real b_, Real eps_) : a(a_), b(b_), eps(eps_) {
  if (!(0 < a && a < b)) {
    throw std::invalid_argument("PhiParams: bounds must satisfy 0 < a < b");
  }
  if (!(eps > 0 && eps < (b - a) / 2)) {
    throw std::invalid_argument("PhiParams: smoothing width must satisfy 0 < eps < (b-a)/2");
  }
}

Real phi(Real t, const PhiParams& p) {
  if (t <= p.a) return p.a;
  if (t >= p.b) return p.b;
  if (t < p.a + p.eps) return junction(t - p.a, p.eps, p.a);
  if (t > p.b - p.eps) return -junction(p.b - t, p.eps, p.a) + p.a + p.b;
  return t;
}

Real phi_d1(Real t, const PhiParams& p) {
  if (t <= p.a || t >= p.b) return 0;
  if (t < p.a + p.eps) return junction_d1(t - p.a, p.eps);
  if (t > p.b - p.eps) return junction_d1(p.b - t, p.eps);
  return 1;
}

Real phi_d2(Real t, const PhiParams& p) {
  if (t <= p.a || t >= p.b) return 0;
  if (t < p.a + p.eps) return junction_d2(t - p.a, p.eps);
  if (t > p.b - p.eps) return -junction_d2(p.b - t, p.eps);
  return 0;
}

Vector phi(const Vector& t, const PhiParams& p) {
  Vector out(t.size());
  for (Index k = 0; k < t.size(); ++k) out[k] = phi(t[k], p);
  return out;
}

Vector phi_d1(const Vector& t, const PhiParams& p) {
  Vector out(t.size());
  for (Index k = 0; k < t.size(); ++k) out[k] = phi_d1(t[k], p);
  return out;
}

Vector phi_d2(const Vector& t, const PhiParams& p) {
  Vector out(t.size());
  for (Index k = 0; k < t.size(); ++k) out[k] = phi_d2(t[k], p);
  return out;
}

}  // namespace reglearn
