#include "molz/coherent.hpp"

#include <cmath>

#include <quadmath.h>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/factorials.hpp>
#include <boost/math/special_functions/hermite.hpp>

namespace molz {

CoherentState CoherentState::make(cplx A, cplx B, double eps, double a, double eta, int m) {
  if (m < 0 || m > 20) throw Error("BadState", "excitation index must lie in [0, 20]");
  if (eps <= 0) throw Error("BadState", "eps must be positive");
  CoherentState s;
  s.A = A;
  s.B = B;
  s.eps = eps;
  s.a = a;
  s.eta = eta;
  s.m = m;
  s.argA = std::arg(A);
  if (s.normalization_defect() > 1e-10) throw Error("BadState", "Re(conj(A) B) must equal 1");
  return s;
}

double CoherentState::normalization_defect() const { return std::abs((std::conj(A) * B).real() - 1.0); }

FlowResult flow(const CoherentState& s, double t, double e_inf) {
  FlowResult r;
  r.state = s;
  r.state.A = s.A + I * t * s.B;
  r.state.a = s.a + s.eta * t;
  // A + i t B sweeps a segment that avoids 0, so the ratio's principal argument is the winding
  r.state.argA = s.argA + std::arg(r.state.A / s.A);
  r.action = t * (0.5 * s.eta * s.eta - e_inf);
  r.phase = std::exp(I * (r.action / (s.eps * s.eps)));
  return r;
}

double hermite(int m, double y) { return boost::math::hermite(static_cast<unsigned>(m), y); }

static cplx gauss_factor(cplx A, double argA, cplx B, double eps, double a, double eta, int m, double x) {
  double eps2 = eps * eps;
  double y = x - a;
  cplx sqrtA = std::sqrt(std::abs(A)) * std::exp(I * (0.5 * argA));
  cplx g = std::pow(pi, -0.25) / std::sqrt(eps) / sqrtA *
           std::exp(-B * y * y / (2.0 * eps2 * A) + I * (eta * y / eps2));
  if (m == 0) return g;
  double pre = std::pow(2.0, -0.5 * m) / std::sqrt(boost::math::factorial<double>(m));
  return g * pre * std::exp(-I * (double(m) * argA)) * hermite(m, y / (eps * std::abs(A)));
}

cplx evaluate_at(const CoherentState& s, double x) {
  return gauss_factor(s.A, s.argA, s.B, s.eps, s.a, s.eta, s.m, x);
}

std::vector<cplx> evaluate(const CoherentState& s, const std::vector<double>& x) {
  std::vector<cplx> v(x.size());
  for (size_t i = 0; i < x.size(); ++i) v[i] = evaluate_at(s, x[i]);
  if (!x.empty()) {
    // Gaussian mass beyond the grid ends (Hermite factor bounded by a polynomial; use a margin)
    double w = s.eps * std::abs(s.A);
    double lo = (s.a - x.front()) / w, hi = (x.back() - s.a) / w;
    double widen = std::sqrt(2.0 * s.m + 1.0) + 1.0;
    double out = 0.5 * boost::math::erfc(std::max(0.0, lo - widen)) +
                 0.5 * boost::math::erfc(std::max(0.0, hi - widen));
    if (out > 1e-10) throw Error("GridTooNarrow", "coherent state extends beyond the grid");
  }
  return v;
}

std::vector<qcplx> evaluate_quad(const CoherentState& s, const std::vector<double>& x, cplx phase) {
  evaluate(s, std::vector<double>{x.front(), x.back()});  // grid-width check only
  quad e2 = quad(s.eps) * s.eps;
  __complex128 A, B, ph;
  __real__ A = s.A.real(), __imag__ A = s.A.imag();
  __real__ B = s.B.real(), __imag__ B = s.B.imag();
  __real__ ph = phase.real(), __imag__ ph = phase.imag();
  quad absA = cabsq(A);
  __complex128 iarg;
  __real__ iarg = 0, __imag__ iarg = quad(0.5) * s.argA;
  __complex128 sqrtA = sqrtq(absA) * cexpq(iarg);
  quad pre = powq(4 * atanq(1), quad(-0.25)) / sqrtq(quad(s.eps));
  __complex128 c0 = ph * pre / sqrtA;
  if (s.m > 0) {
    quad f = 1;
    for (int i = 2; i <= s.m; ++i) f *= i;
    __complex128 rot;
    __real__ rot = 0, __imag__ rot = -s.m * quad(s.argA);
    c0 = c0 * powq(2, quad(-0.5) * s.m) / sqrtq(f) * cexpq(rot);
  }
  __complex128 quadratic = -B / (2 * e2 * A);
  std::vector<qcplx> v(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    quad y = quad(x[i]) - s.a;
    __complex128 arg = quadratic * (y * y);
    __imag__ arg += s.eta * y / e2;
    __complex128 g = c0 * cexpq(arg);
    if (s.m > 0) {
      quad z = y / (quad(s.eps) * absA), h0 = 1, h1 = 2 * z;
      for (int n = 1; n < s.m; ++n) {
        quad h2 = 2 * z * h1 - 2 * n * h0;
        h0 = h1;
        h1 = h2;
      }
      g = g * h1;
    }
    v[i] = {crealq(g), cimagq(g)};
  }
  return v;
}

cplx momentum_amplitude(const CoherentState& s, double k) {
  // swap of (A, a) with (B, eta); B is constant in the flow so its principal branch is fixed
  cplx ph = std::pow(-I, s.m);
  return ph * gauss_factor(s.B, std::arg(s.B), s.A, s.eps, s.eta, -s.a, s.m, k);
}

std::function<double(double)> momentum_density(const CoherentState& s) {
  return [s](double k) { return std::norm(momentum_amplitude(s, k)); };
}

}  // namespace molz
