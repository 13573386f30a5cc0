#include "molz/semiclassical.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/factorials.hpp>
#include <boost/math/tools/minima.hpp>

#include "molz/quadrature.hpp"

namespace molz {

namespace {

struct Segment {
  bool arc = false;
  cplx a, b;           // line
  cplx c;              // arc center
  double r = 0, phi0 = 0, dphi = 0;
  cplx z(double s) const { return arc ? c + r * std::exp(I * (phi0 + dphi * s)) : a + (b - a) * s; }
  cplx dz(double s) const { return arc ? I * dphi * r * std::exp(I * (phi0 + dphi * s)) : b - a; }
};

std::vector<Segment> segments(const ContourLoop& L) {
  std::vector<Segment> out;
  auto line = [](cplx a, cplx b) {
    Segment s;
    s.a = a;
    s.b = b;
    return s;
  };
  for (size_t i = 0; i + 1 < L.stem.size(); ++i)
    if (std::abs(L.stem[i + 1] - L.stem[i]) > 0) out.push_back(line(L.stem[i], L.stem[i + 1]));
  Segment arc;
  arc.arc = true;
  arc.c = L.z0;
  arc.r = L.radius;
  arc.phi0 = std::arg(L.stem.back() - L.z0);
  arc.dphi = 2 * pi * L.orientation;
  out.push_back(arc);
  for (size_t i = L.stem.size() - 1; i > 0; --i)
    if (std::abs(L.stem[i] - L.stem[i - 1]) > 0) out.push_back(line(L.stem[i], L.stem[i - 1]));
  return out;
}

cplx nearest(cplx cand, cplx prev) { return std::abs(cand - prev) <= std::abs(cand + prev) ? cand : -cand; }

void check_jump(cplx now, cplx prev) {
  if (std::abs(std::arg(now / prev)) > pi / 4)
    throw Error("BranchJump", "integrand phase jumps by more than pi/4 between nodes");
}

// Walk the loop node by node in path order, tracking sqrt(rho) continuously.
// visit(z, weight, f, sqrt_rho, h) where weight already contains dz and the Gauss weight.
template <class Visit>
void walk(const ElectronicModel& model, const ContourLoop& loop, double delta, int panels, Visit&& visit) {
  const GaussRule& g = gauss_rule();
  TwoLevel t0 = two_level(model, 0.0, delta);
  cplx sr = std::sqrt(t0.rho);
  double scale = std::abs(sr);
  for (const Segment& s : segments(loop)) {
    for (int p = 0; p < panels; ++p) {
      double lo = double(p) / panels, hi = double(p + 1) / panels, half = 0.5 * (hi - lo);
      for (int q = 0; q < GaussRule::n; ++q) {
        double u = lo + half * (g.x[q] + 1.0);
        cplx z = s.z(u);
        CMat h = model.h(z, delta);
        cplx diff = h(0, 0) - h(1, 1);
        cplx rho = diff * diff + 4.0 * h(0, 1) * h(1, 0);
        cplx f = 0.5 * (h(0, 0) + h(1, 1));
        cplx nsr = nearest(std::sqrt(rho), sr);
        if (std::abs(nsr) < 1e-7 * std::max(scale, 1e-300))
          throw Error("LoopHitsCrossing", "loop passes through a crossing point");
        check_jump(nsr, sr);
        sr = nsr;
        visit(z, s.dz(u) * (half * g.w[q]), f, sr, h);
      }
    }
  }
}

double level_sign(int j) { return j == 1 ? -1.0 : 1.0; }

}  // namespace

ContourLoop make_loop(const CrossingPoint& cp, double strip, double radius) {
  cplx zu = cp.z0.imag() >= 0 ? cp.z0 : std::conj(cp.z0);
  if (zu.imag() <= 0) throw Error("RealCrossing", "crossing lies on the real axis; no loop exists");
  ContourLoop L;
  bool down = cp.n < cp.j;
  L.z0 = down ? std::conj(zu) : zu;
  L.orientation = down ? 1 : -1;
  double h = zu.imag();
  double r = radius > 0 ? radius : std::min(0.5 * h, 0.9 * (strip - h));
  if (r <= 0) throw Error("BadLoop", "crossing point outside the analyticity strip");
  if (r >= h) throw Error("BadLoop", "loop radius must stay below |Im z0|");
  L.radius = r;
  double sgn = down ? -1.0 : 1.0;
  L.stem = {0.0};
  if (zu.real() != 0) L.stem.push_back(zu.real());
  L.stem.push_back(cplx(zu.real(), sgn * (h - r)));
  return L;
}

ContourLoop make_circle_loop(cplx center, double radius, int orientation) {
  if (std::abs(center) <= radius) throw Error("BadLoop", "base point must lie outside the circle");
  ContourLoop L;
  L.z0 = center;
  L.radius = radius;
  L.orientation = orientation;
  L.stem = {0.0, center - radius * center / std::abs(center)};
  return L;
}

int winding_number(const ContourLoop& loop, cplx p) {
  return std::abs(p - loop.z0) < loop.radius ? loop.orientation : 0;
}

static LoopIntegral integrate_once(const ElectronicModel& model, const ContourLoop& loop, int j, double E,
                                   double delta, int panels) {
  LoopIntegral out;
  double sj = level_sign(j);
  TwoLevel t0 = two_level(model, 0.0, delta);
  cplx k = std::sqrt(2.0 * (E - (t0.f + sj * 0.5 * std::sqrt(t0.rho))));
  walk(model, loop, delta, panels, [&](cplx, cplx w, cplx f, cplx sr, const CMat&) {
    cplx e = f + sj * 0.5 * sr;
    cplx nk = nearest(std::sqrt(2.0 * (E - e)), k);
    check_jump(nk, k);
    k = nk;
    out.gamma += k * w;
    out.dgamma += w / k;
    out.d2gamma -= w / (k * k * k);
    out.e_integral += e * w;
  });
  out.panels = panels;
  return out;
}

std::vector<LoopSample> trace_loop(const ElectronicModel& model, const ContourLoop& loop, int j, double E,
                                   double delta, int panels) {
  if (model.dim != 2) throw Error("Unsupported", "contour integrals need a 2x2 model");
  std::vector<LoopSample> out;
  double sj = level_sign(j);
  TwoLevel t0 = two_level(model, 0.0, delta);
  cplx k = std::sqrt(2.0 * (E - (t0.f + sj * 0.5 * std::sqrt(t0.rho)))), acc = 0;
  walk(model, loop, delta, panels, [&](cplx z, cplx w, cplx f, cplx sr, const CMat&) {
    cplx e = f + sj * 0.5 * sr;
    cplx nk = nearest(std::sqrt(2.0 * (E - e)), k);
    check_jump(nk, k);
    k = nk;
    acc += k * w;
    out.push_back({z, e, k, acc});
  });
  return out;
}

LoopIntegral action_integral(const ElectronicModel& model, const ContourLoop& loop, int j, double E,
                             double delta, double rel_tol) {
  if (model.dim != 2) throw Error("Unsupported", "contour integrals need a 2x2 model");
  double len = 0;
  for (const Segment& s : segments(loop)) len += s.arc ? 2 * pi * s.r : std::abs(s.b - s.a);
  double floor = 1e-13 * len * std::sqrt(2.0 * std::abs(E) + 1.0);
  std::optional<LoopIntegral> prev;
  for (int panels = 2; panels <= 4096; panels *= 2) {
    LoopIntegral cur;
    try {
      cur = integrate_once(model, loop, j, E, delta, panels);
    } catch (const Error& e) {
      if (e.kind() == "BranchJump" && panels < 4096) continue;
      throw;
    }
    if (prev) {
      auto close = [&](cplx a, cplx b) { return std::abs(a - b) <= rel_tol * std::abs(a) + floor; };
      if (close(cur.gamma, prev->gamma) && close(cur.dgamma, prev->dgamma) &&
          close(cur.d2gamma, prev->d2gamma) && close(cur.e_integral, prev->e_integral))
        return cur;
    }
    prev = cur;
  }
  throw Error("ToleranceNotMet", "contour quadrature did not converge");
}

static cplx theta_once(const ElectronicModel& model, const ContourLoop& loop, int j, double delta, int panels) {
  double sj = level_sign(j);
  EigenFrame f0 = eigenframe(model, 0.0, delta);
  Eigen::Vector2cd v = f0.phi.col(j - 1);
  walk(model, loop, delta, panels, [&](cplx, cplx, cplx f, cplx sr, const CMat& h) {
    Eigen::Vector2cd u = two_level_vector(h, f + sj * 0.5 * sr);
    u /= std::sqrt(cplx(u.transpose() * u));  // bilinear normalization
    cplx ov = v.transpose() * u;
    if (ov.real() < 0) u = -u;
    if (std::abs(ov) < 0.5) throw Error("BranchJump", "eigenvector continuation lost track");
    v = u;
  });
  // back at 0 the continued vector is a multiple of phi_n (crossing enclosed) or of phi_j (nothing enclosed)
  cplx w = 0;
  for (int l = 0; l < 2; ++l) {
    cplx c = f0.phi.col(l).transpose() * v;
    if (std::abs(c) > std::abs(w)) w = c;
  }
  return I * std::log(w);
}

cplx geometric_prefactor(const ElectronicModel& model, const ContourLoop& loop, int j, double delta) {
  if (model.dim != 2) throw Error("Unsupported", "contour continuation needs a 2x2 model");
  std::optional<cplx> prev;
  for (int panels = 4; panels <= 4096; panels *= 2) {
    cplx th;
    try {
      th = theta_once(model, loop, j, delta, panels);
    } catch (const Error& e) {
      if (e.kind() == "BranchJump" && panels < 4096) continue;
      throw;
    }
    if (prev && std::abs(std::exp(-I * th) - std::exp(-I * *prev)) < 1e-10) return th;
    prev = th;
  }
  throw Error("ToleranceNotMet", "eigenvector continuation did not converge");
}

OmegaTail omega_tail(const ElectronicModel& model, int j, int sigma, int dir, double E, double delta) {
  if (!model.has_limits()) throw Error("NoLimit", model.name + " has no limit at infinity");
  double einf = level_energy(model, j, dir * INFINITY, delta);
  if (E <= einf) throw Error("ClosedChannel", "energy below the asymptotic level");
  double kinf = std::sqrt(2 * (E - einf));
  auto k = [&](double u) {
    double e = level_energy(model, j, dir * u, delta);
    if (E <= e) throw Error("ClosedChannel", "energy below the level on the real axis");
    return std::sqrt(2 * (E - e));
  };
  auto f0 = [&](double u) { return k(u) - kinf; };
  double X = 8;
  while (std::abs(f0(X)) * X > 1e-13) {
    X *= 2;
    if (X > 1e5) throw Error("SlowDecay", "tail does not decay");
  }
  double fa = std::abs(f0(X / 2)), fb = std::abs(f0(X));
  if (fa > 0 && fb > 0) {
    double p = std::log2(fa / fb);
    if (p < 1 + model.nu / 2 && fa > 1e-15) throw Error("SlowDecay", "fitted tail exponent too small");
  }
  // fixed Gauss panels: width 1/2 near the core, growing geometrically in the tail
  auto integ = [X](auto&& f) {
    using GL = boost::math::quadrature::gauss<double, 30>;
    double acc = 0;
    for (double lo = 0; lo < X;) {
      double hi = std::min(X, lo + std::max(0.5, lo / 4));
      acc += GL::integrate(f, lo, hi);
      lo = hi;
    }
    return acc;
  };
  double s = double(sigma * dir);
  OmegaTail o;
  o.value = s * integ(f0);
  o.d1 = s * integ([&](double u) { return 1 / k(u) - 1 / kinf; });
  o.d2 = -s * integ([&](double u) { return std::pow(k(u), -3) - std::pow(kinf, -3); });
  return o;
}

double spectrum_top(const ElectronicModel& model, double delta) {
  double top = -INFINITY;
  for (double x : linspace(-40, 40, 4001)) top = std::max(top, level_energy(model, model.dim, x, delta));
  if (model.has_limits())
    for (double x : {-INFINITY, INFINITY}) top = std::max(top, level_energy(model, model.dim, x, delta));
  return top;
}

double window_clearance(const ElectronicModel& model, const EnergyWindow& w, double delta) {
  return w.E1 - spectrum_top(model, delta);
}

double smooth_cutoff(double E, double E1, double E2, double p1, double p2) {
  auto step = [](double t) { return t * t * t * t * (35 - 84 * t + 70 * t * t - 20 * t * t * t); };
  if (E <= E1 || E >= E2) return 0.0;
  if (E >= p1 && E <= p2) return 1.0;
  if (E < p1) return step((E - E1) / (p1 - E1));
  return step((E2 - E) / (E2 - p2));
}

EnergyDensity build_density_from_state(const CoherentState& s, int j, const ElectronicModel& model,
                                       const EnergyWindow& w, double margin, double delta) {
  EnergyDensity d;
  d.e_in = level_energy(model, j, -INFINITY, delta);
  d.E0 = 0.5 * s.eta * s.eta + d.e_in;
  d.m = s.m;
  double clearance = window_clearance(model, w, delta);
  if (clearance <= 0) throw Error("WindowTooLow", "energy window reaches below the top level");
  d.plateau_lo = w.E1 + margin;
  d.plateau_hi = w.E2 - margin;
  if (!(d.E0 > d.plateau_lo && d.E0 < d.plateau_hi))
    throw Error("WindowTooLow", "E0 is not inside the cutoff plateau");
  double absB2 = std::norm(s.B);
  d.g = 1.0 / (s.eta * s.eta * absB2);
  double imAB = (s.A / s.B).imag(), a = s.a, eta = s.eta, e_in = d.e_in;
  auto kin = [e_in](double E) { return std::sqrt(2 * (E - e_in)); };
  d.G = [=](double E) { double u = kin(E) - eta; return u * u / (2 * absB2); };
  d.dG = [=](double E) { double k = kin(E); return (k - eta) / k / absB2; };
  d.d2G = [=](double E) {
    double k = kin(E);
    return (1 / (k * k) - (k - eta) / (k * k * k)) / absB2;
  };
  ElectronicModel mcopy = model;
  auto omc = [=](double E) { return omega_tail(mcopy, j, -1, -1, E, delta); };
  d.J = [=](double E) { double u = kin(E) - eta; return imAB * u * u / 2 + a * u - omc(E).value; };
  d.dJ = [=](double E) {
    double k = kin(E);
    return imAB * (k - eta) / k + a / k - omc(E).d1;
  };
  d.d2J = [=](double E) {
    double k = kin(E);
    return imAB * (1 / (k * k) - (k - eta) / (k * k * k)) - a / (k * k * k) - omc(E).d2;
  };
  double E1 = w.E1, E2 = w.E2, p1 = d.plateau_lo, p2 = d.plateau_hi;
  d.F = [=](double E) { return smooth_cutoff(E, E1, E2, p1, p2); };
  cplx B = s.B;
  int m = s.m;
  d.P0 = [=](double E, double eps) {
    double k = kin(E);
    cplx base = std::pow(pi, -0.75) * std::pow(eps, -1.5) * std::pow(k, -0.5);
    if (m == 0) return base / std::sqrt(B);
    cplx pre = std::pow(-I, m) * std::pow(2.0, -0.5 * m) / std::sqrt(boost::math::factorial<double>(m)) *
               std::pow(B, -0.5 * (m + 1)) * std::pow(std::conj(B), 0.5 * m);
    return base * pre * hermite(m, (k - eta) / (eps * std::abs(B)));
  };
  auto P0 = d.P0;
  auto F = d.F;
  d.P = [=](double E, double eps) { return P0(E, eps) * F(E); };
  return d;
}

EnergyDensity gaussian_energy_density(double E0, double g, const EnergyWindow& w) {
  EnergyDensity d;
  d.E0 = E0;
  d.g = g;
  d.G = [=](double E) { return 0.5 * g * (E - E0) * (E - E0); };
  d.dG = [=](double E) { return g * (E - E0); };
  d.d2G = [=](double) { return g; };
  d.J = [](double) { return 0.0; };
  d.dJ = [](double) { return 0.0; };
  d.d2J = [](double) { return 0.0; };
  d.F = [](double) { return 1.0; };
  d.P0 = [](double, double) { return cplx(1.0); };
  d.P = d.P0;
  d.plateau_lo = w.E1;
  d.plateau_hi = w.E2;
  return d;
}

DecayProfile decay_profile(const ElectronicModel& model, const EnergyDensity& density, const ContourLoop& loop,
                           int j, int n, double delta, const EnergyWindow& w) {
  if (w.n < 400) throw Error("BadWindow", "energy grid needs at least 400 points");
  DecayProfile p;
  p.window = w;
  p.j = j;
  p.n = n;
  p.delta = delta;
  bool limits = model.has_limits();
  p.e_out = limits ? level_energy(model, n, INFINITY, delta) : 0.0;
  ElectronicModel mc = model;
  EnergyDensity dc = density;
  p.exact = [mc, dc, loop, j, n, delta, limits](double E) {
    ProfilePoint q;
    LoopIntegral L = action_integral(mc, loop, j, E, delta);
    q.gamma = L.gamma;
    q.dgamma = L.dgamma;
    q.d2gamma = L.d2gamma;
    if (limits) q.omega_out = omega_tail(mc, n, -1, 1, E, delta);
    q.alpha = dc.G(E) + L.gamma.imag();
    q.dalpha = dc.dG(E) + L.dgamma.imag();
    q.d2alpha = dc.d2G(E) + L.d2gamma.imag();
    q.kappa = dc.J(E) - L.gamma.real() + q.omega_out.value;
    q.dkappa = dc.dJ(E) - L.dgamma.real() + q.omega_out.d1;
    q.d2kappa = dc.d2J(E) - L.d2gamma.real() + q.omega_out.d2;
    return q;
  };
  p.E = w.grid();
  for (double E : p.E) {
    ProfilePoint q = p.exact(E);
    if (q.gamma.imag() <= 0) throw Error("BadLoop", "Im gamma must be positive on the window");
    p.alpha.push_back(q.alpha);
    p.kappa.push_back(q.kappa);
    p.im_gamma.push_back(q.gamma.imag());
    p.re_gamma.push_back(q.gamma.real());
    p.omega_out.push_back(q.omega_out.value);
  }
  double h = p.E[1] - p.E[0];
  p.alpha_spline = std::make_shared<boost::math::interpolators::cardinal_cubic_b_spline<double>>(p.alpha.begin(), p.alpha.end(),
                                                                                   p.E[0], h);
  p.kappa_spline = std::make_shared<boost::math::interpolators::cardinal_cubic_b_spline<double>>(p.kappa.begin(), p.kappa.end(),
                                                                                   p.E[0], h);
  return p;
}

TransitionPrediction predict(const DecayProfile& profile, const ElectronicModel& model,
                             const EnergyDensity& density, double eps, cplx theta, const CoherentState* incoming,
                             const PredictOptions& opt) {
  const auto& E = profile.E;
  const auto& al = profile.alpha;
  int N = static_cast<int>(E.size());
  int best = 0;
  for (int i = 1; i < N; ++i)
    if (al[i] < al[best]) best = i;
  TransitionPrediction r;
  for (int i = 1; i + 1 < N; ++i)
    if (al[i] < al[i - 1] && al[i] <= al[i + 1]) r.local_minima.push_back(E[i]);
  int edge = std::max(1, static_cast<int>(std::ceil(opt.edge_fraction * (N - 1))));
  if (best < edge || best > N - 1 - edge)
    throw Error("MinimumAtBoundary", "alpha is minimal at the edge of the energy window");
  for (double Em : r.local_minima) {
    double am = profile.alpha_at(Em);
    if (std::abs(Em - E[best]) > 2 * (E[1] - E[0]) && am - al[best] < 1e-3)
      throw Error("MultipleMinima", "two minima of alpha within 1e-3 of the global value");
  }
  auto alpha_exact = [&](double x) { return profile.exact(x).alpha; };
  auto bm = boost::math::tools::brent_find_minima(alpha_exact, E[best - 1], E[best + 1], 40);
  double Es = bm.first;
  ProfilePoint q = profile.exact(Es);
  for (int it = 0; it < 20 && std::abs(q.dalpha) > 1e-13 * std::abs(q.d2alpha); ++it) {
    if (q.d2alpha <= 0) break;
    Es -= q.dalpha / q.d2alpha;
    q = profile.exact(Es);
  }
  if (q.d2alpha <= 0) throw Error("DegenerateMinimum", "alpha'' is not positive at the minimum");
  r.E_star = Es;
  r.alpha_star = q.alpha;
  r.kappa_star = q.kappa;
  r.dalpha = q.dalpha;
  r.d2alpha = q.d2alpha;
  r.dkappa = q.dkappa;
  r.d2kappa = q.d2kappa;
  r.gamma_star = q.gamma;
  r.dgamma_star = q.dgamma;
  r.d2gamma_star = q.d2gamma;
  r.k_star = std::sqrt(2 * (Es - profile.e_out));
  double ks = r.k_star;
  r.alpha_kk = ks * ks * q.d2alpha;
  r.kappa_kk = ks * ks * q.d2kappa + q.dkappa;
  r.eta_plus = ks;
  r.a_plus = ks * q.dkappa;
  r.B_plus = 1.0 / std::sqrt(r.alpha_kk);
  r.A_plus = cplx(r.alpha_kk, r.kappa_kk) / std::sqrt(r.alpha_kk);
  r.theta = theta;
  r.eps = eps;
  r.P_star = density.P(Es, eps);
  double e2 = eps * eps;
  cplx phase = std::exp(-I * ((q.kappa - ks * ks * q.dkappa) / e2));
  r.amplitude = std::exp(-I * theta) * std::pow(eps, 1.5) * std::pow(pi, 0.75) * std::pow(r.alpha_kk, -0.25) *
                r.P_star * std::sqrt(ks) * std::exp(-q.alpha / e2) * phase;
  r.probability = std::norm(r.amplitude);
  r.eta_naive = std::sqrt(2 * (density.E0 - profile.e_out));
  r.k_in_star = std::sqrt(std::max(0.0, 2 * (Es - density.e_in)));
  if (incoming) {
    const CoherentState& s = *incoming;
    cplx c = std::exp(-I * theta) * std::exp(-q.alpha / e2) * std::sqrt(r.B_plus / s.B) *
             std::exp(-I * ((q.kappa - ks * r.a_plus) / e2));
    if (s.m > 0)
      c *= std::pow(2.0, -0.5 * s.m) / std::sqrt(boost::math::factorial<double>(s.m)) *
           std::pow(std::conj(s.B) / s.B, 0.5 * s.m) * hermite(s.m, (ks - s.eta) / (eps * std::abs(s.B)));
    r.amplitude_closed_form = c;
  }
  // share of the transition-weighted density that the cutoff removes
  double inside = 0, outside = 0;
  for (int i = 0; i < N; ++i) {
    double wgt = (i == 0 || i == N - 1) ? 0.5 : 1.0;
    double v = std::exp(-2 * (al[i] - q.alpha) / e2) * std::norm(density.P0(E[i], eps));
    if (E[i] >= density.plateau_lo && E[i] <= density.plateau_hi)
      inside += wgt * v;
    else
      outside += wgt * v;
  }
  r.clipped_fraction = outside / (inside + outside);
  if (opt.clip_tolerance > 0 && r.clipped_fraction > opt.clip_tolerance)
    throw Error("CutoffClipsMass", "cutoff removes " + std::to_string(r.clipped_fraction) +
                                       " of the transition-weighted density");
  (void)model;
  return r;
}

LZExpansion lz_expansions(const ElectronicModel& model, const ContourLoop& loop, int j, double delta, double E) {
  LZExpansion x;
  LoopIntegral L = action_integral(model, loop, j, E, delta);
  x.Gamma0 = std::abs(L.e_integral.imag());
  double ec = two_level(model, cplx(loop.z0.real(), 0.0), delta).f.real();
  x.kc = std::sqrt(2 * (E - ec));
  x.leading = x.Gamma0 / x.kc;
  x.d1 = -x.Gamma0 / std::pow(x.kc, 3);
  x.d2 = 3 * x.Gamma0 / std::pow(x.kc, 5);
  if (model.h6) {
    auto [a, b, c] = *model.h6;
    x.closed_form = delta * delta * pi / 4 * (b * b - c * c / a) / std::sqrt(a);
  }
  return x;
}

}  // namespace molz
