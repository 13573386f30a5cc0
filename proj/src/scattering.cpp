#include "molz/scattering.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>

#include "molz/semiclassical.hpp"

namespace molz {

namespace odeint = boost::numeric::odeint;
using State = std::vector<cplx>;

int channel_index(int m, int tau, int j) { return (tau > 0 ? 0 : m) + j - 1; }

double CoefficientState::flux() const {
  int m = static_cast<int>(c.size()) / 2;
  double f = 0;
  for (int j = 0; j < m; ++j) f += std::norm(c[j]) - std::norm(c[m + j]);
  return f;
}

namespace {

struct Local {
  Eigen::VectorXd k;
  CMat a;
};

Local local_data(const ElectronicModel& model, double x, double E, double delta) {
  int m = model.dim;
  EigenFrame fr = eigenframe(model, x, delta);
  CMat dh = model.dh(cplx(x, 0.0), delta);
  CMat g = fr.phi.adjoint() * dh * fr.phi;  // <phi_j, h' phi_l>
  Local L;
  L.k.resize(m);
  Eigen::VectorXd dk(m);
  for (int j = 0; j < m; ++j) {
    if (!(E > fr.e[j])) throw Error("ClosedChannel", "energy below a level on the real axis");
    L.k[j] = std::sqrt(2 * (E - fr.e[j]));
    dk[j] = -g(j, j).real() / L.k[j];
  }
  L.a = CMat::Zero(2 * m, 2 * m);
  for (int tau : {1, -1})
    for (int sig : {1, -1})
      for (int j = 0; j < m; ++j)
        for (int l = 0; l < m; ++l) {
          double ts = tau * sig;
          cplx v = 0;
          if (j != l) v += g(j, l) / (fr.e[l] - fr.e[j]) * (L.k[j] + ts * L.k[l]);
          else v += 0.5 * dk[l] * (ts - L.k[j] / L.k[l]);
          L.a(channel_index(m, tau, j + 1), channel_index(m, sig, l + 1)) = -0.5 / std::sqrt(L.k[j] * L.k[l]) * v;
        }
  return L;
}

// y = (c, theta): c' = sum a exp(i(tau theta_j - sigma theta_l)/eps^2) c, theta_j' = k_j
struct Rhs {
  const ElectronicModel* model;
  double E, e2, delta;
  int m;
  void operator()(const State& y, State& dy, double x) const {
    Local L = local_data(*model, x, E, delta);
    int n = 2 * m;
    std::vector<cplx> ph(n);
    for (int j = 0; j < m; ++j) {
      double th = y[n + j].real() / e2;
      ph[channel_index(m, 1, j + 1)] = std::polar(1.0, th);
      ph[channel_index(m, -1, j + 1)] = std::polar(1.0, -th);
    }
    for (int r = 0; r < n; ++r) {
      cplx s = 0;
      for (int c = 0; c < n; ++c)
        if (L.a(r, c) != 0.0) s += L.a(r, c) * ph[r] * std::conj(ph[c]) * y[c];
      dy[r] = s;
    }
    for (int j = 0; j < m; ++j) dy[n + j] = L.k[j];
  }
};

double phase_from_zero(const ElectronicModel& model, int j, double E, double delta, double x) {
  if (x == 0) return 0;
  auto k = [&](double y) { return std::sqrt(2 * (E - level_energy(model, j, y, delta))); };
  double lo = std::min(0.0, x), hi = std::max(0.0, x), acc = 0;
  // unit panels keep the adaptive rule cheap on long intervals
  for (double a = lo; a < hi; a += 1.0)
    acc += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(k, a, std::min(hi, a + 1.0), 8, 1e-14);
  return x > 0 ? acc : -acc;
}

// one radian of the fastest relative phase; without a cap the controller grows the step across
// the exactly vanishing tails and then aliases the oscillations of the coupling region
double max_step(const ElectronicModel& model, double E, double e2, double delta) {
  double kmax = 0;
  for (int j = 1; j <= model.dim; ++j)
    for (double side : {-INFINITY, INFINITY}) kmax = std::max(kmax, std::sqrt(2 * (E - level_energy(model, j, side, delta))));
  return e2 / (2 * kmax);
}

State initial_state(const ElectronicModel& model, double E, double delta, double x0, int idx) {
  int m = model.dim;
  State y(3 * m, 0.0);
  y[idx] = 1.0;
  for (int j = 1; j <= m; ++j) y[2 * m + j - 1] = phase_from_zero(model, j, E, delta, x0);
  return y;
}

CoefficientState run(const ElectronicModel& model, double E, double eps, double delta, int idx, double L,
                     double tol) {
  int m = model.dim;
  State y = initial_state(model, E, delta, -L, idx);
  Rhs rhs{&model, E, eps * eps, delta, m};
  auto stepper =
      odeint::make_controlled(tol, tol, max_step(model, E, eps * eps, delta), odeint::runge_kutta_fehlberg78<State>());
  size_t steps = odeint::integrate_adaptive(stepper, rhs, y, -L, L, 1e-3);
  if (steps > 50'000'000) throw Error("ToleranceNotMet", "step budget exhausted");
  CoefficientState s;
  s.x = L;
  s.c.resize(2 * m);
  for (int i = 0; i < 2 * m; ++i) s.c[i] = y[i];
  for (int j = 0; j < m; ++j) s.phase.push_back(y[2 * m + j].real());
  return s;
}

}  // namespace

CMat couplings(const ElectronicModel& model, double x, double E, double delta) {
  return local_data(model, x, E, delta).a;
}

CoefficientState integrate_coefficients(const ElectronicModel& model, double E, double eps, double delta, int j,
                                        int tau, const IntegrationOptions& opt) {
  if (eps < 0.05) throw Error("EpsilonTooSmall", "oscillations are not resolvable below eps = 0.05");
  if (!model.has_limits()) throw Error("NoLimit", model.name + " has no limit at infinity");
  int m = model.dim;
  for (double side : {-opt.L, opt.L}) {
    double tail = local_data(model, side, E, delta).a.cwiseAbs().maxCoeff() * opt.L;
    if (tail > 1e-10) throw Error("TailTooFat", "couplings are not negligible at |x| = L");
  }
  int idx = channel_index(m, tau, j);
  CoefficientState s = run(model, E, eps, delta, idx, opt.L, opt.tol);
  if (opt.check_limit) {
    CoefficientState s2 = run(model, E, eps, delta, idx, 2 * opt.L, opt.tol);
    if ((s2.c - s.c).cwiseAbs().maxCoeff() > 1e-9)
      throw Error("ToleranceNotMet", "limits change by more than 1e-9 when L is doubled");
  }
  return s;
}

double SMatrix::symmetry_residual() const {
  int n = 2 * m;
  CMat R = CMat::Identity(n, n);
  for (int i = m; i < n; ++i) R(i, i) = -1;
  return (S * R * S.adjoint() * R - CMat::Identity(n, n)).cwiseAbs().maxCoeff();
}

SMatrix s_matrix(const ElectronicModel& model, double E, double eps, double delta, const IntegrationOptions& opt) {
  SMatrix r;
  r.m = model.dim;
  r.E = E;
  r.eps = eps;
  r.S.resize(2 * r.m, 2 * r.m);
  for (int tau : {1, -1})
    for (int j = 1; j <= r.m; ++j) {
      CoefficientState s = integrate_coefficients(model, E, eps, delta, j, tau, opt);
      r.S.col(channel_index(r.m, tau, j)) = s.c;
      r.flux_defect = std::max(r.flux_defect, std::abs(s.flux() - double(tau)));
    }
  return r;
}

std::function<cplx(double)> incoming_energy_density(const CoherentState& s, const ElectronicModel& model, int j,
                                                    double delta, double E1, double E2, double margin) {
  double e_in = level_energy(model, j, -INFINITY, delta);
  double eps = s.eps;
  ElectronicModel mc = model;
  return [=](double E) -> cplx {
    double F = smooth_cutoff(E, E1, E2, E1 + margin, E2 - margin);
    if (F == 0 || E <= e_in) return 0.0;
    double k = std::sqrt(2 * (E - e_in));
    double om = omega_tail(mc, j, -1, -1, E, delta).value;
    return F * std::polar(1.0, om / (eps * eps)) / (eps * std::sqrt(pi * k)) * momentum_amplitude(s, k);
  };
}

std::vector<Synthesis> wavepacket_synthesis(const ElectronicModel& model, const std::function<cplx(double)>& Q,
                                            int j, double eps, double delta, const std::vector<double>& x,
                                            const std::vector<double>& times, double E1, double E2, int n,
                                            double tol) {
  (void)j;
  int m = model.dim, nx = static_cast<int>(x.size());
  double e2 = eps * eps;
  std::vector<Synthesis> out(times.size());
  for (size_t ti = 0; ti < times.size(); ++ti) {
    out[ti].t = times[ti];
    out[ti].levels.assign(m, std::vector<cplx>(nx, 0.0));
  }
  std::vector<Eigen::VectorXd> lev(nx);
  std::vector<CMat> frames(nx);
  for (int i = 0; i < nx; ++i) {
    EigenFrame fr = eigenframe(model, x[i], delta);
    lev[i] = fr.e;
    frames[i] = fr.phi;
  }
  std::vector<double> Es = linspace(E1, E2, n);
  std::vector<cplx> q(n);
  double qmax = 0;
  for (int i = 0; i < n; ++i) {
    q[i] = Q(Es[i]);
    qmax = std::max(qmax, std::abs(q[i]));
  }
  double dE = n > 1 ? (E2 - E1) / (n - 1) : 1.0;
  double x0 = std::min(x.front(), -30.0);
  for (int ie = 0; ie < n; ++ie) {
    if (std::abs(q[ie]) <= 1e-16 * qmax) continue;
    double E = Es[ie], w = (ie == 0 || ie == n - 1) ? 0.5 * dE : dE;
    State y = initial_state(model, E, delta, x0, channel_index(m, -1, j));
    Rhs rhs{&model, E, e2, delta, m};
    std::vector<double> obs;
    obs.push_back(x0);
    for (double xi : x)
      if (xi > x0) obs.push_back(xi);
    std::vector<State> traj;
    traj.reserve(obs.size());
    auto stepper =
        odeint::make_dense_output(tol, tol, max_step(model, E, e2, delta), odeint::runge_kutta_dopri5<State>());
    odeint::integrate_times(stepper, rhs, y, obs.begin(), obs.end(), 1e-3,
                            [&](const State& s, double) { traj.push_back(s); });
    int first = static_cast<int>(traj.size()) - nx;
    for (int i = 0; i < nx; ++i) {
      const State& s = traj[std::max(0, first + i)];
      for (int l = 0; l < m; ++l) {
        double k = std::sqrt(2 * (E - lev[i][l]));
        double th = s[2 * m + l].real() / e2;
        cplx wave = (s[channel_index(m, 1, l + 1)] * std::polar(1.0, -th) +
                     s[channel_index(m, -1, l + 1)] * std::polar(1.0, th)) /
                    std::sqrt(2 * k);
        for (size_t ti = 0; ti < times.size(); ++ti)
          out[ti].levels[l][i] += w * q[ie] * wave * std::polar(1.0, -times[ti] * E / e2);
      }
    }
  }
  for (auto& syn : out) {
    syn.psi.assign(m, std::vector<cplx>(nx, 0.0));
    for (int i = 0; i < nx; ++i)
      for (int c = 0; c < m; ++c)
        for (int l = 0; l < m; ++l) syn.psi[c][i] += frames[i](c, l) * syn.levels[l][i];
  }
  return out;
}

}  // namespace molz
