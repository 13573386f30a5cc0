#include <doctest.h>

#include <boost/numeric/odeint.hpp>

#include "molz/scattering.hpp"
#include "molz/semiclassical.hpp"

using namespace molz;

TEST_CASE("constant h: no couplings and an identity S-matrix") {
  ElectronicModel m = constant_model(-0.5, 0.5);
  CHECK(couplings(m, 0.3, 1.0, 0.0).norm() == 0.0);
  SMatrix S = s_matrix(m, 1.0, 0.2, 0.0);
  CHECK((S.S - CMat::Identity(4, 4)).norm() < 1e-12);
}

TEST_CASE("diagonal couplings vanish") {
  CMat a = couplings(tanh_model(), 0.0, 1.2071, 0.0);
  for (int i = 0; i < 4; ++i) CHECK(std::abs(a(i, i)) < 1e-14);
  CHECK(a.norm() > 0.1);
}

TEST_CASE("flux and S-matrix symmetry on the tanh model") {
  ElectronicModel m = tanh_model();
  auto st = integrate_coefficients(m, 1.2071, 0.2, 0.0, 2, -1);
  CHECK(std::abs(st.flux() - (-1.0)) < 1e-8);
  CHECK(std::abs(st.c[1]) > 0);
  CHECK(std::abs(st.c[1]) < 1);
  SMatrix S = s_matrix(m, 1.2071, 0.2, 0.0);
  CHECK(S.symmetry_residual() < 1e-6);
  CHECK(S.flux_defect < 1e-8);
}

TEST_CASE("coefficient route agrees with direct integration of the stationary equation") {
  // psi'' = 2 (h - E) psi / eps^4, started from the WKB form of channel (2, -) and rebuilt at +L
  ElectronicModel m = tanh_model();
  double E = 1.2071, eps = 0.2, e2 = eps * eps, L = 30;
  using St = std::vector<cplx>;
  auto wkb = [&](double x, const CVec& c, const std::vector<double>& ph, St& y) {
    EigenFrame fr = eigenframe(m, x, 0.0);
    y.assign(4, 0.0);
    for (int l = 0; l < 2; ++l) {
      double k = std::sqrt(2 * (E - fr.e[l]));
      cplx a = c[l] * std::polar(1.0, -ph[l] / e2), b = c[2 + l] * std::polar(1.0, ph[l] / e2);
      for (int r = 0; r < 2; ++r) {
        y[r] += fr.phi(r, l) * (a + b) / std::sqrt(2 * k);
        y[2 + r] += fr.phi(r, l) * (I * k / e2) * (b - a) / std::sqrt(2 * k);
      }
    }
  };
  std::vector<double> ph0(2);
  for (int l = 1; l <= 2; ++l) {
    int n = 60000;
    double h = L / n, acc = 0;
    for (int i = 0; i < n; ++i) acc += std::sqrt(2 * (E - level_energy(m, l, -L + (i + 0.5) * h, 0.0))) * h;
    ph0[l - 1] = -acc;
  }
  CVec c0 = CVec::Zero(4);
  c0[3] = 1;
  St y;
  wkb(-L, c0, ph0, y);
  auto rhs = [&](const St& s, St& d, double x) {
    CMat h = m.h(cplx(x, 0), 0.0);
    for (int r = 0; r < 2; ++r) {
      d[r] = s[2 + r];
      d[2 + r] = 2.0 / (e2 * e2) * (h(r, 0) * s[0] + h(r, 1) * s[1] - E * s[r]);
    }
  };
  namespace odeint = boost::numeric::odeint;
  odeint::integrate_adaptive(odeint::make_controlled(1e-13, 1e-13, odeint::runge_kutta_fehlberg78<St>()), rhs, y, -L,
                             L, 1e-4);
  auto st = integrate_coefficients(m, E, eps, 0.0, 2, -1);
  St y2;
  wkb(L, st.c, st.phase, y2);
  double err = 0, scale = 0;
  for (int r = 0; r < 4; ++r) {
    err = std::max(err, std::abs(y[r] - y2[r]));
    scale = std::max(scale, std::abs(y2[r]));
  }
  CHECK(err / scale < 1e-8);
}

TEST_CASE("S-matrix off-diagonal decays like exp(-Im gamma / eps^2)") {
  ElectronicModel m = tanh_model();
  CrossingPoint cp = find_complex_crossing(m, 2, 1, 0.0, {-0.5, 0.5, 0.2, 1.2});
  double img = action_integral(m, make_loop(cp, m.strip), 2, 1.2071, 0.0).gamma.imag();
  for (double eps : {0.2, 0.15}) {
    SMatrix S = s_matrix(m, 1.2071, eps, 0.0);
    CHECK(std::abs(S.block(-1, -1, 2, 1)) * std::exp(img / (eps * eps)) == doctest::Approx(1.0).epsilon(0.01));
  }
}

TEST_CASE("single-channel synthesis reproduces the free coherent state") {
  ElectronicModel m = constant_model(-0.5, 0.5);
  double eps = 0.2;
  auto s = CoherentState::make(1.0, 1.0, eps, 0.0, 2.0);
  double E1 = 0.5 + 0.5 * 0.8 * 0.8, E2 = 0.5 + 0.5 * 3.2 * 3.2;
  auto Q = incoming_energy_density(s, m, 2, 0.0, E1, E2, 0.0);
  std::vector<double> x = linspace(-24, 8, 161);
  auto R = wavepacket_synthesis(m, Q, 2, eps, 0.0, x, {-8.0, 0.0}, E1, E2, 800);
  for (const auto& r : R) {
    FlowResult f = flow(s, r.t, 0.5);
    double err = 0;
    for (size_t i = 0; i < x.size(); ++i) {
      err = std::max(err, std::abs(r.levels[1][i] - f.phase * evaluate_at(f.state, x[i])));
      err = std::max(err, std::abs(r.levels[0][i]));
    }
    CHECK(err < 1e-6);
  }
}
