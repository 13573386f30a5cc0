#include <doctest.h>

#include "molz/experiment.hpp"
#include "molz/semiclassical.hpp"

using namespace molz;

TEST_CASE("loop enclosing no crossing gives a null action") {
  ElectronicModel m = tanh_model();
  ContourLoop loop = make_circle_loop({0.9, 0.0}, 0.4, 1);
  CHECK(winding_number(loop, {0, pi / 4}) == 0);
  LoopIntegral li = action_integral(m, loop, 2, 1.2071, 0.0);
  CHECK(std::abs(li.gamma) < 1e-12);
  CHECK(std::abs(li.e_integral) < 1e-12);
}

TEST_CASE("crossing loop has positive Im gamma and the traced path closes on it") {
  ElectronicModel m = tanh_model();
  CrossingPoint cp = find_complex_crossing(m, 2, 1, 0.0, {-0.5, 0.5, 0.2, 1.2});
  ContourLoop loop = make_loop(cp, m.strip);
  CHECK(std::abs(winding_number(loop, std::conj(cp.z0))) == 1);
  LoopIntegral li = action_integral(m, loop, 2, 1.2071, 0.0);
  CHECK(li.gamma.imag() > 0);
  auto path = trace_loop(m, loop, 2, 1.2071, 0.0, 32);
  CHECK(std::abs(path.back().gamma - li.gamma) < 1e-8 * std::abs(li.gamma));
  // dgamma by central differences
  double h = 1e-4;
  cplx fd = (action_integral(m, loop, 2, 1.2071 + h, 0.0).gamma - action_integral(m, loop, 2, 1.2071 - h, 0.0).gamma) / (2 * h);
  CHECK(std::abs(fd - li.dgamma) < 1e-7);
}

TEST_CASE("Landau-Zener leading term") {
  ElectronicModel m = lz_model(1.5);
  for (double d : {0.2, 0.1, 0.05}) {
    CrossingPoint cp = find_complex_crossing(m, 2, 1, d, {-1, 1, 1e-3, 1.5});
    ContourLoop loop = make_loop(cp, m.strip);
    LZExpansion x = lz_expansions(m, loop, 2, d, 1.0);
    double ratio = action_integral(m, loop, 2, 1.0, d).gamma.imag() * x.kc / (pi * d * d / 4);
    CHECK(std::abs(ratio - 1) <= 3 * d);
  }
}

TEST_CASE("naive momentum follows from energy conservation") {
  // levels of the tanh model tend to +-sqrt(2)/2, so eta_naive = sqrt(1 + 2 sqrt 2)
  ExperimentConfig c;
  PredictionRun r = predict_experiment(c);
  CHECK(r.prediction.eta_naive == doctest::Approx(std::sqrt(1 + 2 * std::sqrt(2.0))).epsilon(1e-10));
  CHECK(r.prediction.eta_naive == doctest::Approx(1.9566).epsilon(1e-3 / 1.9566));
  CHECK(r.prediction.eta_plus > r.prediction.eta_naive);
}

TEST_CASE("window checks") {
  ElectronicModel m = tanh_model();
  CHECK(spectrum_top(m, 0.0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  CHECK(window_clearance(m, {0.5, 2.0, 401}, 0.0) <= 0);
  CHECK(window_clearance(m, {0.8, 2.0, 401}, 0.0) > 0);
  CHECK(smooth_cutoff(0.5, 1.0, 2.0, 1.1, 1.9) == 0.0);
  CHECK(smooth_cutoff(1.5, 1.0, 2.0, 1.1, 1.9) == 1.0);
  double mid = smooth_cutoff(1.05, 1.0, 2.0, 1.1, 1.9);
  CHECK(mid > 0);
  CHECK(mid < 1);
}

TEST_CASE("Gaussian energy density minimiser shifts by dImgamma / (g + ...)") {
  // alpha = g (E - E0)^2 / 2 + Im gamma(E); the minimiser solves g (E - E0) = -Im gamma'(E)
  ElectronicModel m = lz_model(1.5);
  double d = 0.2;
  CrossingPoint cp = find_complex_crossing(m, 2, 1, d, {-1, 1, 1e-3, 1.5});
  ContourLoop loop = make_loop(cp, m.strip);
  EnergyWindow w{0.85, 1.3, 401};
  EnergyDensity dens = gaussian_energy_density(1.0, 1.0, w);
  DecayProfile prof = decay_profile(m, dens, loop, 2, 1, d, w);
  PredictOptions o;
  o.clip_tolerance = 0;
  TransitionPrediction p = predict(prof, m, dens, 0.1, 0.0, nullptr, o);
  CHECK(std::abs((p.E_star - 1.0) + action_integral(m, loop, 2, p.E_star, d).dgamma.imag()) < 1e-8);
  for (double E : linspace(0.86, 1.29, 12)) CHECK(prof.exact(E).d2alpha > 0);
}

TEST_CASE("unsaturated LZ: Im gamma against a direct quadrature along the imaginary axis") {
  // On z = i y the continued levels are +-sqrt(delta^2 - y^2)/2, so Im gamma = int_0^delta (k_1 - k_2) dy.
  // With y = delta sin(u) the square-root end point becomes smooth.
  ElectronicModel m = lz_model();
  double d = 0.1, E = 1.0;
  CrossingPoint cp = find_complex_crossing(m, 2, 1, d, {-1, 1, 1e-3, 1.5});
  CHECK(std::abs(cp.z0 - cplx(0, d)) < 1e-12);
  int n = 4000;
  double h = (pi / 2) / n, ref = 0;
  for (int i = 0; i < n; ++i) {
    double u = (i + 0.5) * h, g = 0.5 * d * std::cos(u);
    ref += (std::sqrt(2 * (E + g)) - std::sqrt(2 * (E - g))) * d * std::cos(u) * h;
  }
  LoopIntegral li = action_integral(m, make_loop(cp, m.strip), 2, E, d);
  CHECK(li.gamma.imag() == doctest::Approx(ref).epsilon(1e-10));
  CHECK(li.gamma.imag() == doctest::Approx(pi * d * d / 4 / std::sqrt(2.0)).epsilon(1e-3));
}

TEST_CASE("Im gamma is positive, decreasing and convex in E") {
  ElectronicModel m = lz_model(1.5);
  ContourLoop loop = make_loop(find_complex_crossing(m, 2, 1, 0.1, {-1, 1, 1e-3, 1.5}), m.strip);
  for (double E : {0.8, 1.0, 1.5, 2.5}) {
    LoopIntegral li = action_integral(m, loop, 2, E, 0.1);
    CHECK(li.gamma.imag() > 0);
    CHECK(li.dgamma.imag() < 0);
    CHECK(li.d2gamma.imag() > 0);
  }
}

TEST_CASE("leading-term error of the LZ expansion shrinks at least linearly in delta") {
  ElectronicModel m = lz_model(1.5);
  std::vector<double> err;
  for (double d : {0.2, 0.1, 0.05}) {
    ContourLoop loop = make_loop(find_complex_crossing(m, 2, 1, d, {-1, 1, 1e-3, 1.5}), m.strip);
    double kc = lz_expansions(m, loop, 2, d, 1.0).kc;
    err.push_back(std::abs(action_integral(m, loop, 2, 1.0, d).gamma.imag() * kc / (pi * d * d / 4) - 1));
  }
  CHECK(err[0] / err[1] >= 1.5);
  CHECK(err[1] / err[2] >= 1.5);
}
