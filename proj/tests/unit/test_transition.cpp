#include <doctest.h>

#include "molz/transition.hpp"

using namespace molz;

TEST_CASE("transition integral matches brute-force Simpson quadrature") {
  TransitionIntegralSpec s;
  s.alpha = [](double E) { return (E - 1.2) * (E - 1.2); };
  s.kappa = [](double E) { return 0.3 * E; };
  s.P = [](double E) { return cplx(1.0, 0.2 * E); };
  s.e_inf = -0.1;
  s.E1 = 0.1;
  s.E2 = 3.0;
  s.eps = 0.2;
  s.t = 1.5;
  s.x = {1.0, 2.5, 3.2, 4.0};
  TransitionField f = evaluate_T(s, 1e-10);
  double e2 = s.eps * s.eps;
  int n = 400000;
  double h = (s.E2 - s.E1) / n;
  for (size_t j = 0; j < s.x.size(); ++j) {
    cplx acc = 0;
    for (int i = 0; i <= n; ++i) {
      double E = s.E1 + i * h;
      double k = std::sqrt(2 * (E - s.e_inf));
      cplx v = s.P(E) / std::sqrt(k) * std::exp(-s.alpha(E) / e2) *
               std::polar(1.0, (s.x[j] * k - s.t * E - s.kappa(E)) / e2);
      acc += v * ((i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0));
    }
    acc *= h / 3;
    CHECK(std::abs(f.T[j] - acc) < 1e-9 * std::abs(acc) + 1e-14);
  }
}

TEST_CASE("norms") {
  auto x = linspace(0, 1, 101);
  std::vector<cplx> f(x.size(), cplx(0, 2)), g(x.size(), cplx(0, 1));
  CHECK(l2_norm(f, x) == doctest::Approx(2.0));
  CHECK(relative_l2(f, g, x) == doctest::Approx(1.0));
}

TEST_CASE("bad inputs are refused") {
  TransitionIntegralSpec s;
  s.alpha = s.kappa = [](double) { return 0.0; };
  s.P = [](double) { return cplx(1.0); };
  s.E1 = 1;
  s.E2 = 2;
  s.x = {0.0};
  s.eps = 0.01;
  CHECK_THROWS_AS(evaluate_T(s), Error);
  s.eps = 0.2;
  s.e_inf = 1.5;
  CHECK_THROWS_AS(evaluate_T(s), Error);
}

TEST_CASE("asymptote error shrinks with eps and does not depend on t") {
  ElectronicModel m = tanh_model();
  CrossingPoint cp = find_complex_crossing(m, 2, 1, 0.0, {-0.5, 0.5, 0.2, 1.2});
  ContourLoop loop = make_loop(cp, m.strip);
  cplx th = geometric_prefactor(m, loop, 2, 0.0);
  EnergyWindow w{0.75, 3.0, 401};
  auto make = [&](double eps) {
    auto s = CoherentState::make(1.0, 1.0, eps, 0.0, 1.0);
    auto d = build_density_from_state(s, 2, m, w, 0.03, 0.0);
    auto prof = decay_profile(m, d, loop, 2, 1, 0.0, w);
    PredictOptions o;
    o.clip_tolerance = 0;
    auto p = predict(prof, m, d, eps, th, &s, o);
    return std::pair{spec_from_profile(prof, d, p, 9.0), p};
  };
  ConvergenceStudy st = convergence_study({0.2, 0.1}, make);
  REQUIRE(st.rows.size() == 2);
  CHECK(st.rows[0].error < 0.1);
  CHECK(st.rows[1].error < st.rows[0].error);
  CHECK(st.slope > 0.8);
  auto [s20, p20] = make(0.2);
  s20.t = 20;
  s20.x = asymptote_grid(p20, 20);
  auto f = evaluate_T(s20);
  CHECK(relative_l2(f.T, evaluate_asymptote(s20, p20), s20.x) == doctest::Approx(st.rows[0].error).epsilon(1e-3));
}
