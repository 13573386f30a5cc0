// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <map>

#include "molz/experiment.hpp"
#include "molz/scattering.hpp"
#include "molz/transition.hpp"

using namespace molz;

namespace {

int failures = 0;

void report(int id, bool pass, const char* fmt, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", id, buf);
  std::fflush(stdout);
  failures += !pass;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

ExperimentConfig tanh_run(double eps, int m = 0) {
  ExperimentConfig c;
  c.eps = eps;
  c.m = m;
  return c;
}

struct Route {
  ExperimentReport sim;
  TransitionPrediction pred;
  double seconds = 0;
};

Route both_routes(const ExperimentConfig& c) {
  auto t = std::chrono::steady_clock::now();
  Route r;
  r.sim = run_scattering_experiment(c);
  r.pred = predict_experiment(c).prediction;
  r.seconds = seconds_since(t);
  return r;
}

CrossingPoint lz_crossing(const ElectronicModel& m, double d) { return find_complex_crossing(m, 2, 1, d, {-1, 1, 1e-3, 1.5}); }

// invariants that need no long run
struct Invariants {
  double flux = 0, symmetry = 0, orthonormality = 0, free_flow = 0, z0 = 0, null_loop = 0;
};

Invariants invariants() {
  Invariants v;
  ElectronicModel tanh = tanh_model();
  v.flux = std::abs(integrate_coefficients(tanh, 1.2071, 0.2, 0.0, 2, -1).flux() + 1.0);
  SMatrix S = s_matrix(tanh, 1.2071, 0.2, 0.0);
  v.symmetry = S.symmetry_residual();
  v.flux = std::max(v.flux, S.flux_defect);

  std::vector<double> x = linspace(-4, 4, 8001);
  cplx A(0.8, 0.3), B = cplx(1, 0.5) / std::conj(A);
  std::vector<std::vector<cplx>> phi;
  for (int m = 0; m <= 5; ++m) phi.push_back(evaluate(CoherentState::make(A, B, 0.2, 0.3, 1.1, m), x));
  for (int m = 0; m <= 5; ++m)
    for (int n = 0; n <= 5; ++n) {
      cplx s = 0;
      for (size_t i = 0; i < x.size(); ++i) s += std::conj(phi[m][i]) * phi[n][i];
      v.orthonormality = std::max(v.orthonormality, std::abs(s * (x[1] - x[0]) - (m == n ? 1.0 : 0.0)));
    }

  ElectronicModel flat = constant_model(-0.5, 0.5);
  double eps = 0.2, dt = 0.025 * eps * eps;
  auto st = CoherentState::make(1.0, 1.0, eps, -4.0, 1.2, 2);
  auto grid = SimulationGrid::make(-16, 16, choose_points(-16, 16, eps, 3.2, 1.0));
  auto env = evaluate(st, grid.x);
  std::vector<qcplx> qenv(env.size());
  for (size_t i = 0; i < env.size(); ++i) qenv[i] = {env[i].real(), env[i].imag()};
  auto p = make_adiabatic_propagator(flat, 0.0, grid, qenv, 2, 0.0, eps, dt, Precision::Double);
  p->advance(std::lround(5.0 / dt));
  FlowResult f = flow(st, p->time(), 0.5);
  auto ref = evaluate(f.state, grid.x);
  auto c = p->levels();
  double err = 0, nrm = 0;
  for (int i = 0; i < grid.N; ++i) {
    err += std::norm(c[1][i] - f.phase * ref[i]);
    nrm += std::norm(ref[i]);
  }
  v.free_flow = std::sqrt(err / nrm);

  v.z0 = std::abs(find_complex_crossing(tanh, 2, 1, 0.0, {-0.5, 0.5, 0.2, 1.2}).z0 - cplx(0, pi / 4));
  v.null_loop = std::abs(action_integral(tanh, make_circle_loop({0.9, 0.0}, 0.4, 1), 2, 1.2071, 0.0).gamma);
  return v;
}

}  // namespace

int main() {
  auto start = std::chrono::steady_clock::now();
  std::map<double, Route> sweep;

  // 1. Gaussian input
  sweep[0.2] = both_routes(tanh_run(0.2));
  {
    const Route& r = sweep[0.2];
    double k = r.sim.transmitted.mean_k, naive = r.pred.eta_naive;
    report(1, r.sim.status == "ok" && std::abs(k - 2.05) <= 0.03 && std::abs(naive - 1.9566) <= 1e-3,
           "eps=0.2 m=0: mean k = %.5f (2.05 +- 0.03), eta_naive = %.6f (1.9566 +- 1e-3), N = %d, steps = %d, %.1f s",
           k, naive, r.sim.grid.N, r.sim.steps, r.seconds);
  }

  // 2. phi_3 input
  {
    auto t = std::chrono::steady_clock::now();
    ExperimentReport r = run_scattering_experiment(tanh_run(0.2, 3));
    double k = r.transmitted.mean_k, out = r.transmitted.fit.residual, in = r.incoming.fit.residual;
    report(2, r.status == "ok" && std::abs(k - 2.25) <= 0.05 && out < 0.05 && in > 0.3,
           "eps=0.2 m=3: mean k = %.5f (2.25 +- 0.05), transmitted fit residual = %.4f (< 0.05), incoming residual = "
           "%.4f (> 0.3), %.1f s",
           k, out, in, seconds_since(t));
  }

  // 3 and 4. predictor against simulation over eps
  for (double eps : {0.25, 0.15, 0.1}) sweep[eps] = both_routes(tanh_run(eps));
  {
    std::vector<double> eps_list{0.25, 0.2, 0.15, 0.1}, logs;
    std::string detail;
    bool ok = true;
    for (double eps : eps_list) {
      const Route& r = sweep[eps];
      double ratio = r.pred.probability / r.sim.transmitted.mass;
      logs.push_back(std::abs(std::log(ratio)));
      ok = ok && r.sim.status == "ok";
      char buf[160];
      std::snprintf(buf, sizeof buf, "%seps=%.2f ratio %.5f (%.3e / %.3e, %.0f s)", detail.empty() ? "" : "; ", eps,
                    ratio, r.pred.probability, r.sim.transmitted.mass, r.seconds);
      detail += buf;
    }
    double ratio01 = sweep[0.1].pred.probability / sweep[0.1].sim.transmitted.mass;
    bool monotone = true;
    for (size_t i = 1; i < logs.size(); ++i) monotone = monotone && logs[i] <= logs[i - 1];
    report(3, ok && ratio01 >= 0.75 && ratio01 <= 1.33 && monotone,
           "%s; ratio at 0.1 in [0.75, 1.33] and |log ratio| non-increasing: %s", detail.c_str(),
           monotone ? "yes" : "no");

    double d2 = std::abs(sweep[0.2].pred.eta_plus - sweep[0.2].sim.transmitted.mean_k);
    double d1 = std::abs(sweep[0.1].pred.eta_plus - sweep[0.1].sim.transmitted.mean_k);
    report(4, d2 <= 0.03 && d1 <= 0.02,
           "eps=0.2: eta+ = %.5f vs simulated %.5f (|d| = %.4f <= 0.03); eps=0.1: eta+ = %.5f vs %.5f (|d| = %.4f "
           "<= 0.02)",
           sweep[0.2].pred.eta_plus, sweep[0.2].sim.transmitted.mean_k, d2, sweep[0.1].pred.eta_plus,
           sweep[0.1].sim.transmitted.mean_k, d1);
  }

  // 5. S-matrix asymptotics on the LZ family
  ElectronicModel lz = lz_model(1.5);
  {
    double d = 0.25, E = 1.0;
    CrossingPoint cp = lz_crossing(lz, d);
    double img = action_integral(lz, make_loop(cp, lz.strip), 2, E, d).gamma.imag();
    std::vector<double> ratios;
    std::string detail;
    for (double eps : {0.3, 0.2, 0.15, 0.1}) {
      SMatrix S = s_matrix(lz, E, eps, d);
      ratios.push_back(std::abs(S.block(-1, -1, 2, 1)) * std::exp(img / (eps * eps)));
      char buf[64];
      std::snprintf(buf, sizeof buf, "%s%.2f: %.6f", detail.empty() ? "" : ", ", eps, ratios.back());
      detail += buf;
    }
    double change = std::abs(ratios[3] / ratios[2] - 1);
    report(5, change < 0.15, "delta=0.25 E=1: |S21| exp(Im gamma/eps^2) at eps %s; last-step change %.2e (< 0.15)",
           detail.c_str(), change);
  }

  // 6. Landau-Zener expansion of Im gamma
  {
    bool ok = true;
    std::string detail;
    for (double d : {0.2, 0.1, 0.05}) {
      ContourLoop loop = make_loop(lz_crossing(lz, d), lz.strip);
      double kc = lz_expansions(lz, loop, 2, d, 1.0).kc;
      double ratio = action_integral(lz, loop, 2, 1.0, d).gamma.imag() * kc / (pi * d * d / 4);
      ok = ok && std::abs(ratio - 1) <= 3 * d;
      char buf[80];
      std::snprintf(buf, sizeof buf, "%sdelta=%.2f ratio %.5f", detail.empty() ? "" : ", ", d, ratio);
      detail += buf;
    }
    report(6, ok, "Im gamma kc / (pi delta^2/4) within 1 +- 3 delta: %s", detail.c_str());
  }

  // 7. E* shift with a unit-curvature Gaussian energy density
  {
    double E0 = 1.0, res[2], res_local[2];
    int i = 0;
    for (double d : {0.2, 0.1}) {
      ContourLoop loop = make_loop(lz_crossing(lz, d), lz.strip);
      EnergyWindow w{0.85, 1.3, 401};
      EnergyDensity dens = gaussian_energy_density(E0, 1.0, w);
      DecayProfile prof = decay_profile(lz, dens, loop, 2, 1, d, w);
      PredictOptions o;
      o.clip_tolerance = 0;
      TransitionPrediction p = predict(prof, lz, dens, 0.1, 0.0, nullptr, o);
      LZExpansion x = lz_expansions(lz, loop, 2, d, E0);
      res[i] = std::abs(p.E_star - E0 - (pi * d * d / 4) / std::pow(x.kc, 3));
      res_local[i] = std::abs(p.E_star - E0 - x.Gamma0 / std::pow(x.kc, 3));
      ++i;
    }
    report(7, res[0] / res[1] >= 6,
           "residual(0.2) = %.3e, residual(0.1) = %.3e, ratio %.2f (>= 6); with the local-gap Gamma0 the ratio is %.2f",
           res[0], res[1], res[0] / res[1], res_local[0] / res_local[1]);
  }

  // 8. transition integral against its Gaussian asymptote
  {
    ElectronicModel m = tanh_model();
    ContourLoop loop = make_loop(find_complex_crossing(m, 2, 1, 0.0, {-0.5, 0.5, 0.2, 1.2}), m.strip);
    cplx th = geometric_prefactor(m, loop, 2, 0.0);
    EnergyWindow w{0.75, 3.0, 401};
    ConvergenceStudy st = convergence_study({0.2, 0.1}, [&](double eps) {
      auto s = CoherentState::make(1.0, 1.0, eps, 0.0, 1.0);
      auto d = build_density_from_state(s, 2, m, w, 0.03, 0.0);
      auto prof = decay_profile(m, d, loop, 2, 1, 0.0, w);
      PredictOptions o;
      o.clip_tolerance = 0;
      auto p = predict(prof, m, d, eps, th, &s, o);
      return std::pair{spec_from_profile(prof, d, p, 9.0), p};
    });
    double f = st.rows[0].error / st.rows[1].error;
    report(8, f >= 2, "relative L2 error %.5f at eps=0.2, %.5f at eps=0.1, factor %.3f (>= 2)", st.rows[0].error,
           st.rows[1].error, f);
  }

  // 9. invariant suite
  {
    auto t = std::chrono::steady_clock::now();
    Invariants v = invariants();
    double norm = 0;
    for (const auto& [eps, r] : sweep) norm = std::max(norm, r.sim.norm_drift);
    ExperimentConfig c;
    c.model = "lz";
    c.params = {{"x_sat", 1.5}};
    c.delta = 0.25;
    c.eps = 0.15;
    c.eta = std::sqrt(2 * (1.0 - level_energy(lz, 2, -INFINITY, 0.25)));
    c.t0 = -20;
    c.t1 = 12;
    c.x_min = -40;
    c.x_max = 60;
    ExperimentReport r = run_scattering_experiment(c);
    double refl = r.reflected_mass / r.transmitted.mass;
    double secs = seconds_since(t);
    bool ok = norm < 1e-8 && v.flux < 1e-8 && v.symmetry < 1e-6 && v.orthonormality < 1e-8 && v.free_flow < 1e-6 &&
              v.z0 < 1e-10 && v.null_loop < 1e-12 && r.status == "ok" && refl < 1e-2 && secs < 120;
    report(9, ok,
           "norm drift %.1e, flux %.1e, symmetry %.1e, orthonormality %.1e, free flow %.1e, |z0 - i pi/4| %.1e, null "
           "loop %.1e, LZ reflected/transmitted %.1e (%s), %.0f s",
           norm, v.flux, v.symmetry, v.orthonormality, v.free_flow, v.z0, v.null_loop, refl, r.status.c_str(), secs);
  }

  // 10. stationary synthesis against the time-dependent solver
  {
    auto t = std::chrono::steady_clock::now();
    const ExperimentReport& r = sweep[0.2].sim;
    ElectronicModel m = tanh_model();
    ExperimentConfig c = tanh_run(0.2);
    auto s = CoherentState::make(c.A, c.B, c.eps, c.a, c.eta, c.m);
    double e_in = level_energy(m, 2, -INFINITY, 0.0);
    double kmin = 0.05, kmax = 1 + 8 * c.eps;
    double E1 = e_in + kmin * kmin / 2, E2 = e_in + kmax * kmax / 2;
    auto Q = incoming_energy_density(s, m, 2, 0.0, E1, E2, 0.0);
    std::vector<double> x;
    std::vector<int> idx;
    for (int i = 0; i < r.grid.N; i += 4)
      if (r.grid.x[i] > 0 && r.grid.x[i] < 30) {
        x.push_back(r.grid.x[i]);
        idx.push_back(i);
      }
    auto syn = wavepacket_synthesis(m, Q, 2, c.eps, 0.0, x, {r.final_time}, E1, E2, 800);
    double num = 0, den = 0;
    for (size_t i = 0; i < x.size(); ++i) {
      num += std::norm(syn[0].levels[0][i] - r.final_levels[0][idx[i]]);
      den += std::norm(r.final_levels[0][idx[i]]);
    }
    double rel = std::sqrt(num / den);
    report(10, rel < 0.05, "lower level at t=%.0f, eps=0.2: relative L2 difference %.4f (< 0.05), %.0f s", r.final_time,
           rel, seconds_since(t));
  }

  std::printf("%d of 10 criteria failed, %.0f s total\n", failures, seconds_since(start));
  return failures ? 1 : 0;
}
