#include "molz/experiment.hpp"

#include <algorithm>
#include <cmath>

namespace molz {

namespace {

SeriesRow sample(const Propagator& p, const SimulationGrid& grid, int source, int target, double k_split,
                 double x_split) {
  SeriesRow r;
  auto c = p.levels();
  WaveField f = p.field();
  r.t = p.time();
  r.norm = norm2(f, grid);
  r.boundary = boundary_mass(f, grid);
  for (int i = 0; i < grid.N; ++i) r.mass_upper += std::norm(c[source - 1][i]) * grid.dx;
  for (int i = 0; i < grid.N; ++i) r.mass_lower += std::norm(c[target - 1][i]) * grid.dx;
  WindowStats w = window_stats(c[target - 1], grid, f.eps, k_split, INFINITY, x_split);
  r.mean_k_lower = w.mean_k;
  r.var_k_lower = w.var_k;
  r.fit_residual_lower = w.fit.residual;
  return r;
}

}  // namespace

PredictionRun predict_experiment(const ExperimentConfig& cfg) {
  PredictionRun r;
  r.model = make_model(cfg.model, cfg.params);
  const ElectronicModel& model = r.model;
  if (!model.has_limits()) throw Error("NoLimit", "prediction needs a model with limits at infinity");
  double eps = cfg.eps;
  double s = std::min(model.strip, 2.0);
  r.crossing = find_complex_crossing(model, cfg.level, cfg.target, cfg.delta, {-s, s, 1e-3, s});
  r.loop = make_loop(r.crossing, model.strip);
  cplx theta = geometric_prefactor(model, r.loop, cfg.level, cfg.delta);
  CoherentState st = CoherentState::make(cfg.A, cfg.B, eps, cfg.a, cfg.eta, cfg.m);
  if (cfg.window_E2 > cfg.window_E1) {
    r.window = {cfg.window_E1, cfg.window_E2, cfg.window_n};
  } else {
    double e_in = level_energy(model, cfg.level, -INFINITY, cfg.delta);
    double top = spectrum_top(model, cfg.delta);
    double spread = 10 * eps * std::abs(cfg.B) * std::sqrt(2.0 * cfg.m + 1);
    double k_lo = std::max(0.0, cfg.eta - spread), k_hi = cfg.eta + spread;
    r.window = {std::max(e_in + 0.5 * k_lo * k_lo, top + 0.04), e_in + 0.5 * k_hi * k_hi, cfg.window_n};
  }
  r.density = build_density_from_state(st, cfg.level, model, r.window, cfg.cutoff_margin, cfg.delta);
  r.profile = decay_profile(model, r.density, r.loop, cfg.level, cfg.target, cfg.delta, r.window);
  PredictOptions opt;
  opt.clip_tolerance = cfg.clip_tolerance;
  r.prediction = predict(r.profile, model, r.density, eps, theta, &st, opt);
  return r;
}

ExperimentReport run_scattering_experiment(const ExperimentConfig& cfg) {
  ElectronicModel model = make_model(cfg.model, cfg.params);
  if (!model.has_limits()) throw Error("NoLimit", "scattering needs a model with limits at infinity");
  if (!(cfg.eta > 0)) throw Error("BadConfig", "eta must be positive");
  if (!(cfg.t1 >= cfg.t0)) throw Error("BadConfig", "t1 must not precede t0");
  ExperimentReport rep;
  double eps = cfg.eps, e2 = eps * eps;
  double e_in = level_energy(model, cfg.level, -INFINITY, cfg.delta);
  CoherentState s = CoherentState::make(cfg.A, cfg.B, eps, cfg.a, cfg.eta, cfg.m);
  FlowResult fl = flow(s, cfg.t0, e_in);
  double E0 = 0.5 * cfg.eta * cfg.eta + e_in;
  double k_src = std::sqrt(std::max(0.0, 2 * (E0 - level_energy(model, cfg.level, INFINITY, cfg.delta))));
  double k_tgt = std::sqrt(std::max(0.0, 2 * (E0 - level_energy(model, cfg.target, INFINITY, cfg.delta))));
  rep.k_split = cfg.k_split > 0 ? cfg.k_split : 0.5 * (k_src + k_tgt);

  int N = cfg.N;
  if (N <= 0) {
    double kmax = std::max({k_src, k_tgt, cfg.eta}) + 6 * eps * std::abs(cfg.B);
    N = choose_points(cfg.x_min, cfg.x_max, eps, kmax, std::abs(cfg.A));
  }
  rep.grid = SimulationGrid::make(cfg.x_min, cfg.x_max, N);
  const SimulationGrid& grid = rep.grid;
  rep.precision = parse_precision(cfg.precision, eps);
  double factor = cfg.dt_factor > 0 ? cfg.dt_factor : (rep.precision == Precision::Double ? 0.025 : 0.1);
  rep.steps = std::max(0, static_cast<int>(std::ceil((cfg.t1 - cfg.t0) / (factor * e2) - 1e-9)));
  rep.dt = rep.steps > 0 ? (cfg.t1 - cfg.t0) / rep.steps : factor * e2;

  std::vector<qcplx> env = evaluate_quad(fl.state, grid.x, fl.phase);
  auto prop = make_adiabatic_propagator(model, cfg.delta, grid, env, cfg.level, cfg.t0, eps, rep.dt, rep.precision);

  WaveField f0 = prop->field();
  rep.high_frequency = high_frequency_mass(f0, grid);
  if (rep.high_frequency > 1e-8) throw Error("NyquistViolation", "initial state is not resolved by the grid");
  double n0 = norm2(f0, grid), en0 = energy(f0, model, cfg.delta, grid);
  rep.incoming = window_stats(prop->levels()[cfg.level - 1], grid, eps, -INFINITY, INFINITY);

  std::vector<double> snaps = cfg.snapshot_times;
  snaps.push_back(cfg.t0);
  snaps.push_back(cfg.t1);
  std::vector<int> snap_steps;
  for (double t : snaps) {
    if (t < cfg.t0 || t > cfg.t1) continue;
    snap_steps.push_back(rep.steps > 0 ? static_cast<int>(std::lround((t - cfg.t0) / rep.dt)) : 0);
  }
  std::vector<int> marks = snap_steps;
  int S = std::max(2, cfg.samples);
  for (int i = 0; i < S; ++i) marks.push_back(static_cast<int>(std::lround(double(i) * rep.steps / (S - 1))));
  std::sort(marks.begin(), marks.end());
  marks.erase(std::unique(marks.begin(), marks.end()), marks.end());
  std::sort(snap_steps.begin(), snap_steps.end());
  snap_steps.erase(std::unique(snap_steps.begin(), snap_steps.end()), snap_steps.end());

  int done = 0;
  for (int mk : marks) {
    prop->advance(mk - done);
    done = mk;
    SeriesRow r = sample(*prop, grid, cfg.level, cfg.target, rep.k_split, cfg.x_split);
    rep.series.push_back(r);
    rep.max_boundary_mass = std::max(rep.max_boundary_mass, r.boundary);
    if (std::binary_search(snap_steps.begin(), snap_steps.end(), mk)) rep.snapshots.push_back(project_levels(*prop, grid));
    if (r.boundary > 1e-10) {
      rep.status = "BoundaryContamination";
      break;
    }
  }
  rep.final_time = prop->time();
  WaveField f1 = prop->field();
  rep.norm_drift = std::abs(norm2(f1, grid) - n0);
  rep.energy_drift = std::abs(energy(f1, model, cfg.delta, grid) - en0) / std::max(std::abs(en0), 1e-300);
  rep.high_frequency = std::max(rep.high_frequency, high_frequency_mass(f1, grid));
  auto c = prop->levels();
  rep.transmitted = window_stats(c[cfg.target - 1], grid, eps, rep.k_split, INFINITY, cfg.x_split);
  for (const auto& cj : c) rep.reflected_mass += window_stats(cj, grid, eps, -INFINITY, 0.0).mass;
  if (rep.status == "ok" && rep.high_frequency > 1e-8) rep.status = "NyquistViolation";
  rep.final_levels = std::move(c);
  return rep;
}

}  // namespace molz
