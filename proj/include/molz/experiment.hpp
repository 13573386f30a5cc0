#pragma once
#include <map>
#include <string>
#include <vector>

#include "molz/coherent.hpp"
#include "molz/pde.hpp"
#include "molz/semiclassical.hpp"

namespace molz {

// Incoming packet phi_m(A, B, eps^2, a, eta) on level j, given as the free asymptotic state at t = 0
// and flowed to t0 with the asymptotic level energy.
struct ExperimentConfig {
  std::string model = "tanh";
  std::map<std::string, double> params;
  double delta = 0.0;
  double eps = 0.2;
  cplx A{1.0}, B{1.0};
  double a = 0.0, eta = 1.0;
  int m = 0, level = 2, target = 1;
  double t0 = -10, t1 = 9;
  double x_min = -30, x_max = 34;
  int N = 0;  // 0 picks the grid automatically
  double dt_factor = 0;  // dt = dt_factor eps^2; 0 picks 0.025 in double, 0.1 in double-double
  std::string precision = "auto";
  int samples = 20;
  double k_split = 0;  // 0: midway between the two transmitted classical momenta
  double x_split = -INFINITY;
  std::vector<double> snapshot_times;  // t0 and t1 are always recorded
  // predictor settings; a zero window picks one from the packet's momentum spread
  double window_E1 = 0, window_E2 = 0;
  int window_n = 401;
  double cutoff_margin = 0.03;
  double clip_tolerance = 1e-5;
};

struct PredictionRun {
  ElectronicModel model;
  CrossingPoint crossing;
  ContourLoop loop;
  EnergyWindow window;
  EnergyDensity density;
  DecayProfile profile;
  TransitionPrediction prediction;
};

// Semiclassical route for the same packet: crossing, loop, energy density, decay profile, predict.
PredictionRun predict_experiment(const ExperimentConfig& cfg);

struct SeriesRow {
  double t = 0, mass_upper = 0, mass_lower = 0, mean_k_lower = 0, var_k_lower = 0, fit_residual_lower = 0;
  double norm = 0, boundary = 0;
};

struct ExperimentReport {
  std::string status = "ok";  // or BoundaryContamination
  SimulationGrid grid;
  double dt = 0;
  int steps = 0;
  Precision precision = Precision::Double;
  double k_split = 0;
  std::vector<SeriesRow> series;
  std::vector<LevelObservables> snapshots;
  WindowStats transmitted;  // target level, k > k_split
  WindowStats incoming;     // source level at t0
  double reflected_mass = 0;  // every level, k < 0, at the final time
  double norm_drift = 0, energy_drift = 0, max_boundary_mass = 0, high_frequency = 0;
  double final_time = 0;
  std::vector<std::vector<cplx>> final_levels;  // adiabatic coefficients at the final time
};

ExperimentReport run_scattering_experiment(const ExperimentConfig& cfg);

}  // namespace molz
