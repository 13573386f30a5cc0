#pragma once
#include <memory>
#include <string>
#include <vector>

#include "molz/model.hpp"

namespace molz {

// Periodic grid: x_i = x_min + i dx, i < N; q holds angular wavenumbers in FFT order.
struct SimulationGrid {
  double x_min = 0, x_max = 0, dx = 0;
  int N = 0;
  std::vector<double> x, q;
  static SimulationGrid make(double x_min, double x_max, int N);
  double nyquist_momentum(double eps) const { return eps * eps * pi / dx; }
};

// Smallest power of two with Nyquist momentum >= 3 k_max and dx <= eps |A| / 8.
int choose_points(double x_min, double x_max, double eps, double k_max, double min_abs_A);

struct WaveField {
  std::vector<std::vector<cplx>> psi;  // psi[component][point]
  double t = 0, eps = 0.2;
};

enum class Precision { Double, DoubleDouble };
// "double", "dd" or "auto" (double-double below eps = 0.12)
Precision parse_precision(const std::string& name, double eps);
std::string precision_name(Precision p);

// Strang splitting: half kinetic, full potential, half kinetic.
class Propagator {
 public:
  virtual ~Propagator() = default;
  virtual void advance(int steps) = 0;
  virtual WaveField field() const = 0;
  // adiabatic amplitudes c_j(x) = <phi_j(x), psi(x)>, computed at the solver precision
  virtual std::vector<std::vector<cplx>> levels() const = 0;
  // eigenvectors used by levels(), frame[j][c][i]
  virtual const std::vector<std::vector<std::vector<cplx>>>& frame() const = 0;
  virtual double time() const = 0;
  virtual double dt() const = 0;
};

std::unique_ptr<Propagator> make_propagator(const ElectronicModel& model, double delta, const SimulationGrid& grid,
                                            const WaveField& init, double dt, Precision precision);
// psi = envelope(x) phi_j(x) with the frame evaluated at the solver precision
std::unique_ptr<Propagator> make_adiabatic_propagator(const ElectronicModel& model, double delta,
                                                      const SimulationGrid& grid, const std::vector<qcplx>& envelope,
                                                      int j, double t0, double eps, double dt, Precision precision);

WaveField step(const WaveField& f, const ElectronicModel& model, double delta, const SimulationGrid& grid, double dt);

double norm2(const WaveField& f, const SimulationGrid& grid);
// <psi, (-eps^4/2 d^2 + h) psi>
double energy(const WaveField& f, const ElectronicModel& model, double delta, const SimulationGrid& grid);
double boundary_mass(const WaveField& f, const SimulationGrid& grid, double fraction = 0.05);
// share of the mass in the top 10% of |q|
double high_frequency_mass(const WaveField& f, const SimulationGrid& grid);

struct GaussianFit {
  double center = 0, width = 0, residual = 0, excess_kurtosis = 0;
};

struct LevelData {
  double mass = 0, mean_x = 0, mean_k = 0, var_k = 0;
  std::vector<double> density_x, density_k;  // density_k on the sorted momentum grid
};

struct LevelObservables {
  double t = 0, eps = 0;
  std::vector<double> x, k;  // k ascending, k = eps^2 q
  std::vector<LevelData> levels;
  double total = 0;
};

LevelObservables project_levels(const std::vector<std::vector<cplx>>& c, const SimulationGrid& grid, double eps,
                                double t);
LevelObservables project_levels(const Propagator& p, const SimulationGrid& grid);

// Moment-matched Gaussian of the momentum density; residual is the L1 distance of the
// normalised densities. Throws MassTooSmall below 1e-14.
GaussianFit gaussian_fit(const LevelObservables& obs, int j);
GaussianFit fit_density(const std::vector<double>& k, const std::vector<double>& rho);

// Statistics of one adiabatic amplitude after a smooth spatial mask (x > x_split) and a
// momentum window k_lo < k < k_hi.
struct WindowStats {
  double mass = 0, mean_k = 0, var_k = 0, mean_x = 0;
  GaussianFit fit;
  std::vector<double> k, density_k;
};
WindowStats window_stats(const std::vector<cplx>& c, const SimulationGrid& grid, double eps, double k_lo, double k_hi,
                         double x_split = -INFINITY, double mask_width = 0.5);

}  // namespace molz
