#pragma once
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include "molz/coherent.hpp"
#include "molz/model.hpp"

namespace molz {

// Closed path based at 0: out along the stem, once around the circle, back along the stem.
struct ContourLoop {
  cplx z0;                 // encircled point
  double radius = 0;
  int orientation = -1;    // +1 counter-clockwise
  std::vector<cplx> stem;  // polyline from 0 to the start point on the circle
};

// Loop for the transition j -> n. Downward transitions encircle conj(z0) counter-clockwise,
// upward ones encircle z0 clockwise; both give Im gamma > 0. radius <= 0 picks the default.
ContourLoop make_loop(const CrossingPoint& cp, double strip, double radius = 0.0);
// Any circle based at 0 through a vertical stem; used for loops that enclose nothing.
ContourLoop make_circle_loop(cplx center, double radius, int orientation);
int winding_number(const ContourLoop& loop, cplx p);

struct LoopIntegral {
  cplx gamma;     // oint k_j dz
  cplx dgamma;    // d/dE
  cplx d2gamma;   // d^2/dE^2
  cplx e_integral;  // oint e_j dz
  int panels = 0;
};

LoopIntegral action_integral(const ElectronicModel& model, const ContourLoop& loop, int j, double E,
                             double delta, double rel_tol = 1e-12);
struct LoopSample {
  cplx z, e, k;  // continued level and wavenumber
  cplx gamma;    // integral of k from the base point up to z
};
// Gauss nodes along the loop in path order; panels per segment.
std::vector<LoopSample> trace_loop(const ElectronicModel& model, const ContourLoop& loop, int j, double E,
                                   double delta, int panels = 16);
// theta with  continued phi_j(0) = exp(-i theta) phi_n(0)
cplx geometric_prefactor(const ElectronicModel& model, const ContourLoop& loop, int j, double delta);

struct OmegaTail {
  double value = 0, d1 = 0, d2 = 0;  // and its first two E-derivatives
};
// int_0^{dir inf} (k_j^sigma(y,E) - k_j^sigma(dir inf,E)) dy with k^sigma = sigma k
OmegaTail omega_tail(const ElectronicModel& model, int j, int sigma, int dir, double E, double delta);

struct EnergyWindow {
  double E1 = 0, E2 = 0;
  int n = 401;
  std::vector<double> grid() const { return linspace(E1, E2, n); }
};
// Window check: E1 must exceed every level on the real axis, and E - e_j(z) must stay away from 0
// on sampled strip points.
double spectrum_top(const ElectronicModel& model, double delta);  // sup of the top level on the real axis
double window_clearance(const ElectronicModel& model, const EnergyWindow& w, double delta);

struct EnergyDensity {
  std::function<double(double)> G, dG, d2G;
  std::function<double(double)> J, dJ, d2J;
  std::function<cplx(double, double)> P;   // P(E, eps)
  std::function<cplx(double, double)> P0;  // P without the cutoff factor
  std::function<double(double)> F;        // cutoff
  double E0 = 0, g = 0;
  double plateau_lo = 0, plateau_hi = 0;
  double e_in = 0;  // e_j(-inf)
  int m = 0;
};

double smooth_cutoff(double E, double E1, double E2, double p1, double p2);

EnergyDensity build_density_from_state(const CoherentState& s, int j, const ElectronicModel& model,
                                       const EnergyWindow& w, double margin, double delta);
// G = g (E - E0)^2 / 2, J = 0, P = 1: a pure Gaussian in energy.
EnergyDensity gaussian_energy_density(double E0, double g, const EnergyWindow& w);

struct ProfilePoint {
  double alpha, dalpha, d2alpha;
  double kappa, dkappa, d2kappa;
  cplx gamma, dgamma, d2gamma;
  OmegaTail omega_out;  // omega_n^-(+inf)
};

struct DecayProfile {
  EnergyWindow window;
  int j = 2, n = 1;
  double delta = 0;
  double e_out = 0;  // e_n(+inf)
  std::vector<double> E, alpha, kappa, im_gamma, re_gamma, omega_out, omega_in;
  std::function<ProfilePoint(double)> exact;
  std::shared_ptr<boost::math::interpolators::cardinal_cubic_b_spline<double>> alpha_spline, kappa_spline;
  double alpha_at(double E) const { return (*alpha_spline)(E); }
  double kappa_at(double E) const { return (*kappa_spline)(E); }
};

DecayProfile decay_profile(const ElectronicModel& model, const EnergyDensity& density,
                           const ContourLoop& loop, int j, int n, double delta, const EnergyWindow& w);

struct TransitionPrediction {
  double E_star = 0, k_star = 0, alpha_star = 0, kappa_star = 0;
  double dalpha = 0, d2alpha = 0, dkappa = 0, d2kappa = 0;
  double alpha_kk = 0, kappa_kk = 0;
  cplx A_plus, B_plus;
  double a_plus = 0, eta_plus = 0;
  cplx theta;
  cplx P_star;
  double eps = 0;
  cplx amplitude;             // used for comparisons
  double probability = 0;
  cplx amplitude_closed_form;  // the closed form written in terms of B_- only
  double eta_naive = 0;
  double k_in_star = 0;
  double clipped_fraction = 0;
  std::vector<double> local_minima;
  cplx gamma_star, dgamma_star, d2gamma_star;
};

struct PredictOptions {
  double clip_tolerance = 1e-8;
  double edge_fraction = 0.02;
};

TransitionPrediction predict(const DecayProfile& profile, const ElectronicModel& model,
                             const EnergyDensity& density, double eps, cplx theta,
                             const CoherentState* incoming = nullptr, const PredictOptions& opt = {});

struct LZExpansion {
  double Gamma0 = 0;
  double leading = 0, d1 = 0, d2 = 0;  // Gamma0/kc, -Gamma0/kc^3, 3 Gamma0/kc^5
  double closed_form = 0;              // delta^2 (pi/4)(b^2 - c^2/a)/sqrt(a) for registry families
  double kc = 0;
};
LZExpansion lz_expansions(const ElectronicModel& model, const ContourLoop& loop, int j, double delta,
                          double E);

}  // namespace molz
