#pragma once
#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "molz/common.hpp"

namespace molz {


// Analytic electronic Hamiltonian family h(z, delta). Levels are numbered from 1 (lowest).
struct ElectronicModel {
  std::string name;
  int dim = 2;
  std::function<CMat(cplx, double)> h;
  std::function<CMat(cplx, double)> dh;     // d/dz h
  std::function<CMat(int, double)> limit;   // side = +1 or -1; empty when h has no limits
  double nu = 1.0;                          // tail decay exponent (metadata)
  double strip = 1.0;                       // analyticity half-width (metadata)
  std::optional<std::array<double, 3>> h6;  // local constants (a, b, c) of the gap at the crossing
  // Real 2x2 models only: (f, p, q) with h = f I + 1/2 [[p, q], [q, -p]] in quad precision.
  std::function<std::array<quad, 3>(quad, double)> fpq;

  CMat at(double x, double delta) const;    // accepts +-infinity
  bool has_limits() const { return static_cast<bool>(limit); }
};

ElectronicModel tanh_model();
// h = 1/2 [[p, q], [q, -p]], p = sqrt(a) s(x) + (c/sqrt(a)) delta, q = delta sqrt(b^2 - c^2/a),
// s(x) = x, or x_sat tanh(x/x_sat) when x_sat > 0 so the levels have limits at infinity.
ElectronicModel h6_model(double a, double b, double c, double x_sat = 0.0);
ElectronicModel lz_model(double x_sat = 0.0);
ElectronicModel constant_model(double e1, double e2);
ElectronicModel make_model(const std::string& name, const std::map<std::string, double>& params);

struct EigenFrame {
  double x = 0;
  Eigen::VectorXd e;  // ascending
  CMat phi;           // columns are eigenvectors
};

EigenFrame eigenframe(const ElectronicModel& model, double x, double delta,
                      const EigenFrame* prior = nullptr);
std::vector<EigenFrame> transport_frame(const ElectronicModel& model, const std::vector<double>& path,
                                        double delta);

// Closed-form 2x2 pieces: e = f -+ sqrt(rho)/2.
struct TwoLevel {
  cplx f, rho, df, drho;
};
TwoLevel two_level(const ElectronicModel& model, cplx z, double delta);

// Unnormalized solution of (h - e) v = 0 for a (possibly continued) eigenvalue e.
Eigen::Vector2cd two_level_vector(const CMat& h, cplx e);
// Real-axis eigenvalue of level j (1-based); accepts +-infinity.
double level_energy(const ElectronicModel& model, int j, double x, double delta);

struct SearchBox {
  double re_lo, re_hi, im_lo, im_hi;
};

struct CrossingPoint {
  cplx z0;
  int j = 1, n = 2;
  double residual = 0;  // |rho(z0)|, the squared gap
};

CrossingPoint find_complex_crossing(const ElectronicModel& model, int j, int n, double delta,
                                    const SearchBox& box);

struct ModelCheck {
  double hermiticity = 0;  // max |h - h^dagger|
  double min_gap = 0;
  double decay_constant = 0;
  double decay_violation = 0;  // max of |h - h(inf)| <x>^(2+nu) / C beyond the fit region, should be <= 1
};
ModelCheck check_model(const ElectronicModel& model, double delta, double L = 20.0, int points = 1000);

}  // namespace molz
