#pragma once
#include <functional>
#include <vector>

#include "molz/coherent.hpp"
#include "molz/model.hpp"

namespace molz {

// Channel order everywhere: (+, 1..m) then (-, 1..m). Index of (tau, j) is (tau > 0 ? 0 : m) + j - 1.
int channel_index(int m, int tau, int j);

// a_{jl}^{tau sigma}(x, E) in the frame with <phi_j, phi_j'> = 0, as a 2m x 2m matrix.
CMat couplings(const ElectronicModel& model, double x, double E, double delta);

struct CoefficientState {
  double x = 0;
  CVec c;                      // 2m coefficients
  std::vector<double> phase;   // int_0^x k_j dy
  double flux() const;         // sum tau |c^tau_j|^2
};

struct IntegrationOptions {
  double L = 30;
  double tol = 1e-11;
  bool check_limit = true;  // repeat on [-2L, 2L] and require agreement to 1e-9
};

// Starts from the unit vector of channel (tau, j) at -L; returns the state at +L.
CoefficientState integrate_coefficients(const ElectronicModel& model, double E, double eps, double delta, int j,
                                        int tau = -1, const IntegrationOptions& opt = {});

struct SMatrix {
  CMat S;  // S c(-inf) = c(+inf)
  double E = 0, eps = 0;
  int m = 2;
  cplx block(int tau, int sigma, int j, int l) const {
    return S(channel_index(m, tau, j), channel_index(m, sigma, l));
  }
  double symmetry_residual() const;  // max |S R S^dagger R - I|
  double flux_defect = 0;            // largest flux change over the columns
};

SMatrix s_matrix(const ElectronicModel& model, double E, double eps, double delta, const IntegrationOptions& opt = {});

// Q(E) for a free packet phi_m(A, B, eps^2, a, eta) at t = 0 entering on level j from the left,
// tapered by a smooth cutoff on [E1, E2] with plateau margins.
std::function<cplx(double)> incoming_energy_density(const CoherentState& s, const ElectronicModel& model, int j,
                                                    double delta, double E1, double E2, double margin);

struct Synthesis {
  double t = 0;
  std::vector<std::vector<cplx>> levels;  // coefficient of phi_j(x)
  std::vector<std::vector<cplx>> psi;     // components
};

// psi(x, t) = int Q(E) Psi(x, E) exp(-i t E / eps^2) dE, trapezoid rule on n energies in [E1, E2].
std::vector<Synthesis> wavepacket_synthesis(const ElectronicModel& model, const std::function<cplx(double)>& Q,
                                            int j, double eps, double delta, const std::vector<double>& x,
                                            const std::vector<double>& times, double E1, double E2, int n,
                                            double tol = 1e-10);

}  // namespace molz
