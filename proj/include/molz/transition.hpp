#pragma once
#include <functional>
#include <vector>

#include "molz/semiclassical.hpp"

namespace molz {

// T(x) = int_Delta P(E) (2(E - e_inf))^(-1/4) exp(-alpha/eps^2) exp(-i(tE + kappa)/eps^2)
//        exp(i x sqrt(2(E - e_inf))/eps^2) dE
struct TransitionIntegralSpec {
  std::function<double(double)> alpha, kappa;
  std::function<cplx(double)> P;
  double e_inf = 0;
  double E1 = 0, E2 = 0;
  double eps = 0.2;
  double t = 0;
  std::vector<double> x;
};

struct TransitionField {
  std::vector<cplx> T;
  int panels = 0;
  double last_change = 0;  // relative L2 change between the last two refinements
};

TransitionField evaluate_T(const TransitionIntegralSpec& spec, double rel_tol = 1e-8, int max_panels = 1 << 16);

// Gaussian leading term built from the second-order data at E*.
std::vector<cplx> evaluate_asymptote(const TransitionIntegralSpec& spec, const TransitionPrediction& pred);

// Centre a+ + eta+ t, 12 amplitude standard deviations wide.
std::vector<double> asymptote_grid(const TransitionPrediction& pred, double t, int n = 2048);

TransitionIntegralSpec spec_from_profile(const DecayProfile& profile, const EnergyDensity& density,
                                         const TransitionPrediction& pred, double t);

double l2_norm(const std::vector<cplx>& f, const std::vector<double>& x);
double relative_l2(const std::vector<cplx>& f, const std::vector<cplx>& g, const std::vector<double>& x);

struct ConvergenceRow {
  double eps = 0, error = 0, phase_gap = 0;
  int panels = 0;
};
struct ConvergenceStudy {
  std::vector<ConvergenceRow> rows;
  double slope = 0;  // least-squares slope of log error against log eps
};
// make(eps) returns the spec and the matching prediction for one eps.
ConvergenceStudy convergence_study(
    const std::vector<double>& eps,
    const std::function<std::pair<TransitionIntegralSpec, TransitionPrediction>(double)>& make);

}  // namespace molz
