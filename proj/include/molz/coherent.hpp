#pragma once
#include <functional>
#include <vector>

#include "molz/common.hpp"

namespace molz {

// phi_m(A, B, eps^2, a, eta, x). argA is the continuous argument of A, which fixes the
// branches of A^(1/2) and (conj(A)/A)^(m/2).
struct CoherentState {
  cplx A{1.0}, B{1.0};
  double eps = 0.2;
  double a = 0.0, eta = 1.0;
  int m = 0;
  double argA = 0.0;

  static CoherentState make(cplx A, cplx B, double eps, double a, double eta, int m = 0);
  double normalization_defect() const;  // |Re(conj(A) B) - 1|
};

struct FlowResult {
  CoherentState state;
  double action = 0.0;  // S(t) = t (eta^2/2 - e_inf)
  cplx phase{1.0};      // exp(i S / eps^2)
};

FlowResult flow(const CoherentState& s, double t, double e_inf);

double hermite(int m, double y);
cplx evaluate_at(const CoherentState& s, double x);
// Throws GridTooNarrow when more than 1e-10 of the mass lies outside the grid.
std::vector<cplx> evaluate(const CoherentState& s, const std::vector<double>& x);
// Same values in quad precision, times a global phase factor; phases reach eta x / eps^2 ~ 1e3.
std::vector<qcplx> evaluate_quad(const CoherentState& s, const std::vector<double>& x, cplx phase = 1.0);
// Momentum-space amplitude, so that |.|^2 is a probability density in k.
cplx momentum_amplitude(const CoherentState& s, double k);
std::function<double(double)> momentum_density(const CoherentState& s);

}  // namespace molz
