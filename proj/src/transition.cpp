#include "molz/transition.hpp"

#include <algorithm>
#include <cmath>

#include "molz/quadrature.hpp"

namespace molz {

namespace {

// sum_i amp_i exp(i x k_i / eps^2) for every x; uniform grids use a resynchronised recurrence
std::vector<cplx> superpose(const std::vector<cplx>& amp, const std::vector<double>& k, const std::vector<double>& x,
                            double e2) {
  size_t nx = x.size();
  std::vector<cplx> out(nx, 0.0);
  if (nx == 0) return out;
  double dx = nx > 1 ? (x.back() - x.front()) / double(nx - 1) : 0.0;
  bool uniform = true;
  for (size_t j = 0; j < nx && uniform; ++j)
    uniform = std::abs(x[j] - (x.front() + dx * double(j))) <= 1e-12 * (1 + std::abs(x[j]));
  for (size_t i = 0; i < amp.size(); ++i) {
    if (!uniform) {
      for (size_t j = 0; j < nx; ++j) out[j] += amp[i] * std::polar(1.0, x[j] * k[i] / e2);
      continue;
    }
    cplx step = std::polar(1.0, dx * k[i] / e2), w;
    for (size_t j = 0; j < nx; ++j) {
      if (j % 128 == 0) w = std::polar(1.0, x[j] * k[i] / e2);
      out[j] += amp[i] * w;
      w *= step;
    }
  }
  return out;
}

}  // namespace

double l2_norm(const std::vector<cplx>& f, const std::vector<double>& x) {
  double s = 0;
  for (size_t i = 0; i + 1 < x.size(); ++i) s += 0.5 * (std::norm(f[i]) + std::norm(f[i + 1])) * (x[i + 1] - x[i]);
  return std::sqrt(s);
}

double relative_l2(const std::vector<cplx>& f, const std::vector<cplx>& g, const std::vector<double>& x) {
  std::vector<cplx> d(f.size());
  for (size_t i = 0; i < f.size(); ++i) d[i] = f[i] - g[i];
  return l2_norm(d, x) / l2_norm(g, x);
}

TransitionField evaluate_T(const TransitionIntegralSpec& spec, double rel_tol, int max_panels) {
  if (spec.eps < 0.05) throw Error("EpsilonTooSmall", "oscillations are not resolvable below eps = 0.05");
  if (!(spec.E1 > spec.e_inf) || !(spec.E2 > spec.E1)) throw Error("BadWindow", "window must lie above e(inf)");
  double e2 = spec.eps * spec.eps;
  double k1 = std::sqrt(2 * (spec.E1 - spec.e_inf)), k2 = std::sqrt(2 * (spec.E2 - spec.e_inf));
  const auto& g = gauss_rule();
  TransitionField res;
  std::vector<cplx> prev;
  for (int panels = 32; panels <= max_panels; panels *= 2) {
    double h = (k2 - k1) / panels;
    std::vector<cplx> amp;
    std::vector<double> ks;
    amp.reserve(panels * g.n);
    ks.reserve(panels * g.n);
    double peak = 0;
    for (int p = 0; p < panels; ++p) {
      double mid = k1 + (p + 0.5) * h;
      for (int i = 0; i < g.n; ++i) {
        double k = mid + 0.5 * h * g.x[i];
        double E = 0.5 * k * k + spec.e_inf;
        // dE = k dk turns (2(E - e))^(-1/4) into sqrt(k)
        cplx a = 0.5 * h * g.w[i] * spec.P(E) * std::sqrt(k) * std::exp(-spec.alpha(E) / e2) *
                 std::polar(1.0, -(spec.t * E + spec.kappa(E)) / e2);
        peak = std::max(peak, std::abs(a));
        amp.push_back(a);
        ks.push_back(k);
      }
    }
    // nodes below 1e-22 of the peak cannot move the result at the requested tolerance
    std::vector<cplx> a2;
    std::vector<double> k2v;
    for (size_t i = 0; i < amp.size(); ++i)
      if (std::abs(amp[i]) > 1e-22 * peak) {
        a2.push_back(amp[i]);
        k2v.push_back(ks[i]);
      }
    std::vector<cplx> T = superpose(a2, k2v, spec.x, e2);
    res.panels = panels;
    if (!prev.empty()) {
      double nt = 0, nd = 0;
      for (size_t j = 0; j < T.size(); ++j) {
        nt += std::norm(T[j]);
        nd += std::norm(T[j] - prev[j]);
      }
      res.last_change = nt > 0 ? std::sqrt(nd / nt) : std::sqrt(nd);
      if (res.last_change < rel_tol || nt == 0) {
        res.T = std::move(T);
        return res;
      }
    }
    prev = std::move(T);
  }
  throw Error("QuadratureStalled", "transition integral did not converge within the panel limit");
}

std::vector<cplx> evaluate_asymptote(const TransitionIntegralSpec& spec, const TransitionPrediction& p) {
  double e2 = spec.eps * spec.eps, ks = p.k_star;
  cplx M(p.alpha_kk, spec.t + p.kappa_kk);
  cplx pre = spec.eps * std::sqrt(2 * pi) * p.P_star / std::sqrt(ks) * std::exp(-p.alpha_star / e2) / std::pow(M, 1.5);
  std::vector<cplx> out(spec.x.size());
  for (size_t i = 0; i < spec.x.size(); ++i) {
    double x = spec.x[i];
    double N = ks * spec.t + ks * p.dkappa - x;
    cplx num(ks * p.alpha_kk, x + ks * ks * ks * p.d2kappa);
    out[i] = num * pre * std::polar(1.0, -(spec.t * p.E_star + p.kappa_star - x * ks) / e2) *
             std::exp(-N * N / (2 * e2 * M));
  }
  return out;
}

std::vector<double> asymptote_grid(const TransitionPrediction& p, double t, int n) {
  double centre = p.a_plus + p.eta_plus * t;
  double sigma = p.eps * std::abs(cplx(p.alpha_kk, t + p.kappa_kk)) / std::sqrt(p.alpha_kk);
  return linspace(centre - 6 * sigma, centre + 6 * sigma, n);
}

TransitionIntegralSpec spec_from_profile(const DecayProfile& profile, const EnergyDensity& density,
                                         const TransitionPrediction& pred, double t) {
  TransitionIntegralSpec s;
  auto prof = std::make_shared<DecayProfile>(profile);
  s.alpha = [prof](double E) { return prof->alpha_at(E); };
  s.kappa = [prof](double E) { return prof->kappa_at(E); };
  auto P = density.P;
  double eps = pred.eps;
  s.P = [P, eps](double E) { return P(E, eps); };
  s.e_inf = profile.e_out;
  s.E1 = profile.window.E1;
  s.E2 = profile.window.E2;
  s.eps = eps;
  s.t = t;
  s.x = asymptote_grid(pred, t);
  return s;
}

ConvergenceStudy convergence_study(
    const std::vector<double>& eps,
    const std::function<std::pair<TransitionIntegralSpec, TransitionPrediction>(double)>& make) {
  ConvergenceStudy st;
  for (double e : eps) {
    auto [spec, pred] = make(e);
    TransitionField f = evaluate_T(spec);
    std::vector<cplx> a = evaluate_asymptote(spec, pred);
    ConvergenceRow r;
    r.eps = e;
    r.error = relative_l2(f.T, a, spec.x);
    r.panels = f.panels;
    TransitionIntegralSpec c = spec;
    c.x = {pred.a_plus + pred.eta_plus * spec.t};
    cplx tc = evaluate_T(c).T[0], ac = evaluate_asymptote(c, pred)[0];
    r.phase_gap = std::abs(std::arg(tc / ac));
    st.rows.push_back(r);
  }
  if (st.rows.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0, n = double(st.rows.size());
    for (const auto& r : st.rows) {
      double lx = std::log(r.eps), ly = std::log(r.error);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
    }
    st.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  return st;
}

}  // namespace molz
