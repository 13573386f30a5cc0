#include "molz/pde.hpp"

#include <algorithm>
#include <cmath>

#include <fftw3.h>
#include <quadmath.h>

#include "dd.hpp"

namespace molz {

SimulationGrid SimulationGrid::make(double x_min, double x_max, int N) {
  if (N < 8 || (N & (N - 1)) != 0) throw Error("BadGrid", "N must be a power of two");
  if (!(x_max > x_min)) throw Error("BadGrid", "empty domain");
  SimulationGrid g;
  g.x_min = x_min;
  g.x_max = x_max;
  g.N = N;
  g.dx = (x_max - x_min) / N;
  g.x.resize(N);
  g.q.resize(N);
  for (int i = 0; i < N; ++i) {
    g.x[i] = x_min + i * g.dx;
    int m = i < N / 2 ? i : i - N;
    g.q[i] = 2 * pi * m / (x_max - x_min);
  }
  return g;
}

int choose_points(double x_min, double x_max, double eps, double k_max, double min_abs_A) {
  double dx = std::min(eps * eps * pi / (3 * k_max), eps * min_abs_A / 8);
  int N = 8;
  while ((x_max - x_min) / N > dx) N *= 2;
  return N;
}

Precision parse_precision(const std::string& name, double eps) {
  if (name == "double") return Precision::Double;
  if (name == "dd") return Precision::DoubleDouble;
  if (name == "auto") return eps < 0.12 ? Precision::DoubleDouble : Precision::Double;
  throw Error("BadConfig", "precision must be double, dd or auto");
}

std::string precision_name(Precision p) { return p == Precision::Double ? "double" : "dd"; }

namespace {

// In-place FFTW transforms on std::vector<cplx>; estimate mode keeps plans deterministic.
struct FftwPlan {
  fftw_plan fwd = nullptr, bwd = nullptr;
  FftwPlan(std::vector<cplx>& a) {
    auto* p = reinterpret_cast<fftw_complex*>(a.data());
    int n = static_cast<int>(a.size());
    fwd = fftw_plan_dft_1d(n, p, p, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_1d(n, p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  FftwPlan(const FftwPlan&) = delete;
  FftwPlan& operator=(const FftwPlan&) = delete;
  ~FftwPlan() {
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
  }
};

void fft_inplace(std::vector<cplx>& a, int sign) {
  auto* p = reinterpret_cast<fftw_complex*>(a.data());
  fftw_plan pl = fftw_plan_dft_1d(static_cast<int>(a.size()), p, p, sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD,
                                  FFTW_ESTIMATE);
  fftw_execute(pl);
  fftw_destroy_plan(pl);
}

using Frame = std::vector<std::vector<std::vector<cplx>>>;

Frame double_frame(const ElectronicModel& model, double delta, const SimulationGrid& grid) {
  auto fr = transport_frame(model, grid.x, delta);
  int m = model.dim;
  Frame out(m, std::vector<std::vector<cplx>>(m, std::vector<cplx>(grid.N)));
  for (int i = 0; i < grid.N; ++i)
    for (int j = 0; j < m; ++j)
      for (int c = 0; c < m; ++c) out[j][c][i] = fr[i].phi(c, j);
  return out;
}

class DoublePropagator : public Propagator {
 public:
  DoublePropagator(const ElectronicModel& model, double delta, const SimulationGrid& grid, const WaveField& init,
                   double dt)
      : m_(model.dim), N_(grid.N), t_(init.t), dt_(dt), eps_(init.eps), psi_(init.psi) {
    if (static_cast<int>(psi_.size()) != m_) throw Error("BadField", "component count does not match the model");
    for (auto& c : psi_) {
      if (static_cast<int>(c.size()) != N_) throw Error("BadField", "field does not match the grid");
      plans_.push_back(std::make_unique<FftwPlan>(c));
    }
    frame_ = double_frame(model, delta, grid);
    double e2 = eps_ * eps_, phi = dt / e2;
    U_.resize(size_t(N_) * m_ * m_);
    for (int i = 0; i < N_; ++i) {
      CMat h = model.h(cplx(grid.x[i], 0.0), delta), u(m_, m_);
      if (m_ == 2) {
        cplx f = 0.5 * (h(0, 0) + h(1, 1));
        CMat h0 = h - f * CMat::Identity(2, 2);
        double s = std::sqrt(std::norm(h0(0, 0)) + std::norm(h0(0, 1)));
        double sn = s > 0 ? std::sin(phi * s) / s : phi;
        u = std::exp(-I * phi * f) * (std::cos(phi * s) * CMat::Identity(2, 2) - I * sn * h0);
      } else {
        Eigen::SelfAdjointEigenSolver<CMat> es(h);
        CVec ph = (-I * phi * es.eigenvalues().cast<cplx>()).array().exp();
        u = es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
      }
      for (int a = 0; a < m_; ++a)
        for (int b = 0; b < m_; ++b) U_[(size_t(i) * m_ + a) * m_ + b] = u(a, b);
    }
    K_.resize(N_);
    Kh_.resize(N_);
    for (int i = 0; i < N_; ++i) {
      double w = dt * e2 * grid.q[i] * grid.q[i] / 2;
      K_[i] = std::polar(1.0 / N_, -w);
      Kh_[i] = std::polar(1.0 / N_, -w / 2);
    }
  }

  void advance(int steps) override {
    if (steps <= 0) return;
    for (int c = 0; c < m_; ++c) {
      fftw_execute(plans_[c]->fwd);
      mul(psi_[c], Kh_);
    }
    std::vector<cplx> v(m_);
    for (int s = 0; s < steps; ++s) {
      for (int c = 0; c < m_; ++c) fftw_execute(plans_[c]->bwd);
      for (int i = 0; i < N_; ++i) {
        const cplx* u = &U_[size_t(i) * m_ * m_];
        if (m_ == 2) {
          cplx a = psi_[0][i], b = psi_[1][i];
          psi_[0][i] = u[0] * a + u[1] * b;
          psi_[1][i] = u[2] * a + u[3] * b;
        } else {
          for (int a = 0; a < m_; ++a) {
            v[a] = 0;
            for (int b = 0; b < m_; ++b) v[a] += u[a * m_ + b] * psi_[b][i];
          }
          for (int a = 0; a < m_; ++a) psi_[a][i] = v[a];
        }
      }
      for (int c = 0; c < m_; ++c) {
        fftw_execute(plans_[c]->fwd);
        mul(psi_[c], s + 1 < steps ? K_ : Kh_);
      }
    }
    for (int c = 0; c < m_; ++c) fftw_execute(plans_[c]->bwd);
    t_ += steps * dt_;
  }

  WaveField field() const override { return WaveField{psi_, t_, eps_}; }

  std::vector<std::vector<cplx>> levels() const override {
    std::vector<std::vector<cplx>> out(m_, std::vector<cplx>(N_, 0.0));
    for (int j = 0; j < m_; ++j)
      for (int c = 0; c < m_; ++c)
        for (int i = 0; i < N_; ++i) out[j][i] += std::conj(frame_[j][c][i]) * psi_[c][i];
    return out;
  }
  const Frame& frame() const override { return frame_; }
  double time() const override { return t_; }
  double dt() const override { return dt_; }

 private:
  static void mul(std::vector<cplx>& a, const std::vector<cplx>& k) {
    for (size_t i = 0; i < a.size(); ++i) a[i] *= k[i];
  }
  int m_, N_;
  double t_, dt_, eps_;
  std::vector<std::vector<cplx>> psi_;
  std::vector<std::unique_ptr<FftwPlan>> plans_;
  std::vector<cplx> U_, K_, Kh_;
  Frame frame_;
};

// Real 2x2 models in double-double; h, frames and multipliers come from quad precision.
class DDPropagator : public Propagator {
 public:
  DDPropagator(const ElectronicModel& model, double delta, const SimulationGrid& grid, double t0, double eps,
               double dt)
      : N_(grid.N), t_(t0), dt_(dt), eps_(eps), fft_(grid.N) {
    if (model.dim != 2 || !model.fpq) throw Error("NoQuadModel", model.name + " has no quad-precision form");
    quad e2 = quad(eps) * eps, phi = quad(dt) / e2;
    u_.resize(N_);
    v1_.resize(N_);
    v2_.resize(N_);
    frame_.assign(2, std::vector<std::vector<cplx>>(2, std::vector<cplx>(N_)));
    double prev = 0;
    for (int i = 0; i < N_; ++i) {
      auto [f, p, q] = model.fpq(quad(grid.x[i]), delta);
      quad s = sqrtq(p * p + q * q) / 2;
      quad c = cosq(phi * s), sn = s > 0 ? sinq(phi * s) / (2 * s) : phi / 2;
      quad cf = cosq(phi * f), sf = -sinq(phi * f);
      auto mulph = [&](quad re, quad im) { return dd::cdd_quad(cf * re - sf * im, cf * im + sf * re); };
      u_[i] = {mulph(c, -sn * p), mulph(0, -sn * q), mulph(c, sn * p)};
      // continuous branch of 2 theta = atan2(q, p)
      quad th2 = atan2q(q, p);
      double d = double(th2) - prev;
      th2 -= 8 * atanq(quad(1)) * quad(std::round(d / (2 * pi)));
      prev = double(th2);
      quad th = th2 / 2, cs = cosq(th), ss = sinq(th);
      v1_[i] = {dd::from_quad(-ss), dd::from_quad(cs)};
      v2_[i] = {dd::from_quad(cs), dd::from_quad(ss)};
      frame_[0][0][i] = double(-ss);
      frame_[0][1][i] = double(cs);
      frame_[1][0][i] = double(cs);
      frame_[1][1][i] = double(ss);
    }
    K_.resize(N_);
    Kh_.resize(N_);
    quad inv = quad(1) / N_, box = quad(grid.x_max) - quad(grid.x_min), two_pi = 8 * atanq(quad(1));
    for (int i = 0; i < N_; ++i) {
      // wavenumbers rounded to double would add mode-dependent phase noise
      quad qq = two_pi * quad(i < N_ / 2 ? i : i - N_) / box;
      quad w = quad(dt) * e2 * qq * qq / 2;
      K_[i] = dd::cdd_quad(inv * cosq(w), -inv * sinq(w));
      Kh_[i] = dd::cdd_quad(inv * cosq(w / 2), -inv * sinq(w / 2));
    }
    psi_.assign(2, std::vector<dd::cdd>(N_));
  }

  void set_field(const WaveField& f) {
    for (int c = 0; c < 2; ++c)
      for (int i = 0; i < N_; ++i) psi_[c][i] = dd::cdd_from(f.psi[c][i]);
  }
  void set_adiabatic(const std::vector<qcplx>& env, int j) {
    const auto& v = j == 1 ? v1_ : v2_;
    for (int i = 0; i < N_; ++i) {
      dd::cdd e = dd::cdd_quad(env[i][0], env[i][1]);
      psi_[0][i] = {e.re * v[i][0], e.im * v[i][0]};
      psi_[1][i] = {e.re * v[i][1], e.im * v[i][1]};
    }
  }

  void advance(int steps) override {
    if (steps <= 0) return;
    for (auto& c : psi_) {
      fft_.run(c, -1);
      mul(c, Kh_);
    }
    for (int s = 0; s < steps; ++s) {
      for (auto& c : psi_) fft_.run(c, +1);
      for (int i = 0; i < N_; ++i) {
        const auto& u = u_[i];
        dd::cdd a = psi_[0][i], b = psi_[1][i];
        psi_[0][i] = u[0] * a + u[1] * b;
        psi_[1][i] = u[1] * a + u[2] * b;
      }
      for (auto& c : psi_) {
        fft_.run(c, -1);
        mul(c, s + 1 < steps ? K_ : Kh_);
      }
    }
    for (auto& c : psi_) fft_.run(c, +1);
    t_ += steps * dt_;
  }

  WaveField field() const override {
    WaveField f;
    f.t = t_;
    f.eps = eps_;
    f.psi.assign(2, std::vector<cplx>(N_));
    for (int c = 0; c < 2; ++c)
      for (int i = 0; i < N_; ++i) f.psi[c][i] = dd::to_complex(psi_[c][i]);
    return f;
  }

  std::vector<std::vector<cplx>> levels() const override {
    std::vector<std::vector<cplx>> out(2, std::vector<cplx>(N_));
    for (int i = 0; i < N_; ++i) {
      for (int j = 0; j < 2; ++j) {
        const auto& v = j == 0 ? v1_[i] : v2_[i];
        dd::cdd a = psi_[0][i], b = psi_[1][i];
        dd::dd re = v[0] * a.re + v[1] * b.re, im = v[0] * a.im + v[1] * b.im;
        out[j][i] = dd::to_complex({re, im});
      }
    }
    return out;
  }
  const Frame& frame() const override { return frame_; }
  double time() const override { return t_; }
  double dt() const override { return dt_; }

 private:
  static void mul(std::vector<dd::cdd>& a, const std::vector<dd::cdd>& k) {
    for (size_t i = 0; i < a.size(); ++i) a[i] = a[i] * k[i];
  }
  int N_;
  double t_, dt_, eps_;
  dd::FFT fft_;
  std::vector<std::array<dd::cdd, 3>> u_;  // u11, u12 = u21, u22
  std::vector<std::array<dd::dd, 2>> v1_, v2_;
  std::vector<dd::cdd> K_, Kh_;
  std::vector<std::vector<dd::cdd>> psi_;
  Frame frame_;
};

}  // namespace

std::unique_ptr<Propagator> make_propagator(const ElectronicModel& model, double delta, const SimulationGrid& grid,
                                            const WaveField& init, double dt, Precision precision) {
  if (precision == Precision::Double) return std::make_unique<DoublePropagator>(model, delta, grid, init, dt);
  auto p = std::make_unique<DDPropagator>(model, delta, grid, init.t, init.eps, dt);
  p->set_field(init);
  return p;
}

std::unique_ptr<Propagator> make_adiabatic_propagator(const ElectronicModel& model, double delta,
                                                      const SimulationGrid& grid, const std::vector<qcplx>& envelope,
                                                      int j, double t0, double eps, double dt, Precision precision) {
  if (j < 1 || j > model.dim) throw Error("BadLevel", "level index out of range");
  if (precision == Precision::DoubleDouble) {
    auto p = std::make_unique<DDPropagator>(model, delta, grid, t0, eps, dt);
    p->set_adiabatic(envelope, j);
    return p;
  }
  Frame fr = double_frame(model, delta, grid);
  WaveField f;
  f.t = t0;
  f.eps = eps;
  f.psi.assign(model.dim, std::vector<cplx>(grid.N));
  for (int c = 0; c < model.dim; ++c)
    for (int i = 0; i < grid.N; ++i)
      f.psi[c][i] = cplx(double(envelope[i][0]), double(envelope[i][1])) * fr[j - 1][c][i];
  return std::make_unique<DoublePropagator>(model, delta, grid, f, dt);
}

WaveField step(const WaveField& f, const ElectronicModel& model, double delta, const SimulationGrid& grid, double dt) {
  DoublePropagator p(model, delta, grid, f, dt);
  p.advance(1);
  return p.field();
}

double norm2(const WaveField& f, const SimulationGrid& grid) {
  double s = 0;
  for (const auto& c : f.psi)
    for (const auto& v : c) s += std::norm(v);
  return s * grid.dx;
}

double energy(const WaveField& f, const ElectronicModel& model, double delta, const SimulationGrid& grid) {
  double e2 = f.eps * f.eps, kin = 0, pot = 0;
  int m = static_cast<int>(f.psi.size());
  for (int c = 0; c < m; ++c) {
    std::vector<cplx> a = f.psi[c];
    fft_inplace(a, -1);
    for (int i = 0; i < grid.N; ++i) kin += grid.q[i] * grid.q[i] * std::norm(a[i]);
  }
  kin *= 0.5 * e2 * e2 * grid.dx / grid.N;
  CVec v(m);
  for (int i = 0; i < grid.N; ++i) {
    for (int c = 0; c < m; ++c) v[c] = f.psi[c][i];
    pot += (v.adjoint() * model.h(cplx(grid.x[i], 0.0), delta) * v)(0, 0).real();
  }
  return kin + pot * grid.dx;
}

double boundary_mass(const WaveField& f, const SimulationGrid& grid, double fraction) {
  int w = std::max(1, static_cast<int>(fraction * grid.N));
  double s = 0;
  for (const auto& c : f.psi)
    for (int i = 0; i < grid.N; ++i)
      if (i < w || i >= grid.N - w) s += std::norm(c[i]);
  return s * grid.dx;
}

double high_frequency_mass(const WaveField& f, const SimulationGrid& grid) {
  double qmax = pi / grid.dx, hi = 0, all = 0;
  for (const auto& c : f.psi) {
    std::vector<cplx> a = c;
    fft_inplace(a, -1);
    for (int i = 0; i < grid.N; ++i) {
      double w = std::norm(a[i]);
      all += w;
      if (std::abs(grid.q[i]) > 0.9 * qmax) hi += w;
    }
  }
  return all > 0 ? hi / all : 0.0;
}

namespace {

// |FFT c|^2 as a density in k = eps^2 q on the sorted grid, normalised so sum rho dk = sum |c|^2 dx
void momentum_density(const std::vector<cplx>& c, const SimulationGrid& grid, double eps, std::vector<double>& k,
                      std::vector<double>& rho) {
  int N = grid.N;
  std::vector<cplx> a = c;
  fft_inplace(a, -1);
  double dk = eps * eps * 2 * pi / (grid.x_max - grid.x_min);
  k.resize(N);
  rho.resize(N);
  for (int i = 0; i < N; ++i) {
    int src = (i + N / 2) % N;
    k[i] = eps * eps * grid.q[src];
    rho[i] = std::norm(a[src]) * grid.dx / (N * dk);
  }
}

}  // namespace

LevelObservables project_levels(const std::vector<std::vector<cplx>>& c, const SimulationGrid& grid, double eps,
                                double t) {
  LevelObservables o;
  o.t = t;
  o.eps = eps;
  o.x = grid.x;
  for (const auto& cj : c) {
    LevelData d;
    d.density_x.resize(grid.N);
    double mx = 0;
    for (int i = 0; i < grid.N; ++i) {
      d.density_x[i] = std::norm(cj[i]);
      d.mass += d.density_x[i] * grid.dx;
      mx += grid.x[i] * d.density_x[i] * grid.dx;
    }
    d.mean_x = d.mass > 0 ? mx / d.mass : 0.0;
    momentum_density(cj, grid, eps, o.k, d.density_k);
    double dk = o.k[1] - o.k[0], s0 = 0, s1 = 0, s2 = 0;
    for (size_t i = 0; i < o.k.size(); ++i) {
      s0 += d.density_k[i] * dk;
      s1 += o.k[i] * d.density_k[i] * dk;
    }
    d.mean_k = s0 > 0 ? s1 / s0 : 0.0;
    for (size_t i = 0; i < o.k.size(); ++i) s2 += std::pow(o.k[i] - d.mean_k, 2) * d.density_k[i] * dk;
    d.var_k = s0 > 0 ? s2 / s0 : 0.0;
    o.total += d.mass;
    o.levels.push_back(std::move(d));
  }
  return o;
}

LevelObservables project_levels(const Propagator& p, const SimulationGrid& grid) {
  return project_levels(p.levels(), grid, p.field().eps, p.time());
}

GaussianFit fit_density(const std::vector<double>& k, const std::vector<double>& rho) {
  GaussianFit f;
  double dk = k[1] - k[0], s0 = 0, s1 = 0;
  for (size_t i = 0; i < k.size(); ++i) {
    s0 += rho[i] * dk;
    s1 += k[i] * rho[i] * dk;
  }
  if (!(s0 > 0)) return f;
  double mu = s1 / s0, s2 = 0, s4 = 0;
  for (size_t i = 0; i < k.size(); ++i) {
    double d = k[i] - mu;
    s2 += d * d * rho[i] * dk / s0;
    s4 += d * d * d * d * rho[i] * dk / s0;
  }
  f.center = mu;
  f.width = std::sqrt(s2);
  f.excess_kurtosis = s4 / (s2 * s2) - 3;
  double r = 0;
  for (size_t i = 0; i < k.size(); ++i) {
    double g = std::exp(-(k[i] - mu) * (k[i] - mu) / (2 * s2)) / std::sqrt(2 * pi * s2);
    r += std::abs(rho[i] / s0 - g) * dk;
  }
  f.residual = r;
  return f;
}

GaussianFit gaussian_fit(const LevelObservables& obs, int j) {
  const LevelData& d = obs.levels.at(j - 1);
  if (d.mass < 1e-14) throw Error("MassTooSmall", "level mass below 1e-14");
  return fit_density(obs.k, d.density_k);
}

WindowStats window_stats(const std::vector<cplx>& c, const SimulationGrid& grid, double eps, double k_lo,
                         double k_hi, double x_split, double mask_width) {
  std::vector<cplx> m = c;
  if (std::isfinite(x_split))
    for (int i = 0; i < grid.N; ++i) m[i] *= 0.5 * (1 + std::tanh((grid.x[i] - x_split) / mask_width));
  std::vector<double> k, rho;
  momentum_density(m, grid, eps, k, rho);
  WindowStats w;
  double dk = k[1] - k[0], s1 = 0, s2 = 0;
  for (size_t i = 0; i < k.size(); ++i) {
    if (k[i] <= k_lo || k[i] >= k_hi) continue;
    w.k.push_back(k[i]);
    w.density_k.push_back(rho[i]);
    w.mass += rho[i] * dk;
    s1 += k[i] * rho[i] * dk;
  }
  if (w.mass > 0) {
    w.mean_k = s1 / w.mass;
    for (size_t i = 0; i < w.k.size(); ++i) s2 += std::pow(w.k[i] - w.mean_k, 2) * w.density_k[i] * dk;
    w.var_k = s2 / w.mass;
    if (w.k.size() > 2) w.fit = fit_density(w.k, w.density_k);
  }
  double mx = 0, mm = 0;
  for (int i = 0; i < grid.N; ++i) {
    mx += grid.x[i] * std::norm(m[i]);
    mm += std::norm(m[i]);
  }
  w.mean_x = mm > 0 ? mx / mm : 0.0;
  return w;
}

}  // namespace molz
