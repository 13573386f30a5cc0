#include "molz/model.hpp"

#include <quadmath.h>

#include <algorithm>
#include <cmath>

namespace molz {

CMat ElectronicModel::at(double x, double delta) const {
  if (std::isinf(x)) {
    if (!limit) throw Error("NoLimit", name + " has no limit at infinity");
    return limit(x > 0 ? 1 : -1, delta);
  }
  return h(cplx(x, 0.0), delta);
}

static CMat sym2(cplx p, cplx q) {
  CMat m(2, 2);
  m << 0.5 * p, 0.5 * q, 0.5 * q, -0.5 * p;
  return m;
}

ElectronicModel tanh_model() {
  ElectronicModel m;
  m.name = "tanh";
  m.h = [](cplx z, double) { return sym2(1.0, std::tanh(z)); };
  m.dh = [](cplx z, double) {
    cplx t = std::tanh(z);
    return sym2(0.0, 1.0 - t * t);
  };
  m.limit = [](int side, double) { return sym2(1.0, double(side)); };
  m.fpq = [](quad x, double) { return std::array<quad, 3>{0, 1, tanhq(x)}; };
  m.nu = 8.0;  // exponential tails
  m.strip = 1.2;  // poles of tanh at i pi/2
  return m;
}

ElectronicModel h6_model(double a, double b, double c, double x_sat) {
  if (a <= 0) throw Error("BadParameter", "h6 needs a > 0");
  if (b * b - c * c / a < 0) throw Error("BadParameter", "h6 needs a b^2 >= c^2");
  ElectronicModel m;
  m.name = "h6";
  double sa = std::sqrt(a), qf = std::sqrt(b * b - c * c / a), shift = c / sa;
  auto s = [x_sat](cplx z) { return x_sat > 0 ? x_sat * std::tanh(z / x_sat) : z; };
  auto ds = [x_sat](cplx z) {
    if (x_sat <= 0) return cplx(1.0);
    cplx t = std::tanh(z / x_sat);
    return 1.0 - t * t;
  };
  m.h = [=](cplx z, double d) { return sym2(sa * s(z) + shift * d, d * qf); };
  m.dh = [=](cplx z, double) { return sym2(sa * ds(z), 0.0); };
  if (x_sat > 0) {
    m.limit = [=](int side, double d) { return sym2(side * sa * x_sat + shift * d, d * qf); };
    m.nu = 8.0;
    m.strip = 0.9 * x_sat * pi / 2;
  } else {
    m.nu = 8.0;
    m.strip = 1e3;
  }
  m.h6 = std::array<double, 3>{a, b, c};
  m.fpq = [a, b, c, x_sat](quad x, double d) {
    quad qa = a, sq = sqrtq(qa), xs = x_sat;
    quad s = x_sat > 0 ? xs * tanhq(x / xs) : x;
    return std::array<quad, 3>{0, sq * s + quad(c) / sq * d, quad(d) * sqrtq(quad(b) * b - quad(c) * c / qa)};
  };
  return m;
}

ElectronicModel lz_model(double x_sat) {
  ElectronicModel m = h6_model(1.0, 1.0, 0.0, x_sat);
  m.name = "lz";
  return m;
}

ElectronicModel constant_model(double e1, double e2) {
  ElectronicModel m;
  m.name = "constant";
  CMat c = CMat::Zero(2, 2);
  c(0, 0) = e1;
  c(1, 1) = e2;
  m.h = [c](cplx, double) { return c; };
  m.dh = [](cplx, double) { return CMat(CMat::Zero(2, 2)); };
  m.limit = [c](int, double) { return c; };
  m.fpq = [e1, e2](quad, double) { return std::array<quad, 3>{(quad(e1) + e2) / 2, quad(e1) - e2, 0}; };
  m.nu = 1e3;
  m.strip = 1e3;
  return m;
}

ElectronicModel make_model(const std::string& name, const std::map<std::string, double>& params) {
  auto get = [&](const char* k, double dflt) {
    auto it = params.find(k);
    return it == params.end() ? dflt : it->second;
  };
  if (name == "tanh") return tanh_model();
  if (name == "lz") return lz_model(get("x_sat", 0.0));
  if (name == "h6") return h6_model(get("a", 1.0), get("b", 1.0), get("c", 0.0), get("x_sat", 0.0));
  if (name == "constant") return constant_model(get("e1", -0.5), get("e2", 0.5));
  throw Error("UnknownModel", "no model named '" + name + "'");
}

TwoLevel two_level(const ElectronicModel& model, cplx z, double delta) {
  CMat h = model.h(z, delta);
  CMat d = model.dh(z, delta);
  TwoLevel t;
  cplx diff = h(0, 0) - h(1, 1), ddiff = d(0, 0) - d(1, 1);
  t.f = 0.5 * (h(0, 0) + h(1, 1));
  t.df = 0.5 * (d(0, 0) + d(1, 1));
  t.rho = diff * diff + 4.0 * h(0, 1) * h(1, 0);
  t.drho = 2.0 * diff * ddiff + 4.0 * (d(0, 1) * h(1, 0) + h(0, 1) * d(1, 0));
  return t;
}

Eigen::Vector2cd two_level_vector(const CMat& h, cplx e) {
  Eigen::Vector2cd u(h(0, 1), e - h(0, 0)), v(e - h(1, 1), h(1, 0));
  // both solve (h - e) w = 0; keep the better conditioned one
  return std::norm(u(0)) + std::norm(u(1)) >= std::norm(v(0)) + std::norm(v(1)) ? u : v;
}

static EigenFrame frame2(const CMat& h, double x) {
  EigenFrame fr;
  fr.x = x;
  double f = 0.5 * (h(0, 0).real() + h(1, 1).real());
  double d = 0.5 * (h(0, 0).real() - h(1, 1).real());
  cplx b = h(0, 1);
  double s = std::hypot(d, std::abs(b));
  fr.e = Eigen::Vector2d(f - s, f + s);
  fr.phi = CMat(2, 2);
  if (std::abs(b.imag()) <= 1e-15 * (1.0 + std::abs(b))) {
    double th = 0.5 * std::atan2(b.real(), d);
    double c = std::cos(th), sn = std::sin(th);
    fr.phi << -sn, c, c, sn;
  } else {
    double th = 0.5 * std::atan2(std::abs(b), d);
    cplx ph = b / std::abs(b);
    double c = std::cos(th), sn = std::sin(th);
    fr.phi << -ph * sn, c, c, std::conj(ph) * sn;
  }
  return fr;
}

double level_energy(const ElectronicModel& model, int j, double x, double delta) {
  CMat h = model.at(x, delta);
  if (model.dim == 2) {
    double f = 0.5 * (h(0, 0).real() + h(1, 1).real());
    double d = 0.5 * (h(0, 0).real() - h(1, 1).real());
    double s = std::hypot(d, std::abs(h(0, 1)));
    return j == 1 ? f - s : f + s;
  }
  Eigen::SelfAdjointEigenSolver<CMat> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(j - 1);
}

EigenFrame eigenframe(const ElectronicModel& model, double x, double delta, const EigenFrame* prior) {
  CMat h = model.at(x, delta);
  EigenFrame fr;
  if (model.dim == 2) {
    fr = frame2(h, x);
  } else {
    Eigen::SelfAdjointEigenSolver<CMat> es(h);
    fr.x = x;
    fr.e = es.eigenvalues();
    fr.phi = es.eigenvectors();
  }
  for (int k = 0; k + 1 < fr.e.size(); ++k)
    if (fr.e(k + 1) - fr.e(k) < 1e-12)
      throw Error("DegenerateSpectrum", "levels touch at x=" + std::to_string(x));
  if (prior) {
    for (int j = 0; j < fr.phi.cols(); ++j) {
      cplx ov = prior->phi.col(j).dot(fr.phi.col(j));
      if (std::abs(ov) > 0) fr.phi.col(j) *= std::conj(ov) / std::abs(ov);
    }
  }
  return fr;
}

std::vector<EigenFrame> transport_frame(const ElectronicModel& model, const std::vector<double>& path,
                                        double delta) {
  std::vector<EigenFrame> out;
  out.reserve(path.size());
  for (size_t k = 0; k < path.size(); ++k) {
    if (k == 0) {
      out.push_back(eigenframe(model, path[0], delta));
      continue;
    }
    EigenFrame fr = eigenframe(model, path[k], delta, &out.back());
    for (int j = 0; j < fr.phi.cols(); ++j)
      if (std::abs(out.back().phi.col(j).dot(fr.phi.col(j))) <= 0.9)
        throw Error("PathTooCoarse", "eigenvector overlap below 0.9 near x=" + std::to_string(path[k]));
    out.push_back(std::move(fr));
  }
  return out;
}

// Winding number of rho along the box boundary.
static int winding(const std::function<cplx(cplx)>& rho, const SearchBox& b) {
  std::array<cplx, 5> c{cplx(b.re_lo, b.im_lo), cplx(b.re_hi, b.im_lo), cplx(b.re_hi, b.im_hi),
                        cplx(b.re_lo, b.im_hi), cplx(b.re_lo, b.im_lo)};
  double total = 0;
  std::function<double(cplx, cplx, cplx, cplx, int)> seg = [&](cplx za, cplx zb, cplx ra, cplx rb,
                                                               int depth) -> double {
    double d = std::arg(rb / ra);
    if (std::abs(d) < pi / 8 || depth > 40) return d;
    cplx zm = 0.5 * (za + zb), rm = rho(zm);
    if (std::abs(rm) == 0) throw Error("RootOnBoundary", "discriminant vanishes on the search box edge");
    return seg(za, zm, ra, rm, depth + 1) + seg(zm, zb, rm, rb, depth + 1);
  };
  for (int s = 0; s < 4; ++s) {
    const int n = 64;
    cplx prevz = c[s], prevr = rho(prevz);
    for (int k = 1; k <= n; ++k) {
      cplx z = c[s] + (c[s + 1] - c[s]) * (double(k) / n), r = rho(z);
      if (std::abs(r) == 0 || std::abs(prevr) == 0)
        throw Error("RootOnBoundary", "discriminant vanishes on the search box edge");
      total += seg(prevz, z, prevr, r, 0);
      prevz = z;
      prevr = r;
    }
  }
  return static_cast<int>(std::lround(total / (2 * pi)));
}

CrossingPoint find_complex_crossing(const ElectronicModel& model, int j, int n, double delta,
                                    const SearchBox& box) {
  if (model.dim != 2) throw Error("Unsupported", "complex crossing search needs a 2x2 model");
  if (std::abs(j - n) != 1) throw Error("BadLevels", "levels must be adjacent");
  auto rho = [&](cplx z) { return two_level(model, z, delta).rho; };
  int count = winding(rho, box);
  if (count <= 0) throw Error("NoRootInBox", "discriminant has no zero in the search box");

  double scale = std::max(box.re_hi - box.re_lo, box.im_hi - box.im_lo);
  auto inside = [&](cplx z) {
    double tol = 1e-9 * scale;
    return z.real() >= box.re_lo - tol && z.real() <= box.re_hi + tol && z.imag() >= box.im_lo - tol &&
           z.imag() <= box.im_hi + tol;
  };
  std::vector<cplx> roots;
  const int g = 5;
  for (int a = 0; a < g; ++a)
    for (int bb = 0; bb < g; ++bb) {
      cplx z(box.re_lo + (box.re_hi - box.re_lo) * (a + 0.5) / g,
             box.im_lo + (box.im_hi - box.im_lo) * (bb + 0.5) / g);
      bool ok = false;
      for (int it = 0; it < 300; ++it) {
        TwoLevel t = two_level(model, z, delta);
        if (t.rho == 0.0) {
          ok = true;
          break;
        }
        if (t.drho == 0.0) break;
        cplx step = t.rho / t.drho;
        z -= step;
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) break;
        if (std::abs(step) < 1e-15 * (1.0 + std::abs(z))) {
          ok = true;
          break;
        }
      }
      if (!ok || !inside(z)) continue;
      bool seen = false;
      for (cplx r : roots)
        if (std::abs(r - z) < 1e-6 * scale) seen = true;
      if (!seen) roots.push_back(z);
    }
  if (roots.empty()) throw Error("NoRootInBox", "root search did not converge inside the box");
  if (roots.size() > 1) throw Error("MultipleRoots", "more than one crossing in the box; shrink it");
  cplx z = roots[0];
  // a zero of multiplicity `count` (e.g. the real crossing at delta = 0)
  for (int it = 0; it < 5; ++it) {
    TwoLevel t = two_level(model, z, delta);
    if (t.rho == 0.0 || t.drho == 0.0) break;
    z -= double(count) * t.rho / t.drho;
  }
  if (std::abs(z.imag()) < 1e-12 * scale) z = cplx(z.real(), 0.0);
  CrossingPoint cp;
  cp.z0 = z;
  cp.j = j;
  cp.n = n;
  cp.residual = std::abs(rho(z));
  return cp;
}

ModelCheck check_model(const ElectronicModel& model, double delta, double L, int points) {
  ModelCheck mc;
  mc.min_gap = 1e300;
  std::vector<double> xs = linspace(-2 * L, 2 * L, 2 * points);
  CMat hp, hm;
  if (model.has_limits()) {
    hp = model.limit(1, delta);
    hm = model.limit(-1, delta);
  }
  std::vector<double> ratio(xs.size(), 0.0);
  for (size_t k = 0; k < xs.size(); ++k) {
    double x = xs[k];
    CMat h = model.at(x, delta);
    mc.hermiticity = std::max(mc.hermiticity, (h - h.adjoint()).cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<CMat> es(h);
    for (int i = 0; i + 1 < model.dim; ++i)
      mc.min_gap = std::min(mc.min_gap, es.eigenvalues()(i + 1) - es.eigenvalues()(i));
    if (model.has_limits()) {
      double dev = (h - (x > 0 ? hp : hm)).norm();
      ratio[k] = dev * std::pow(1.0 + x * x, 0.5 * (2.0 + model.nu));
    }
  }
  if (model.has_limits()) {
    for (size_t k = 0; k < xs.size(); ++k)
      if (std::abs(xs[k]) <= L) mc.decay_constant = std::max(mc.decay_constant, ratio[k]);
    for (size_t k = 0; k < xs.size(); ++k)
      if (std::abs(xs[k]) > L && mc.decay_constant > 0)
        mc.decay_violation = std::max(mc.decay_violation, ratio[k] / mc.decay_constant);
  }
  return mc;
}

}  // namespace molz
