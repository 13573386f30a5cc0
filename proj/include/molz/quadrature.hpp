#pragma once
#include <array>

#include <boost/math/quadrature/gauss.hpp>

namespace molz {

// Full 20-point Gauss-Legendre rule on [-1, 1], nodes ascending.
struct GaussRule {
  static constexpr int n = 20;
  std::array<double, n> x{}, w{};
  GaussRule() {
    using G = boost::math::quadrature::gauss<double, n>;
    const auto& ab = G::abscissa();
    const auto& wt = G::weights();
    int h = n / 2;
    for (int i = 0; i < h; ++i) {
      x[h - 1 - i] = -ab[i];
      x[h + i] = ab[i];
      w[h - 1 - i] = wt[i];
      w[h + i] = wt[i];
    }
  }
};

inline const GaussRule& gauss_rule() {
  static const GaussRule r;
  return r;
}

}  // namespace molz
