#pragma once
// Double-double arithmetic (about 32 significant digits) and a radix-2 FFT over it.
#include <cmath>
#include <complex>
#include <utility>
#include <vector>

#include <quadmath.h>

namespace molz::dd {

struct dd {
  double hi = 0, lo = 0;
};

inline dd two_sum(double a, double b) {
  double s = a + b, bb = s - a;
  return {s, (a - (s - bb)) + (b - bb)};
}
inline dd quick_two_sum(double a, double b) {
  double s = a + b;
  return {s, b - (s - a)};
}
inline dd operator+(dd a, dd b) {
  dd s = two_sum(a.hi, b.hi), t = two_sum(a.lo, b.lo);
  s.lo += t.hi;
  s = quick_two_sum(s.hi, s.lo);
  s.lo += t.lo;
  return quick_two_sum(s.hi, s.lo);
}
inline dd operator-(dd a) { return {-a.hi, -a.lo}; }
inline dd operator-(dd a, dd b) { return a + (-b); }
inline dd operator*(dd a, dd b) {
  double p = a.hi * b.hi, e = std::fma(a.hi, b.hi, -p);
  e += a.hi * b.lo + a.lo * b.hi;
  return quick_two_sum(p, e);
}
inline dd from_quad(__float128 q) {
  double hi = double(q);
  return {hi, double(q - hi)};
}
inline __float128 to_quad(dd a) { return __float128(a.hi) + __float128(a.lo); }

struct cdd {
  dd re, im;
};
inline cdd operator+(cdd a, cdd b) { return {a.re + b.re, a.im + b.im}; }
inline cdd operator-(cdd a, cdd b) { return {a.re - b.re, a.im - b.im}; }
inline cdd operator*(cdd a, cdd b) { return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re}; }
inline cdd cdd_from(std::complex<double> z) { return {{z.real(), 0}, {z.imag(), 0}}; }
inline cdd cdd_quad(__float128 re, __float128 im) { return {from_quad(re), from_quad(im)}; }
inline std::complex<double> to_complex(cdd a) { return {a.re.hi + a.re.lo, a.im.hi + a.im.lo}; }

// In-place unnormalised transform; sign -1 forward, +1 backward.
class FFT {
 public:
  explicit FFT(size_t n) : n_(n), tw_(n / 2) {
    const __float128 two_pi = 8 * atanq(__float128(1));
    for (size_t k = 0; k < n / 2; ++k) {
      __float128 th = two_pi * __float128(k) / __float128(n);
      tw_[k] = cdd_quad(cosq(th), -sinq(th));
    }
  }
  void run(std::vector<cdd>& a, int sign) const {
    for (size_t i = 1, j = 0; i < n_; ++i) {
      size_t bit = n_ >> 1;
      for (; j & bit; bit >>= 1) j ^= bit;
      j ^= bit;
      if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n_; len <<= 1) {
      size_t step = n_ / len, half = len / 2;
      for (size_t i = 0; i < n_; i += len)
        for (size_t k = 0; k < half; ++k) {
          cdd w = tw_[k * step];
          if (sign > 0) w.im = -w.im;
          cdd u = a[i + k], v = a[i + k + half] * w;
          a[i + k] = u + v;
          a[i + k + half] = u - v;
        }
    }
  }

 private:
  size_t n_;
  std::vector<cdd> tw_;
};

}  // namespace molz::dd
