#pragma once
#include <array>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace molz {

using cplx = std::complex<double>;
using quad = __float128;
using qcplx = std::array<quad, 2>;  // (re, im) in quad precision
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr cplx I{0.0, 1.0};

// Every failure carries a short machine-readable kind such as "NoRootInBox".
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& msg)
      : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

inline std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = (n == 1) ? a : a + (b - a) * i / (n - 1);
  return v;
}

}  // namespace molz
