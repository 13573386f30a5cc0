#include <doctest.h>

#include "molz/model.hpp"

using namespace molz;

TEST_CASE("tanh crossing sits at i pi/4") {
  // 1 + tanh(z)^2 = 0  <=>  tanh z = +-i
  CrossingPoint cp = find_complex_crossing(tanh_model(), 2, 1, 0.0, {-0.5, 0.5, 0.2, 1.2});
  CHECK(std::abs(cp.z0 - cplx(0, pi / 4)) < 1e-10);
  CHECK(cp.residual < 1e-12);
}

TEST_CASE("saturated LZ crossing has a closed form") {
  // x_sat tanh(z / x_sat) = i delta  <=>  z = i x_sat atan(delta / x_sat)
  for (double d : {0.25, 0.1}) {
    CrossingPoint cp = find_complex_crossing(lz_model(1.5), 2, 1, d, {-1, 1, 1e-3, 1.5});
    CHECK(std::abs(cp.z0 - cplx(0, 1.5 * std::atan(d / 1.5))) < 1e-10);
  }
}

TEST_CASE("levels match closed forms") {
  ElectronicModel m = tanh_model();
  for (double x : {-3.0, -0.4, 0.0, 1.1}) {
    double e = 0.5 * std::sqrt(1 + std::tanh(x) * std::tanh(x));
    CHECK(level_energy(m, 1, x, 0) == doctest::Approx(-e).epsilon(1e-14));
    CHECK(level_energy(m, 2, x, 0) == doctest::Approx(e).epsilon(1e-14));
  }
  CHECK(level_energy(m, 2, -INFINITY, 0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
  ElectronicModel lz = lz_model();
  CHECK(level_energy(lz, 2, 0.0, 0.3) - level_energy(lz, 1, 0.0, 0.3) == doctest::Approx(0.3).epsilon(1e-14));
}

TEST_CASE("models are hermitian on the real axis and decay to their limits") {
  for (const auto& [m, d] : {std::pair{tanh_model(), 0.0}, std::pair{lz_model(1.5), 0.25}}) {
    ModelCheck c = check_model(m, d);
    CHECK(c.hermiticity < 1e-14);
    CHECK(c.min_gap > 0);
    CHECK(c.decay_violation <= 1.0);
  }
}

TEST_CASE("eigenframe is orthonormal and diagonalises h") {
  ElectronicModel m = lz_model(1.5);
  for (double x : {-2.0, 0.0, 0.7}) {
    EigenFrame f = eigenframe(m, x, 0.25);
    CMat h = m.at(x, 0.25);
    CHECK((f.phi.adjoint() * f.phi - CMat::Identity(2, 2)).norm() < 1e-14);
    CHECK((h * f.phi - f.phi * f.e.asDiagonal()).norm() < 1e-14);
  }
}

TEST_CASE("transported frame keeps <phi_j, phi_j'> = 0") {
  ElectronicModel m = tanh_model();
  std::vector<double> path;
  for (int i = 0; i <= 400; ++i) path.push_back(-2 + 0.01 * i);
  auto fr = transport_frame(m, path, 0.0);
  for (size_t i = 1; i + 1 < path.size(); i += 37)
    for (int j = 0; j < 2; ++j) {
      CVec d = (fr[i + 1].phi.col(j) - fr[i - 1].phi.col(j)) / 0.02;
      CHECK(std::abs(fr[i].phi.col(j).dot(d)) < 1e-4);
    }
}

TEST_CASE("unknown model names are rejected") {
  CHECK_THROWS_AS(make_model("nope", {}), Error);
  CHECK(make_model("constant", {{"e1", -1}, {"e2", 2}}).at(0.0, 0)(1, 1).real() == 2.0);
}
