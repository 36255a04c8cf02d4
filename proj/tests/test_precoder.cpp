#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/LU>

#include "doctest.h"
#include "xprecode/channel.hpp"
#include "xprecode/constellation.hpp"
#include "xprecode/errors.hpp"
#include "xprecode/mi.hpp"
#include "xprecode/pairing.hpp"
#include "xprecode/precoder.hpp"

using namespace xprecode;

namespace {
constexpr double kDeg = M_PI / 180.0;
}

TEST_CASE("build_generator places one rotation per pair") {
  const auto pairing = x_pairing(6);  // (1,6) (2,5) (3,4)
  const std::vector<double> angles = {10.0 * kDeg, 25.0 * kDeg, 40.0 * kDeg};
  const auto gen = build_generator(pairing, angles);

  REQUIRE(gen.G.rows() == 6);
  CHECK((gen.G * gen.G.transpose() - Eigen::MatrixXd::Identity(6, 6)).norm() <
        1e-12);
  CHECK(gen.G.determinant() == doctest::Approx(1.0).epsilon(1e-12));

  Eigen::MatrixXd mask = Eigen::MatrixXd::Zero(6, 6);
  for (std::size_t k = 0; k < 3; ++k) {
    const auto [i, j] = pairing.pairs[k];
    const double c = std::cos(angles[k]), s = std::sin(angles[k]);
    CHECK(gen.G(i - 1, i - 1) == doctest::Approx(c));
    CHECK(gen.G(i - 1, j - 1) == doctest::Approx(s));
    CHECK(gen.G(j - 1, i - 1) == doctest::Approx(-s));
    CHECK(gen.G(j - 1, j - 1) == doctest::Approx(c));
    mask(i - 1, i - 1) = mask(i - 1, j - 1) = 1.0;
    mask(j - 1, i - 1) = mask(j - 1, j - 1) = 1.0;
  }
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 6; ++c)
      if (mask(r, c) == 0.0) CHECK(gen.G(r, c) == 0.0);
}

TEST_CASE("build_generator with zero angles is the identity") {
  const auto gen = build_generator(x_pairing(4), {0.0, 0.0});
  CHECK((gen.G - Eigen::MatrixXd::Identity(4, 4)).norm() == 0.0);
}

TEST_CASE("build_generator input validation") {
  CHECK_THROWS_AS(build_generator(x_pairing(4), {0.1}), ConfigError);
  Pairing bad;
  bad.pairs = {{1, 2}, {2, 3}};
  CHECK_THROWS_AS(build_generator(bad, {0.1, 0.2}), ConstraintError);
}

TEST_CASE("build_precoder realizes the planned diagonal powers") {
  const auto H = random_mimo(4, 4, 77);
  const auto dec = svd(H);
  const auto pairing = x_pairing(4);
  std::vector<PairParams> params(2);
  params[0] = {30.0 * kDeg, 0.8, 0.7};
  params[1] = {15.0 * kDeg, 0.55, 0.3};

  const auto pre = build_precoder(dec, pairing, params);
  CHECK(pre.T.rows() == 4);
  CHECK(pre.T.cols() == 4);
  CHECK(std::abs(pre.T.norm() - 1.0) < 1e-12);
  CHECK(pre.p.squaredNorm() == doctest::Approx(1.0).epsilon(1e-12));

  CHECK(pre.p(0) * pre.p(0) == doctest::Approx(0.7 * 0.8).epsilon(1e-12));
  CHECK(pre.p(3) * pre.p(3) == doctest::Approx(0.7 * 0.2).epsilon(1e-12));
  CHECK(pre.p(1) * pre.p(1) == doctest::Approx(0.3 * 0.55).epsilon(1e-12));
  CHECK(pre.p(2) * pre.p(2) == doctest::Approx(0.3 * 0.45).epsilon(1e-12));

  CHECK(equivalent_model_residual(pre, dec, H) < 1e-9);
}

TEST_CASE("build_precoder input validation") {
  const auto H = random_mimo(4, 4, 78);
  const auto dec = svd(H);
  const auto pairing = x_pairing(4);

  std::vector<PairParams> params(2);
  params[0] = {0.1, 0.5, 0.5};
  params[1] = {0.1, 0.5, 0.5};
  CHECK_NOTHROW(build_precoder(dec, pairing, params));

  params[1].f = 1.2;
  CHECK_THROWS_AS(build_precoder(dec, pairing, params), DomainError);
  params[1].f = 0.5;
  params[1].pbar2 = -0.1;
  CHECK_THROWS_AS(build_precoder(dec, pairing, params), DomainError);
  params[1].pbar2 = 0.6;  // shares sum to 1.1
  CHECK_THROWS_AS(build_precoder(dec, pairing, params), ConstraintError);

  CHECK_THROWS_AS(build_precoder(dec, pairing, {params[0]}), ConfigError);
}

TEST_CASE("the equivalent diagonal model carries the full-channel MI") {
  // End-to-end: MC through y = sqrt(P) H T u + w must match the sum of
  // per-pair quadrature terms computed from (lambda, theta, f, pbar2).
  const auto H = random_mimo(4, 4, 501);
  const auto dec = svd(H);
  const auto pairing = x_pairing(4);
  std::vector<PairParams> params(2);
  params[0] = {20.0 * kDeg, 0.75, 0.65};
  params[1] = {35.0 * kDeg, 0.6, 0.35};
  const double P = 25.0;
  const auto c = make_qam(4);

  const auto quad = system_mi(dec, pairing, params, power_alphabet(c, 4), P);

  const auto pre = build_precoder(dec, pairing, params);
  const auto ch = MixtureChannel::from_linear_map(
      H * pre.T, power_alphabet(c, 4), std::sqrt(P));
  const auto mc = mi_mixture_mc(ch, 200000, 31);

  CHECK(std::abs(mc.value - quad.value) < 4.0 * mc.std_error + 1e-3);
}
