#include <cmath>
#include <complex>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "xprecode/channel.hpp"
#include "xprecode/constellation.hpp"
#include "xprecode/errors.hpp"
#include "xprecode/mi.hpp"
#include "xprecode/pairing.hpp"

using namespace xprecode;
using cd = std::complex<double>;

namespace {

QuadOptions tight_quad() {
  QuadOptions q;
  q.base_nodes = 64;
  q.tol_bits = 1e-9;
  q.max_nodes = 512;
  return q;
}

double snr_amp(double snr_db) { return std::sqrt(std::pow(10.0, snr_db / 10.0)); }

}  // namespace

TEST_CASE("mi_1d reproduces independently computed QAM values") {
  // Reference values from a 201-node Gauss-Hermite evaluation of the PAM
  // mixture entropy, computed with a separate numpy implementation.
  struct Ref {
    int order;
    double snr_db;
    double mi;
  };
  const Ref refs[] = {
      {4, 17.0, 1.999999999994},  {4, 10.0, 1.993512659219},
      {16, 17.0, 3.990392100118}, {64, 20.0, 5.801461796909},
      {4, 0.0, 0.971888308266},
  };
  for (const auto& r : refs) {
    const auto c = make_qam(r.order);
    const auto est = mi_1d(snr_amp(r.snr_db), c, tight_quad());
    CHECK(std::abs(est.value - r.mi) < 1e-8);
    CHECK(est.method == MiMethod::quadrature);
    CHECK(est.samples_used > 0);
  }
}

TEST_CASE("mi_1d limits and monotonicity") {
  const auto c = make_qam(16);
  CHECK(std::abs(mi_1d(0.0, c).value) < 1e-12);
  CHECK(mi_1d(1e4, c).value == doctest::Approx(c.max_bits()).epsilon(1e-9));

  double prev = -1.0;
  for (const double snr_db : {-10.0, 0.0, 10.0, 20.0}) {
    const double v = mi_1d(snr_amp(snr_db), c).value;
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("Monte Carlo and quadrature agree on a scalar channel") {
  const auto c = make_qam(16);
  const double amp = snr_amp(12.0);
  const auto quad = mi_1d(amp, c, tight_quad());

  Eigen::MatrixXcd M(1, 1);
  M << 1.0;
  const auto ch = MixtureChannel::from_linear_map(M, power_alphabet(c, 1), amp);
  const auto mc = mi_mixture_mc(ch, 200000, 99);
  CHECK(mc.method == MiMethod::monte_carlo);
  CHECK(mc.samples_used == 200000);
  CHECK(mc.std_error > 0.0);
  CHECK(std::abs(mc.value - quad.value) < 4.0 * mc.std_error);
}

TEST_CASE("pair MI decouples at theta = 0") {
  const PairChannel pc(0.9, 0.3);
  const double P = 12.0, f = 0.55;
  const auto alph = product(make_qam(16), make_qam(16));

  EvalBudget b;
  b.quad = tight_quad();
  const auto joint = pair_mi(pc, P, 1.0, f, 0.0, alph, b);
  const auto s = mi_1d(pc.lambda_strong * std::sqrt(f * P), alph.components[0],
                       tight_quad());
  const auto w = mi_1d(pc.lambda_weak * std::sqrt((1.0 - f) * P),
                       alph.components[1], tight_quad());
  CHECK(std::abs(joint.value - (s.value + w.value)) < 1e-5);
}

TEST_CASE("pair MI is independent of theta for equal gains") {
  const double s = 1.0 / std::sqrt(2.0);
  const PairChannel pc(s, s);
  const auto alph = product(make_qam(4), make_qam(4));
  const double P = 10.0;

  double lo = 1e300, hi = -1e300;
  for (const double deg : {0.0, 10.0, 22.5, 30.0, 45.0}) {
    const double v = pair_mi(pc, P, 1.0, 0.5, deg * M_PI / 180.0, alph).value;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(hi - lo < 1e-4);
}

TEST_CASE("split path agrees with the generic complex mixture path") {
  // Same channel three ways: the internal real-split evaluation, a generic
  // complex-mean quadrature, and the latter after a unitary rotation of the
  // observation space.  All must give one number.
  const PairChannel pc(0.9, 0.44);
  const double P = 8.0, f = 0.6, theta = 25.0 * M_PI / 180.0;
  const auto alph = product(make_qam(4), make_qam(4));

  EvalBudget ba;
  ba.quad = tight_quad();
  const double route_a = pair_mi(pc, P, 1.0, f, theta, alph, ba).value;

  const Eigen::Vector2d lf(pc.lambda_strong * std::sqrt(f),
                           pc.lambda_weak * std::sqrt(1.0 - f));
  const Eigen::Matrix2d B = lf.asDiagonal() * rotation2(theta);
  const auto ch = MixtureChannel::from_linear_map(
      B.cast<cd>(), alph, std::sqrt(P));
  CHECK(ch.split);

  QuadOptions qg;
  qg.base_nodes = 24;
  qg.tol_bits = 1e-5;
  qg.max_nodes = 48;

  // force the generic path with a complex unitary that kills the real split
  Eigen::Matrix2cd Ufix;
  Ufix << cd(0.6, 0.0), cd(0.0, 0.8), cd(0.0, -0.8), cd(-0.6, 0.0);
  REQUIRE((Ufix.adjoint() * Ufix - Eigen::Matrix2cd::Identity()).norm() <
          1e-15);
  const auto rotated = MixtureChannel::from_linear_map(
      Ufix * B.cast<cd>(), alph, std::sqrt(P));
  CHECK_FALSE(rotated.split);
  const double route_b = mi_mixture_quad(rotated, qg).value;
  CHECK(std::abs(route_a - route_b) < 1e-4);

  // MC on the generic means as a third, sampling-based route
  const auto mc = mi_mixture_mc(rotated, 200000, 5);
  CHECK(std::abs(mc.value - route_a) < 4.0 * mc.std_error);
}

TEST_CASE("pair MI at zero power is zero") {
  const PairChannel pc(0.8, 0.2);
  const auto alph = product(make_qam(4), make_qam(4));
  CHECK(std::abs(pair_mi(pc, 0.0, 1.0, 0.5, 0.3, alph).value) < 1e-12);
}

TEST_CASE("system_mi sums pair contributions") {
  Eigen::MatrixXcd H = Eigen::Vector4d(0.8, 0.4, 0.4, 0.2)
                           .asDiagonal()
                           .toDenseMatrix()
                           .cast<cd>();
  const auto dec = svd(H);
  const auto c = make_qam(4);
  const auto alph = power_alphabet(c, 4);
  const auto pa = product(c, c);
  const double P = 20.0;

  Pairing pairing;
  pairing.pairs = {{1, 4}, {2, 3}};
  std::vector<PairParams> params(2);
  params[0] = {20.0 * M_PI / 180.0, 0.7, 0.6};
  params[1] = {0.0, 0.5, 0.4};

  const auto total = system_mi(dec, pairing, params, alph, P);
  const auto m0 = pair_mi(PairChannel(0.8, 0.2), P, 0.6, 0.7,
                          20.0 * M_PI / 180.0, pa);
  const auto m1 = pair_mi(PairChannel(0.4, 0.4), P, 0.4, 0.5, 0.0, pa);
  CHECK(total.value ==
        doctest::Approx(m0.value + m1.value).epsilon(1e-12));

  params[1].pbar2 = 0.5;  // shares now sum to 1.1
  CHECK_THROWS_AS(system_mi(dec, pairing, params, alph, P), ConstraintError);
}

TEST_CASE("mmse_matrix limits") {
  const auto alph = power_alphabet(make_qam(4), 1);
  Eigen::MatrixXcd one(1, 1);
  one << 1.0;

  const auto E0 = mmse_matrix(one, one, alph, 1e-12, 20000, 3);
  CHECK(E0.rows() == 1);
  CHECK(std::abs(E0(0, 0) - 1.0) < 1e-6);

  const auto Einf = mmse_matrix(one, one, alph, 1e6, 20000, 3);
  CHECK(std::abs(Einf(0, 0)) < 1e-8);

  // Hermitian PSD on a 2x2 system
  const auto alph2 = power_alphabet(make_qam(4), 2);
  Eigen::MatrixXcd H(2, 2);
  H << cd(0.9, 0.1), cd(0.2, -0.3), cd(-0.1, 0.4), cd(0.7, 0.0);
  const Eigen::MatrixXcd T = Eigen::MatrixXcd::Identity(2, 2) / std::sqrt(2.0);
  const auto E = mmse_matrix(T, H, alph2, 5.0, 20000, 7);
  CHECK((E - E.adjoint()).norm() < 1e-12);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(E);
  CHECK(eig.eigenvalues().minCoeff() > -1e-12);
}

TEST_CASE("mmse_matrix satisfies the I-MMSE identity on a scalar channel") {
  // dI/dP in nats equals the MMSE for y = sqrt(P) u + w, w ~ CN(0,1).
  // The two sides come from unrelated code paths (posterior-mean Monte
  // Carlo vs entropy quadrature), so agreement pins both.
  const auto c = make_qam(4);
  const auto alph = power_alphabet(c, 1);
  Eigen::MatrixXcd one(1, 1);
  one << 1.0;

  const double P = 2.0, h = 0.05;
  const double di_dP =
      (mi_1d(std::sqrt(P + h), c, tight_quad()).value -
       mi_1d(std::sqrt(P - h), c, tight_quad()).value) /
      (2.0 * h) * std::log(2.0);
  const auto E = mmse_matrix(one, one, alph, P, 400000, 11);
  CHECK(std::abs(E(0, 0).real() - di_dP) < 5e-3);
  CHECK(std::abs(E(0, 0).imag()) < 1e-12);
}

TEST_CASE("rotation2") {
  CHECK((rotation2(0.0) - Eigen::Matrix2d::Identity()).norm() < 1e-15);
  const auto A = rotation2(0.3);
  CHECK((A * A.transpose() - Eigen::Matrix2d::Identity()).norm() < 1e-15);
  CHECK(A.determinant() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(A(0, 1) == doctest::Approx(std::sin(0.3)));
  CHECK(A(1, 0) == doctest::Approx(-std::sin(0.3)));
}
