#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "xprecode/channel.hpp"
#include "xprecode/errors.hpp"

using namespace xprecode;
using cd = std::complex<double>;

namespace {

// The OFDM example channel used throughout the sweep tests.
Eigen::VectorXcd example_impulse() {
  Eigen::VectorXcd h(5);
  h << cd(-0.454, 0.145), cd(-0.258, 0.198), cd(0.0783, 0.069),
      cd(-0.408, -0.396), cd(-0.532, -0.224);
  return h;
}

// Direct DFT sum, written independently of the FFT path in the library.
std::vector<double> dft_magnitudes(const Eigen::VectorXcd& h, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    cd acc = 0.0;
    for (Eigen::Index l = 0; l < h.size(); ++l)
      acc += h(l) * std::polar(1.0, -2.0 * M_PI * k * static_cast<double>(l) / n);
    out[static_cast<std::size_t>(k)] = std::abs(acc);
  }
  return out;
}

}  // namespace

TEST_CASE("svd of a matrix with closed-form singular values") {
  // [[1, 1], [0, 1]] has squared singular values (3 +- sqrt(5)) / 2,
  // i.e. the golden ratio and its reciprocal.
  Eigen::MatrixXcd H(2, 2);
  H << 1, 1, 0, 1;
  const auto dec = svd(H);
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  CHECK(dec.lambda(0) == doctest::Approx(phi).epsilon(1e-12));
  CHECK(dec.lambda(1) == doctest::Approx(1.0 / phi).epsilon(1e-12));
}

TEST_CASE("svd factors satisfy the diagonal-model contract") {
  Eigen::MatrixXcd H(3, 4);
  H << cd(0.2, -1.1), cd(0.7, 0.3), cd(-0.4, 0.9), cd(1.2, 0.1),
      cd(-0.6, 0.5), cd(0.3, -0.8), cd(1.0, 0.2), cd(-0.2, -0.4),
      cd(0.9, 0.6), cd(-1.3, 0.1), cd(0.5, -0.5), cd(0.4, 1.0);
  const auto dec = svd(H);

  CHECK(dec.n_r == 3);
  CHECK(dec.n_t == 4);
  CHECK(dec.n == 3);
  CHECK(dec.U.rows() == 3);
  CHECK(dec.U.cols() == 3);
  CHECK(dec.V.rows() == 3);
  CHECK(dec.V.cols() == 4);

  CHECK((dec.U.adjoint() * dec.U - Eigen::MatrixXcd::Identity(3, 3)).norm() <
        1e-12);
  CHECK((dec.V * dec.V.adjoint() - Eigen::MatrixXcd::Identity(3, 3)).norm() <
        1e-12);
  CHECK((dec.reconstruct() - H).norm() < 1e-12 * H.norm());
  // receive projection diagonalizes the channel
  CHECK((dec.U.adjoint() * H - dec.lambda.asDiagonal() * dec.V).norm() < 1e-12);

  CHECK(dec.lambda(0) >= dec.lambda(1));
  CHECK(dec.lambda(1) >= dec.lambda(2));
  CHECK(dec.lambda(2) > 0.0);
}

TEST_CASE("svd rejects unsupported shapes and degenerate channels") {
  CHECK_THROWS_AS(svd(Eigen::MatrixXcd::Random(4, 3)), UnsupportedShapeError);

  Eigen::MatrixXcd rank1(2, 2);
  rank1 << 1, 1, 1, 1;
  CHECK_THROWS_AS(svd(rank1), DegenerateChannelError);
}

TEST_CASE("PairChannel reparameterization") {
  const PairChannel pc(0.8, 0.2);
  CHECK(pc.alpha() == doctest::Approx(0.68));
  CHECK(pc.beta() == doctest::Approx(4.0));
  const auto n = pc.normalized();
  CHECK(n.alpha() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(n.beta() == doctest::Approx(4.0).epsilon(1e-14));

  CHECK_THROWS_AS(PairChannel(0.2, 0.8), DomainError);
  CHECK_THROWS_AS(PairChannel(1.0, 0.0), DomainError);
}

TEST_CASE("ofdm_gains matches a direct DFT") {
  const auto h = example_impulse();
  const int n = 32;
  const auto got = ofdm_gains(h, n);
  auto want = dft_magnitudes(h, n);

  REQUIRE(got.gains.size() == n);
  REQUIRE(got.perm.size() == static_cast<std::size_t>(n));

  // perm must be a permutation of 0..n-1 and index the unsorted magnitudes
  std::vector<int> seen(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    const int k = got.perm[static_cast<std::size_t>(i)];
    REQUIRE(k >= 0);
    REQUIRE(k < n);
    seen[static_cast<std::size_t>(k)] += 1;
    CHECK(got.gains(i) ==
          doctest::Approx(want[static_cast<std::size_t>(k)]).epsilon(1e-12));
  }
  for (int k = 0; k < n; ++k) CHECK(seen[static_cast<std::size_t>(k)] == 1);

  for (int i = 0; i + 1 < n; ++i) CHECK(got.gains(i) >= got.gains(i + 1));

  std::sort(want.begin(), want.end(), std::greater<double>());
  for (int i = 0; i < n; ++i)
    CHECK(got.gains(i) ==
          doctest::Approx(want[static_cast<std::size_t>(i)]).epsilon(1e-12));
}

TEST_CASE("ofdm_gains is invariant to circular shifts of the impulse") {
  const auto h = example_impulse();
  const int n = 16;
  Eigen::VectorXcd shifted = Eigen::VectorXcd::Zero(h.size() + 3);
  shifted.tail(h.size()) = h;
  const auto a = ofdm_gains(h, n);
  const auto b = ofdm_gains(shifted, n);
  CHECK((a.gains - b.gains).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("ofdm_gains input validation") {
  const auto h = example_impulse();
  CHECK_THROWS_AS(ofdm_gains(h, 12), ConfigError);
  CHECK_THROWS_AS(ofdm_gains(h, 0), ConfigError);
  CHECK_THROWS_AS(ofdm_gains(h, 4), ConfigError);  // shorter than the impulse
}

TEST_CASE("random_mimo is reproducible and roughly CN(0,1)") {
  const auto H1 = random_mimo(6, 4, 42);
  const auto H2 = random_mimo(6, 4, 42);
  const auto H3 = random_mimo(6, 4, 43);
  CHECK(H1.rows() == 4);
  CHECK(H1.cols() == 6);
  CHECK((H1 - H2).norm() == 0.0);
  CHECK((H1 - H3).norm() > 1e-3);

  const auto big = random_mimo(50, 50, 7);
  const double mean_abs = std::abs(big.mean());
  const double power = big.squaredNorm() / static_cast<double>(big.size());
  CHECK(mean_abs < 0.05);
  CHECK(power == doctest::Approx(1.0).epsilon(0.1));
}
