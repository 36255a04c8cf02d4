#pragma once

#include <Eigen/Core>
#include <vector>

namespace xprecode {

/// SVD factors of an n_r x n_t channel H = U * diag(lambda) * V with
/// n = min(n_r, n_t).  U has orthonormal columns (n_r x n), V has
/// orthonormal rows (n x n_t), gains sorted descending.
struct ChannelDecomposition {
  Eigen::MatrixXcd U;
  Eigen::VectorXd lambda;
  Eigen::MatrixXcd V;
  Eigen::Index n_r = 0, n_t = 0, n = 0;

  Eigen::MatrixXcd reconstruct() const {
    return U * lambda.asDiagonal() * V;
  }
};

/// One pair of subchannel gains with the derived condition number and
/// power gain.  Normalizing by sqrt(alpha) gives the unit-gain channel
/// diag(beta, 1)/sqrt(1+beta^2) driven at effective power P_T*alpha.
struct PairChannel {
  double lambda_strong = 0;
  double lambda_weak = 0;

  PairChannel() = default;
  PairChannel(double strong, double weak);

  double alpha() const {
    return lambda_strong * lambda_strong + lambda_weak * lambda_weak;
  }
  double beta() const { return lambda_strong / lambda_weak; }

  /// Unit-gain version: (beta, 1)/sqrt(1+beta^2).
  PairChannel normalized() const;
};

/// Subcarrier gain magnitudes of an OFDM channel, sorted descending.
/// perm[i] is the 0-based subcarrier index holding the i-th gain.
struct OfdmGains {
  Eigen::VectorXd gains;
  std::vector<int> perm;
};

/// SVD per the diagonal-model convention.  Requires n_r <= n_t (otherwise
/// the receive projection loses information) and full numerical rank.
ChannelDecomposition svd(const Eigen::MatrixXcd& H);

/// |n-point DFT| of the zero-padded impulse response, sorted descending.
/// n must be a power of two.
OfdmGains ofdm_gains(const Eigen::VectorXcd& impulse_response, int n);

/// i.i.d. unit-variance circularly-symmetric complex Gaussian entries,
/// reproducible from the seed.
Eigen::MatrixXcd random_mimo(int n_t, int n_r, std::uint64_t seed);

}  // namespace xprecode
