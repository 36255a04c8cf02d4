#include "xprecode/channel.hpp"

#include <Eigen/SVD>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <numeric>

#include "xprecode/errors.hpp"
#include "xprecode/rng.hpp"

namespace xprecode {

PairChannel::PairChannel(double strong, double weak)
    : lambda_strong(strong), lambda_weak(weak) {
  if (!(weak > 0) || strong < weak)
    throw DomainError("PairChannel: need lambda_strong >= lambda_weak > 0");
}

PairChannel PairChannel::normalized() const {
  const double s = std::sqrt(alpha());
  return PairChannel(lambda_strong / s, lambda_weak / s);
}

ChannelDecomposition svd(const Eigen::MatrixXcd& H) {
  const Eigen::Index n_r = H.rows(), n_t = H.cols();
  if (n_r > n_t)
    throw UnsupportedShapeError(
        "svd: n_r > n_t not supported (receiver projection would lose "
        "information)");

  Eigen::JacobiSVD<Eigen::MatrixXcd> dec(
      H, Eigen::ComputeThinU | Eigen::ComputeThinV);

  ChannelDecomposition out;
  out.n_r = n_r;
  out.n_t = n_t;
  out.n = std::min(n_r, n_t);
  out.U = dec.matrixU();
  out.lambda = dec.singularValues();
  out.V = dec.matrixV().adjoint();

  if (out.lambda(out.n - 1) <= 1e-10 * out.lambda(0))
    throw DegenerateChannelError("svd: channel is numerically rank deficient");
  return out;
}

OfdmGains ofdm_gains(const Eigen::VectorXcd& impulse_response, int n) {
  if (n < 1 || (n & (n - 1)) != 0)
    throw ConfigError("ofdm_gains: n must be a power of two, got " +
                      std::to_string(n));
  if (impulse_response.size() > n)
    throw ConfigError("ofdm_gains: impulse response longer than n");

  std::vector<std::complex<double>> padded(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < impulse_response.size(); ++i)
    padded[static_cast<std::size_t>(i)] = impulse_response(i);

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> freq;
  fft.fwd(freq, padded);

  OfdmGains out;
  out.perm.resize(static_cast<std::size_t>(n));
  std::iota(out.perm.begin(), out.perm.end(), 0);
  std::stable_sort(out.perm.begin(), out.perm.end(), [&](int a, int b) {
    return std::abs(freq[static_cast<std::size_t>(a)]) >
           std::abs(freq[static_cast<std::size_t>(b)]);
  });
  out.gains.resize(n);
  for (int i = 0; i < n; ++i)
    out.gains(i) = std::abs(freq[static_cast<std::size_t>(out.perm[i])]);
  return out;
}

Eigen::MatrixXcd random_mimo(int n_t, int n_r, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXcd H(n_r, n_t);
  // Row-major fill so the draw order is part of the reproducibility contract.
  for (int i = 0; i < n_r; ++i)
    for (int j = 0; j < n_t; ++j) H(i, j) = rng.cnormal();
  return H;
}

}  // namespace xprecode
