#include "xprecode/precoder.hpp"

#include <cmath>

#include "xprecode/errors.hpp"

namespace xprecode {

XCodeGenerator build_generator(const Pairing& pairing,
                               const std::vector<double>& angles) {
  const int n = pairing.n();
  pairing.validate(n);
  if (angles.size() != pairing.pairs.size())
    throw ConfigError("one rotation angle per pair is required");
  XCodeGenerator gen;
  gen.pairing = pairing;
  gen.angles = angles;
  gen.G = Eigen::MatrixXd::Identity(n, n);
  for (size_t k = 0; k < pairing.pairs.size(); ++k) {
    const auto [i, j] = pairing.pairs[k];
    const double c = std::cos(angles[k]), s = std::sin(angles[k]);
    gen.G(i - 1, i - 1) = c;
    gen.G(i - 1, j - 1) = s;
    gen.G(j - 1, i - 1) = -s;
    gen.G(j - 1, j - 1) = c;
  }
  return gen;
}

FullPrecoder build_precoder(const ChannelDecomposition& dec,
                            const Pairing& pairing,
                            const std::vector<PairParams>& params) {
  const int n = static_cast<int>(dec.n);
  pairing.validate(n);
  if (params.size() != pairing.pairs.size())
    throw ConfigError("one parameter set per pair is required");

  Eigen::VectorXd p2 = Eigen::VectorXd::Zero(n);
  std::vector<double> angles;
  double total = 0.0;
  for (size_t k = 0; k < pairing.pairs.size(); ++k) {
    const auto [i, j] = pairing.pairs[k];
    const auto& pr = params[k];
    if (pr.f < 0.0 || pr.f > 1.0)
      throw DomainError("power fraction must lie in [0, 1]");
    if (pr.pbar2 < 0.0) throw DomainError("pair power share must be >= 0");
    // Subchannel gains are sorted descending, so i carries the strong side.
    p2(i - 1) = pr.pbar2 * pr.f;
    p2(j - 1) = pr.pbar2 * (1.0 - pr.f);
    total += pr.pbar2;
    angles.push_back(pr.theta);
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw ConstraintError("pair power shares must sum to 1");

  FullPrecoder pre;
  pre.gen = build_generator(pairing, angles);
  pre.p = p2.cwiseSqrt();
  const Eigen::MatrixXd PG = pre.p.asDiagonal() * pre.gen.G;
  pre.T = dec.V.adjoint() * PG.cast<std::complex<double>>();
  return pre;
}

double equivalent_model_residual(const FullPrecoder& pre,
                                 const ChannelDecomposition& dec,
                                 const Eigen::MatrixXcd& H) {
  const Eigen::MatrixXcd lhs = dec.U.adjoint() * H * pre.T;
  const Eigen::MatrixXd rhs =
      dec.lambda.asDiagonal() * (pre.p.asDiagonal() * pre.gen.G);
  return (lhs - rhs.cast<std::complex<double>>()).norm();
}

}  // namespace xprecode
