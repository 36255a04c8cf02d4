#pragma once

#include <Eigen/Core>
#include <vector>

#include "xprecode/channel.hpp"
#include "xprecode/pairing.hpp"

namespace xprecode {

/// Real orthogonal generator coupling the paired subchannels through 2x2
/// rotations: g_ii = cos, g_ij = sin, g_ji = -sin, g_jj = cos for pair
/// (i, j), identity elsewhere.
struct XCodeGenerator {
  Eigen::MatrixXd G;
  Pairing pairing;
  std::vector<double> angles;  ///< radians, one per pair
};

XCodeGenerator build_generator(const Pairing& pairing,
                               const std::vector<double>& angles);

/// T = V^H P G with ||T||_F = 1; diagonal powers follow the plan:
/// p_i^2 = pbar2_k f_k on pair k's stronger subchannel, pbar2_k (1 - f_k)
/// on the weaker one.
struct FullPrecoder {
  Eigen::MatrixXcd T;  ///< n_t x n
  Eigen::VectorXd p;   ///< subchannel amplitudes, sum of squares 1
  XCodeGenerator gen;
};

FullPrecoder build_precoder(const ChannelDecomposition& dec,
                            const Pairing& pairing,
                            const std::vector<PairParams>& params);

/// || U^H H T - Lambda P G ||_F, the defect of the equivalent diagonal
/// model the precoder is built to realize.
double equivalent_model_residual(const FullPrecoder& pre,
                                 const ChannelDecomposition& dec,
                                 const Eigen::MatrixXcd& H);

}  // namespace xprecode
