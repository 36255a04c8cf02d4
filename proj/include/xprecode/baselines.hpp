#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "xprecode/constellation.hpp"
#include "xprecode/mi.hpp"

namespace xprecode {

/// Squared amplitudes p_i^2 per subchannel, on the unit simplex.
struct DiagonalPowerAllocation {
  Eigen::VectorXd p2;
};

/// Classical waterfilling for Gaussian inputs over parallel channels with
/// total power constraint sum p_i^2 = 1; returns the allocation and the
/// capacity sum log2(1 + lambda_i^2 p_i^2 P_T) in bits.
std::pair<DiagonalPowerAllocation, double> gaussian_waterfill(
    const Eigen::VectorXd& gains, double P_T);

/// Waterfilling powers, but MI evaluated with the discrete alphabet on
/// each subchannel (no coding across subchannels).
MiEstimate discrete_waterfill_mi(const Eigen::VectorXd& gains, double P_T,
                                 const Constellation& alph,
                                 const QuadOptions& quad = {});

/// Optimal diagonal power allocation for discrete inputs: maximize
/// sum_i MI_1D(lambda_i^2 p_i^2 P_T) over the simplex by pairwise-transfer
/// coordinate ascent (the per-channel MI is concave in the power).
/// Converged when no sweep moves the allocation by more than 1e-6.
std::pair<DiagonalPowerAllocation, MiEstimate> mercury_waterfill(
    const Eigen::VectorXd& gains, double P_T, const Constellation& alph,
    const QuadOptions& quad = {});

struct FixedPointResult {
  Eigen::MatrixXcd T;
  MiEstimate mi;
  bool converged = false;
  int iterations = 0;
};

struct FixedPointOptions {
  int max_iter = 100;
  double tol = 1e-6;
  double damping = 0.5;
  long long mmse_samples = 20000;
  long long track_samples = 10000;   ///< per-iterate MI tracking
  long long final_samples = 100000;  ///< returned estimate
  std::uint64_t seed = 1;
  /// Additional starting points tried after the waterfilling start; the
  /// best Monte-Carlo MI iterate across all runs is kept.
  std::vector<Eigen::MatrixXcd> extra_inits;
};

/// Damped fixed-point iteration T <- (1-g) T + g H^H H T E / ||.||_F for
/// the optimal discrete-input precoder, E the MMSE matrix, initialized at
/// V^H P from Gaussian waterfilling.  Iterates are renormalized to
/// ||T||_F = 1.  Returns the best tracked iterate across all starts;
/// converged reports whether the winning run reached its fixed point.
FixedPointResult fixed_point_precoder(const Eigen::MatrixXcd& H,
                                      const ProductAlphabet& alph, double P_T,
                                      const FixedPointOptions& opt = {});

}  // namespace xprecode
