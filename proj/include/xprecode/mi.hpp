#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "xprecode/channel.hpp"
#include "xprecode/constellation.hpp"

namespace xprecode {

struct Pairing;

enum class MiMethod { monte_carlo, quadrature };

struct MiEstimate {
  double value = 0;      ///< bits
  double std_error = 0;  ///< bits; last refinement delta for quadrature
  MiMethod method = MiMethod::quadrature;
  long long samples_used = 0;  ///< MC samples, or density evaluations
};

/// Gauss-Hermite settings.  Node counts are per real axis; the count is
/// doubled until the estimate moves by less than tol_bits (or fixed_nodes
/// pins it, skipping the refinement loop).
struct QuadOptions {
  int base_nodes = 32;
  double tol_bits = 1e-4;
  int max_nodes = 256;
  int fixed_nodes = 0;
};

struct McOptions {
  long long samples = 100000;
  std::uint64_t seed = 1;
};

/// How pair/system MI should be evaluated.
struct EvalBudget {
  MiMethod method = MiMethod::quadrature;
  QuadOptions quad;
  McOptions mc;
};

/// Rotation and power split of one pair plus its share of the total power.
struct PairParams {
  double theta = 0;  ///< radians
  double f = 0.5;    ///< fraction of the pair power on the stronger channel
  double pbar2 = 1;  ///< pair power share, sums to 1 across pairs
};

/// y = m_u + w over a finite mean set, w circularly-symmetric complex
/// Gaussian with unit variance per complex dimension.
///
/// When the linear map is real and every input component is square QAM,
/// the real and imaginary parts of y decouple into two identical real
/// mixtures (QAM = two PAM alphabets in quadrature), recorded in
/// split_means; quadrature then integrates d real dimensions instead of
/// 2d and the mixture size drops from |S| to sqrt(|S|).
struct MixtureChannel {
  Eigen::MatrixXcd means;  ///< d x |S|
  double max_bits = 0;     ///< log2 |S|

  bool split = false;
  Eigen::MatrixXd split_means;  ///< d x sqrt(|S|), one quadrature component

  Eigen::Index dim() const { return means.rows(); }

  static MixtureChannel from_means(const Eigen::MatrixXcd& means);
  /// means = amp_scale * M * u over the alphabet; detects the real/QAM split.
  static MixtureChannel from_linear_map(const Eigen::MatrixXcd& M,
                                        const ProductAlphabet& alph,
                                        double amp_scale);
  static MixtureChannel from_real_map(const Eigen::MatrixXd& M,
                                      const ProductAlphabet& alph,
                                      double amp_scale);
};

/// Monte-Carlo estimate of I(u;y) in bits: -E[log2 p(y)] - d log2(pi e),
/// log-sum-exp with max subtraction.  Fixed seed gives common random
/// numbers across calls with equal (d, |S|).
MiEstimate mi_mixture_mc(const MixtureChannel& ch, long long n_samples,
                         std::uint64_t seed);

/// Gauss-Hermite tensor quadrature of the same integral; complex dimension
/// d <= 2 only.
MiEstimate mi_mixture_quad(const MixtureChannel& ch, const QuadOptions& opt = {});

/// Scalar channel y = amp * s + w, s drawn from c.  Uses the PAM split for
/// square QAM.
MiEstimate mi_1d(double amp, const Constellation& c, const QuadOptions& opt = {});

/// MI of one pair: means sqrt(P_T * pbar2) * diag(l_strong, l_weak)
/// * diag(sqrt(f), sqrt(1-f)) * A(theta) * u.
MiEstimate pair_mi(const PairChannel& pc, double P_T, double pbar2, double f,
                   double theta, const ProductAlphabet& alph,
                   const EvalBudget& budget = {});

/// Total MI of a paired system: sum of pair MIs, std errors combined in
/// quadrature.  Pair power shares must sum to 1.
MiEstimate system_mi(const ChannelDecomposition& dec, const Pairing& pairing,
                     const std::vector<PairParams>& params,
                     const ProductAlphabet& alph, double P_T,
                     const EvalBudget& budget = {});

/// MMSE matrix E = E[(u - E[u|y])(u - E[u|y])^H] for y = sqrt(P_T) H T u + w,
/// by Monte Carlo with the exact discrete posterior.  Hermitian PSD.
Eigen::MatrixXcd mmse_matrix(const Eigen::MatrixXcd& T,
                             const Eigen::MatrixXcd& H,
                             const ProductAlphabet& alph, double P_T,
                             long long n_samples, std::uint64_t seed);

/// The rotation of the 2x2 pair code.
Eigen::Matrix2d rotation2(double theta);

namespace detail {

/// MI in bits of a mixture given directly by real mean vectors (columns),
/// noise variance 1/2 per real dimension, at a fixed Gauss-Hermite node
/// count per axis.  factor multiplies the result (2 for one quadrature
/// component of a split channel).  float instantiation trades precision
/// for grid-screening speed.
template <class Scalar>
double mi_real_mixture_bits(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& real_means,
    double factor, int n_axis);

extern template double mi_real_mixture_bits<float>(
    const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic>&, double, int);
extern template double mi_real_mixture_bits<double>(
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic>&, double, int);

}  // namespace detail

}  // namespace xprecode
