#include "xprecode/mi.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <mutex>
#include <utility>

#include "xprecode/errors.hpp"
#include "xprecode/pairing.hpp"
#include "xprecode/rng.hpp"

namespace xprecode {

namespace {

constexpr double kLn2 = 0.6931471805599453;

/// Nodes/weights for the weight function exp(-t^2) on the real line
/// (Golub-Welsch on the Hermite Jacobi matrix).  Weights sum to sqrt(pi).
const std::pair<Eigen::VectorXd, Eigen::VectorXd>& gh_rule(int n) {
  static std::map<int, std::pair<Eigen::VectorXd, Eigen::VectorXd>> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(k / 2.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  Eigen::VectorXd nodes = es.eigenvalues();
  Eigen::VectorXd weights =
      std::sqrt(M_PI) * es.eigenvectors().row(0).array().square();
  return cache.emplace(n, std::make_pair(std::move(nodes), std::move(weights)))
      .first->second;
}

template <class Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// E[-ln q(x)] in nats, x drawn from the mixture itself, where
/// q(x) = 1/(K pi^{dr/2}) sum_a exp(-||x - m_a||^2) is the density of
/// mean + noise with variance 1/2 per real dimension.  Tensor
/// Gauss-Hermite with n_axis nodes per axis; log-sum-exp throughout, so
/// no underflow for any SNR.
template <class Scalar>
double entropy_quad(const MatX<Scalar>& means, int n_axis) {
  const Eigen::Index dr = means.rows(), K = means.cols();
  const auto& rule = gh_rule(n_axis);
  const VecX<Scalar> xs = rule.first.cast<Scalar>();
  const VecX<Scalar> wn = (rule.second / std::sqrt(M_PI)).cast<Scalar>();

  long long total = 1;
  for (Eigen::Index i = 0; i < dr; ++i) total *= n_axis;
  const auto chunk = static_cast<Eigen::Index>(std::clamp<long long>(
      (4 << 20) / std::max<Eigen::Index>(K, 1), 64, std::min<long long>(total, 8192)));

  const VecX<Scalar> msq = means.colwise().squaredNorm().transpose();
  MatX<Scalar> T(chunk, dr), X(chunk, dr), D2(chunk, K);
  VecX<Scalar> W(chunk);
  double acc = 0;

  for (long long c0 = 0; c0 < total; c0 += chunk) {
    const auto m = static_cast<Eigen::Index>(
        std::min<long long>(chunk, total - c0));
    for (Eigen::Index r = 0; r < m; ++r) {
      long long flat = c0 + r;
      Scalar w = 1;
      for (Eigen::Index dim = dr; dim-- > 0;) {
        const auto dig = static_cast<Eigen::Index>(flat % n_axis);
        flat /= n_axis;
        T(r, dim) = xs(dig);
        w *= wn(dig);
      }
      W(r) = w;
    }
    for (Eigen::Index v = 0; v < K; ++v) {
      X.topRows(m) = T.topRows(m).rowwise() + means.col(v).transpose();
      D2.topRows(m).noalias() = Scalar(-2) * (X.topRows(m) * means);
      D2.topRows(m).colwise() += X.topRows(m).rowwise().squaredNorm();
      D2.topRows(m).rowwise() += msq.transpose();
      const VecX<Scalar> dmin = D2.topRows(m).rowwise().minCoeff();
      D2.topRows(m) = (-(D2.topRows(m).colwise() - dmin)).array().exp().matrix();
      const VecX<Scalar> lnq =
          D2.topRows(m).rowwise().sum().array().log().matrix() - dmin;
      acc += static_cast<double>(W.head(m).dot(lnq));
    }
  }
  const double lnc =
      std::log(static_cast<double>(K)) + 0.5 * dr * std::log(M_PI);
  return lnc - acc / static_cast<double>(K);
}

}  // namespace

namespace detail {

template <class Scalar>
double mi_real_mixture_bits(const MatX<Scalar>& real_means, double factor,
                            int n_axis) {
  const auto dr = real_means.rows();
  const double h = entropy_quad<Scalar>(real_means, n_axis);
  return factor * (h - 0.5 * dr * std::log(M_PI * M_E)) / kLn2;
}

template double mi_real_mixture_bits<float>(const MatX<float>&, double, int);
template double mi_real_mixture_bits<double>(const MatX<double>&, double, int);

}  // namespace detail

Eigen::Matrix2d rotation2(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Eigen::Matrix2d a;
  a << c, s, -s, c;
  return a;
}

MixtureChannel MixtureChannel::from_means(const Eigen::MatrixXcd& means) {
  MixtureChannel ch;
  ch.means = means;
  ch.max_bits = std::log2(static_cast<double>(means.cols()));
  return ch;
}

MixtureChannel MixtureChannel::from_linear_map(const Eigen::MatrixXcd& M,
                                               const ProductAlphabet& alph,
                                               double amp_scale) {
  MixtureChannel ch;
  ch.means = amp_scale * M * alph.enumerate();
  ch.max_bits = alph.max_bits();

  bool all_square = !alph.components.empty();
  for (const auto& c : alph.components) all_square &= c.is_square_qam();
  if (all_square && M.imag().isZero(0)) {
    ch.split = true;
    ch.split_means = amp_scale * M.real() * pam_product(alph);
  }
  return ch;
}

MixtureChannel MixtureChannel::from_real_map(const Eigen::MatrixXd& M,
                                             const ProductAlphabet& alph,
                                             double amp_scale) {
  return from_linear_map(M.cast<std::complex<double>>(), alph, amp_scale);
}

MiEstimate mi_mixture_quad(const MixtureChannel& ch, const QuadOptions& opt) {
  const Eigen::Index d = ch.dim();
  if (d > 2)
    throw UnsupportedError(
        "mi_mixture_quad: complex dimension must be <= 2, got " +
        std::to_string(d) + " (use mi_mixture_mc)");

  Eigen::MatrixXd rm;
  double factor = 1;
  if (ch.split) {
    rm = ch.split_means;
    factor = 2;
  } else {
    rm.resize(2 * d, ch.means.cols());
    for (Eigen::Index i = 0; i < d; ++i) {
      rm.row(2 * i) = ch.means.row(i).real();
      rm.row(2 * i + 1) = ch.means.row(i).imag();
    }
  }
  const auto dr = rm.rows();
  // a 4-D tensor doubles into unaffordable territory quickly
  const int max_n = dr >= 4 ? std::min(opt.max_nodes, 64) : opt.max_nodes;

  auto evals = [&](int n) {
    long long t = rm.cols();
    for (Eigen::Index i = 0; i < dr; ++i) t *= n;
    return t;
  };

  MiEstimate est;
  est.method = MiMethod::quadrature;
  int n = opt.fixed_nodes > 0 ? opt.fixed_nodes : opt.base_nodes;
  double cur = detail::mi_real_mixture_bits<double>(rm, factor, n);
  double delta = 0;
  if (opt.fixed_nodes <= 0) {
    while (2 * n <= max_n) {
      const double next = detail::mi_real_mixture_bits<double>(rm, factor, 2 * n);
      delta = std::abs(next - cur);
      cur = next;
      n *= 2;
      if (delta < opt.tol_bits) break;
    }
  }
  est.value = std::clamp(cur, 0.0, ch.max_bits);
  est.std_error = delta;
  est.samples_used = evals(n);
  return est;
}

MiEstimate mi_mixture_mc(const MixtureChannel& ch, long long n_samples,
                         std::uint64_t seed) {
  if (n_samples < 1000)
    throw DomainError("mi_mixture_mc: need at least 1000 samples");

  const Eigen::Index d = ch.dim(), K = ch.means.cols();
  const Eigen::VectorXd msq = ch.means.colwise().squaredNorm().transpose();
  const auto batch = static_cast<Eigen::Index>(std::clamp<long long>(
      (8 << 20) / std::max<Eigen::Index>(K, 1), 64, 8192));

  Rng rng(seed);
  Eigen::MatrixXcd Y(d, batch);
  Eigen::MatrixXcd G(K, batch);
  double sum = 0, sumsq = 0;
  const double lnK = std::log(static_cast<double>(K));

  for (long long done = 0; done < n_samples;) {
    const auto m = static_cast<Eigen::Index>(
        std::min<long long>(batch, n_samples - done));
    for (Eigen::Index s = 0; s < m; ++s) {
      const auto u = static_cast<Eigen::Index>(
          rng.uniform_int(static_cast<std::uint64_t>(K)));
      Y.col(s) = ch.means.col(u);
      for (Eigen::Index i = 0; i < d; ++i) Y(i, s) += rng.cnormal();
    }
    G.leftCols(m).noalias() = ch.means.adjoint() * Y.leftCols(m);
    for (Eigen::Index s = 0; s < m; ++s) {
      const double ysq = Y.col(s).squaredNorm();
      const Eigen::ArrayXd d2 =
          ysq + (msq.array() - 2.0 * G.col(s).real().array());
      const double dmin = d2.minCoeff();
      const double lse = std::log((dmin - d2).exp().sum());
      // -log2 p(y) - d log2(pi e), with the pi^d terms folded together
      const double val = (dmin - lse + lnK - d) / kLn2;
      sum += val;
      sumsq += val * val;
    }
    done += m;
  }
  const auto n = static_cast<double>(n_samples);
  MiEstimate est;
  est.method = MiMethod::monte_carlo;
  est.samples_used = n_samples;
  const double mean = sum / n;
  const double var = std::max(0.0, sumsq / n - mean * mean);
  est.std_error = std::sqrt(var / n);
  est.value = std::clamp(mean, 0.0, ch.max_bits);
  return est;
}

MiEstimate mi_1d(double amp, const Constellation& c, const QuadOptions& opt) {
  Eigen::MatrixXcd M(1, 1);
  M(0, 0) = amp;
  return mi_mixture_quad(
      MixtureChannel::from_linear_map(M, ProductAlphabet{{c}}, 1.0), opt);
}

MiEstimate pair_mi(const PairChannel& pc, double P_T, double pbar2, double f,
                   double theta, const ProductAlphabet& alph,
                   const EvalBudget& budget) {
  if (!(f >= 0.0 && f <= 1.0))
    throw DomainError("pair_mi: f must lie in [0, 1]");
  if (!(pbar2 > 0)) throw DomainError("pair_mi: pbar2 must be positive");
  if (alph.components.size() != 2)
    throw DomainError("pair_mi: alphabet must have two components");

  const Eigen::Vector2d lf(pc.lambda_strong * std::sqrt(f),
                           pc.lambda_weak * std::sqrt(1.0 - f));
  const Eigen::Matrix2d B = lf.asDiagonal() * rotation2(theta);
  const auto ch =
      MixtureChannel::from_real_map(B, alph, std::sqrt(P_T * pbar2));
  return budget.method == MiMethod::quadrature
             ? mi_mixture_quad(ch, budget.quad)
             : mi_mixture_mc(ch, budget.mc.samples, budget.mc.seed);
}

MiEstimate system_mi(const ChannelDecomposition& dec, const Pairing& pairing,
                     const std::vector<PairParams>& params,
                     const ProductAlphabet& alph, double P_T,
                     const EvalBudget& budget) {
  pairing.validate(static_cast<int>(dec.n));
  if (params.size() != pairing.pairs.size())
    throw ConfigError("system_mi: one PairParams per pair required");
  if (alph.components.size() != static_cast<std::size_t>(dec.n))
    throw ConfigError("system_mi: one constellation per subchannel required");

  double total_power = 0;
  for (const auto& p : params) total_power += p.pbar2;
  if (std::abs(total_power - 1.0) > 1e-9)
    throw ConstraintError("system_mi: pair powers must sum to 1, got " +
                          std::to_string(total_power));

  MiEstimate est;
  est.method = budget.method;
  double var = 0;
  for (std::size_t k = 0; k < pairing.pairs.size(); ++k) {
    const auto [i, j] = pairing.pairs[k];
    const PairChannel pc(dec.lambda(i - 1), dec.lambda(j - 1));
    const ProductAlphabet pa =
        product(alph.components[static_cast<std::size_t>(i - 1)],
                alph.components[static_cast<std::size_t>(j - 1)]);
    EvalBudget b = budget;
    b.mc.seed = derive_seed(budget.mc.seed, k);
    const MiEstimate mk = pair_mi(pc, P_T, params[k].pbar2, params[k].f,
                                  params[k].theta, pa, b);
    est.value += mk.value;
    var += mk.std_error * mk.std_error;
    est.samples_used += mk.samples_used;
  }
  est.std_error = std::sqrt(var);
  return est;
}

Eigen::MatrixXcd mmse_matrix(const Eigen::MatrixXcd& T,
                             const Eigen::MatrixXcd& H,
                             const ProductAlphabet& alph, double P_T,
                             long long n_samples, std::uint64_t seed) {
  if (T.rows() != H.cols())
    throw ConfigError("mmse_matrix: T and H dimensions do not match");
  const Eigen::MatrixXcd S = alph.enumerate();
  if (S.rows() != T.cols())
    throw ConfigError("mmse_matrix: alphabet dimension does not match T");

  const Eigen::Index n_r = H.rows(), n = T.cols(), K = S.cols();
  const Eigen::MatrixXcd M = std::sqrt(P_T) * H * T * S;  // n_r x K
  const Eigen::VectorXd msq = M.colwise().squaredNorm().transpose();
  const auto batch = static_cast<Eigen::Index>(std::clamp<long long>(
      (8 << 20) / std::max<Eigen::Index>(K, 1), 64, 8192));

  Rng rng(seed);
  Eigen::MatrixXcd Y(n_r, batch), G(K, batch), W(K, batch), Err(n, batch);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(batch));
  Eigen::MatrixXcd E = Eigen::MatrixXcd::Zero(n, n);

  for (long long done = 0; done < n_samples;) {
    const auto m = static_cast<Eigen::Index>(
        std::min<long long>(batch, n_samples - done));
    for (Eigen::Index s = 0; s < m; ++s) {
      const auto u = static_cast<Eigen::Index>(
          rng.uniform_int(static_cast<std::uint64_t>(K)));
      idx[static_cast<std::size_t>(s)] = u;
      Y.col(s) = M.col(u);
      for (Eigen::Index i = 0; i < n_r; ++i) Y(i, s) += rng.cnormal();
    }
    G.leftCols(m).noalias() = M.adjoint() * Y.leftCols(m);
    for (Eigen::Index s = 0; s < m; ++s) {
      // posterior over the alphabet: softmax of 2Re<m_a,y> - |m_a|^2
      Eigen::ArrayXd expo = 2.0 * G.col(s).real().array() - msq.array();
      expo -= expo.maxCoeff();
      Eigen::ArrayXd w = expo.exp();
      W.col(s) = (w / w.sum()).cast<std::complex<double>>();
    }
    Err.leftCols(m).noalias() = S * W.leftCols(m);
    for (Eigen::Index s = 0; s < m; ++s)
      Err.col(s) = S.col(idx[static_cast<std::size_t>(s)]) - Err.col(s);
    E.noalias() += Err.leftCols(m) * Err.leftCols(m).adjoint();
    done += m;
  }
  E /= static_cast<double>(n_samples);
  return 0.5 * (E + E.adjoint().eval());
}

}  // namespace xprecode
