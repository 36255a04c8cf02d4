#include "xprecode/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "xprecode/channel.hpp"
#include "xprecode/errors.hpp"
#include "xprecode/rng.hpp"

namespace xprecode {

namespace {

void check_gains(const Eigen::VectorXd& gains) {
  if (gains.size() == 0) throw ConfigError("empty gain vector");
  for (Eigen::Index i = 0; i < gains.size(); ++i) {
    if (!(gains(i) > 0.0))
      throw DomainError("subchannel gains must be positive");
  }
}

}  // namespace

std::pair<DiagonalPowerAllocation, double> gaussian_waterfill(
    const Eigen::VectorXd& gains, double P_T) {
  check_gains(gains);
  if (P_T < 0.0) throw DomainError("total power must be nonnegative");
  const Eigen::Index n = gains.size();
  DiagonalPowerAllocation alloc;
  alloc.p2 = Eigen::VectorXd::Zero(n);
  if (P_T == 0.0) {
    alloc.p2.setConstant(1.0 / static_cast<double>(n));
    return {alloc, 0.0};
  }

  std::vector<Eigen::Index> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    return gains(a) > gains(b);
  });
  Eigen::VectorXd inv(n);
  for (Eigen::Index k = 0; k < n; ++k)
    inv(k) = 1.0 / (gains(idx[static_cast<size_t>(k)]) *
                    gains(idx[static_cast<size_t>(k)]) * P_T);

  // Largest active set whose water level keeps every member positive.
  Eigen::Index k = n;
  double prefix = inv.sum();
  while (k > 1 && (1.0 + prefix) / static_cast<double>(k) <= inv(k - 1)) {
    prefix -= inv(k - 1);
    --k;
  }
  const double mu = (1.0 + prefix) / static_cast<double>(k);

  double cap = 0.0;
  for (Eigen::Index r = 0; r < k; ++r) {
    alloc.p2(idx[static_cast<size_t>(r)]) = mu - inv(r);
    cap += std::log2(mu / inv(r));
  }
  return {alloc, cap};
}

MiEstimate discrete_waterfill_mi(const Eigen::VectorXd& gains, double P_T,
                                 const Constellation& alph,
                                 const QuadOptions& quad) {
  check_gains(gains);
  if (P_T < 0.0) throw DomainError("total power must be nonnegative");
  const auto alloc = gaussian_waterfill(gains, P_T).first;
  MiEstimate total{0.0, 0.0, MiMethod::quadrature, 0};
  double var = 0.0;
  for (Eigen::Index i = 0; i < gains.size(); ++i) {
    if (alloc.p2(i) <= 0.0) continue;
    const double amp = gains(i) * std::sqrt(alloc.p2(i) * P_T);
    const MiEstimate mi = mi_1d(amp, alph, quad);
    total.value += mi.value;
    var += mi.std_error * mi.std_error;
    total.samples_used += mi.samples_used;
  }
  total.std_error = std::sqrt(var);
  return total;
}

std::pair<DiagonalPowerAllocation, MiEstimate> mercury_waterfill(
    const Eigen::VectorXd& gains, double P_T, const Constellation& alph,
    const QuadOptions& quad) {
  check_gains(gains);
  if (!(P_T >= 0.0)) throw DomainError("total power must be nonnegative");
  if (!alph.is_square_qam())
    throw UnsupportedError("mercury_waterfill needs a square QAM alphabet");
  const Eigen::Index n = gains.size();

  DiagonalPowerAllocation alloc;
  alloc.p2 = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  if (P_T == 0.0)
    return {alloc, MiEstimate{0.0, 0.0, MiMethod::quadrature, 0}};

  // Fast fixed-node scorer on the PAM components; the adaptive evaluator is
  // only used for the final estimate.
  const Eigen::RowVectorXd pam = alph.pam.transpose();
  constexpr int kNodes = 48;
  auto mi_ch = [&](Eigen::Index i, double q) -> double {
    if (q <= 0.0) return 0.0;
    Eigen::MatrixXd m = (gains(i) * std::sqrt(q * P_T)) * pam;
    return detail::mi_real_mixture_bits<double>(m, 2.0, kNodes);
  };

  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  constexpr int kMaxSweeps = 10000;
  constexpr double kTol = 1e-6;
  double movement = 0.0;
  bool done = false;
  for (int sweep = 0; sweep < kMaxSweeps && !done; ++sweep) {
    const Eigen::VectorXd before = alloc.p2;
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double S = alloc.p2(i) + alloc.p2(j);
        if (S <= 0.0) continue;
        auto val = [&](double t) { return mi_ch(i, t) + mi_ch(j, S - t); };
        double a = 0.0, b = S;
        double c = b - invphi * (b - a), d = a + invphi * (b - a);
        double fc = val(c), fd = val(d);
        const double tol_t = 1e-10 + 1e-9 * S;
        while (b - a > tol_t) {
          if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = val(c);
          } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = val(d);
          }
        }
        const double t = 0.5 * (a + b);
        alloc.p2(i) = t;
        alloc.p2(j) = S - t;
      }
    }
    movement = (alloc.p2 - before).lpNorm<Eigen::Infinity>();
    done = movement < kTol;
  }
  if (!done) {
    std::ostringstream msg;
    msg << "mercury_waterfill did not converge after " << kMaxSweeps
        << " sweeps (last movement " << movement << ")";
    throw NumericError(msg.str());
  }
  alloc.p2 /= alloc.p2.sum();

  MiEstimate total{0.0, 0.0, MiMethod::quadrature, 0};
  double var = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (alloc.p2(i) <= 0.0) continue;
    const double amp = gains(i) * std::sqrt(alloc.p2(i) * P_T);
    const MiEstimate mi = mi_1d(amp, alph, quad);
    total.value += mi.value;
    var += mi.std_error * mi.std_error;
    total.samples_used += mi.samples_used;
  }
  total.std_error = std::sqrt(var);
  return {alloc, total};
}

FixedPointResult fixed_point_precoder(const Eigen::MatrixXcd& H,
                                      const ProductAlphabet& alph, double P_T,
                                      const FixedPointOptions& opt) {
  if (!(P_T > 0.0)) throw DomainError("total power must be positive");
  if (opt.max_iter < 1) throw ConfigError("max_iter must be at least 1");
  const ChannelDecomposition dec = svd(H);
  const Eigen::Index n = dec.n;
  if (n > 4)
    throw UnsupportedError("fixed_point_precoder supports at most 4 streams");
  if (static_cast<Eigen::Index>(alph.components.size()) != n)
    throw ConfigError("alphabet dimension does not match the channel");
  if (alph.cardinality() > 256)
    throw UnsupportedError("fixed_point_precoder supports at most 256 symbols");

  const Eigen::Index n_t = H.cols();
  std::vector<Eigen::MatrixXcd> inits;
  {
    const auto wf = gaussian_waterfill(dec.lambda, P_T).first;
    const Eigen::VectorXcd p = wf.p2.cwiseSqrt().cast<std::complex<double>>();
    inits.push_back(dec.V.adjoint() * p.asDiagonal());
  }
  for (const auto& extra : opt.extra_inits) {
    if (extra.rows() != n_t || extra.cols() != n)
      throw ConfigError("extra init has wrong shape");
    const double nrm = extra.norm();
    if (!(nrm > 0.0)) throw ConfigError("extra init is zero");
    inits.push_back(extra / nrm);
  }

  const std::uint64_t track_seed = derive_seed(opt.seed, 0xF1A0);
  auto track = [&](const Eigen::MatrixXcd& T) {
    const auto ch =
        MixtureChannel::from_linear_map(H * T, alph, std::sqrt(P_T));
    McOptions mc;
    mc.samples = opt.track_samples;
    mc.seed = track_seed;  // common random numbers across iterates
    return mi_mixture_mc(ch, mc.samples, mc.seed).value;
  };

  Eigen::MatrixXcd best_T;
  double best_mi = -1.0;
  bool best_converged = false;
  int total_iters = 0;

  const double g = opt.damping;
  for (size_t run = 0; run < inits.size(); ++run) {
    Eigen::MatrixXcd T = inits[run];
    T /= T.norm();
    Eigen::MatrixXcd run_best_T = T;
    double run_best_mi = -1.0;
    bool run_converged = false;
    int it = 0;
    for (; it < opt.max_iter; ++it) {
      const double mi_t = track(T);
      if (mi_t > run_best_mi) {
        run_best_mi = mi_t;
        run_best_T = T;
      }
      const Eigen::MatrixXcd E = mmse_matrix(
          T, H, alph, P_T, opt.mmse_samples,
          derive_seed(opt.seed,
                      1000 + 4096 * run + static_cast<std::uint64_t>(it)));
      Eigen::MatrixXcd Tn = H.adjoint() * (H * (T * E));
      const double nrm = Tn.norm();
      if (!(nrm > 1e-300)) {
        // Sampled MMSE error is numerically zero (every symbol decodable),
        // so the update has no direction left.
        run_converged = true;
        ++it;
        break;
      }
      Tn /= nrm;
      Eigen::MatrixXcd Tnext = (1.0 - g) * T + g * Tn;
      Tnext /= Tnext.norm();
      const double delta = (Tnext - T).norm();
      T = Tnext;
      if (delta < opt.tol) {
        run_converged = true;
        ++it;
        break;
      }
    }
    total_iters += it;
    // The fixed point of a converged run still has to beat the best tracked
    // iterate; a good start can sit above the point it drains to.
    if (run_converged) {
      const double mi_fin = track(T);
      if (mi_fin > run_best_mi) {
        run_best_mi = mi_fin;
        run_best_T = T;
      }
    }
    if (run_best_mi > best_mi) {
      best_mi = run_best_mi;
      best_T = run_best_T;
      best_converged = run_converged;
    }
  }

  FixedPointResult res;
  res.T = best_T;
  res.converged = best_converged;
  res.iterations = total_iters;
  const auto ch =
      MixtureChannel::from_linear_map(H * res.T, alph, std::sqrt(P_T));
  res.mi = mi_mixture_mc(ch, opt.final_samples, derive_seed(opt.seed, 0xFEED));
  return res;
}

}  // namespace xprecode
