#include "xprecode/pair_optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <map>
#include <thread>

#include "xprecode/errors.hpp"

namespace xprecode {

namespace {

constexpr double kDeg = M_PI / 180.0;
constexpr double kTieBits = 1e-9;

Eigen::Matrix2d pair_map(const PairChannel& pc, double f, double theta) {
  const Eigen::Vector2d lf(pc.lambda_strong * std::sqrt(f),
                           pc.lambda_weak * std::sqrt(1.0 - f));
  return lf.asDiagonal() * rotation2(theta);
}

/// Smallest node count in the doubling sequence whose last doubling moved
/// the value by less than tol.
int converged_nodes(const std::function<double(int)>& eval, double tol,
                    int start, int cap) {
  int n = start;
  double prev = eval(n);
  while (2 * n <= cap) {
    const double next = eval(2 * n);
    n *= 2;
    if (std::abs(next - prev) < tol) return n;
    prev = next;
  }
  return n;
}

/// Within the tie window, prefer smaller theta, then the power split
/// closest to one half.  The MI surface flattens below any evaluation
/// tolerance once both subchannels saturate, so plateau ties are real and
/// must resolve to the canonical point, not to an iteration-order artifact.
bool tie_better(double th, double f, double bth, double bf) {
  if (th != bth) return th < bth;
  const double df = std::abs(f - 0.5), dbf = std::abs(bf - 0.5);
  if (df != dbf) return df < dbf;
  return f < bf;
}

struct Incumbent {
  bool set = false;
  double val = 0, theta_deg = 0, f = 0.5;

  void offer(double v, double th, double ff) {
    if (!set) {
      set = true;
      val = v;
      theta_deg = th;
      f = ff;
      return;
    }
    if (v > val + kTieBits) {
      val = v;
      theta_deg = th;
      f = ff;
    } else if (v >= val - kTieBits && tie_better(th, ff, theta_deg, f)) {
      val = std::max(val, v);
      theta_deg = th;
      f = ff;
    }
  }
};

}  // namespace

double round_sig(double x, int digits) {
  if (x == 0 || !std::isfinite(x)) return x;
  const double mag =
      std::pow(10.0, digits - 1 - std::floor(std::log10(std::abs(x))));
  return std::round(x * mag) / mag;
}

PairOptimum optimize_pair(const PairChannel& pc, double P_T_eff,
                          const ProductAlphabet& alph,
                          const OptimizeOptions& opt) {
  if (!(P_T_eff > 0)) throw DomainError("optimize_pair: P_T_eff must be > 0");
  if (alph.components.size() != 2)
    throw DomainError("optimize_pair: alphabet must have two components");

  const PairChannel pcn = pc.normalized();
  const double snr = P_T_eff * pc.alpha();
  const double amp = std::sqrt(snr);

  bool split_ok = true;
  for (const auto& c : alph.components) split_ok &= c.is_square_qam();

  Eigen::MatrixXd pam;
  if (split_ok) pam = pam_product(alph);

  const auto score = [&](double theta_deg, double f, int n_axis) {
    const Eigen::Matrix2d B = pair_map(pcn, f, theta_deg * kDeg);
    if (split_ok) {
      const Eigen::MatrixXd means = amp * (B * pam);
      return detail::mi_real_mixture_bits<double>(means, 2.0, n_axis);
    }
    QuadOptions q;
    q.fixed_nodes = n_axis;
    return mi_mixture_quad(MixtureChannel::from_real_map(B, alph, amp), q)
        .value;
  };

  // Pick node counts once from a few anchor cells, then keep them fixed so
  // the surface seen by the search is smooth.
  const double anchors[][2] = {{45.0, 0.5}, {0.0, 1.0}, {30.0, 0.7}};
  int n_screen = 8, n_final = 8;
  for (const auto& a : anchors) {
    std::map<int, double> memo;
    const auto eval = [&](int n) {
      auto it = memo.find(n);
      if (it == memo.end())
        it = memo.emplace(n, score(a[0], a[1], n)).first;
      return it->second;
    };
    n_screen = std::max(n_screen,
                        converged_nodes(eval, opt.screen_tol_bits, 8, 128));
    n_final = std::max(
        n_final, converged_nodes(eval, opt.quad.tol_bits, n_screen, 256));
  }

  // MI is independent of theta when the gains are equal, so the search
  // degenerates to the power split.
  const bool theta_free = std::abs(pcn.beta() - 1.0) > 1e-12;

  Incumbent inc;
  for (double th = 0;
       th < opt.theta_max_deg - 1e-12 && (theta_free || th == 0.0);
       th += opt.theta_step_deg)
    for (int fi = 0; fi * opt.f_step <= 1.0 + 1e-12; ++fi) {
      const double f = std::min(fi * opt.f_step, 1.0);
      inc.offer(score(th, f, n_screen), th, f);
    }

  double th_step = opt.theta_step_deg, f_step = opt.f_step;
  for (int round = 0; round < opt.refine_rounds; ++round) {
    th_step /= opt.refine_shrink;
    f_step /= opt.refine_shrink;
    const int R = opt.refine_shrink + 2;
    const double cth = inc.theta_deg, cf = inc.f;
    inc = Incumbent{};
    for (int a = -R; a <= R; ++a) {
      if (!theta_free && a != 0) continue;
      double th = cth + a * th_step;
      if (th < -1e-12 || th >= opt.theta_max_deg - 1e-12) continue;
      th = std::max(th, 0.0);
      for (int b = -R; b <= R; ++b) {
        double f = cf + b * f_step;
        if (f < -1e-12 || f > 1.0 + 1e-12) continue;
        f = std::clamp(f, 0.0, 1.0);
        inc.offer(score(th, f, n_final), th, f);
      }
    }
  }

  PairOptimum out;
  out.theta = inc.theta_deg * kDeg;
  out.f = inc.f;
  QuadOptions fq = opt.quad;
  fq.base_nodes = n_final;
  fq.fixed_nodes = 0;
  out.mi = pair_mi(pcn, snr, 1.0, inc.f, out.theta, alph,
                   EvalBudget{MiMethod::quadrature, fq, {}});
  return out;
}

LookupTable build_table(const std::vector<double>& beta_bins,
                        const std::vector<double>& snr_grid_dB,
                        const Constellation& alph,
                        const BuildTableOptions& opt) {
  if (beta_bins.empty() || snr_grid_dB.empty())
    throw ConfigError("build_table: grids must be nonempty");
  if (!std::is_sorted(beta_bins.begin(), beta_bins.end()) ||
      !std::is_sorted(snr_grid_dB.begin(), snr_grid_dB.end()))
    throw ConfigError("build_table: grids must be sorted ascending");
  for (double b : beta_bins)
    if (!(b >= 1.0)) throw DomainError("build_table: beta bins must be >= 1");

  LookupTable table;
  table.alphabet = alph.name;
  table.beta_bins = beta_bins;
  table.snr_dB = snr_grid_dB;
  table.cells.assign(beta_bins.size(),
                     std::vector<LookupTable::Cell>(snr_grid_dB.size()));

  const ProductAlphabet pa = product(alph, alph);
  const auto n_tasks = beta_bins.size() * snr_grid_dB.size();
  const auto run_cell = [&](std::size_t t) {
    const std::size_t b = t / snr_grid_dB.size(), s = t % snr_grid_dB.size();
    const double beta = beta_bins[b];
    const double norm = std::sqrt(1.0 + beta * beta);
    const PairChannel pc(beta / norm, 1.0 / norm);
    const double p = std::pow(10.0, snr_grid_dB[s] / 10.0);
    const PairOptimum po = optimize_pair(pc, p, pa, opt.optimize);
    table.cells[b][s] = {round_sig(po.theta / kDeg, 9), round_sig(po.f, 9),
                         round_sig(po.mi.value, 9)};
  };

  unsigned n_threads = opt.n_threads > 0
                           ? static_cast<unsigned>(opt.n_threads)
                           : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(n_tasks));
  if (n_threads <= 1) {
    for (std::size_t t = 0; t < n_tasks; ++t) run_cell(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n_threads; ++w)
      pool.emplace_back([&] {
        for (std::size_t t = next++; t < n_tasks; t = next++) run_cell(t);
      });
    for (auto& th : pool) th.join();
  }
  return table;
}

TableQuery lookup(const LookupTable& table, double alpha, double beta,
                  double P_T) {
  if (table.empty()) throw ConfigError("lookup: table is empty");
  if (!(alpha > 0) || !(beta >= 1) || !(P_T > 0))
    throw DomainError("lookup: need alpha > 0, beta >= 1, P_T > 0");

  std::size_t bin = 0;
  for (std::size_t b = 1; b < table.beta_bins.size(); ++b)
    if (std::abs(table.beta_bins[b] - beta) <
        std::abs(table.beta_bins[bin] - beta))
      bin = b;

  const auto& grid = table.snr_dB;
  const double x =
      std::clamp(10.0 * std::log10(P_T * alpha), grid.front(), grid.back());
  std::size_t hi = 1;
  while (hi + 1 < grid.size() && grid[hi] < x) ++hi;
  if (grid.size() == 1) hi = 0;
  const std::size_t lo = hi == 0 ? 0 : hi - 1;
  const double span = grid[hi] - grid[lo];
  const double t = span > 0 ? (x - grid[lo]) / span : 0.0;

  const auto& c0 = table.cells[bin][lo];
  const auto& c1 = table.cells[bin][hi];
  TableQuery q;
  q.theta = ((1 - t) * c0.theta_deg + t * c1.theta_deg) * kDeg;
  q.f = (1 - t) * c0.f + t * c1.f;
  q.mi_bits = (1 - t) * c0.mi_bits + t * c1.mi_bits;
  return q;
}

}  // namespace xprecode
