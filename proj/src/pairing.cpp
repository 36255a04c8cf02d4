#include "xprecode/pairing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "xprecode/baselines.hpp"
#include "xprecode/errors.hpp"
#include "xprecode/rng.hpp"

namespace xprecode {

namespace {

void check_even(int n) {
  if (n < 2 || n % 2 != 0)
    throw UnsupportedError("pairing needs an even number of subchannels");
}

void check_sorted_gains(const Eigen::VectorXd& gains) {
  for (Eigen::Index i = 0; i < gains.size(); ++i) {
    if (!(gains(i) > 0.0))
      throw DomainError("subchannel gains must be positive");
    if (i > 0 && gains(i) > gains(i - 1) * (1.0 + 1e-12))
      throw ConstraintError("gains must be sorted in descending order");
  }
}

void enumerate_rec(int n, std::vector<char>& used,
                   std::vector<std::pair<int, int>>& cur,
                   std::vector<Pairing>& out) {
  int i0 = -1;
  for (int i = 1; i <= n; ++i)
    if (!used[static_cast<size_t>(i)]) {
      i0 = i;
      break;
    }
  if (i0 < 0) {
    out.push_back(Pairing{cur});
    return;
  }
  used[static_cast<size_t>(i0)] = 1;
  for (int j = i0 + 1; j <= n; ++j) {
    if (used[static_cast<size_t>(j)]) continue;
    used[static_cast<size_t>(j)] = 1;
    cur.emplace_back(i0, j);
    enumerate_rec(n, used, cur, out);
    cur.pop_back();
    used[static_cast<size_t>(j)] = 0;
  }
  used[static_cast<size_t>(i0)] = 0;
}

/// Jonker-Volgenant shortest augmenting path assignment, minimizing.
/// Returns row -> column for a square cost matrix.
std::vector<int> solve_assignment_min(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<size_t>(n) + 1, 0.0);
  std::vector<int> p(static_cast<size_t>(n) + 1, 0);
  std::vector<int> way(static_cast<size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<size_t>(n) + 1, kInf);
    std::vector<char> used(static_cast<size_t>(n) + 1, 0);
    do {
      used[static_cast<size_t>(j0)] = 1;
      const int i0 = p[static_cast<size_t>(j0)];
      int j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<size_t>(i0)] -
                           v[static_cast<size_t>(j)];
        if (cur < minv[static_cast<size_t>(j)]) {
          minv[static_cast<size_t>(j)] = cur;
          way[static_cast<size_t>(j)] = j0;
        }
        if (minv[static_cast<size_t>(j)] < delta) {
          delta = minv[static_cast<size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<size_t>(j)]) {
          u[static_cast<size_t>(p[static_cast<size_t>(j)])] += delta;
          v[static_cast<size_t>(j)] -= delta;
        } else {
          minv[static_cast<size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<size_t>(j0)];
      p[static_cast<size_t>(j0)] = p[static_cast<size_t>(j1)];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(static_cast<size_t>(n), -1);
  for (int j = 1; j <= n; ++j)
    if (p[static_cast<size_t>(j)] > 0)
      row_to_col[static_cast<size_t>(p[static_cast<size_t>(j)]) - 1] = j - 1;
  return row_to_col;
}

PairChannel pair_channel_at(const Eigen::VectorXd& gains, int i, int j) {
  const double a = gains(i - 1), b = gains(j - 1);
  return PairChannel{std::max(a, b), std::min(a, b)};
}

}  // namespace

void Pairing::validate(int n_total) const {
  if (n_total < 2 || n_total % 2 != 0)
    throw ConstraintError("pairing domain must be even and nonempty");
  if (static_cast<int>(pairs.size()) * 2 != n_total)
    throw ConstraintError("pairing does not cover all subchannels");
  std::vector<char> seen(static_cast<size_t>(n_total) + 1, 0);
  int prev_first = 0;
  for (const auto& [i, j] : pairs) {
    if (i < 1 || j < 1 || i > n_total || j > n_total)
      throw ConstraintError("pair index out of range");
    if (i >= j) throw ConstraintError("pairs must satisfy i < j");
    if (seen[static_cast<size_t>(i)] || seen[static_cast<size_t>(j)])
      throw ConstraintError("subchannel appears in more than one pair");
    seen[static_cast<size_t>(i)] = seen[static_cast<size_t>(j)] = 1;
    if (i <= prev_first)
      throw ConstraintError("pairs must be sorted by first index");
    prev_first = i;
  }
}

void Pairing::normalize() {
  for (auto& [i, j] : pairs)
    if (i > j) std::swap(i, j);
  std::sort(pairs.begin(), pairs.end());
}

std::vector<Pairing> enumerate_pairings(int n) {
  check_even(n);
  if (n > 10)
    throw UnsupportedError("pairing enumeration is limited to n <= 10");
  std::vector<Pairing> out;
  std::vector<char> used(static_cast<size_t>(n) + 1, 0);
  std::vector<std::pair<int, int>> cur;
  enumerate_rec(n, used, cur, out);
  return out;
}

Pairing x_pairing(int n) {
  check_even(n);
  Pairing p;
  for (int k = 1; k <= n / 2; ++k) p.pairs.emplace_back(k, n + 1 - k);
  return p;
}

Pairing conjectured_pairing(int n) {
  check_even(n);
  Pairing p;
  for (int k = 1; k <= n / 2; ++k) p.pairs.emplace_back(k, n / 2 + k);
  return p;
}

Pairing hungarian_pairing(const Eigen::VectorXd& gains, double P_T,
                          const LookupTable& table) {
  const int n = static_cast<int>(gains.size());
  check_even(n);
  check_sorted_gains(gains);
  if (!(P_T > 0.0)) throw DomainError("total power must be positive");
  if (table.empty())
    throw ConfigError("hungarian pairing needs a non-empty lookup table");
  const int m = n / 2;
  Pairing p;
  if (m == 1) {
    p.pairs.emplace_back(1, 2);
    return p;
  }

  // Rows are the weak half m+1..n, columns the strong half 1..m; entries
  // are negated table MI under uniform pair power.
  Eigen::MatrixXd cost(m, m);
  const double share = 2.0 / static_cast<double>(n);
  for (int i = 0; i < m; ++i) {
    const double lw = gains(m + i);
    for (int j = 0; j < m; ++j) {
      const double ls = gains(j);
      const double alpha = ls * ls + lw * lw;
      const double beta = ls / lw;
      cost(i, j) = -lookup(table, alpha, beta, P_T * share).mi_bits;
    }
  }
  const std::vector<int> rc = solve_assignment_min(cost);
  for (int i = 0; i < m; ++i) p.pairs.emplace_back(rc[static_cast<size_t>(i)] + 1, m + i + 1);
  p.normalize();
  return p;
}

std::vector<Pairing> random_pairings(int n, int count, std::uint64_t seed) {
  check_even(n);
  if (count < 0) throw ConfigError("pairing count must be nonnegative");
  Rng rng(seed);
  std::vector<Pairing> out;
  out.reserve(static_cast<size_t>(count));
  std::vector<int> perm(static_cast<size_t>(n));
  for (int c = 0; c < count; ++c) {
    std::iota(perm.begin(), perm.end(), 1);
    for (int i = n - 1; i > 0; --i) {
      const auto j = static_cast<int>(
          rng.uniform_int(static_cast<std::uint64_t>(i) + 1));
      std::swap(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(j)]);
    }
    Pairing p;
    for (int k = 0; k < n / 2; ++k)
      p.pairs.emplace_back(perm[static_cast<size_t>(2 * k)],
                           perm[static_cast<size_t>(2 * k + 1)]);
    p.normalize();
    out.push_back(std::move(p));
  }
  return out;
}

PairPowerAllocation allocate_power_pairs(const Pairing& pairing,
                                         const Eigen::VectorXd& gains,
                                         double P_T, PowerMode mode,
                                         const LookupTable* table) {
  const int n = static_cast<int>(gains.size());
  pairing.validate(n);
  for (Eigen::Index i = 0; i < gains.size(); ++i)
    if (!(gains(i) > 0.0))
      throw DomainError("subchannel gains must be positive");
  const size_t m = pairing.pairs.size();

  PairPowerAllocation alloc;
  alloc.pbar2.assign(m, 0.0);
  switch (mode) {
    case PowerMode::uniform: {
      std::fill(alloc.pbar2.begin(), alloc.pbar2.end(),
                1.0 / static_cast<double>(m));
      return alloc;
    }
    case PowerMode::waterfill_alpha: {
      Eigen::VectorXd pair_gain(static_cast<Eigen::Index>(m));
      for (size_t k = 0; k < m; ++k) {
        const auto pc = pair_channel_at(gains, pairing.pairs[k].first,
                                        pairing.pairs[k].second);
        pair_gain(static_cast<Eigen::Index>(k)) = std::sqrt(pc.alpha());
      }
      const auto wf = gaussian_waterfill(pair_gain, P_T).first;
      for (size_t k = 0; k < m; ++k)
        alloc.pbar2[k] = wf.p2(static_cast<Eigen::Index>(k));
      return alloc;
    }
    case PowerMode::exhaustive: {
      if (m != 2)
        throw UnsupportedError("exhaustive pair power requires n = 4");
      if (table == nullptr || table->empty())
        throw ConfigError("exhaustive pair power needs a lookup table");
      if (!(P_T > 0.0)) throw DomainError("total power must be positive");
      PairChannel pcs[2] = {pair_channel_at(gains, pairing.pairs[0].first,
                                            pairing.pairs[0].second),
                            pair_channel_at(gains, pairing.pairs[1].first,
                                            pairing.pairs[1].second)};
      auto score = [&](double s) {
        double total = 0.0;
        const double shares[2] = {s, 1.0 - s};
        for (int k = 0; k < 2; ++k) {
          if (shares[k] <= 0.0) continue;
          total += lookup(*table, pcs[k].alpha(), pcs[k].beta(),
                          P_T * shares[k])
                       .mi_bits;
        }
        return total;
      };
      double best_s = 0.0, best = -1.0;
      for (int i = 0; i <= 100; ++i) {
        const double s = 0.01 * i;
        const double v = score(s);
        if (v > best) {
          best = v;
          best_s = s;
        }
      }
      const double lo = std::max(0.0, best_s - 0.01);
      const double hi = std::min(1.0, best_s + 0.01);
      for (int i = 0;; ++i) {
        const double s = lo + 0.001 * i;
        if (s > hi + 1e-12) break;
        const double v = score(s);
        if (v > best) {
          best = v;
          best_s = s;
        }
      }
      alloc.pbar2 = {best_s, 1.0 - best_s};
      return alloc;
    }
  }
  throw ConfigError("unknown power mode");
}

namespace {

struct Candidate {
  Pairing pairing;
  PairPowerAllocation power;
  std::vector<PairParams> params;
  std::vector<double> pair_mi_bits;
  MiEstimate total;
};

Candidate rescore(const Eigen::VectorXd& gains, double P_T,
                  const Pairing& pairing, const PairPowerAllocation& power,
                  std::vector<PairParams> params, const ProductAlphabet& pa,
                  const EvalBudget& budget) {
  Candidate c;
  c.pairing = pairing;
  c.power = power;
  c.params = std::move(params);
  c.total = MiEstimate{0.0, 0.0, MiMethod::quadrature, 0};
  double var = 0.0;
  for (size_t k = 0; k < pairing.pairs.size(); ++k) {
    const auto& pr = c.params[k];
    double bits = 0.0;
    if (pr.pbar2 > 0.0) {
      const auto pc =
          pair_channel_at(gains, pairing.pairs[k].first, pairing.pairs[k].second);
      const MiEstimate mi =
          pair_mi(pc, P_T, pr.pbar2, pr.f, pr.theta, pa, budget);
      bits = mi.value;
      var += mi.std_error * mi.std_error;
      c.total.samples_used += mi.samples_used;
    }
    c.pair_mi_bits.push_back(bits);
    c.total.value += bits;
  }
  c.total.std_error = std::sqrt(var);
  return c;
}

std::vector<PairParams> params_from_table(const Eigen::VectorXd& gains,
                                          double P_T, const Pairing& pairing,
                                          const PairPowerAllocation& power,
                                          const LookupTable& table) {
  std::vector<PairParams> params;
  for (size_t k = 0; k < pairing.pairs.size(); ++k) {
    const double pbar2 = power.pbar2[k];
    if (pbar2 <= 0.0) {
      params.push_back(PairParams{0.0, 1.0, 0.0});
      continue;
    }
    const auto pc =
        pair_channel_at(gains, pairing.pairs[k].first, pairing.pairs[k].second);
    const TableQuery q = lookup(table, pc.alpha(), pc.beta(), P_T * pbar2);
    params.push_back(PairParams{q.theta, q.f, pbar2});
  }
  return params;
}

}  // namespace

PlanResult plan(const Eigen::VectorXd& gains, double P_T,
                const Constellation& alph, const LookupTable& table,
                PlanStrategy strategy, const PlanOptions& opt) {
  const int n = static_cast<int>(gains.size());
  check_even(n);
  check_sorted_gains(gains);
  if (!(P_T > 0.0)) throw DomainError("total power must be positive");
  if (!table.empty() && table.alphabet != alph.name)
    throw ConfigError("lookup table was built for alphabet " + table.alphabet +
                      ", not " + alph.name);
  const ProductAlphabet pa = product(alph, alph);
  EvalBudget budget;
  budget.method = MiMethod::quadrature;
  budget.quad = opt.quad;

  auto heuristic = [&](const Pairing& pairing) -> Candidate {
    if (table.empty())
      throw ConfigError("this planning strategy needs a lookup table");
    const auto power = allocate_power_pairs(pairing, gains, P_T,
                                            PowerMode::waterfill_alpha);
    auto params = params_from_table(gains, P_T, pairing, power, table);
    return rescore(gains, P_T, pairing, power, std::move(params), pa, budget);
  };

  PlanResult res;
  res.strategy = strategy;

  switch (strategy) {
    case PlanStrategy::x:
    case PlanStrategy::conjectured:
    case PlanStrategy::hungarian: {
      Pairing pairing;
      if (strategy == PlanStrategy::x) {
        pairing = x_pairing(n);
      } else if (strategy == PlanStrategy::conjectured) {
        pairing = conjectured_pairing(n);
      } else {
        pairing = hungarian_pairing(gains, P_T, table);
      }
      Candidate c = heuristic(pairing);
      res.pairing = std::move(c.pairing);
      res.power = std::move(c.power);
      res.params = std::move(c.params);
      res.pair_mi_bits = std::move(c.pair_mi_bits);
      res.total_mi = c.total;
      return res;
    }
    case PlanStrategy::random_best: {
      if (opt.random_count < 1)
        throw ConfigError("random_best needs at least one draw");
      const auto pairings = random_pairings(n, opt.random_count, opt.seed);
      bool have = false;
      Candidate best;
      double sum = 0.0;
      for (const auto& pairing : pairings) {
        Candidate c = heuristic(pairing);
        sum += c.total.value;
        if (!have || c.total.value > best.total.value) {
          best = std::move(c);
          have = true;
        }
      }
      res.pairing = std::move(best.pairing);
      res.power = std::move(best.power);
      res.params = std::move(best.params);
      res.pair_mi_bits = std::move(best.pair_mi_bits);
      res.total_mi = best.total;
      res.mean_random_mi_bits = sum / static_cast<double>(pairings.size());
      return res;
    }
    case PlanStrategy::exhaustive:
      break;
  }

  if (n > 6)
    throw UnsupportedError("exhaustive planning is limited to n <= 6");
  const auto pairings = enumerate_pairings(n);
  std::vector<PowerMode> modes = {PowerMode::uniform};
  if (n > 2) modes.push_back(PowerMode::waterfill_alpha);
  if (n == 4 && !table.empty()) modes.push_back(PowerMode::exhaustive);

  bool have = false;
  Candidate best;
  auto consider = [&](Candidate&& c) {
    if (!have || c.total.value > best.total.value) {
      best = std::move(c);
      have = true;
    }
  };

  for (const auto& pairing : pairings) {
    for (const auto mode : modes) {
      const auto power = allocate_power_pairs(pairing, gains, P_T, mode,
                                              table.empty() ? nullptr : &table);
      Candidate c;
      c.pairing = pairing;
      c.power = power;
      c.total = MiEstimate{0.0, 0.0, MiMethod::quadrature, 0};
      double var = 0.0;
      for (size_t k = 0; k < pairing.pairs.size(); ++k) {
        const double pbar2 = power.pbar2[k];
        if (pbar2 <= 0.0) {
          c.params.push_back(PairParams{0.0, 1.0, 0.0});
          c.pair_mi_bits.push_back(0.0);
          continue;
        }
        const auto pc = pair_channel_at(gains, pairing.pairs[k].first,
                                        pairing.pairs[k].second);
        const PairOptimum po =
            optimize_pair(pc, P_T * pbar2, pa, opt.optimize);
        c.params.push_back(PairParams{po.theta, po.f, pbar2});
        c.pair_mi_bits.push_back(po.mi.value);
        c.total.value += po.mi.value;
        var += po.mi.std_error * po.mi.std_error;
        c.total.samples_used += po.mi.samples_used;
      }
      c.total.std_error = std::sqrt(var);
      consider(std::move(c));
    }
  }

  // Uncoded Mercury/waterfilling is a feasible point of the search space
  // (theta = 0 with per-subchannel powers folded into the pair shares), so
  // the exhaustive plan can never fall below it.
  {
    const auto mw = mercury_waterfill(gains, P_T, alph).first;
    const Pairing pairing = x_pairing(n);
    PairPowerAllocation power;
    std::vector<PairParams> params;
    for (const auto& [i, j] : pairing.pairs) {
      const double qi = mw.p2(i - 1), qj = mw.p2(j - 1);
      const double pbar2 = qi + qj;
      // The stronger subchannel of the pair carries fraction f.
      const double f =
          pbar2 > 0.0 ? (gains(i - 1) >= gains(j - 1) ? qi : qj) / pbar2 : 1.0;
      power.pbar2.push_back(pbar2);
      params.push_back(PairParams{0.0, f, pbar2});
    }
    consider(rescore(gains, P_T, pairing, power, std::move(params), pa, budget));
  }

  res.pairing = std::move(best.pairing);
  res.power = std::move(best.power);
  res.params = std::move(best.params);
  res.pair_mi_bits = std::move(best.pair_mi_bits);
  res.total_mi = best.total;
  return res;
}

}  // namespace xprecode
