#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

#include "xprecode/constellation.hpp"
#include "xprecode/mi.hpp"
#include "xprecode/pair_optimizer.hpp"

namespace xprecode {

/// Perfect matching on subchannels 1..n (1-based), i_k < j_k, pairs
/// ordered by i_k.
struct Pairing {
  std::vector<std::pair<int, int>> pairs;

  int n() const { return 2 * static_cast<int>(pairs.size()); }
  /// Throws ConstraintError unless this is a valid matching on 1..n.
  void validate(int n) const;
  /// Sort members within pairs and pairs by first index.
  void normalize();

  bool operator==(const Pairing&) const = default;
};

/// Power shares of the pairs, on the unit simplex.
struct PairPowerAllocation {
  std::vector<double> pbar2;
};

/// All perfect matchings of 1..n, deterministic order.  n even, n <= 10.
std::vector<Pairing> enumerate_pairings(int n);

/// k-th with (n-k+1)-th subchannel.
Pairing x_pairing(int n);

/// k-th with (n/2+k)-th subchannel.
Pairing conjectured_pairing(int n);

/// Assignment of the stronger half (jobs 1..n/2) to the weaker half
/// (workers n/2+1..n) maximizing summed table MI, with uniform pair power
/// 2 P_T / n assumed for the cost entries; O(n^3).
Pairing hungarian_pairing(const Eigen::VectorXd& gains, double P_T,
                          const LookupTable& table);

/// Uniform random perfect matchings, reproducible.
std::vector<Pairing> random_pairings(int n, int count, std::uint64_t seed);

enum class PowerMode { uniform, waterfill_alpha, exhaustive };

/// Split the unit power budget between pairs.  waterfill_alpha treats pair
/// k as a Gaussian channel of gain alpha_k^2; exhaustive (n = 4 only)
/// grid-searches the single free share scored by table lookup.
PairPowerAllocation allocate_power_pairs(const Pairing& pairing,
                                         const Eigen::VectorXd& gains,
                                         double P_T, PowerMode mode,
                                         const LookupTable* table = nullptr);

enum class PlanStrategy { exhaustive, x, conjectured, hungarian, random_best };

struct PlanOptions {
  int random_count = 50;
  std::uint64_t seed = 1;
  QuadOptions quad;            ///< re-scoring accuracy
  OptimizeOptions optimize;    ///< per-pair search in the exhaustive strategy
};

struct PlanResult {
  Pairing pairing;
  PairPowerAllocation power;
  std::vector<PairParams> params;
  std::vector<double> pair_mi_bits;
  MiEstimate total_mi;
  double mean_random_mi_bits = 0;  ///< random_best only
  PlanStrategy strategy = PlanStrategy::x;
};

/// Choose pairing, pair powers and per-pair (theta, f); total MI is the sum
/// of per-pair quadrature re-evaluations at the chosen parameters, so
/// strategies are compared on one common scale.  gains must be sorted
/// descending.  exhaustive requires n <= 6 and searches pairings x power
/// modes with fresh per-pair optimization; the heuristics read (theta*, f*)
/// from the table.
PlanResult plan(const Eigen::VectorXd& gains, double P_T,
                const Constellation& alph, const LookupTable& table,
                PlanStrategy strategy, const PlanOptions& opt = {});

}  // namespace xprecode
