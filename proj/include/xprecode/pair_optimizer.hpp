#pragma once

#include <string>
#include <vector>

#include "xprecode/channel.hpp"
#include "xprecode/constellation.hpp"
#include "xprecode/mi.hpp"

namespace xprecode {

/// Search controls for the (theta, f) grid.  The published defaults are a
/// 1 degree x 0.02 coarse grid refined twice by a factor of 5 around the
/// incumbent.  Comparisons use a 1e-9 bit tie window so exact symmetries
/// (beta = 1) resolve to the smallest theta, then smallest f.
struct OptimizeOptions {
  double theta_step_deg = 1.0;
  double theta_max_deg = 90.0;  ///< exclusive; lower to restrict the search
  double f_step = 0.02;
  int refine_rounds = 2;
  int refine_shrink = 5;
  double screen_tol_bits = 1e-3;  ///< node choice for the coarse screen
  QuadOptions quad;               ///< final-evaluation accuracy
};

struct PairOptimum {
  double theta = 0;  ///< radians
  double f = 0.5;
  MiEstimate mi;
};

/// Table of optimal (theta, f) per condition-number bin and effective SNR.
/// theta is stored in degrees; values are rounded to 9 significant digits
/// so serialization round-trips bit-exactly.
struct LookupTable {
  struct Cell {
    double theta_deg = 0;
    double f = 0.5;
    double mi_bits = 0;
  };
  std::string alphabet;
  std::vector<double> beta_bins;            ///< sorted ascending
  std::vector<double> snr_dB;               ///< sorted ascending
  std::vector<std::vector<Cell>> cells;     ///< [beta_bin][snr]

  bool empty() const { return beta_bins.empty() || snr_dB.empty(); }
};

struct TableQuery {
  double theta = 0;  ///< radians
  double f = 0.5;
  double mi_bits = 0;
};

/// Maximize pair MI over the rotation angle and power fraction at effective
/// total power P_T_eff.  The channel is reparameterized internally to
/// gains (beta, 1)/sqrt(1+beta^2) driven at P_T_eff * alpha.
PairOptimum optimize_pair(const PairChannel& pc, double P_T_eff,
                          const ProductAlphabet& alph,
                          const OptimizeOptions& opt = {});

struct BuildTableOptions {
  OptimizeOptions optimize;
  int n_threads = 0;  ///< 0: hardware concurrency
};

/// One optimize_pair call per (beta bin, SNR) cell.  Cells fan out to
/// worker threads; assembly is by index, so the result is identical to a
/// serial build.
LookupTable build_table(const std::vector<double>& beta_bins,
                        const std::vector<double>& snr_grid_dB,
                        const Constellation& alph,
                        const BuildTableOptions& opt = {});

/// Nearest beta bin (ties toward the smaller bin), then linear
/// interpolation of (theta*, f*, MI*) in effective SNR dB = 10 log10(P_T
/// alpha), clamped at the grid ends.
TableQuery lookup(const LookupTable& table, double alpha, double beta,
                  double P_T);

/// Round to the given number of significant decimal digits.
double round_sig(double x, int digits);

}  // namespace xprecode
