#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "xprecode/baselines.hpp"
#include "xprecode/channel.hpp"
#include "xprecode/constellation.hpp"
#include "xprecode/errors.hpp"
#include "xprecode/io.hpp"
#include "xprecode/mi.hpp"
#include "xprecode/pair_optimizer.hpp"
#include "xprecode/pairing.hpp"
#include "xprecode/precoder.hpp"
#include "xprecode/rng.hpp"

using namespace xprecode;
using nlohmann::json;

namespace {

constexpr double kDeg = M_PI / 180.0;

double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }

// "17", "0:30" (step 1) or "0:30:2"; inclusive, strictly increasing.
std::vector<double> parse_snr_grid(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ':')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      throw ConfigError("bad SNR grid '" + text + "'");
    }
    if (used != tok.size()) throw ConfigError("bad SNR grid '" + text + "'");
    parts.push_back(v);
  }
  if (parts.empty() || parts.size() > 3)
    throw ConfigError("SNR grid must be 'a', 'a:b' or 'a:b:step'");
  if (parts.size() == 1) return parts;
  const double a = parts[0], b = parts[1];
  const double step = parts.size() == 3 ? parts[2] : 1.0;
  if (!(step > 0.0) || b < a)
    throw ConfigError("SNR grid must be increasing with positive step");
  std::vector<double> grid;
  for (double s = a; s <= b + 1e-9; s += step) grid.push_back(s);
  return grid;
}

void emit(const std::string& content, const std::string& out_path) {
  if (out_path.empty())
    std::cout << content;
  else
    write_text_file(out_path, content);
}

std::string table_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / (name + ".json")).string();
}

LookupTable load_or_build_table(const std::string& dir,
                                const Constellation& alph, bool build_missing) {
  const auto path = table_path(dir, alph.name);
  if (std::filesystem::exists(path)) return load_table(path);
  if (!build_missing)
    throw ConfigError("no lookup table at " + path +
                      "; run 'xprecode build-tables' or pass "
                      "--build-missing-tables");
  std::cerr << "building missing table " << path << "\n";
  BuildTableOptions bo;
  std::vector<double> snrs;
  for (int s = -5; s <= 35; ++s) snrs.push_back(s);
  const auto t = build_table({1.0, 1.5, 2.0, 4.0, 8.0}, snrs, alph, bo);
  std::filesystem::create_directories(dir);
  save_table(t, path);
  return t;
}

// ---- optimize-pair ---------------------------------------------------

int cmd_optimize_pair(double beta, double alpha, const std::string& snr_text,
                      int qam, const std::string& out_path) {
  const auto c = make_qam(qam);
  const auto alph = product(c, c);
  const auto grid = parse_snr_grid(snr_text);
  const PairChannel pc(std::sqrt(alpha * beta * beta / (1.0 + beta * beta)),
                       std::sqrt(alpha / (1.0 + beta * beta)));

  json j;
  j["alphabet"] = c.name;
  j["beta"] = beta;
  j["alpha"] = alpha;
  json results = json::array();
  PairOptimum last;
  for (const double snr : grid) {
    const double P = db_to_lin(snr) / alpha;  // effective SNR is P_T * alpha
    last = optimize_pair(pc, P, alph);
    results.push_back(json{{"snr_dB", snr},
                           {"theta_deg", last.theta / kDeg},
                           {"f", last.f},
                           {"mi_bits", last.mi.value}});
  }
  j["results"] = std::move(results);

  if (grid.size() == 1) {
    // one-point runs also report the MI slices through the optimum
    const double P = db_to_lin(grid[0]) / alpha;
    EvalBudget budget;
    json ts = json::array();
    for (int d = 0; d < 90; ++d)
      ts.push_back(json{
          {"theta_deg", static_cast<double>(d)},
          {"mi_bits", pair_mi(pc, P, 1.0, last.f, d * kDeg, alph, budget).value}});
    j["theta_slice_at_f_star"] = std::move(ts);
    json fs = json::array();
    for (int k = 0; k <= 50; ++k)
      fs.push_back(json{
          {"f", k / 50.0},
          {"mi_bits",
           pair_mi(pc, P, 1.0, k / 50.0, last.theta, alph, budget).value}});
    j["f_slice_at_theta_star"] = std::move(fs);
  }

  emit(j.dump(1) + "\n", out_path);
  return 0;
}

// ---- build-tables ----------------------------------------------------

int cmd_build_tables(const std::vector<int>& qams, const std::string& dir,
                     const std::string& betas_text,
                     const std::string& snr_text, int threads) {
  if (!std::filesystem::is_directory(dir))
    throw IoError("table directory does not exist: " + dir);
  std::vector<double> betas;
  {
    std::stringstream ss(betas_text);
    std::string tok;
    while (std::getline(ss, tok, ',')) betas.push_back(std::stod(tok));
  }
  const auto snrs = parse_snr_grid(snr_text);
  for (const int m : qams) {
    const auto c = make_qam(m);
    std::cerr << "building " << c.name << " table: " << betas.size() << " x "
              << snrs.size() << " cells\n";
    BuildTableOptions bo;
    bo.n_threads = threads;
    const auto t = build_table(betas, snrs, c, bo);
    const auto path = table_path(dir, c.name);
    save_table(t, path);
    std::cerr << "wrote " << path << "\n";
  }
  return 0;
}

// ---- sweep -----------------------------------------------------------

struct Scenario {
  std::string desc;
  bool ergodic = false;
  int realizations = 1;
  int nt = 0, nr = 0;
  Eigen::VectorXd gains;  // fixed scenarios, sorted descending
  Eigen::MatrixXcd H;
  bool has_H = false;
  double power_scale = 1.0;  // P_T = power_scale * 10^(snr/10)
};

Scenario scenario_from_channel(const std::string& path) {
  Scenario sc;
  const auto spec = load_channel(path);
  switch (spec.kind) {
    case ChannelSpec::Kind::matrix: {
      const auto dec = svd(spec.H);
      sc.gains = dec.lambda;
      sc.H = spec.H;
      sc.has_H = true;
      sc.desc = "matrix(" + std::to_string(dec.n_r) + "x" +
                std::to_string(dec.n_t) + ")";
      break;
    }
    case ChannelSpec::Kind::diagonal: {
      sc.gains = spec.diagonal;
      std::sort(sc.gains.data(), sc.gains.data() + sc.gains.size(),
                std::greater<double>());
      sc.H = sc.gains.cast<std::complex<double>>().asDiagonal();
      sc.has_H = true;
      sc.desc = "diagonal(n=" + std::to_string(sc.gains.size()) + ")";
      break;
    }
    case ChannelSpec::Kind::impulse_response: {
      const auto of = ofdm_gains(spec.impulse, spec.n_fft);
      sc.gains = of.gains;
      sc.H = sc.gains.cast<std::complex<double>>().asDiagonal();
      sc.has_H = true;
      // the SNR axis is per subcarrier for OFDM runs
      sc.power_scale = static_cast<double>(spec.n_fft);
      sc.desc = "ofdm(n=" + std::to_string(spec.n_fft) + ")";
      break;
    }
  }
  return sc;
}

bool is_xcode(const std::string& s) { return s.rfind("xcode-", 0) == 0; }

PlanStrategy xcode_strategy(const std::string& s) {
  if (s == "xcode-exhaustive") return PlanStrategy::exhaustive;
  if (s == "xcode-x") return PlanStrategy::x;
  if (s == "xcode-conjectured") return PlanStrategy::conjectured;
  if (s == "xcode-hungarian") return PlanStrategy::hungarian;
  if (s == "xcode-random") return PlanStrategy::random_best;
  throw ConfigError("unknown strategy '" + s + "'");
}

MiEstimate run_strategy(const std::string& strat, const Eigen::VectorXd& gains,
                        const Eigen::MatrixXcd* H, double P_T,
                        const Constellation& c, const LookupTable& table,
                        long long samples, std::uint64_t seed) {
  if (strat == "gaussian-wf") {
    MiEstimate est;
    est.value = gaussian_waterfill(gains, P_T).second;
    return est;
  }
  if (strat == "wf-discrete") return discrete_waterfill_mi(gains, P_T, c);
  if (strat == "mercury-wf") return mercury_waterfill(gains, P_T, c).second;
  if (strat == "fixed-point") {
    if (H == nullptr)
      throw ConfigError("fixed-point needs an explicit channel matrix");
    FixedPointOptions fo;
    fo.final_samples = samples;
    fo.seed = seed;
    return fixed_point_precoder(
               *H, power_alphabet(c, static_cast<int>(H->cols())), P_T, fo)
        .mi;
  }
  PlanOptions po;
  po.seed = seed;
  const auto res = plan(gains, P_T, c, table, xcode_strategy(strat), po);
  return res.total_mi;
}

int cmd_sweep(const Scenario& sc, const std::string& snr_text, int qam,
              std::vector<std::string> strategies, const std::string& dir,
              bool build_missing, long long samples, std::uint64_t seed,
              int threads, const std::string& out_path) {
  const auto c = make_qam(qam);
  const auto grid = parse_snr_grid(snr_text);
  if (strategies.empty())
    strategies = {"gaussian-wf", "wf-discrete", "mercury-wf",
                  "xcode-x",     "xcode-conjectured", "xcode-hungarian",
                  "xcode-random"};

  const std::vector<std::string> known = {"gaussian-wf", "wf-discrete",
                                          "mercury-wf", "fixed-point"};
  for (const auto& s : strategies) {
    if (is_xcode(s))
      xcode_strategy(s);
    else if (std::find(known.begin(), known.end(), s) == known.end())
      throw ConfigError("unknown strategy '" + s + "'");
  }
  LookupTable table;
  if (std::any_of(strategies.begin(), strategies.end(), is_xcode))
    table = load_or_build_table(dir, c, build_missing);

  struct Cell {
    double sum = 0, sumsq = 0, stderr_acc = 0;
  };
  std::vector<std::vector<Cell>> cells(
      strategies.size(), std::vector<Cell>(grid.size()));

  struct Task {
    std::size_t strat, snr;
    int real;
  };
  std::vector<Task> tasks;
  for (std::size_t si = 0; si < strategies.size(); ++si)
    for (std::size_t gi = 0; gi < grid.size(); ++gi)
      for (int r = 0; r < sc.realizations; ++r) tasks.push_back({si, gi, r});

  std::vector<MiEstimate> result(tasks.size());
  std::vector<std::string> task_error(tasks.size());
  std::atomic<std::size_t> next{0};
  const int n_workers = threads > 0
                            ? threads
                            : std::max(1u, std::thread::hardware_concurrency());
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const auto& t = tasks[i];
      const double P = sc.power_scale * db_to_lin(grid[t.snr]);
      try {
        Eigen::VectorXd gains = sc.gains;
        Eigen::MatrixXcd H = sc.H;
        if (sc.ergodic) {
          H = random_mimo(sc.nt, sc.nr,
                          derive_seed(seed, 7000 + static_cast<std::uint64_t>(
                                                      t.real)));
          gains = svd(H).lambda;
        }
        const std::uint64_t task_seed =
            derive_seed(seed, (t.strat + 1) * 1000003ULL +
                                  t.snr * 101ULL +
                                  static_cast<std::uint64_t>(t.real));
        result[i] =
            run_strategy(strategies[t.strat], gains,
                         (sc.has_H || sc.ergodic) ? &H : nullptr, P, c, table,
                         samples, task_seed);
      } catch (const std::exception& e) {
        task_error[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (!task_error[i].empty())
      throw ConfigError("sweep " + strategies[tasks[i].strat] + " @ " +
                        std::to_string(grid[tasks[i].snr]) +
                        " dB: " + task_error[i]);
    auto& cell = cells[tasks[i].strat][tasks[i].snr];
    cell.sum += result[i].value;
    cell.sumsq += result[i].value * result[i].value;
    cell.stderr_acc += result[i].std_error * result[i].std_error;
  }

  std::ostringstream os;
  SweepCsvWriter w(os);
  for (std::size_t si = 0; si < strategies.size(); ++si) {
    std::ostringstream meta;
    meta << "scenario=" << sc.desc << ";alphabet=" << c.name
         << ";seed=" << seed << ";samples=" << samples
         << ";realizations=" << sc.realizations;
    w.meta_row(strategies[si], meta.str());
  }
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    for (std::size_t si = 0; si < strategies.size(); ++si) {
      const auto& cell = cells[si][gi];
      const double R = sc.realizations;
      const double mean = cell.sum / R;
      double se;
      if (sc.realizations > 1) {
        const double var =
            std::max(0.0, (cell.sumsq - R * mean * mean) / (R - 1.0));
        se = std::sqrt(var / R);
      } else {
        se = std::sqrt(cell.stderr_acc);
      }
      w.data_row(grid[gi], strategies[si], mean, se);
    }
  }
  emit(os.str(), out_path);
  return 0;
}

// ---- plan ------------------------------------------------------------

int cmd_plan(const std::string& channel_path, const std::string& snr_text,
             int qam, const std::string& strat, const std::string& dir,
             bool build_missing, std::uint64_t seed,
             const std::string& out_path, const std::string& precoder_out) {
  const auto sc = scenario_from_channel(channel_path);
  const auto grid = parse_snr_grid(snr_text);
  if (grid.size() != 1)
    throw ConfigError("plan takes a single --snr-db value");
  const auto c = make_qam(qam);
  const double P = sc.power_scale * db_to_lin(grid[0]);

  const auto strategy = xcode_strategy("xcode-" + strat);
  LookupTable table;
  if (strategy != PlanStrategy::exhaustive)
    table = load_or_build_table(dir, c, build_missing);

  PlanOptions po;
  po.seed = seed;
  const auto res = plan(sc.gains, P, c, table, strategy, po);
  emit(plan_to_json(res, grid[0], c.name) + "\n", out_path);

  if (!precoder_out.empty()) {
    const auto dec = svd(sc.H);
    const auto pre = build_precoder(dec, res.pairing, res.params);
    write_text_file(precoder_out, precoder_to_json(pre) + "\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete-input MIMO precoding toolkit"};
  app.require_subcommand(1);

  // optimize-pair
  double beta = 1.0, alpha = 1.0;
  std::string snr_text = "17";
  int qam = 4;
  std::string out_path;
  auto* op = app.add_subcommand(
      "optimize-pair", "Optimal rotation and power split for one pair");
  op->add_option("--beta", beta, "Subchannel gain ratio (>= 1)")->required();
  op->add_option("--alpha", alpha, "Pair power gain lambda1^2 + lambda2^2");
  op->add_option("--snr-db", snr_text, "SNR grid: a, a:b or a:b:step")
      ->required();
  op->add_option("--qam", qam, "QAM order")
      ->check(CLI::IsMember({4, 16, 64}));
  op->add_option("--out", out_path, "Write JSON here instead of stdout");

  // build-tables
  std::vector<int> qams = {4, 16};
  std::string table_dir = "tables";
  std::string betas_text = "1,1.5,2,4,8";
  std::string table_snr = "-5:35:1";
  int threads = 0;
  auto* bt = app.add_subcommand("build-tables",
                                "Precompute (theta*, f*, MI*) lookup tables");
  bt->add_option("--qam", qams, "QAM orders")
      ->delimiter(',')
      ->check(CLI::IsMember({4, 16, 64}));
  bt->add_option("--table-dir", table_dir, "Output directory")
      ->envname("XPRECODE_TABLE_DIR");
  bt->add_option("--betas", betas_text, "Comma-separated beta bins");
  bt->add_option("--snr-db", table_snr, "Effective SNR grid");
  bt->add_option("--threads", threads, "Worker threads (0 = hardware)");

  // sweep
  std::string channel_path;
  std::vector<std::string> strategies;
  long long samples = 100000;
  std::uint64_t seed = 1;
  int ergodic = 0, nt = 4, nr = 4;
  double sw_beta = 0.0, sw_alpha = 1.0;
  std::string sweep_snr, sweep_out, sweep_dir = "tables";
  bool build_missing = false;
  int sweep_qam = 4, sweep_threads = 0;
  auto* sw = app.add_subcommand("sweep", "MI-vs-SNR sweep over strategies");
  sw->add_option("--channel", channel_path, "Channel JSON file");
  sw->add_option("--beta", sw_beta, "Two-subchannel scenario: gain ratio");
  sw->add_option("--alpha", sw_alpha, "Two-subchannel scenario: power gain");
  sw->add_option("--ergodic", ergodic, "Number of random channel draws");
  sw->add_option("--nt", nt, "Transmit antennas (ergodic)");
  sw->add_option("--nr", nr, "Receive antennas (ergodic)");
  sw->add_option("--snr-db", sweep_snr, "SNR grid: a, a:b or a:b:step")
      ->required();
  sw->add_option("--qam", sweep_qam, "QAM order")
      ->check(CLI::IsMember({4, 16, 64}));
  sw->add_option("--strategy", strategies,
                 "gaussian-wf, wf-discrete, mercury-wf, xcode-exhaustive, "
                 "xcode-x, xcode-conjectured, xcode-hungarian, xcode-random, "
                 "fixed-point")
      ->delimiter(',');
  sw->add_option("--table-dir", sweep_dir, "Lookup table directory")
      ->envname("XPRECODE_TABLE_DIR");
  sw->add_flag("--build-missing-tables", build_missing,
               "Build and save absent tables instead of failing");
  sw->add_option("--samples", samples, "MC samples for full-system MI");
  sw->add_option("--seed", seed, "Seed for every randomized step");
  sw->add_option("--threads", sweep_threads, "Worker threads (0 = hardware)");
  sw->add_option("--out", sweep_out, "Write CSV here instead of stdout");

  // plan
  std::string plan_channel, plan_snr, plan_strat = "exhaustive", plan_out,
              plan_dir = "tables", precoder_out;
  int plan_qam = 4;
  std::uint64_t plan_seed = 1;
  bool plan_build_missing = false;
  auto* pl =
      app.add_subcommand("plan", "Pairing/rotation/power plan for a channel");
  pl->add_option("--channel", plan_channel, "Channel JSON file")->required();
  pl->add_option("--snr-db", plan_snr, "Single SNR value")->required();
  pl->add_option("--qam", plan_qam, "QAM order")
      ->check(CLI::IsMember({4, 16, 64}));
  pl->add_option("--strategy", plan_strat,
                 "exhaustive, x, conjectured, hungarian or random");
  pl->add_option("--table-dir", plan_dir, "Lookup table directory")
      ->envname("XPRECODE_TABLE_DIR");
  pl->add_flag("--build-missing-tables", plan_build_missing,
               "Build and save absent tables instead of failing");
  pl->add_option("--seed", plan_seed, "Seed for randomized strategies");
  pl->add_option("--out", plan_out, "Write plan JSON here instead of stdout");
  pl->add_option("--precoder-out", precoder_out,
                 "Also write the full precoder matrix JSON here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (op->parsed()) return cmd_optimize_pair(beta, alpha, snr_text, qam,
                                               out_path);
    if (bt->parsed())
      return cmd_build_tables(qams, table_dir, betas_text, table_snr, threads);
    if (sw->parsed()) {
      Scenario sc;
      const int sources = (channel_path.empty() ? 0 : 1) +
                          (sw_beta > 0.0 ? 1 : 0) + (ergodic > 0 ? 1 : 0);
      if (sources != 1)
        throw ConfigError(
            "pick exactly one of --channel, --beta or --ergodic");
      if (!channel_path.empty()) {
        sc = scenario_from_channel(channel_path);
      } else if (sw_beta > 0.0) {
        sc.gains = Eigen::Vector2d(
            std::sqrt(sw_alpha * sw_beta * sw_beta / (1.0 + sw_beta * sw_beta)),
            std::sqrt(sw_alpha / (1.0 + sw_beta * sw_beta)));
        sc.H = sc.gains.cast<std::complex<double>>().asDiagonal();
        sc.has_H = true;
        std::ostringstream d;
        d << "pair(beta=" << sw_beta << ",alpha=" << sw_alpha << ")";
        sc.desc = d.str();
      } else {
        if (nr > nt)
          throw ConfigError("ergodic scenario needs nr <= nt");
        sc.ergodic = true;
        sc.realizations = ergodic;
        sc.nt = nt;
        sc.nr = nr;
        std::ostringstream d;
        d << "ergodic(" << nr << "x" << nt << ",R=" << ergodic << ")";
        sc.desc = d.str();
      }
      return cmd_sweep(sc, sweep_snr, sweep_qam, strategies, sweep_dir,
                       build_missing, samples, seed, sweep_threads, sweep_out);
    }
    if (pl->parsed())
      return cmd_plan(plan_channel, plan_snr, plan_qam, plan_strat, plan_dir,
                      plan_build_missing, plan_seed, plan_out, precoder_out);
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
