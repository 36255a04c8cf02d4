#include "xprecode/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "xprecode/errors.hpp"

namespace xprecode {

namespace {

using nlohmann::json;

json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("invalid JSON in " + path + ": " + e.what());
  }
  return j;
}

std::complex<double> parse_complex(const json& v, const std::string& where) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return {v[0].get<double>(), v[1].get<double>()};
  throw ConfigError(where + ": complex entries must be numbers or [re, im]");
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

const char* strategy_name(PlanStrategy s) {
  switch (s) {
    case PlanStrategy::exhaustive: return "exhaustive";
    case PlanStrategy::x: return "x";
    case PlanStrategy::conjectured: return "conjectured";
    case PlanStrategy::hungarian: return "hungarian";
    case PlanStrategy::random_best: return "random";
  }
  return "unknown";
}

}  // namespace

ChannelSpec load_channel(const std::string& path) {
  const json j = parse_file(path);
  if (!j.is_object()) throw ConfigError(path + ": expected a JSON object");
  ChannelSpec spec;
  const int n_keys = static_cast<int>(j.contains("matrix")) +
                     static_cast<int>(j.contains("diagonal")) +
                     static_cast<int>(j.contains("impulse_response"));
  if (n_keys != 1)
    throw ConfigError(path +
                      ": exactly one of matrix, diagonal, impulse_response"
                      " is required");

  if (j.contains("matrix")) {
    spec.kind = ChannelSpec::Kind::matrix;
    const auto& rows = j.at("matrix");
    if (!rows.is_array() || rows.empty())
      throw ConfigError(path + ": matrix must be a non-empty array of rows");
    const auto n_rows = static_cast<Eigen::Index>(rows.size());
    Eigen::Index n_cols = -1;
    for (Eigen::Index r = 0; r < n_rows; ++r) {
      const auto& row = rows[static_cast<size_t>(r)];
      if (!row.is_array() || row.empty())
        throw ConfigError(path + ": matrix rows must be non-empty arrays");
      if (n_cols < 0) {
        n_cols = static_cast<Eigen::Index>(row.size());
        spec.H.resize(n_rows, n_cols);
      } else if (static_cast<Eigen::Index>(row.size()) != n_cols) {
        throw ConfigError(path + ": matrix rows have unequal lengths");
      }
      for (Eigen::Index c = 0; c < n_cols; ++c)
        spec.H(r, c) = parse_complex(row[static_cast<size_t>(c)], path);
    }
  } else if (j.contains("diagonal")) {
    spec.kind = ChannelSpec::Kind::diagonal;
    const auto& d = j.at("diagonal");
    if (!d.is_array() || d.empty())
      throw ConfigError(path + ": diagonal must be a non-empty array");
    spec.diagonal.resize(static_cast<Eigen::Index>(d.size()));
    for (size_t i = 0; i < d.size(); ++i) {
      if (!d[i].is_number())
        throw ConfigError(path + ": diagonal entries must be numbers");
      spec.diagonal(static_cast<Eigen::Index>(i)) = d[i].get<double>();
    }
  } else {
    spec.kind = ChannelSpec::Kind::impulse_response;
    const auto& h = j.at("impulse_response");
    if (!h.is_array() || h.empty())
      throw ConfigError(path + ": impulse_response must be a non-empty array");
    spec.impulse.resize(static_cast<Eigen::Index>(h.size()));
    for (size_t i = 0; i < h.size(); ++i)
      spec.impulse(static_cast<Eigen::Index>(i)) = parse_complex(h[i], path);
    if (!j.contains("n") || !j.at("n").is_number_integer())
      throw ConfigError(path + ": impulse_response needs an integer \"n\"");
    spec.n_fft = j.at("n").get<int>();
  }
  return spec;
}

void save_table(const LookupTable& table, const std::string& path) {
  json j;
  j["alphabet"] = table.alphabet;
  j["beta_bins"] = table.beta_bins;
  j["snr_dB"] = table.snr_dB;
  json cells = json::array();
  for (const auto& row : table.cells) {
    json jr = json::array();
    for (const auto& c : row)
      jr.push_back(json{{"theta_deg", c.theta_deg},
                        {"f", c.f},
                        {"mi_bits", c.mi_bits}});
    cells.push_back(std::move(jr));
  }
  j["cells"] = std::move(cells);
  write_text_file(path, j.dump(1));
}

LookupTable load_table(const std::string& path) {
  const json j = parse_file(path);
  LookupTable t;
  try {
    t.alphabet = j.at("alphabet").get<std::string>();
    t.beta_bins = j.at("beta_bins").get<std::vector<double>>();
    t.snr_dB = j.at("snr_dB").get<std::vector<double>>();
    const auto& cells = j.at("cells");
    if (!cells.is_array() || cells.size() != t.beta_bins.size())
      throw ConfigError(path + ": cells must have one row per beta bin");
    for (const auto& row : cells) {
      if (!row.is_array() || row.size() != t.snr_dB.size())
        throw ConfigError(path + ": cell rows must match the SNR grid");
      std::vector<LookupTable::Cell> out;
      for (const auto& c : row)
        out.push_back(LookupTable::Cell{c.at("theta_deg").get<double>(),
                                        c.at("f").get<double>(),
                                        c.at("mi_bits").get<double>()});
      t.cells.push_back(std::move(out));
    }
  } catch (const json::exception& e) {
    throw ConfigError(path + ": bad table file: " + e.what());
  }
  return t;
}

std::string plan_to_json(const PlanResult& plan, double snr_dB,
                         const std::string& alphabet) {
  json j;
  j["strategy"] = strategy_name(plan.strategy);
  j["snr_dB"] = snr_dB;
  j["alphabet"] = alphabet;
  json pairing = json::array();
  for (const auto& [i, k] : plan.pairing.pairs)
    pairing.push_back({i, k});
  j["pairing"] = std::move(pairing);
  json pairs = json::array();
  for (size_t k = 0; k < plan.params.size(); ++k) {
    const auto& pr = plan.params[k];
    pairs.push_back(json{{"i", plan.pairing.pairs[k].first},
                         {"j", plan.pairing.pairs[k].second},
                         {"theta_deg", pr.theta * 180.0 / M_PI},
                         {"f", pr.f},
                         {"pbar2", pr.pbar2},
                         {"mi_bits", plan.pair_mi_bits[k]}});
  }
  j["pairs"] = std::move(pairs);
  j["total_mi_bits"] = plan.total_mi.value;
  j["total_mi_stderr"] = plan.total_mi.std_error;
  if (plan.strategy == PlanStrategy::random_best)
    j["mean_random_mi_bits"] = plan.mean_random_mi_bits;
  return j.dump(1);
}

std::string precoder_to_json(const FullPrecoder& pre) {
  json j;
  j["n_t"] = pre.T.rows();
  j["n"] = pre.T.cols();
  json rows = json::array();
  for (Eigen::Index r = 0; r < pre.T.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < pre.T.cols(); ++c)
      row.push_back(json{{"re", pre.T(r, c).real()},
                         {"im", pre.T(r, c).imag()}});
    rows.push_back(std::move(row));
  }
  j["T"] = std::move(rows);
  json pairing = json::array();
  for (const auto& [i, k] : pre.gen.pairing.pairs) pairing.push_back({i, k});
  j["pairing"] = std::move(pairing);
  json angles = json::array();
  for (const double a : pre.gen.angles) angles.push_back(a * 180.0 / M_PI);
  j["angles_deg"] = std::move(angles);
  json p2 = json::array();
  for (Eigen::Index i = 0; i < pre.p.size(); ++i)
    p2.push_back(pre.p(i) * pre.p(i));
  j["p2"] = std::move(p2);
  return j.dump(1);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  if (!out) throw IoError("failed while writing " + path);
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (const char ch : field) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

SweepCsvWriter::SweepCsvWriter(std::ostream& os) : os_(os) {
  os_ << "schema,snr_db,strategy,mi_bits,mi_stderr,meta\r\n";
}

void SweepCsvWriter::meta_row(const std::string& strategy,
                              const std::string& meta) {
  os_ << "xprecode.sweep.v1,," << csv_escape(strategy) << ",,,"
      << csv_escape(meta) << "\r\n";
}

void SweepCsvWriter::data_row(double snr_db, const std::string& strategy,
                              double mi_bits, double mi_stderr) {
  os_ << "xprecode.sweep.v1," << num(snr_db) << "," << csv_escape(strategy)
      << "," << num(mi_bits) << "," << num(mi_stderr) << ",\r\n";
}

}  // namespace xprecode
