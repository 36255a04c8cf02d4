#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <string>

#include "xprecode/pair_optimizer.hpp"
#include "xprecode/pairing.hpp"
#include "xprecode/precoder.hpp"

namespace xprecode {

/// Parsed channel description.  Complex entries are [re, im] pairs in the
/// JSON; plain numbers are accepted as purely real.
struct ChannelSpec {
  enum class Kind { matrix, diagonal, impulse_response };
  Kind kind = Kind::matrix;
  Eigen::MatrixXcd H;        ///< Kind::matrix
  Eigen::VectorXd diagonal;  ///< Kind::diagonal
  Eigen::VectorXcd impulse;  ///< Kind::impulse_response
  int n_fft = 0;             ///< "n" next to "impulse_response"
};

ChannelSpec load_channel(const std::string& path);

void save_table(const LookupTable& table, const std::string& path);
LookupTable load_table(const std::string& path);

std::string plan_to_json(const PlanResult& plan, double snr_dB,
                         const std::string& alphabet);
std::string precoder_to_json(const FullPrecoder& pre);

void write_text_file(const std::string& path, const std::string& content);

/// schema,snr_db,strategy,mi_bits,mi_stderr,meta rows; every row carries
/// the schema id "xprecode.sweep.v1".  Metadata rows leave the numeric
/// columns empty and pack key=value pairs into meta.
class SweepCsvWriter {
 public:
  explicit SweepCsvWriter(std::ostream& os);
  void meta_row(const std::string& strategy, const std::string& meta);
  void data_row(double snr_db, const std::string& strategy, double mi_bits,
                double mi_stderr);

 private:
  std::ostream& os_;
};

/// RFC-4180 field quoting.
std::string csv_escape(const std::string& field);

}  // namespace xprecode
