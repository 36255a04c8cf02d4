#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace xprecode {

/// A finite complex signal set, normalized to zero mean and unit average
/// energy.  Square QAM sets also carry their underlying PAM levels: a square
/// M-QAM symbol is two independent sqrt(M)-PAM symbols in quadrature, which
/// lets mutual-information code work on the real line where possible.
struct Constellation {
  Eigen::VectorXcd points;  ///< the signal set, deterministic order
  int order = 0;            ///< number of points M
  Eigen::VectorXd pam;      ///< per-axis PAM levels (empty if not square QAM)
  std::string name;         ///< identifier, e.g. "qam16"

  bool is_square_qam() const { return pam.size() > 0; }
  double max_bits() const { return std::log2(static_cast<double>(order)); }
};

/// Cartesian product of per-dimension constellations.
struct ProductAlphabet {
  std::vector<Constellation> components;

  std::size_t cardinality() const;
  double max_bits() const;

  /// All tuples as a (dim x cardinality) matrix.  Enumeration is
  /// lexicographic with the first component varying slowest.
  Eigen::MatrixXcd enumerate() const;
};

/// Square M-QAM with unit mean power, M in {4, 16, 64, 256}.
/// Throws InvalidOrderError otherwise.
Constellation make_qam(int order);

/// All tuples over the per-axis PAM levels of an all-square-QAM alphabet,
/// enumerated with the rule of ProductAlphabet::enumerate.
Eigen::MatrixXd pam_product(const ProductAlphabet& alph);

/// Two-dimensional product alphabet (pair input set).
ProductAlphabet product(const Constellation& a, const Constellation& b);

/// n-fold product of one constellation.
ProductAlphabet power_alphabet(const Constellation& a, int n);

}  // namespace xprecode
