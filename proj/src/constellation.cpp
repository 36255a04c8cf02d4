#include "xprecode/constellation.hpp"

#include <cmath>

#include "xprecode/errors.hpp"

namespace xprecode {

Constellation make_qam(int order) {
  if (order != 4 && order != 16 && order != 64 && order != 256)
    throw InvalidOrderError("make_qam: order must be 4, 16, 64 or 256, got " +
                            std::to_string(order));

  const int m = static_cast<int>(std::lround(std::sqrt(double(order))));
  // PAM levels -(m-1), ..., -1, 1, ..., (m-1); average energy of the QAM set
  // is 2*(m^2-1)/3, so divide by its square root to normalize.
  const double scale = std::sqrt(3.0 / (2.0 * (double(m) * m - 1.0)));

  Constellation c;
  c.order = order;
  c.name = "qam" + std::to_string(order);
  c.pam.resize(m);
  for (int i = 0; i < m; ++i) c.pam(i) = scale * (2.0 * i - (m - 1.0));

  c.points.resize(order);
  int k = 0;
  for (int i = 0; i < m; ++i)
    for (int q = 0; q < m; ++q) c.points(k++) = {c.pam(i), c.pam(q)};
  return c;
}

std::size_t ProductAlphabet::cardinality() const {
  std::size_t n = 1;
  for (const auto& c : components) n *= static_cast<std::size_t>(c.order);
  return n;
}

double ProductAlphabet::max_bits() const {
  double b = 0;
  for (const auto& c : components) b += c.max_bits();
  return b;
}

Eigen::MatrixXcd ProductAlphabet::enumerate() const {
  if (max_bits() > 24)
    throw UnsupportedError(
        "ProductAlphabet::enumerate: alphabet too large to enumerate");
  const auto dim = static_cast<Eigen::Index>(components.size());
  const auto card = static_cast<Eigen::Index>(cardinality());
  Eigen::MatrixXcd out(dim, card);
  // Mixed-radix counter, first component slowest.
  Eigen::Index repeat = card;
  for (Eigen::Index d = 0; d < dim; ++d) {
    const auto& pts = components[static_cast<std::size_t>(d)].points;
    repeat /= pts.size();
    for (Eigen::Index j = 0; j < card; ++j)
      out(d, j) = pts((j / repeat) % pts.size());
  }
  return out;
}

Eigen::MatrixXd pam_product(const ProductAlphabet& alph) {
  const auto dim = static_cast<Eigen::Index>(alph.components.size());
  Eigen::Index card = 1;
  for (const auto& c : alph.components) {
    if (!c.is_square_qam())
      throw UnsupportedError("pam_product: component is not square QAM");
    card *= c.pam.size();
  }
  Eigen::MatrixXd out(dim, card);
  Eigen::Index repeat = card;
  for (Eigen::Index d = 0; d < dim; ++d) {
    const auto& pam = alph.components[static_cast<std::size_t>(d)].pam;
    repeat /= pam.size();
    for (Eigen::Index j = 0; j < card; ++j)
      out(d, j) = pam((j / repeat) % pam.size());
  }
  return out;
}

ProductAlphabet product(const Constellation& a, const Constellation& b) {
  return ProductAlphabet{{a, b}};
}

ProductAlphabet power_alphabet(const Constellation& a, int n) {
  ProductAlphabet p;
  p.components.assign(static_cast<std::size_t>(n), a);
  return p;
}

}  // namespace xprecode
