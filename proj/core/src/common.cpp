#include "sqmean/common.hpp"

#include <algorithm>
#include <cmath>

namespace sqmean {

double log2_dim(std::size_t d) { return std::max(1.0, std::log2(static_cast<double>(d))); }

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Matrix to_matrix(const Vector& v, std::size_t side) {
  if (static_cast<std::size_t>(v.size()) != side * side) {
    throw std::invalid_argument("to_matrix: vector length is not side^2");
  }
  Matrix m(side, side);
  for (std::size_t i = 0; i < side; ++i) {
    for (std::size_t j = 0; j < side; ++j) m(i, j) = v(i * side + j);
  }
  return m;
}

Vector flatten(const Matrix& m) {
  Vector v(m.rows() * m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) v(i * m.cols() + j) = m(i, j);
  }
  return v;
}

}  // namespace sqmean
