#include "sqmean/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

namespace sqmean {

Vector singular_values(const Matrix& mat) {
  if (mat.rows() != mat.cols()) throw std::invalid_argument("singular_values: matrix is not square");
  if (!mat.allFinite()) throw std::invalid_argument("singular_values: non-finite entry");

  Matrix u = mat;
  const Eigen::Index n = u.cols();
  constexpr double kEps = 1e-15;
  constexpr int kMaxSweeps = 80;

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double alpha = u.col(p).squaredNorm();
        const double beta = u.col(q).squaredNorm();
        const double gamma = u.col(p).dot(u.col(q));
        if (gamma == 0.0 || std::abs(gamma) <= kEps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        const Vector cp = u.col(p);
        u.col(p) = c * cp - s * u.col(q);
        u.col(q) = s * cp + c * u.col(q);
      }
    }
    if (!rotated) break;
  }

  Vector sigma(n);
  for (Eigen::Index i = 0; i < n; ++i) sigma(i) = u.col(i).norm();
  std::sort(sigma.data(), sigma.data() + n, std::greater<>());
  return sigma;
}

Matrix random_orthogonal(std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Matrix g(d, d);
  for (Eigen::Index j = 0; j < g.cols(); ++j) {
    for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = gauss(rng);
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

}  // namespace sqmean
