#pragma once

#include <cstdint>

#include "sqmean/common.hpp"

namespace sqmean {

/// Singular values of a square matrix, sorted nonincreasing.
///
/// One-sided (Hestenes) Jacobi: columns are orthogonalized by plane
/// rotations until every pair is orthogonal to working precision; the
/// column norms are then the singular values. Throws std::invalid_argument
/// for non-square or non-finite input.
Vector singular_values(const Matrix& mat);

/// Haar-distributed random orthogonal d x d matrix from a seeded Gaussian
/// matrix (Householder QR with the sign of diag(R) folded into Q).
Matrix random_orthogonal(std::size_t d, std::uint64_t seed);

}  // namespace sqmean
