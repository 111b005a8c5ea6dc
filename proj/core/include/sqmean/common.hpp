#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>

#include <Eigen/Dense>

namespace sqmean {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// The oracle refused a query because the session budget is spent.
class BudgetExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A query function left its declared range on a point of the support.
class QueryRangeError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Estimates that cannot all be honest answers of a valid oracle.
class OracleContractViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A norm was used where a certified symmetric norm is required.
class ValidationError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Base-2 logarithm of the dimension, floored at 1 so that d = 1 does not
/// zero out the log factors of the estimators and the interpolation bound.
double log2_dim(std::size_t d);

/// SplitMix64 finalizer; used to derive independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// Row-major d x d view of a d^2-vector and back.
Matrix to_matrix(const Vector& v, std::size_t side);
Vector flatten(const Matrix& m);

}  // namespace sqmean
