#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hwall {

using Index = std::int64_t;

/// Integer lattice point of Z^d.
using Site = std::vector<int>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition or parameter violation.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A dense solve or enumeration would exceed the configured size guard.
class SizeGuardExceeded : public Error {
 public:
  using Error::Error;
};

/// Solver breakdown, non-SPD system, or sampling failure.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A Monte Carlo budget cannot reach the requested accuracy.
class BudgetError : public Error {
 public:
  using Error::Error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidArgument(what);
}

/// Sets the OpenMP thread count used by the parallel kernels. Results never
/// depend on this value.
void set_threads(int threads);
int threads();

}  // namespace hwall
