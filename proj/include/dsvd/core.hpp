#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <type_traits>

#include <Eigen/Dense>

namespace dsvd {

using cplx = std::complex<double>;

template <class Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using RealVector = Vec<double>;
using RealMatrix = Mat<double>;

/// One scalar per node; the unit exchanged by a consensus instance.
template <class Scalar>
using GraphSignal = Vec<Scalar>;

template <class T>
struct is_complex : std::false_type {};
template <class T>
struct is_complex<std::complex<T>> : std::true_type {};

template <class Scalar>
inline constexpr bool is_complex_v = is_complex<Scalar>::value;

template <class Scalar>
concept NodeScalar = std::is_same_v<Scalar, double> || std::is_same_v<Scalar, cplx>;

inline double conj(double v) { return v; }
inline cplx conj(const cplx& v) { return std::conj(v); }
inline double abs2(double v) { return v * v; }
inline double abs2(const cplx& v) { return std::norm(v); }

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A violated precondition of a public operation.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Graph generation could not produce a connected topology, or a consensus
/// engine was handed a disconnected graph.
class ConnectivityError : public Error {
 public:
  using Error::Error;
};

/// Secular root finding did not converge; carries the last iterate.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_iterate)
      : Error(what), last_iterate_(last_iterate) {}
  double last_iterate() const { return last_iterate_; }

 private:
  double last_iterate_;
};

/// Numerical breakdown of a decentralized update (for example a radicand or
/// an eigenvalue of a Gram matrix that is negative beyond roundoff).
class NumericalError : public Error {
 public:
  using Error::Error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw PreconditionError(message);
}

}  // namespace dsvd
