#pragma once

#include <atomic>
#include <complex>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qgraph {

using Complex = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;

/// Coordinates of an element of B over the standard matrix units
/// e_ij^(a), blocks ascending, row-major within each block.
using AlgebraElement = Eigen::VectorXcd;

/// Coordinates of an element of B ⊗ B over the basis e_p ⊗ e_q:
/// entry (p, q) is the coefficient of e_p ⊗ e_q.
using TensorElement = Eigen::MatrixXcd;

enum class Errc {
  NotAState,
  NotDeltaForm,
  NonInvertibleDensity,
  MultiBlock,
  NotCP,
  DegenerateAdjacency,
  TraceConstraintViolated,
  ZeroCorrespondence,
  NotInSpan,
  ZeroVector,
  LevelTooSmall,
  BudgetExceeded,
  NotFull,
  IdealNotInKatsura,
  QInIdeal,
  ParseError,
  ValidationError,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

namespace detail {
inline std::atomic<double>& tol_storage() {
  static std::atomic<double> tol = [] {
    if (const char* env = std::getenv("QGRAPH_TOL")) {
      char* end = nullptr;
      double v = std::strtod(env, &end);
      if (end != env && v > 0) return v;
    }
    return 1e-9;
  }();
  return tol;
}
}  // namespace detail

/// Global comparison tolerance, relative to the largest magnitude involved.
inline double tolerance() { return detail::tol_storage().load(); }
inline void set_tolerance(double tol) { detail::tol_storage().store(tol); }

/// |v| <= tol * max(1, scale)
inline bool within_tol(double v, double scale = 1.0) {
  return std::abs(v) <= tolerance() * std::max(1.0, scale);
}

inline double max_abs(const Mat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }
inline double max_abs(const Vec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace qgraph
