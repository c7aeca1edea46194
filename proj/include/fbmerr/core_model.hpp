#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace fbmerr {

/// Thrown when an argument lies outside the domain of an operation.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when an operation is asked for a Hurst regime it does not cover.
class RegimeError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

enum class Regime { brownian, low, critical, high };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::brownian: return "brownian";
    case Regime::low: return "low";
    case Regime::critical: return "critical";
    case Regime::high: return "high";
  }
  return "?";
}

/// Hurst parameter restricted to [1/2, 1).
///
/// Regime boundaries are compared exactly; 0.5 and 0.75 are exact binary
/// values, so parsing "0.75" reaches the critical branch deterministically.
class HurstIndex {
 public:
  explicit HurstIndex(double h) : h_(h) {
    if (!(h >= 0.5 && h < 1.0)) {
      throw DomainError("Hurst index must lie in [0.5, 1), got " + std::to_string(h));
    }
  }

  double value() const { return h_; }

  Regime regime() const {
    if (h_ == 0.5) return Regime::brownian;
    if (h_ < 0.75) return Regime::low;
    if (h_ == 0.75) return Regime::critical;
    return Regime::high;
  }

  bool is_brownian() const { return h_ == 0.5; }

  friend bool operator==(const HurstIndex&, const HurstIndex&) = default;

 private:
  double h_;
};

/// Coarse/fine simulation grid on [0, T].
///
/// Fine node k sits at k*T/(n*m); coarse node k is fine node k*m.
struct SimGrid {
  double horizon = 1.0;
  int n_coarse = 2;
  int refine_m = 1;
  int d_dims = 1;

  SimGrid() = default;
  SimGrid(double T, int n, int m, int d) : horizon(T), n_coarse(n), refine_m(m), d_dims(d) { validate(); }

  void validate() const {
    if (!(horizon > 0.0)) throw DomainError("grid horizon must be positive");
    if (n_coarse < 2) throw DomainError("n_coarse must be >= 2");
    if (refine_m < 1) throw DomainError("refine_m must be >= 1");
    if (d_dims < 1) throw DomainError("d_dims must be >= 1");
  }

  Eigen::Index fine_steps() const { return Eigen::Index(n_coarse) * refine_m; }
  double fine_step() const { return horizon / double(fine_steps()); }
  double fine_time(Eigen::Index k) const { return double(k) * horizon / double(fine_steps()); }
  double coarse_time(Eigen::Index k) const { return double(k) * horizon / double(n_coarse); }
  Eigen::Index coarse_to_fine(Eigen::Index k) const { return k * refine_m; }

  friend bool operator==(const SimGrid&, const SimGrid&) = default;
};

/// d independent fBm components on the fine grid of `grid`.
struct FbmPath {
  Eigen::MatrixXd values;  // d x (N+1), column 0 is zero
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  SimGrid grid;
  HurstIndex hurst{0.5};

  Eigen::Index dims() const { return values.rows(); }
  Eigen::Index fine_steps() const { return values.cols() - 1; }
};

/// Integrand u (m-dim) together with its weight process P (m x d), both on
/// the fine grid. Row i*d+j of `p` holds P^{(i,j)}.
struct ProcessPair {
  Eigen::MatrixXd u;
  Eigen::MatrixXd p;
  Eigen::Index m_dims = 0;
  Eigen::Index d_dims = 0;
  std::string label;

  ProcessPair() = default;
  ProcessPair(Eigen::Index m, Eigen::Index d, Eigen::Index nodes, std::string lbl)
      : u(Eigen::MatrixXd::Zero(m, nodes)),
        p(Eigen::MatrixXd::Zero(m * d, nodes)),
        m_dims(m),
        d_dims(d),
        label(std::move(lbl)) {}

  auto p_row(Eigen::Index i, Eigen::Index j) { return p.row(i * d_dims + j); }
  auto p_row(Eigen::Index i, Eigen::Index j) const { return p.row(i * d_dims + j); }
  Eigen::Index nodes() const { return u.cols(); }
};

/// Covariance of the increments B_t - B_s and B_y - B_x of a scalar fBm.
template <typename Scalar>
Scalar cov_r(Scalar h, Scalar s, Scalar t, Scalar x, Scalar y) {
  using std::abs;
  using std::pow;
  if (s > t || x > y) throw DomainError("cov_r requires s <= t and x <= y");
  const Scalar two_h = Scalar(2) * h;
  return Scalar(0.5) * (pow(abs(t - x), two_h) + pow(abs(s - y), two_h) -
                        pow(abs(s - x), two_h) - pow(abs(t - y), two_h));
}

inline double cov_r(const HurstIndex& h, double s, double t, double x, double y) {
  return cov_r<double>(h.value(), s, t, x, y);
}

/// Rate function at zero.
template <typename Scalar>
Scalar kappa(const HurstIndex& h, Scalar u) {
  using std::log;
  using std::pow;
  using std::sqrt;
  if (!(u > Scalar(0) && u <= Scalar(1))) throw DomainError("kappa requires 0 < u <= 1");
  switch (h.regime()) {
    case Regime::brownian:
    case Regime::low: return sqrt(u);
    case Regime::critical: return sqrt(u * log(Scalar(1) / u));
    case Regime::high: return pow(u, Scalar(2) - Scalar(2) * Scalar(h.value()));
  }
  return Scalar(0);
}

inline double kappa(const HurstIndex& h, double u) { return kappa<double>(h, u); }

/// Rate function at infinity, the normalization of the second-order limit.
template <typename Scalar = double>
Scalar nu(const HurstIndex& h, std::int64_t n) {
  using std::log;
  using std::pow;
  using std::sqrt;
  const Scalar sn = Scalar(n);
  switch (h.regime()) {
    case Regime::brownian:
    case Regime::low:
      if (n < 1) throw DomainError("nu requires n >= 1");
      return sqrt(sn);
    case Regime::critical:
      if (n < 2) throw DomainError("nu at H = 3/4 requires n >= 2");
      return sqrt(sn / log(sn));
    case Regime::high:
      if (n < 1) throw DomainError("nu requires n >= 1");
      return pow(sn, Scalar(2) - Scalar(2) * Scalar(h.value()));
  }
  return Scalar(0);
}

}  // namespace fbmerr
