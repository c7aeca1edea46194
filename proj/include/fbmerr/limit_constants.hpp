#pragma once

#include "fbmerr/core_model.hpp"

#include <stdexcept>

namespace fbmerr {

class QuadratureNotConverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OutOfRegime : public RegimeError {
 public:
  using RegimeError::RegimeError;
};

/// Triangle {a <= x <= y <= b} (ascending) or {a <= y <= x <= b}.
/// In a pairing of two triangles, first coordinates are paired together and
/// second coordinates together.
struct TriangleRegion {
  double lo = 0.0;
  double hi = 1.0;
  bool ascending = true;
};

struct QuadratureValue {
  double value = 0.0;
  double error = 0.0;
};

/// Inner product of two triangle indicators in the tensor-square of the fBm
/// Hilbert space: c_H^2 times the integral of |x1-x2|^{2H-2} |y1-y2|^{2H-2}.
/// At H = 1/2 this is the Lebesgue area of the intersection.
QuadratureValue inner_product_indicator2_with_error(const HurstIndex& h, const TriangleRegion& a,
                                                    const TriangleRegion& b);

inline double inner_product_indicator2(const HurstIndex& h, const TriangleRegion& a, const TriangleRegion& b) {
  return inner_product_indicator2_with_error(h, a, b).value;
}

struct LimitConstants {
  double q = 0.0;
  double r = 0.0;
  HurstIndex h{0.5};
  int truncation_p = 0;
  double quadrature_err = 0.0;
  /// Diagonal factor reported in the literature for H = 1/2 (1/sqrt 2); zero
  /// elsewhere. Kept for comparison only.
  double alternative_diag_factor = 0.0;
};

/// Constants of the matrix Brownian limit for 1/2 <= H <= 3/4.
LimitConstants constants(const HurstIndex& h);

/// Variance factor of the diagonal limit entries: q + r.
inline double diag_variance_factor(const LimitConstants& c) { return c.q + c.r; }

/// Variance factor of the off-diagonal limit entries: (q - r) + r = q.
inline double offdiag_variance_factor(const LimitConstants& c) { return c.q; }

/// Hurwitz zeta sum_{p >= first} p^{-s} for s > 1, first >= 1.
double hurwitz_zeta(double s, double first);

}  // namespace fbmerr
