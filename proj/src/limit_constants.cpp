#include "fbmerr/limit_constants.hpp"

#include "fbmerr/quadrature.hpp"

#include <algorithm>
#include <array>
#include <iomanip>
#include <sstream>
#include <vector>

namespace fbmerr {
namespace {

constexpr int kGaussOrder = 10;
constexpr int kBasePanels = 4;
constexpr int kExpansionOrder = 12;
constexpr double kTailTarget = 1e-12;

std::string fmt_sci(double v) {
  std::ostringstream out;
  out << std::scientific << std::setprecision(3) << v;
  return out.str();
}

const GaussLegendre& gauss() {
  static const GaussLegendre rule(kGaussOrder);
  return rule;
}

struct Interval {
  double lo, hi;
};

// Range of the first coordinate once the second is fixed at y.
Interval first_range(const TriangleRegion& tri, double y) {
  return tri.ascending ? Interval{tri.lo, y} : Interval{y, tri.hi};
}

std::vector<double> cut_points(double lo, double hi, std::initializer_list<double> inner) {
  std::vector<double> pts{lo, hi};
  for (double x : inner)
    if (x > lo && x < hi) pts.push_back(x);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

// After integrating the first coordinates in closed form, the pairing reduces
// to c_H times the integral over w = y2 - y1 of |w|^{2H-2} phi(w).
class ReducedPairing {
 public:
  ReducedPairing(double h, const TriangleRegion& a, const TriangleRegion& b) : h_(h), a_(a), b_(b) {}

  double evaluate(int panels) const {
    const double w_lo = b_.lo - a_.hi;
    const double w_hi = b_.hi - a_.lo;
    const auto pts = cut_points(w_lo, w_hi, {b_.lo - a_.lo, b_.hi - a_.hi, 0.0});
    const double alpha = 2.0 * h_ - 2.0;
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
      const double lo = pts[k], hi = pts[k + 1];
      if (lo == 0.0 || hi == 0.0) {
        // w = sign * L * z^{1/(2H-1)} turns |w|^{2H-2} dw into L^{2H-1}/(2H-1) dz.
        const double len = hi - lo;
        const double sign = hi == 0.0 ? -1.0 : 1.0;
        const double expo = 1.0 / (2.0 * h_ - 1.0);
        const double integral = gauss().integrate(
            [&](double z) { return phi(sign * len * std::pow(z, expo), panels); }, 0.0, 1.0, panels);
        total += std::pow(len, 2.0 * h_ - 1.0) * expo * integral;
      } else {
        total += gauss().integrate(
            [&](double w) { return std::pow(std::abs(w), alpha) * phi(w, panels); }, lo, hi, panels);
      }
    }
    return h_ * (2.0 * h_ - 1.0) * total;
  }

 private:
  double phi(double w, int panels) const {
    const double lo = std::max(a_.lo, b_.lo - w);
    const double hi = std::min(a_.hi, b_.hi - w);
    if (!(hi > lo)) return 0.0;
    const auto pts = cut_points(lo, hi, {b_.lo, b_.hi, a_.lo - w, a_.hi - w});
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
      total += gauss().integrate(
          [&](double y1) {
            const Interval ia = first_range(a_, y1);
            const Interval ib = first_range(b_, y1 + w);
            return cov_r<double>(h_, ia.lo, ia.hi, ib.lo, ib.hi);
          },
          pts[k], pts[k + 1], panels);
    }
    return total;
  }

  double h_;
  TriangleRegion a_, b_;
};

double generalized_binomial(double alpha, int k) {
  double c = 1.0;
  for (int i = 0; i < k; ++i) c *= (alpha - i) / (i + 1);
  return c;
}

using MomentTable = std::array<std::array<double, kExpansionOrder + 1>, kExpansionOrder + 1>;

// M[i][j] = integral over A x B0 of (x2 - x1)^i (y2 - y1)^j, with B0 the
// ascending unit triangle; polynomial, so a tensor Gauss rule is exact.
MomentTable triangle_moments(const TriangleRegion& a) {
  static const GaussLegendre rule(kExpansionOrder);
  const auto& t = rule.nodes;
  const auto& wt = rule.weights;
  const Eigen::Index q = t.size();
  MomentTable moments{};
  // Each unit triangle: outer coordinate o in [0,1], inner = o * xi.
  for (Eigen::Index i1 = 0; i1 < q; ++i1) {
    const double o1 = 0.5 * (t[i1] + 1.0);
    for (Eigen::Index j1 = 0; j1 < q; ++j1) {
      const double in1 = o1 * 0.5 * (t[j1] + 1.0);
      const double w1 = 0.25 * wt[i1] * wt[j1] * o1;
      // ascending: x1 = inner, y1 = outer; descending: y1 = inner, x1 = outer.
      const double x1 = a.ascending ? in1 : o1;
      const double y1 = a.ascending ? o1 : in1;
      for (Eigen::Index i2 = 0; i2 < q; ++i2) {
        const double y2 = 0.5 * (t[i2] + 1.0);
        for (Eigen::Index j2 = 0; j2 < q; ++j2) {
          const double x2 = y2 * 0.5 * (t[j2] + 1.0);
          const double weight = w1 * 0.25 * wt[i2] * wt[j2] * y2;
          const double dx = x2 - x1, dy = y2 - y1;
          double px = weight;
          for (int i = 0; i <= kExpansionOrder; ++i) {
            double pxy = px;
            for (int j = 0; i + j <= kExpansionOrder; ++j) {
              moments[i][j] += pxy;
              pxy *= dy;
            }
            px *= dx;
          }
        }
      }
    }
  }
  return moments;
}

struct SeriesSum {
  double value = 0.0;
  double error = 0.0;
  int truncation = 0;
};

// Sum over p of <1_A, 1_{B0 + p}> with explicit terms for |p| <= P and the
// large-|p| expansion sum_k a_k |p|^{4H-4-k} summed with Hurwitz zeta beyond.
SeriesSum pairing_series(double h, bool ascending) {
  const TriangleRegion a{0.0, 1.0, ascending};
  const double alpha = 2.0 * h - 2.0;
  const double c_h = h * (2.0 * h - 1.0);
  const MomentTable moments = triangle_moments(a);

  std::array<double, kExpansionOrder + 1> coef{};
  for (int k = 0; k <= kExpansionOrder; k += 2) {  // odd orders cancel between p and -p
    double acc = 0.0;
    for (int i = 0; i <= k; ++i)
      acc += generalized_binomial(alpha, i) * generalized_binomial(alpha, k - i) * moments[i][k - i];
    coef[k] = 2.0 * c_h * c_h * acc;
  }
  // First omitted even order is bounded by c_H^2 (K+3)/4 per sign.
  const int omitted = kExpansionOrder + 2;
  int trunc = 8;
  while (0.5 * c_h * c_h * (omitted + 1) * hurwitz_zeta(omitted - 2.0 * alpha, trunc + 1.0) > kTailTarget) trunc *= 2;

  SeriesSum sum;
  sum.truncation = trunc;
  const HurstIndex hurst(h);
  for (int p = -trunc; p <= trunc; ++p) {
    const auto term = inner_product_indicator2_with_error(hurst, a, TriangleRegion{double(p), double(p) + 1.0, true});
    sum.value += term.value;
    sum.error += term.error;
  }
  for (int k = 0; k <= kExpansionOrder; k += 2) sum.value += coef[k] * hurwitz_zeta(k - 2.0 * alpha, trunc + 1.0);
  sum.error += c_h * c_h * (omitted + 1) * hurwitz_zeta(omitted - 2.0 * alpha, trunc + 1.0);
  return sum;
}

}  // namespace

double hurwitz_zeta(double s, double first) {
  if (!(s > 1.0)) throw DomainError("hurwitz_zeta requires s > 1");
  if (!(first >= 1.0)) throw DomainError("hurwitz_zeta requires first >= 1");
  constexpr int kDirect = 12;
  // B_{2j} / (2j)!
  constexpr std::array<double, 6> kBernoulliOverFactorial = {
      1.0 / 6.0 / 2.0,
      -1.0 / 30.0 / 24.0,
      1.0 / 42.0 / 720.0,
      -1.0 / 30.0 / 40320.0,
      5.0 / 66.0 / 3628800.0,
      -691.0 / 2730.0 / 479001600.0};
  double sum = 0.0;
  for (int k = 0; k < kDirect; ++k) sum += std::pow(first + k, -s);
  const double big = first + kDirect;
  sum += std::pow(big, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(big, -s);
  double rising = s;  // s (s+1) ... (s+2j-2)
  double power = std::pow(big, -s - 1.0);
  for (std::size_t j = 0; j < kBernoulliOverFactorial.size(); ++j) {
    sum += kBernoulliOverFactorial[j] * rising * power;
    rising *= (s + 2.0 * j + 1.0) * (s + 2.0 * j + 2.0);
    power /= big * big;
  }
  return sum;
}

QuadratureValue inner_product_indicator2_with_error(const HurstIndex& h, const TriangleRegion& a,
                                                    const TriangleRegion& b) {
  if (!(a.hi > a.lo) || !(b.hi > b.lo)) throw DomainError("triangle regions must have positive extent");
  if (h.is_brownian()) {
    if (a.ascending != b.ascending) return {0.0, 0.0};
    const double len = std::max(0.0, std::min(a.hi, b.hi) - std::max(a.lo, b.lo));
    return {0.5 * len * len, 0.0};
  }
  const ReducedPairing pairing(h.value(), a, b);
  const double coarse = pairing.evaluate(kBasePanels);
  const double fine = pairing.evaluate(2 * kBasePanels);
  const double err = std::abs(fine - coarse);
  if (err > 1e-10 + 1e-5 * std::abs(fine)) {
    throw QuadratureNotConverged("triangle pairing quadrature: refinement changed value by " + fmt_sci(err) + " of " + fmt_sci(fine));
  }
  return {fine, err};
}

LimitConstants constants(const HurstIndex& h) {
  LimitConstants c;
  c.h = h;
  switch (h.regime()) {
    case Regime::brownian:
      c.q = 0.5;
      c.r = 0.0;
      c.alternative_diag_factor = 1.0 / std::sqrt(2.0);
      return c;
    case Regime::critical:
      c.q = 9.0 / 32.0;
      c.r = 9.0 / 32.0;
      return c;
    case Regime::high:
      throw OutOfRegime("constants defined only for H ≤ 3/4");
    case Regime::low: break;
  }
  const SeriesSum q = pairing_series(h.value(), true);
  const SeriesSum r = pairing_series(h.value(), false);
  c.q = q.value;
  c.r = r.value;
  c.truncation_p = std::max(q.truncation, r.truncation);
  c.quadrature_err = q.error + r.error;
  return c;
}

}  // namespace fbmerr
