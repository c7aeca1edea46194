#pragma once

#include <Eigen/Dense>

#include <cmath>

namespace fbmerr {

/// Gauss-Legendre rule on [-1, 1] from the Golub-Welsch eigenproblem.
struct GaussLegendre {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;

  explicit GaussLegendre(int order) {
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
    for (int k = 1; k < order; ++k) {
      const double beta = k / std::sqrt(4.0 * k * k - 1.0);
      jacobi(k, k - 1) = beta;
      jacobi(k - 1, k) = beta;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
    nodes = eig.eigenvalues();
    weights = 2.0 * eig.eigenvectors().row(0).transpose().array().square();
  }

  /// Composite rule: `panels` equal sub-intervals of [lo, hi].
  template <typename F>
  double integrate(F&& f, double lo, double hi, int panels = 1) const {
    if (!(hi > lo)) return 0.0;
    const double width = (hi - lo) / panels;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
      const double a = lo + p * width;
      const double half = 0.5 * width;
      const double mid = a + half;
      double acc = 0.0;
      for (Eigen::Index k = 0; k < nodes.size(); ++k) acc += weights[k] * f(mid + half * nodes[k]);
      total += half * acc;
    }
    return total;
  }
};

}  // namespace fbmerr
