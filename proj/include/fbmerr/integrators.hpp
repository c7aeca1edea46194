#pragma once

#include "fbmerr/core_model.hpp"

namespace fbmerr {

/// Fine-grid rule used as the reference value of the stochastic integral.
enum class ReferenceScheme {
  /// Plain left-point sum on the fine grid.
  left_point,
  /// Left-point sum plus the second-order term sum_k P^{(i,k)} A^{(k,j)} per
  /// fine step, with A^{(j,j)} = (dB^j)^2/2 (minus dt/2 when H = 1/2) and
  /// A^{(k,j)} = dB^k dB^j / 2 otherwise.
  corrected,
};

struct ErrorRecord {
  HurstIndex h{0.5};
  int n = 0;
  double t = 0.0;
  Eigen::MatrixXd m_n;        // m x d values of M^n_t
  Eigen::MatrixXd corrected;  // m_n - (1/2) int_0^t P ds
  std::uint64_t replication = 0;
};

/// Fine index of time t, which must be a node of the coarse grid with n steps.
Eigen::Index coarse_node_index(const FbmPath& path, int n, double t);

/// Coarse step count n must divide the fine step count.
Eigen::Index coarse_stride(const FbmPath& path, int n);

/// Reference integral of u against B^j on [0, t_fine], one entry per row of u.
Eigen::VectorXd fine_integral_at(const ProcessPair& u, const FbmPath& path, Eigen::Index j, Eigen::Index t_fine,
                                 ReferenceScheme scheme = ReferenceScheme::corrected);

Eigen::VectorXd fine_integral(const ProcessPair& u, const FbmPath& path, Eigen::Index j, double t,
                              ReferenceScheme scheme = ReferenceScheme::corrected);

/// Coarse left-point sum with the partial last increment B_{(k+1)/n ^ t}.
Eigen::VectorXd riemann_sum_at(const ProcessPair& u, const FbmPath& path, Eigen::Index j, Eigen::Index t_fine, int n);

Eigen::VectorXd riemann_sum(const ProcessPair& u, const FbmPath& path, Eigen::Index j, double t, int n);

/// Trapezoid integral of each row of `rows` over fine nodes [0, t_fine].
Eigen::VectorXd trapezoid_integral(const Eigen::MatrixXd& rows, const SimGrid& grid, Eigen::Index t_fine);

ErrorRecord error_process_at(const ProcessPair& u, const FbmPath& path, int n, Eigen::Index t_fine,
                             ReferenceScheme scheme = ReferenceScheme::corrected);

ErrorRecord error_process(const ProcessPair& u, const FbmPath& path, int n, double t,
                          ReferenceScheme scheme = ReferenceScheme::corrected);

/// Skorohod integral of (B^j - B^j_{k/n}) over the k-th coarse block:
/// ((Delta B)^2 - (T/n)^{2H}) / 2.
double skorohod_diag_increment(const FbmPath& path, Eigen::Index j, Eigen::Index k, int n);

/// Z_n(t) = n sum_{k < nt} of the diagonal Skorohod increments of B^j.
double rosenblatt_approx(const FbmPath& path, Eigen::Index j, double t, int n);

/// Matrix entry (i, j): integrator B^i, integrand B^j - B^j_{k/n}. Off the
/// diagonal the block integrals are fine-grid trapezoid sums.
double rosenblatt_approx(const FbmPath& path, Eigen::Index i, Eigen::Index j, double t, int n);

/// n^{2H-1} sum_k x_{k/n} (B^j_{(k+1)/n ^ t} - B^j_{k/n})^2, x given on fine nodes.
double weighted_quad_variation_at(const Eigen::Ref<const Eigen::VectorXd>& x, const FbmPath& path, Eigen::Index j,
                                  Eigen::Index t_fine, int n);
double weighted_quad_variation(const Eigen::Ref<const Eigen::VectorXd>& x, const FbmPath& path, Eigen::Index j,
                               double t, int n);

/// sum_k x_{k/n} Skorohod-int_{k/n}^{(k+1)/n ^ t} (B^e_s - B^e_{(k+1)/n}) dB^j_s; unnormalized.
double weighted_levy_area_at(const Eigen::Ref<const Eigen::VectorXd>& x, const FbmPath& path, Eigen::Index j,
                             Eigen::Index e, Eigen::Index t_fine, int n);
double weighted_levy_area(const Eigen::Ref<const Eigen::VectorXd>& x, const FbmPath& path, Eigen::Index j,
                          Eigen::Index e, double t, int n);

/// n sum_k x_{k/n} Skorohod-int_{k/n}^{(k+1)/n ^ t} (B^e_s - B^e_{k/n}) dB^j_s, the
/// weighted Rosenblatt approximation; equals rosenblatt_approx for x = 1, e = j.
double weighted_rosenblatt_at(const Eigen::Ref<const Eigen::VectorXd>& x, const FbmPath& path, Eigen::Index j,
                              Eigen::Index e, Eigen::Index t_fine, int n);

/// sum_k b_{k/n} int_{k/n}^{(k+1)/n ^ t} (s - s_n) dB^i_s; unnormalized.
double weighted_drift_sum_at(const Eigen::Ref<const Eigen::VectorXd>& b, const FbmPath& path, Eigen::Index i,
                             Eigen::Index t_fine, int n);
double weighted_drift_sum(const Eigen::Ref<const Eigen::VectorXd>& b, const FbmPath& path, Eigen::Index i, double t,
                          int n);

}  // namespace fbmerr
