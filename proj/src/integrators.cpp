#include "fbmerr/integrators.hpp"

#include <cmath>
#include <string>

namespace fbmerr {
namespace {

double time_of(const FbmPath& path, Eigen::Index fine) { return path.grid.fine_time(fine); }

void check_component(const FbmPath& path, Eigen::Index j) {
  if (j < 0 || j >= path.dims()) throw DomainError("component index out of range: " + std::to_string(j));
}

void check_fine_index(const FbmPath& path, Eigen::Index t_fine) {
  if (t_fine < 0 || t_fine > path.fine_steps()) throw DomainError("fine index out of range");
}

void check_pair(const ProcessPair& u, const FbmPath& path) {
  if (u.nodes() != path.values.cols() || u.d_dims != path.dims() || u.p.rows() != u.m_dims * u.d_dims) {
    throw DomainError("process pair does not conform to the path grid");
  }
}

// Skorohod integral over fine nodes [a, tau] of (B^e - B^e_anchor) against B^j.
double block_skorohod(const FbmPath& path, Eigen::Index j, Eigen::Index e, Eigen::Index a, Eigen::Index tau,
                      Eigen::Index anchor) {
  if (tau <= a) return 0.0;
  const auto bj = path.values.row(j);
  const auto be = path.values.row(e);
  if (e == j) {
    const double h2 = 2.0 * path.hurst.value();
    const double inc = bj[tau] - bj[a];
    const double shift = bj[anchor] - bj[a];
    const double young = 0.5 * inc * inc - shift * inc;
    const double tc = time_of(path, anchor);
    const double trace = 0.5 * (std::pow(std::abs(time_of(path, tau) - tc), h2) -
                                std::pow(std::abs(time_of(path, a) - tc), h2));
    return young - trace;
  }
  double acc = 0.0;
  const double base = be[anchor];
  for (Eigen::Index l = a; l < tau; ++l) acc += (0.5 * (be[l] + be[l + 1]) - base) * (bj[l + 1] - bj[l]);
  return acc;
}

}  // namespace

Eigen::Index coarse_stride(const FbmPath& path, int n) {
  const Eigen::Index total = path.fine_steps();
  if (n < 1 || total % n != 0) {
    throw DomainError("coarse resolution " + std::to_string(n) + " does not divide fine steps " + std::to_string(total));
  }
  return total / n;
}

Eigen::Index coarse_node_index(const FbmPath& path, int n, double t) {
  const Eigen::Index stride = coarse_stride(path, n);
  const double horizon = path.grid.horizon;
  const Eigen::Index total = path.fine_steps();
  const auto idx = static_cast<Eigen::Index>(std::llround(t / horizon * double(total)));
  if (idx < 0 || idx > total || std::abs(path.grid.fine_time(idx) - t) > 1e-9 * horizon || idx % stride != 0) {
    throw DomainError("t = " + std::to_string(t) + " is not a node of the coarse grid with n = " + std::to_string(n));
  }
  return idx;
}

Eigen::VectorXd fine_integral_at(const ProcessPair& u, const FbmPath& path, Eigen::Index j, Eigen::Index t_fine,
                                 ReferenceScheme scheme) {
  check_pair(u, path);
  check_component(path, j);
  check_fine_index(path, t_fine);
  const Eigen::Index d = path.dims();
  const bool ito = path.hurst.is_brownian();
  const double dt = path.grid.fine_step();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(u.m_dims);
  const auto bj = path.values.row(j);
  for (Eigen::Index l = 0; l < t_fine; ++l) {
    const double dbj = bj[l + 1] - bj[l];
    out.noalias() += u.u.col(l) * dbj;
    if (scheme == ReferenceScheme::corrected) {
      for (Eigen::Index k = 0; k < d; ++k) {
        const double dbk = path.values(k, l + 1) - path.values(k, l);
        double area = 0.5 * dbk * dbj;
        if (k == j && ito) area -= 0.5 * dt;
        for (Eigen::Index i = 0; i < u.m_dims; ++i) out[i] += u.p(i * d + k, l) * area;
      }
    }
  }
  return out;
}

Eigen::VectorXd fine_integral(const ProcessPair& u, const FbmPath& path, Eigen::Index j, double t,
                              ReferenceScheme scheme) {
  return fine_integral_at(u, path, j, coarse_node_index(path, path.grid.n_coarse, t), scheme);
}

Eigen::VectorXd riemann_sum_at(const ProcessPair& u, const FbmPath& path, Eigen::Index j, Eigen::Index t_fine, int n) {
  check_pair(u, path);
  check_component(path, j);
  check_fine_index(path, t_fine);
  const Eigen::Index stride = coarse_stride(path, n);
  const auto bj = path.values.row(j);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(u.m_dims);
  for (Eigen::Index a = 0; a < t_fine; a += stride) {
    const Eigen::Index b = std::min(a + stride, t_fine);
    out.noalias() += u.u.col(a) * (bj[b] - bj[a]);
  }
  return out;
}

Eigen::VectorXd riemann_sum(const ProcessPair& u, const FbmPath& path, Eigen::Index j, double t, int n) {
  return riemann_sum_at(u, path, j, coarse_node_index(path, n, t), n);
}

Eigen::VectorXd trapezoid_integral(const Eigen::MatrixXd& rows, const SimGrid& grid, Eigen::Index t_fine) {
  if (t_fine < 0 || t_fine >= rows.cols()) throw DomainError("fine index out of range");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(rows.rows());
  if (t_fine == 0) return out;
  out = rows.leftCols(t_fine + 1).rowwise().sum() - 0.5 * (rows.col(0) + rows.col(t_fine));
  return out * grid.fine_step();
}

ErrorRecord error_process_at(const ProcessPair& u, const FbmPath& path, int n, Eigen::Index t_fine,
                             ReferenceScheme scheme) {
  coarse_stride(path, n);
  const Eigen::Index d = path.dims();
  const double scale = std::pow(double(n), 2.0 * path.hurst.value() - 1.0);
  ErrorRecord rec;
  rec.h = path.hurst;
  rec.n = n;
  rec.t = path.grid.fine_time(t_fine);
  rec.replication = path.stream;
  rec.m_n.resize(u.m_dims, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    rec.m_n.col(j) = scale * (fine_integral_at(u, path, j, t_fine, scheme) - riemann_sum_at(u, path, j, t_fine, n));
  }
  const Eigen::VectorXd int_p = trapezoid_integral(u.p, path.grid, t_fine);
  rec.corrected = rec.m_n;
  for (Eigen::Index i = 0; i < u.m_dims; ++i)
    for (Eigen::Index j = 0; j < d; ++j) rec.corrected(i, j) -= 0.5 * int_p[i * d + j];
  return rec;
}

ErrorRecord error_process(const ProcessPair& u, const FbmPath& path, int n, double t, ReferenceScheme scheme) {
  return error_process_at(u, path, n, coarse_node_index(path, n, t), scheme);
}

double skorohod_diag_increment(const FbmPath& path, Eigen::Index j, Eigen::Index k, int n) {
  check_component(path, j);
  const Eigen::Index stride = coarse_stride(path, n);
  if (k < 0 || k >= n) throw DomainError("block index out of range");
  const double inc = path.values(j, (k + 1) * stride) - path.values(j, k * stride);
  const double var = std::pow(path.grid.horizon / double(n), 2.0 * path.hurst.value());
  return 0.5 * (inc * inc - var);
}

double rosenblatt_approx(const FbmPath& path, Eigen::Index j, double t, int n) {
  return rosenblatt_approx(path, j, j, t, n);
}

double rosenblatt_approx(const FbmPath& path, Eigen::Index i, Eigen::Index j, double t, int n) {
  if (path.hurst.regime() != Regime::high) throw RegimeError("Rosenblatt approximation requires H > 3/4");
  check_component(path, i);
  check_component(path, j);
  const Eigen::Index tau = coarse_node_index(path, n, t);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(path.values.cols());
  return weighted_rosenblatt_at(ones, path, i, j, tau, n);
}

double weighted_rosenblatt_at(const Eigen::Ref<const Eigen::VectorXd>& x, const FbmPath& path, Eigen::Index j,
                              Eigen::Index e, Eigen::Index t_fine, int n) {
  check_component(path, j);
  check_component(path, e);
  check_fine_index(path, t_fine);
  const Eigen::Index stride = coarse_stride(path, n);
  double acc = 0.0;
  for (Eigen::Index a = 0; a < t_fine; a += stride) {
    const double w = x[a];
    if (w == 0.0) continue;
    if (e == j && a + stride <= t_fine) {
      acc += w * skorohod_diag_increment(path, j, a / stride, n);
    } else {
      acc += w * block_skorohod(path, j, e, a, std::min(a + stride, t_fine), a);
    }
  }
  return double(n) * acc;
}

double weighted_quad_variation_at(const Eigen::Ref<const Eigen::VectorXd>& x, const FbmPath& path, Eigen::Index j,
                                  Eigen::Index t_fine, int n) {
  check_component(path, j);
  check_fine_index(path, t_fine);
  const Eigen::Index stride = coarse_stride(path, n);
  const auto bj = path.values.row(j);
  double acc = 0.0;
  for (Eigen::Index a = 0; a < t_fine; a += stride) {
    const double inc = bj[std::min(a + stride, t_fine)] - bj[a];
    acc += x[a] * inc * inc;
  }
  return std::pow(double(n), 2.0 * path.hurst.value() - 1.0) * acc;
}

double weighted_quad_variation(const Eigen::Ref<const Eigen::VectorXd>& x, const FbmPath& path, Eigen::Index j,
                               double t, int n) {
  return weighted_quad_variation_at(x, path, j, coarse_node_index(path, n, t), n);
}

double weighted_levy_area_at(const Eigen::Ref<const Eigen::VectorXd>& x, const FbmPath& path, Eigen::Index j,
                             Eigen::Index e, Eigen::Index t_fine, int n) {
  check_component(path, j);
  check_component(path, e);
  check_fine_index(path, t_fine);
  const Eigen::Index stride = coarse_stride(path, n);
  double acc = 0.0;
  for (Eigen::Index a = 0; a < t_fine; a += stride) {
    if (x[a] == 0.0) continue;
    acc += x[a] * block_skorohod(path, j, e, a, std::min(a + stride, t_fine), a + stride);
  }
  return acc;
}

double weighted_levy_area(const Eigen::Ref<const Eigen::VectorXd>& x, const FbmPath& path, Eigen::Index j,
                          Eigen::Index e, double t, int n) {
  return weighted_levy_area_at(x, path, j, e, coarse_node_index(path, n, t), n);
}

double weighted_drift_sum_at(const Eigen::Ref<const Eigen::VectorXd>& b, const FbmPath& path, Eigen::Index i,
                             Eigen::Index t_fine, int n) {
  check_component(path, i);
  check_fine_index(path, t_fine);
  const Eigen::Index stride = coarse_stride(path, n);
  const double dt = path.grid.fine_step();
  const auto bi = path.values.row(i);
  double acc = 0.0;
  for (Eigen::Index a = 0; a < t_fine; a += stride) {
    if (b[a] == 0.0) continue;
    const Eigen::Index end = std::min(a + stride, t_fine);
    double block = 0.0;
    // Midpoint weights: exact for the linear integrand s - s_n.
    for (Eigen::Index l = a; l < end; ++l) block += (double(l - a) + 0.5) * dt * (bi[l + 1] - bi[l]);
    acc += b[a] * block;
  }
  return acc;
}

double weighted_drift_sum(const Eigen::Ref<const Eigen::VectorXd>& b, const FbmPath& path, Eigen::Index i, double t,
                          int n) {
  return weighted_drift_sum_at(b, path, i, coarse_node_index(path, n, t), n);
}

}  // namespace fbmerr
