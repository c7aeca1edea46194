#include "fbmerr/fbm_gen.hpp"
#include "fbmerr/integrands.hpp"
#include "fbmerr/integrators.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>

using fbmerr::FbmPath;
using fbmerr::HurstIndex;
using fbmerr::ProcessPair;
using fbmerr::ReferenceScheme;
using fbmerr::SimGrid;

namespace {

FbmPath sample(double h, const SimGrid& grid, std::uint64_t seed, std::uint64_t stream) {
  fbmerr::GeneratorSpec spec;
  spec.base_seed = seed;
  spec.stream_index = stream;
  return fbmerr::generate(HurstIndex(h), grid, spec);
}

ProcessPair pair_of(const std::string& spec, const FbmPath& path) { return fbmerr::build(fbmerr::parse_spec(spec), path); }

struct Stats {
  double mean = 0.0, var = 0.0, se = 0.0, mse = 0.0;
};

Stats stats_of(int reps, const std::function<double(int)>& draw) {
  double s1 = 0.0, s2 = 0.0;
  for (int r = 0; r < reps; ++r) {
    const double v = draw(r);
    s1 += v;
    s2 += v * v;
  }
  Stats st;
  st.mean = s1 / reps;
  st.mse = s2 / reps;
  st.var = (s2 - reps * st.mean * st.mean) / (reps - 1);
  st.se = std::sqrt(st.var / reps);
  return st;
}

}  // namespace

TEST(FineIntegral, ConstantIntegrandTelescopes) {
  const FbmPath path = sample(0.7, SimGrid(1.0, 16, 8, 2), 1, 0);
  const ProcessPair u = pair_of("constant:c=2.5,-1", path);
  for (auto scheme : {ReferenceScheme::left_point, ReferenceScheme::corrected}) {
    for (int j = 0; j < 2; ++j) {
      const Eigen::VectorXd v = fbmerr::fine_integral(u, path, j, 1.0, scheme);
      EXPECT_NEAR(v[0], 2.5 * path.values(j, 128), 1e-12);
      EXPECT_NEAR(v[1], -1.0 * path.values(j, 128), 1e-12);
    }
  }
  for (int n : {2, 4, 16, 128}) {
    const Eigen::VectorXd rs = fbmerr::riemann_sum(u, path, 1, 0.5, n);
    EXPECT_NEAR(rs[0], 2.5 * path.values(1, 64), 1e-12);
    const auto rec = fbmerr::error_process(u, path, n, 1.0);
    EXPECT_TRUE(rec.m_n.isZero(1e-12));
    EXPECT_TRUE(rec.corrected.isZero(1e-12));
  }
}

TEST(FineIntegral, YoungChangeOfVariable) {
  const double h = 0.8;
  const int n = 64, m = 64;
  const FbmPath path = sample(h, SimGrid(1.0, n, m, 1), 2, 0);
  const ProcessPair u = pair_of("identity_B", path);
  const double b1 = path.values(0, n * m);
  const double left = fbmerr::fine_integral(u, path, 0, 1.0, ReferenceScheme::left_point)[0];
  EXPECT_LT(std::abs(left - 0.5 * b1 * b1), 10.0 * std::pow(1.0 / (n * m), 2.0 * h - 1.0 - 0.05));
  const double corrected = fbmerr::fine_integral(u, path, 0, 1.0, ReferenceScheme::corrected)[0];
  EXPECT_NEAR(corrected, 0.5 * b1 * b1, 1e-12);
}

TEST(FineIntegral, ItoFormulaAtHalf) {
  const SimGrid grid(1.0, 64, 16, 1);
  for (auto scheme : {ReferenceScheme::left_point, ReferenceScheme::corrected}) {
    const Stats value = stats_of(2000, [&](int r) {
      const FbmPath p = sample(0.5, grid, 3, r);
      return fbmerr::fine_integral(pair_of("identity_B", p), p, 0, 1.0, scheme)[0];
    });
    EXPECT_NEAR(value.mean, 0.0, 5.0 * value.se);
    const Stats diff = stats_of(2000, [&](int r) {
      const FbmPath p = sample(0.5, grid, 3, r);
      const double b1 = p.values(0, 1024);
      return fbmerr::fine_integral(pair_of("identity_B", p), p, 0, 1.0, scheme)[0] - 0.5 * (b1 * b1 - 1.0);
    });
    EXPECT_NEAR(diff.mean, 0.0, 5.0 * diff.se + 1e-12);
  }
}

TEST(RiemannSum, CoarseEqualsFine) {
  const FbmPath path = sample(0.65, SimGrid(1.0, 32, 4, 2), 4, 0);
  const ProcessPair u = pair_of("poly_of_B:c=1,0.5,2", path);
  for (int j = 0; j < 2; ++j) {
    const Eigen::VectorXd fine = fbmerr::fine_integral(u, path, j, 0.75, ReferenceScheme::left_point);
    const Eigen::VectorXd coarse = fbmerr::riemann_sum(u, path, j, 0.75, 128);
    EXPECT_TRUE((fine.array() == coarse.array()).all());
  }
}

TEST(ErrorProcess, IdenticallyZeroWhenCoarseEqualsFine) {
  const FbmPath path = sample(0.7, SimGrid(1.0, 64, 1, 2), 5, 0);
  const ProcessPair u = pair_of("exp_like_of_B:f=sin,lambda=2", path);
  const auto rec = fbmerr::error_process(u, path, 64, 1.0, ReferenceScheme::left_point);
  EXPECT_TRUE(rec.m_n.isZero(0.0));
}

TEST(ErrorProcess, LinearInIntegrand) {
  const FbmPath path = sample(0.7, SimGrid(1.0, 32, 8, 1), 6, 0);
  const ProcessPair a = pair_of("poly_of_B:c=0,0,1", path);
  const ProcessPair b = pair_of("exp_like_of_B:f=cos", path);
  ProcessPair mix = a;
  mix.u = 1.7 * a.u - 0.3 * b.u;
  mix.p = 1.7 * a.p - 0.3 * b.p;
  for (auto scheme : {ReferenceScheme::left_point, ReferenceScheme::corrected}) {
    const double fa = fbmerr::fine_integral(a, path, 0, 1.0, scheme)[0];
    const double fb = fbmerr::fine_integral(b, path, 0, 1.0, scheme)[0];
    EXPECT_NEAR(fbmerr::fine_integral(mix, path, 0, 1.0, scheme)[0], 1.7 * fa - 0.3 * fb, 1e-12);
  }
  const double ra = fbmerr::riemann_sum(a, path, 0, 1.0, 8)[0];
  const double rb = fbmerr::riemann_sum(b, path, 0, 1.0, 8)[0];
  EXPECT_NEAR(fbmerr::riemann_sum(mix, path, 0, 1.0, 8)[0], 1.7 * ra - 0.3 * rb, 1e-12);
}

TEST(ErrorProcess, CorrectedIsMnMinusHalfTrapezoid) {
  const FbmPath path = sample(0.7, SimGrid(1.0, 16, 4, 2), 7, 0);
  const ProcessPair u = pair_of("poly_of_B:c=0,1,1", path);
  const auto rec = fbmerr::error_process(u, path, 8, 0.5);
  const Eigen::VectorXd ip = fbmerr::trapezoid_integral(u.p, path.grid, 32);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) EXPECT_DOUBLE_EQ(rec.corrected(i, j), rec.m_n(i, j) - 0.5 * ip[i * 2 + j]);
}

TEST(ErrorProcess, MeanTendsToHalfForIdentity) {
  const double h = 0.7;
  const int n = 1024;
  const SimGrid grid(1.0, n, 4, 1);
  const Stats st = stats_of(2000, [&](int r) {
    const FbmPath p = sample(h, grid, 8, r);
    return fbmerr::error_process(pair_of("identity_B", p), p, n, 1.0).m_n(0, 0);
  });
  EXPECT_NEAR(st.mean, 0.5, 5.0 * st.se);
}

TEST(ErrorProcess, HermiteSecondOrderMseShrinks) {
  const double h = 0.65;
  const SimGrid grid(1.0, 1024, 16, 1);
  double mse_small = 0.0, mse_large = 0.0;
  const int reps = 400;
  for (int r = 0; r < reps; ++r) {
    const FbmPath p = sample(h, grid, 9, r);
    const ProcessPair u = pair_of("hermite:k=2", p);
    const double c128 = fbmerr::error_process(u, p, 128, 1.0).corrected(0, 0);
    const double c1024 = fbmerr::error_process(u, p, 1024, 1.0).corrected(0, 0);
    mse_small += c128 * c128 / reps;
    mse_large += c1024 * c1024 / reps;
  }
  EXPECT_LT(mse_large, mse_small / 4.0);
}

TEST(ErrorProcess, PartialLastIncrement) {
  const FbmPath path = sample(0.6, SimGrid(1.0, 8, 4, 1), 10, 0);
  const ProcessPair u = pair_of("identity_B", path);
  const Eigen::Index end = 32, mid = 30;
  const double full = fbmerr::riemann_sum_at(u, path, 0, end, 8)[0];
  const double part = fbmerr::riemann_sum_at(u, path, 0, mid, 8)[0];
  EXPECT_NEAR(full - part, path.values(0, 28) * (path.values(0, 32) - path.values(0, 30)), 1e-14);
  const ProcessPair c = pair_of("constant:c=3", path);
  EXPECT_NEAR(fbmerr::riemann_sum_at(c, path, 0, 13, 8)[0], 3.0 * path.values(0, 13), 1e-14);
}

TEST(ErrorProcess, RejectsOffGridTimes) {
  const FbmPath path = sample(0.6, SimGrid(1.0, 8, 4, 1), 10, 0);
  const ProcessPair u = pair_of("identity_B", path);
  EXPECT_THROW(fbmerr::error_process(u, path, 8, 0.3), fbmerr::DomainError);
  EXPECT_THROW(fbmerr::error_process(u, path, 5, 1.0), fbmerr::DomainError);
}

TEST(SkorohodDiag, ClosedForm) {
  const FbmPath path = sample(0.8, SimGrid(1.0, 2, 32, 1), 11, 0);
  const double b1 = path.values(0, 64);
  EXPECT_NEAR(fbmerr::skorohod_diag_increment(path, 0, 0, 1), 0.5 * (b1 * b1 - 1.0), 1e-14);
}

TEST(SkorohodDiag, MeanZero) {
  const SimGrid grid(1.0, 16, 1, 1);
  for (int k : {0, 7, 15}) {
    const Stats st = stats_of(4000, [&](int r) { return fbmerr::skorohod_diag_increment(sample(0.8, grid, 12, r), 0, k, 16); });
    EXPECT_NEAR(st.mean, 0.0, 5.0 * st.se);
  }
}

TEST(SkorohodDiag, FineGridYoungOracle) {
  const double h = 0.8;
  const int n = 16;
  for (int m : {16, 64}) {
    const SimGrid grid(1.0, n, m, 1);
    const double bias = 0.5 * m * std::pow(1.0 / (n * m), 2.0 * h);
    const Stats st = stats_of(1000, [&](int r) {
      const FbmPath p = sample(h, grid, 13, r);
      const int k = 5;
      double young = 0.0;
      for (int l = k * m; l < (k + 1) * m; ++l) young += (p.values(0, l) - p.values(0, k * m)) * (p.values(0, l + 1) - p.values(0, l));
      const double oracle = young - 0.5 * std::pow(1.0 / n, 2.0 * h);
      return fbmerr::skorohod_diag_increment(p, 0, k, n) - oracle;
    });
    EXPECT_NEAR(st.mean, bias, 5.0 * st.se) << "m=" << m;
    EXPECT_LT(st.mean, 0.6 * std::pow(1.0 / n, 2.0 * h) * std::pow(double(m), 1.0 - 2.0 * h) * 1.2);
  }
}

TEST(Rosenblatt, RegimeGuard) {
  const FbmPath path = sample(0.75, SimGrid(1.0, 8, 1, 1), 14, 0);
  EXPECT_THROW(fbmerr::rosenblatt_approx(path, 0, 1.0, 8), fbmerr::RegimeError);
}

TEST(Rosenblatt, IsserlisVarianceAndZeroMean) {
  const double h = 0.85;
  const int n = 256;
  const SimGrid grid(1.0, n, 1, 1);
  const Stats st = stats_of(5000, [&](int r) { return fbmerr::rosenblatt_approx(sample(h, grid, 15, r), 0, 1.0, n); });
  double exact = 0.0;
  for (int k = 0; k < n; ++k) {
    for (int l = 0; l < n; ++l) {
      const double rho = fbmerr::cov_r(HurstIndex(h), double(k) / n, double(k + 1) / n, double(l) / n, double(l + 1) / n);
      exact += rho * rho;
    }
  }
  exact *= 0.5 * n * n;
  EXPECT_NEAR(st.mean, 0.0, 5.0 * st.se);
  EXPECT_NEAR(st.var, exact, 0.1 * exact);
}

TEST(Rosenblatt, CauchyInL2) {
  const double h = 0.85;
  const SimGrid grid(1.0, 512, 1, 1);
  std::vector<double> gaps(3, 0.0);
  const int reps = 1000;
  for (int r = 0; r < reps; ++r) {
    const FbmPath p = sample(h, grid, 16, r);
    for (int level = 0; level < 3; ++level) {
      const int n = 64 << level;
      const double d = fbmerr::rosenblatt_approx(p, 0, 1.0, 2 * n) - fbmerr::rosenblatt_approx(p, 0, 1.0, n);
      gaps[level] += d * d / reps;
    }
  }
  EXPECT_GT(gaps[0], gaps[1]);
  EXPECT_GT(gaps[1], gaps[2]);
}

TEST(Rosenblatt, EqualsNormalizedErrorForIdentity) {
  const double h = 0.85;
  const FbmPath path = sample(h, SimGrid(1.0, 128, 4, 2), 17, 0);
  const ProcessPair u = pair_of("identity_B", path);
  for (int n : {16, 64, 128}) {
    const auto rec = fbmerr::error_process(u, path, n, 1.0);
    const double scaled = fbmerr::nu(HurstIndex(h), n) * rec.corrected(0, 0);
    EXPECT_NEAR(scaled, fbmerr::rosenblatt_approx(path, 0, 1.0, n), 1e-9 * (1.0 + std::abs(scaled)));
    const double off = fbmerr::nu(HurstIndex(h), n) * rec.corrected(0, 1);
    EXPECT_NEAR(off, fbmerr::rosenblatt_approx(path, 1, 0, 1.0, n), 1e-9 * (1.0 + std::abs(off)));
  }
}

TEST(QuadVariation, ExactExpectationAndLimit) {
  const double h = 0.7;
  const int n = 1024;
  const SimGrid grid(1.0, n, 1, 1);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n + 1);
  const Stats half = stats_of(2000, [&](int r) { return fbmerr::weighted_quad_variation(ones, sample(h, grid, 18, r), 0, 0.5, n); });
  EXPECT_NEAR(half.mean, 0.5, 5.0 * half.se);
  const Stats full = stats_of(1000, [&](int r) {
    const double s = fbmerr::weighted_quad_variation(ones, sample(h, grid, 19, r), 0, 1.0, n);
    return s - 1.0;
  });
  EXPECT_LT(full.mse, 0.01);
}

TEST(QuadVariation, TimeWeight) {
  const double h = 0.6;
  const int n = 1024;
  const SimGrid grid(1.0, n, 1, 1);
  Eigen::VectorXd x(n + 1);
  for (int k = 0; k <= n; ++k) x[k] = grid.fine_time(k);
  const Stats st = stats_of(1000, [&](int r) { return fbmerr::weighted_quad_variation(x, sample(h, grid, 20, r), 0, 1.0, n); });
  EXPECT_NEAR(st.mean, 0.5, 5.0 * st.se);
}

TEST(LevyArea, ZeroWeight) {
  const FbmPath path = sample(0.6, SimGrid(1.0, 16, 4, 2), 21, 0);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(65);
  EXPECT_EQ(fbmerr::weighted_levy_area(zero, path, 0, 1, 1.0, 16), 0.0);
  EXPECT_EQ(fbmerr::weighted_drift_sum(zero, path, 0, 1.0, 16), 0.0);
}

TEST(LevyArea, BrownianDiagonalVariance) {
  const int n = 1024;
  const SimGrid grid(1.0, n, 1, 1);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n + 1);
  const Stats st = stats_of(5000, [&](int r) {
    return std::sqrt(double(n)) * fbmerr::weighted_levy_area(ones, sample(0.5, grid, 22, r), 0, 0, 1.0, n);
  });
  EXPECT_NEAR(st.var, 0.5, 0.05);
}

TEST(LevyArea, OffDiagonalVanishes) {
  const double h = 0.6;
  const SimGrid grid(1.0, 1024, 8, 2);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(1024 * 8 + 1);
  double mse128 = 0.0, mse1024 = 0.0;
  const int reps = 200;
  for (int r = 0; r < reps; ++r) {
    const FbmPath p = sample(h, grid, 23, r);
    const double a = std::pow(128.0, 2 * h - 1) * fbmerr::weighted_levy_area(ones, p, 0, 1, 1.0, 128);
    const double b = std::pow(1024.0, 2 * h - 1) * fbmerr::weighted_levy_area(ones, p, 0, 1, 1.0, 1024);
    mse128 += a * a / reps;
    mse1024 += b * b / reps;
  }
  EXPECT_LT(mse1024, mse128);
}

TEST(DriftSum, HighRegimeLimit) {
  const double h = 0.85;
  const int n = 512;
  const SimGrid grid(1.0, n, 8, 1);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n * 8 + 1);
  const double scale = fbmerr::nu(HurstIndex(h), n) * std::pow(double(n), 2 * h - 1);
  const Stats st = stats_of(500, [&](int r) {
    const FbmPath p = sample(h, grid, 24, r);
    return scale * fbmerr::weighted_drift_sum(ones, p, 0, 1.0, n) - 0.5 * p.values(0, n * 8);
  });
  EXPECT_LT(st.mse, 0.01);
}

TEST(DriftSum, LowRegimeDecreases) {
  const double h = 0.6;
  const SimGrid grid(1.0, 2048, 4, 1);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(2048 * 4 + 1);
  std::vector<double> mse(3, 0.0);
  const int reps = 300;
  for (int r = 0; r < reps; ++r) {
    const FbmPath p = sample(h, grid, 25, r);
    for (int k = 0; k < 3; ++k) {
      const int n = 128 << (2 * k);
      const double v = fbmerr::nu(HurstIndex(h), n) * std::pow(double(n), 2 * h - 1) *
                       fbmerr::weighted_drift_sum(ones, p, 0, 1.0, n);
      mse[k] += v * v / reps;
    }
  }
  EXPECT_GT(mse[0], mse[1]);
  EXPECT_GT(mse[1], mse[2]);
}
