#include "fbmerr/fbm_gen.hpp"
#include "fbmerr/integrands.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using fbmerr::FbmPath;
using fbmerr::HurstIndex;
using fbmerr::IntegrandFamily;
using fbmerr::ProcessPair;
using fbmerr::SimGrid;
using fbmerr::SpecParseError;

namespace {

FbmPath manual_path(double h, const std::vector<double>& values) {
  FbmPath path;
  path.values = Eigen::Map<const Eigen::RowVectorXd>(values.data(), Eigen::Index(values.size()));
  path.grid = SimGrid(1.0, int(values.size()) - 1, 1, 1);
  path.hurst = HurstIndex(h);
  return path;
}

FbmPath sample(double h, const SimGrid& grid, std::uint64_t seed, std::uint64_t stream) {
  fbmerr::GeneratorSpec spec;
  spec.base_seed = seed;
  spec.stream_index = stream;
  return fbmerr::generate(HurstIndex(h), grid, spec);
}

// Same Brownian path seen on a grid `factor` times coarser.
FbmPath coarsen(const FbmPath& fine, int factor) {
  FbmPath out = fine;
  const Eigen::Index nodes = fine.fine_steps() / factor + 1;
  out.values.resize(fine.dims(), nodes);
  for (Eigen::Index k = 0; k < nodes; ++k) out.values.col(k) = fine.values.col(k * factor);
  out.grid = SimGrid(fine.grid.horizon, fine.grid.n_coarse, fine.grid.refine_m / factor, fine.grid.d_dims);
  return out;
}

SpecParseError parse_error(const std::string& text) {
  try {
    fbmerr::parse_spec(text);
  } catch (const SpecParseError& e) {
    return e;
  }
  ADD_FAILURE() << "no error for " << text;
  return SpecParseError(SpecParseError::Kind::BadValue, "", 0);
}

}  // namespace

TEST(ParseSpec, Examples) {
  const auto c = fbmerr::parse_spec("constant:c=3");
  EXPECT_EQ(c.family, IntegrandFamily::constant);
  EXPECT_EQ(c.numbers.at("c"), std::vector<double>{3.0});
  const auto k = fbmerr::parse_spec("hermite:k=2");
  EXPECT_EQ(k.family, IntegrandFamily::hermite);
  EXPECT_EQ(k.number("k"), 2.0);
  const auto p = fbmerr::parse_spec("poly_of_B:c=0,0,1");
  EXPECT_EQ(p.numbers.at("c"), (std::vector<double>{0.0, 0.0, 1.0}));
  const auto s = fbmerr::parse_spec("fsde:f=tanh,g=zero");
  EXPECT_EQ(s.name("f"), "tanh");
  EXPECT_EQ(s.name("g"), "zero");
  EXPECT_EQ(s.name("F"), "id");
  EXPECT_EQ(fbmerr::parse_spec("identity_B").family, IntegrandFamily::identity_B);
}

TEST(ParseSpec, CanonicalRoundTrip) {
  for (const char* text : {"constant:c=3", "constant:c=1,-2.5", "identity_B", "poly_of_B:c=0,0,0,1", "hermite:k=3",
                           "exp_like_of_B:f=sin,lambda=0.25", "fsde:F=tanh,f=sin,g=one,scheme=euler,v0=-0.5",
                           "brownian_pathdep", "abs_B", "convex_general:a=0.1,f=hinge", "poly_of_B:c=+1,1e-3"}) {
    const auto spec = fbmerr::parse_spec(text);
    const std::string printed = fbmerr::to_string(spec);
    EXPECT_EQ(fbmerr::parse_spec(printed), spec) << text;
    EXPECT_EQ(fbmerr::to_string(fbmerr::parse_spec(printed)), printed) << text;
  }
  EXPECT_EQ(fbmerr::to_string(fbmerr::parse_spec("constant:c=3")), "constant:c=3");
  EXPECT_EQ(fbmerr::to_string(fbmerr::parse_spec("hermite")), "hermite:k=1");
}

TEST(ParseSpec, EmptyTokenIsMalformedAtItsPosition) {
  const auto e = parse_error("poly_of_B:c=1,0,,");
  EXPECT_EQ(e.kind(), SpecParseError::Kind::MalformedNumber);
  EXPECT_EQ(e.position(), 16u);
  EXPECT_EQ(e.token(), "");
}

TEST(ParseSpec, ErrorKindsNameTokenAndPosition) {
  auto e = parse_error("polynomial:c=1");
  EXPECT_EQ(e.kind(), SpecParseError::Kind::UnknownFamily);
  EXPECT_EQ(e.token(), "polynomial");
  EXPECT_EQ(e.position(), 0u);

  e = parse_error("hermite:j=2");
  EXPECT_EQ(e.kind(), SpecParseError::Kind::UnknownKey);
  EXPECT_EQ(e.token(), "j");
  EXPECT_EQ(e.position(), 8u);

  e = parse_error("constant:c=abc");
  EXPECT_EQ(e.kind(), SpecParseError::Kind::MalformedNumber);
  EXPECT_EQ(e.token(), "abc");
  EXPECT_EQ(e.position(), 11u);

  e = parse_error("hermite:k=1,2");
  EXPECT_EQ(e.kind(), SpecParseError::Kind::BadArity);
  EXPECT_EQ(e.position(), 8u);

  e = parse_error("poly_of_B:1");
  EXPECT_EQ(e.kind(), SpecParseError::Kind::BadArity);
  EXPECT_EQ(e.position(), 10u);

  e = parse_error("exp_like_of_B:f=log");
  EXPECT_EQ(e.kind(), SpecParseError::Kind::BadValue);
  EXPECT_EQ(e.token(), "log");
  EXPECT_EQ(e.position(), 16u);

  EXPECT_EQ(parse_error("hermite:k=0").kind(), SpecParseError::Kind::BadValue);
  EXPECT_EQ(parse_error("hermite:k=1.5").kind(), SpecParseError::Kind::BadValue);
  EXPECT_NE(std::string(parse_error("constant:c=1,x").what()).find("'x'"), std::string::npos);
}

TEST(ParseSpec, DeterministicWeight) {
  EXPECT_TRUE(fbmerr::parse_spec("constant").deterministic_weight());
  EXPECT_TRUE(fbmerr::parse_spec("identity_B").deterministic_weight());
  EXPECT_TRUE(fbmerr::parse_spec("poly_of_B:c=2,3").deterministic_weight());
  EXPECT_FALSE(fbmerr::parse_spec("poly_of_B:c=0,0,1").deterministic_weight());
  EXPECT_TRUE(fbmerr::parse_spec("hermite:k=1").deterministic_weight());
  EXPECT_FALSE(fbmerr::parse_spec("hermite:k=2").deterministic_weight());
  EXPECT_FALSE(fbmerr::parse_spec("abs_B").deterministic_weight());
}

TEST(FofB, Examples) {
  const FbmPath path = manual_path(0.7, {0.0, 0.3, -1.2});
  const ProcessPair id = fbmerr::build(fbmerr::parse_spec("poly_of_B:c=0,1"), path);
  EXPECT_DOUBLE_EQ(id.u(0, 1), 0.3);
  EXPECT_TRUE((id.p.array() == 1.0).all());
  const ProcessPair sq = fbmerr::build(fbmerr::parse_spec("poly_of_B:c=0,0,1"), path);
  EXPECT_NEAR(sq.u(0, 1), 0.09, 1e-15);
  EXPECT_NEAR(sq.p(0, 1), 0.6, 1e-15);
  EXPECT_NEAR(sq.u(0, 2), 1.44, 1e-15);
  const ProcessPair ex = fbmerr::build(fbmerr::parse_spec("exp_like_of_B:f=sin,lambda=2"), path);
  EXPECT_NEAR(ex.u(0, 1), std::sin(0.6), 1e-15);
  EXPECT_NEAR(ex.p(0, 1), 2.0 * std::cos(0.6), 1e-15);
}

TEST(FofB, ComponentwiseInSeveralDimensions) {
  const FbmPath path = sample(0.7, SimGrid(1.0, 8, 2, 3), 1, 0);
  const ProcessPair u = fbmerr::build(fbmerr::parse_spec("poly_of_B:c=1,0,0,2"), path);
  ASSERT_EQ(u.u.rows(), 3);
  ASSERT_EQ(u.p.rows(), 9);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      for (Eigen::Index l = 0; l < u.nodes(); ++l) {
        const double b = path.values(i, l);
        if (i == j) {
          EXPECT_NEAR(u.p_row(i, j)[l], 6.0 * b * b, 1e-14);
        } else {
          EXPECT_EQ(u.p_row(i, j)[l], 0.0);
        }
      }
    }
    EXPECT_NEAR(u.u(i, 5), 1.0 + 2.0 * std::pow(path.values(i, 5), 3), 1e-14);
  }
}

TEST(Hermite, ClosedForms) {
  const double h = 0.65;
  const FbmPath path = sample(h, SimGrid(1.0, 64, 4, 1), 2, 0);
  const ProcessPair u1 = fbmerr::build(fbmerr::parse_spec("hermite:k=1"), path);
  const ProcessPair u2 = fbmerr::build(fbmerr::parse_spec("hermite:k=2"), path);
  const ProcessPair u3 = fbmerr::build(fbmerr::parse_spec("hermite:k=3"), path);
  EXPECT_TRUE((u1.u.array() == path.values.array()).all());
  EXPECT_TRUE((u1.p.array() == 1.0).all());
  for (Eigen::Index l = 0; l < path.values.cols(); ++l) {
    const double b = path.values(0, l);
    const double v = std::pow(path.grid.fine_time(l), 2.0 * h);
    EXPECT_NEAR(u2.u(0, l) + v, b * b, 1e-12);
    EXPECT_NEAR(u2.p(0, l), 2.0 * b, 1e-12);
    // delta^3 = B delta^2 - 2 |1_[0,s]|^2 delta^1, from the product formula.
    EXPECT_NEAR(u3.u(0, l), b * u2.u(0, l) - 2.0 * v * u1.u(0, l), 1e-12);
    EXPECT_NEAR(u3.p(0, l), 3.0 * u2.u(0, l), 1e-12);
  }
  EXPECT_EQ(u2.u(0, 0), 0.0);
  EXPECT_EQ(u3.u(0, 0), 0.0);
}

TEST(Hermite, OrderAboveThreeUnsupported) {
  const FbmPath path = sample(0.65, SimGrid(1.0, 8, 1, 1), 3, 0);
  EXPECT_THROW(fbmerr::build(fbmerr::parse_spec("hermite:k=4"), path), fbmerr::UnsupportedOrder);
}

TEST(Fsde, TrivialCoefficients) {
  const FbmPath path = sample(0.7, SimGrid(1.0, 16, 4, 2), 4, 0);
  const ProcessPair frozen = fbmerr::build(fbmerr::parse_spec("fsde:f=zero,g=zero,v0=0.4"), path);
  EXPECT_TRUE((frozen.u.array() == 0.4).all());
  EXPECT_TRUE((frozen.p.array() == 0.0).all());
  const FbmPath scalar = sample(0.7, SimGrid(1.0, 16, 4, 1), 4, 0);
  const ProcessPair shifted = fbmerr::build(fbmerr::parse_spec("fsde:f=one,g=zero,v0=0.5"), scalar);
  for (Eigen::Index l = 0; l < shifted.nodes(); ++l) EXPECT_NEAR(shifted.u(0, l), 0.5 + scalar.values(0, l), 1e-12);
  EXPECT_TRUE((shifted.p.array() == 1.0).all());
}

TEST(Fsde, RejectsBrownian) {
  const FbmPath path = sample(0.5, SimGrid(1.0, 8, 1, 1), 5, 0);
  EXPECT_THROW(fbmerr::build(fbmerr::parse_spec("fsde"), path), fbmerr::RegimeError);
}

TEST(Fsde, MilsteinConvergesToDossSussmannSolution) {
  const double h = 0.7, v0 = 0.5;
  const int n = 8, finest = 128;
  const auto exact = [&](double w) { return std::asinh(std::sinh(v0) * std::exp(w)); };
  double err32 = 0.0, err64 = 0.0, diff32 = 0.0, diff64 = 0.0;
  const int reps = 50;
  for (int r = 0; r < reps; ++r) {
    const FbmPath fine = sample(h, SimGrid(1.0, n, finest, 1), 6, r);
    double sup[3] = {0.0, 0.0, 0.0}, sup_err[2] = {0.0, 0.0};
    const ProcessPair a = fbmerr::build(fbmerr::parse_spec("fsde:v0=0.5"), coarsen(fine, 4));
    const ProcessPair b = fbmerr::build(fbmerr::parse_spec("fsde:v0=0.5"), coarsen(fine, 2));
    const ProcessPair c = fbmerr::build(fbmerr::parse_spec("fsde:v0=0.5"), fine);
    for (Eigen::Index k = 0; k <= n * 32; ++k) {
      const double w = fine.values(0, 4 * k);
      sup_err[0] = std::max(sup_err[0], std::abs(a.u(0, k) - exact(w)));
      sup_err[1] = std::max(sup_err[1], std::abs(b.u(0, 2 * k) - exact(w)));
      sup[0] = std::max(sup[0], std::abs(a.u(0, k) - b.u(0, 2 * k)));
      sup[1] = std::max(sup[1], std::abs(b.u(0, 2 * k) - c.u(0, 4 * k)));
    }
    err32 += sup_err[0] / reps;
    err64 += sup_err[1] / reps;
    diff32 += sup[0] / reps;
    diff64 += sup[1] / reps;
  }
  EXPECT_LT(err64, 0.5 * err32);
  EXPECT_LT(diff64, 0.5 * diff32);
}

TEST(Fsde, EulerConvergesAtYoungRate) {
  const double h = 0.7, v0 = 0.5;
  const auto exact = [&](double w) { return std::asinh(std::sinh(v0) * std::exp(w)); };
  double err[2] = {0.0, 0.0};
  const int reps = 50;
  for (int r = 0; r < reps; ++r) {
    const FbmPath fine = sample(h, SimGrid(1.0, 8, 256, 1), 7, r);
    for (int level = 0; level < 2; ++level) {
      const int factor = level == 0 ? 16 : 1;
      const FbmPath p = coarsen(fine, factor);
      const ProcessPair u = fbmerr::build(fbmerr::parse_spec("fsde:scheme=euler,v0=0.5"), p);
      double sup = 0.0;
      for (Eigen::Index k = 0; k < p.values.cols(); ++k) sup = std::max(sup, std::abs(u.u(0, k) - exact(p.values(0, k))));
      err[level] += sup / reps;
    }
  }
  const double slope = std::log(err[1] / err[0]) / std::log(16.0);
  EXPECT_NEAR(slope, -(2.0 * h - 1.0), 0.15);
}

TEST(PathDependent, RunningMaximum) {
  const FbmPath up = manual_path(0.5, {0.0, 0.1, 0.4, 0.9});
  const ProcessPair a = fbmerr::build(fbmerr::parse_spec("brownian_pathdep"), up);
  for (Eigen::Index l = 0; l < 4; ++l) {
    EXPECT_DOUBLE_EQ(a.u(0, l), up.values(0, l) * up.values(0, l));
    EXPECT_DOUBLE_EQ(a.p(0, l), up.values(0, l));
  }
  const FbmPath dip = manual_path(0.5, {0.0, 0.2, -0.1, 0.1});
  const ProcessPair b = fbmerr::build(fbmerr::parse_spec("brownian_pathdep"), dip);
  EXPECT_LT(b.u(0, 2), 0.0);
  EXPECT_GT(b.p(0, 2), 0.0);
  EXPECT_DOUBLE_EQ(b.p(0, 3), 0.2);
}

TEST(PathDependent, Guards) {
  EXPECT_THROW(fbmerr::build(fbmerr::parse_spec("brownian_pathdep"), manual_path(0.6, {0.0, 0.1, 0.2})), fbmerr::RegimeError);
  const FbmPath two = sample(0.5, SimGrid(1.0, 4, 1, 2), 8, 0);
  EXPECT_THROW(fbmerr::build(fbmerr::parse_spec("brownian_pathdep"), two), fbmerr::DomainError);
}

TEST(Convex, AbsAndHinge) {
  const FbmPath path = manual_path(0.65, {0.0, -0.2, 0.3});
  const ProcessPair a = fbmerr::build(fbmerr::parse_spec("abs_B"), path);
  EXPECT_DOUBLE_EQ(a.u(0, 1), 0.2);
  EXPECT_EQ(a.p(0, 1), -1.0);
  EXPECT_EQ(a.p(0, 0), -1.0);
  EXPECT_EQ(a.p(0, 2), 1.0);
  const ProcessPair hinge = fbmerr::build(fbmerr::parse_spec("convex_general:a=0.1,f=hinge"), path);
  EXPECT_DOUBLE_EQ(hinge.u(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(hinge.u(0, 2), 0.2);
  EXPECT_EQ(hinge.p(0, 1), 0.0);
  EXPECT_EQ(hinge.p(0, 2), 1.0);
  const ProcessPair shifted = fbmerr::build(fbmerr::parse_spec("convex_general:a=-0.2"), path);
  EXPECT_EQ(shifted.p(0, 1), -1.0);
  EXPECT_DOUBLE_EQ(shifted.u(0, 2), 0.5);
}

TEST(Convex, RegimeGuards) {
  for (double h : {0.5, 0.75, 0.8}) {
    const FbmPath path = manual_path(h, {0.0, 0.1, 0.2});
    EXPECT_THROW(fbmerr::build(fbmerr::parse_spec("abs_B"), path), fbmerr::RegimeError) << h;
    EXPECT_THROW(fbmerr::build(fbmerr::parse_spec("convex_general"), path), fbmerr::RegimeError) << h;
  }
}

TEST(Properties, WeightIsPathDerivative) {
  const double eps = 1e-5;
  const FbmPath path = sample(0.7, SimGrid(1.0, 64, 16, 2), 9, 0);
  for (const char* text : {"poly_of_B:c=1,-1,0.5,0.3", "exp_like_of_B:f=tanh,lambda=1.5", "exp_like_of_B:f=cos"}) {
    const auto spec = fbmerr::parse_spec(text);
    const ProcessPair base = fbmerr::build(spec, path);
    for (Eigen::Index s : {100, 517, 1000}) {
      for (int j = 0; j < 2; ++j) {
        FbmPath bumped = path;
        bumped.values.row(j).tail(path.values.cols() - s).array() += eps;
        const ProcessPair moved = fbmerr::build(spec, bumped);
        for (int i = 0; i < 2; ++i) {
          const double fd = (moved.u(i, s) - base.u(i, s)) / eps;
          const double p = base.p_row(i, j)[s];
          EXPECT_NEAR(fd, p, 1e-3 * std::max(1.0, std::abs(p))) << text << " s=" << s << " i=" << i << " j=" << j;
        }
      }
    }
  }
  const auto sde = fbmerr::parse_spec("fsde:f=sin,g=tanh,scheme=euler,v0=0.3");
  const ProcessPair base = fbmerr::build(sde, path);
  for (Eigen::Index s : {100, 517, 1000}) {
    for (int j = 0; j < 2; ++j) {
      FbmPath bumped = path;
      bumped.values.row(j).tail(path.values.cols() - s - 1).array() += eps;
      const double fd = (fbmerr::build(sde, bumped).u(0, s + 1) - base.u(0, s + 1)) / eps;
      const double p = base.p_row(0, j)[s];
      EXPECT_NEAR(fd, p, 1e-3 * std::max(1.0, std::abs(p))) << "fsde s=" << s;
    }
  }
}

TEST(Properties, RemainderDecay) {
  const double h = 0.7;
  const double kappa = h - 0.05;
  const std::vector<int> ns = {64, 256, 1024};
  for (const char* text : {"poly_of_B:c=0,0,1", "exp_like_of_B:f=sin", "fsde:v0=0.5"}) {
    std::vector<double> log_rem(ns.size(), 0.0);
    const int reps = 40;
    for (int r = 0; r < reps; ++r) {
      const FbmPath path = sample(h, SimGrid(1.0, 1024, 1, 1), 10, r);
      const ProcessPair u = fbmerr::build(fbmerr::parse_spec(text), path);
      for (std::size_t a = 0; a < ns.size(); ++a) {
        const int stride = 1024 / ns[a];
        double worst = 0.0;
        for (int k = 0; k < ns[a]; ++k) {
          const Eigen::Index l0 = Eigen::Index(k) * stride, l1 = l0 + stride;
          const double rem = u.u(0, l1) - u.u(0, l0) - u.p(0, l0) * (path.values(0, l1) - path.values(0, l0));
          worst = std::max(worst, std::abs(rem));
        }
        log_rem[a] += std::log(worst) / reps;
      }
    }
    const double slope = (log_rem.back() - log_rem.front()) / (std::log(double(ns.back())) - std::log(double(ns.front())));
    EXPECT_NEAR(slope, -2.0 * kappa, 0.2) << text;
  }
}
