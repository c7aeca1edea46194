#pragma once

#include "fbmerr/core_model.hpp"
#include "fbmerr/integrands.hpp"
#include "fbmerr/integrators.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace fbmerr {

enum class Theorem { first_order, clt, rosenblatt, rate_slope, drift, generator_qc };

const char* to_string(Theorem t);
Theorem parse_theorem(std::string_view text);

/// Thresholds behind every pass flag of a report.
struct Tolerances {
  double se_factor = 5.0;
  double var_rel_tol = 0.1;
  double ks_alpha = 0.01;
  double slope_tol = 0.15;
  double mse_bound = 0.01;
  double ratio_bound = 0.2;
  double first_order_fraction = 0.02;

  friend bool operator==(const Tolerances&, const Tolerances&) = default;
};

struct Experiment {
  HurstIndex h{0.5};
  IntegrandSpec integrand;
  std::vector<int> n_list;
  std::vector<double> t_list{1.0};
  int replications = 100;
  int refine_m = 1;
  std::uint64_t base_seed = 0;
  Theorem theorem = Theorem::first_order;
  double horizon = 1.0;
  int dims = 1;
  Tolerances tol;
  ReferenceScheme reference = ReferenceScheme::corrected;
  bool keep_samples = false;
  bool record_timing = false;

  int n_max() const { return n_list.back(); }
  SimGrid grid() const { return SimGrid(horizon, n_max(), refine_m, dims); }

  friend bool operator==(const Experiment&, const Experiment&) = default;
};

/// Throws DomainError for malformed lists and RegimeError for theorem/H mismatches.
void validate(const Experiment& e);

struct Estimate {
  std::string quantity;
  int n = 0;
  double t = 0.0;
  int i = 0;
  int j = 0;
  std::int64_t count = 0;
  double mean = 0.0;
  double se_mean = 0.0;
  double variance = 0.0;
  double se_variance = 0.0;
  double mse = 0.0;
  double se_mse = 0.0;
  std::optional<double> target;
  std::optional<std::pair<double, double>> variance_ci;
};

struct Criterion {
  std::string name;
  double observed = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct McReport {
  Experiment experiment;
  std::vector<Estimate> estimates;
  std::optional<double> slope;
  std::optional<double> slope_se;
  std::optional<double> expected_slope;
  std::optional<double> ks_p;
  bool ks_approximate = false;
  std::vector<Criterion> criteria;
  bool pass = false;
  std::optional<double> wall_time;
  std::vector<ErrorRecord> samples;
};

/// Runs every replication on up to `workers` threads and folds the results in
/// replication order, so the report does not depend on `workers`.
McReport run_experiment(const Experiment& e, int workers = 1);

class DegenerateFit : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct SlopeFit {
  double slope = 0.0;
  double stderr_ = 0.0;
};

/// Least-squares slope of log(mse) against log(n).
SlopeFit rate_slope(std::span<const std::pair<double, double>> mse_by_n);

/// Exponent s with ||M^n - (1/2) int P||_2^2 ~ n^s implied by the normalization nu_H(n).
double expected_slope(const HurstIndex& h);

/// Composite Kolmogorov-Smirnov p-value against a normal law with estimated
/// mean and variance; the asymptotic Kolmogorov law makes it approximate.
double normality_test(std::span<const double> samples);

struct VarianceCheck {
  double estimate = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  bool pass = false;
};

/// |var - target| / target < rel_tol, with a seeded 1000-resample bootstrap CI.
VarianceCheck variance_vs_target(std::span<const double> samples, double target, double rel_tol,
                                 std::uint64_t seed = 0);

/// Exact Var(Z_n(t)) for Z_n = n sum_{k < K} ((Delta_k B)^2 - (T/n)^{2H}) / 2 with K = nt/T blocks.
double rosenblatt_isserlis_variance(const HurstIndex& h, int n, int blocks, double horizon);

}  // namespace fbmerr
