#include "fbmerr/mc_stats.hpp"

#include "fbmerr/fbm_gen.hpp"
#include "fbmerr/limit_constants.hpp"
#include "fbmerr/rng.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>
#include <tuple>

namespace fbmerr {
namespace {

constexpr std::uint32_t kBootstrapStream = 0xFFFFFFFFu;
constexpr int kBootstrapResamples = 1000;
constexpr double kMonotoneSlack = 1e-12;

struct Moments {
  std::int64_t count = 0;
  double mean = 0.0;
  double se_mean = 0.0;
  double variance = 0.0;
  double se_variance = 0.0;
  double mse = 0.0;
  double se_mse = 0.0;
};

Moments moments(std::span<const double> x) {
  Moments m;
  m.count = static_cast<std::int64_t>(x.size());
  if (x.empty()) return m;
  const double count = double(x.size());
  double sum = 0.0, sum_sq = 0.0;
  for (double v : x) {
    sum += v;
    sum_sq += v * v;
  }
  m.mean = sum / count;
  m.mse = sum_sq / count;
  double c2 = 0.0, c4 = 0.0, sq_dev = 0.0;
  for (double v : x) {
    const double dev = v - m.mean;
    c2 += dev * dev;
    c4 += dev * dev * dev * dev;
    const double s = v * v - m.mse;
    sq_dev += s * s;
  }
  if (x.size() > 1) {
    m.variance = c2 / (count - 1.0);
    m.se_mean = std::sqrt(m.variance / count);
    m.se_mse = std::sqrt(sq_dev / (count - 1.0) / count);
    const double mu2 = c2 / count;
    m.se_variance = std::sqrt(std::max(0.0, c4 / count - mu2 * mu2) / count);
  }
  return m;
}

Estimate make_estimate(std::string quantity, int n, double t, int i, int j, std::span<const double> x) {
  const Moments m = moments(x);
  Estimate e;
  e.quantity = std::move(quantity);
  e.n = n;
  e.t = t;
  e.i = i;
  e.j = j;
  e.count = m.count;
  e.mean = m.mean;
  e.se_mean = m.se_mean;
  e.variance = m.variance;
  e.se_variance = m.se_variance;
  e.mse = m.mse;
  e.se_mse = m.se_mse;
  return e;
}

std::string cell_name(const std::string& base, double t, int i, int j) {
  return base + "[t=" + std::to_string(t) + ",i=" + std::to_string(i) + ",j=" + std::to_string(j) + "]";
}

// Channel keys identify one scalar recorded per replication.
struct ChannelKey {
  std::string quantity;
  int n;
  int t_index;
  int i;
  int j;
  auto operator<=>(const ChannelKey&) const = default;
};

class Plan {
 public:
  explicit Plan(const Experiment& e) : e_(e), grid_((validate(e), e.grid())) {
    d_ = e.dims;
    if (e.theorem != Theorem::generator_qc) m_ = dry_run_dims();
    for (double t : e.t_list) t_fine_.push_back(std::llround(t / e.horizon * double(grid_.fine_steps())));
    if (e.theorem == Theorem::clt) {
      const LimitConstants c = constants(e.h);
      diag_factor_ = diag_variance_factor(c);
      offdiag_factor_ = offdiag_variance_factor(c);
    }
    declare_channels();
  }

  const Experiment& experiment() const { return e_; }
  Eigen::Index m() const { return m_; }
  Eigen::Index d() const { return d_; }
  int channel_count() const { return static_cast<int>(keys_.size()); }
  int index(const std::string& q, int n, int t, int i, int j) const { return index_.at({q, n, t, i, j}); }
  const std::vector<ChannelKey>& keys() const { return keys_; }

  // One replication: fills `out` in channel order.
  void run(std::uint64_t rep, std::vector<double>& out, std::vector<ErrorRecord>* records) const {
    out.assign(keys_.size(), 0.0);
    GeneratorSpec gs;
    gs.base_seed = e_.base_seed;
    gs.stream_index = rep;
    const FbmPath path = generate(e_.h, grid_, gs);
    if (e_.theorem == Theorem::generator_qc) {
      for (std::size_t k = 0; k < t_fine_.size(); ++k)
        for (Eigen::Index c = 0; c < d_; ++c) out[slot("B", 0, int(k), int(c), 0)] = path.values(c, t_fine_[k]);
      return;
    }
    const ProcessPair pair = build(e_.integrand, path);
    const double h = e_.h.value();
    for (int n : e_.n_list) {
      for (std::size_t k = 0; k < t_fine_.size(); ++k) {
        const Eigen::Index tf = t_fine_[k];
        ErrorRecord rec = error_process_at(pair, path, n, tf, e_.reference);
        for (Eigen::Index i = 0; i < m_; ++i) {
          for (Eigen::Index j = 0; j < d_; ++j) {
            out[slot("m_n", n, int(k), int(i), int(j))] = rec.m_n(i, j);
            out[slot("corrected", n, int(k), int(i), int(j))] = rec.corrected(i, j);
          }
        }
        if (e_.theorem == Theorem::rosenblatt) {
          for (Eigen::Index i = 0; i < m_; ++i) {
            for (Eigen::Index j = 0; j < d_; ++j) {
              double z = 0.0;
              for (Eigen::Index c = 0; c < d_; ++c) {
                const Eigen::VectorXd w = pair.p_row(i, c).transpose();
                if (w.isZero(0.0)) continue;
                z += weighted_rosenblatt_at(w, path, j, c, tf, n);
              }
              out[slot("z", n, int(k), int(i), int(j))] = z;
            }
          }
        }
        if (e_.theorem == Theorem::drift) {
          const double scale = nu(e_.h, n) * std::pow(double(n), 2.0 * h - 1.0);
          for (Eigen::Index i = 0; i < std::min(m_, d_); ++i) {
            const Eigen::VectorXd b = pair.u.row(i).transpose();
            out[slot("drift", n, int(k), int(i), 0)] = scale * weighted_drift_sum_at(b, path, i, tf, n);
          }
        }
        if (records != nullptr) records->push_back(std::move(rec));
      }
    }
    for (std::size_t k = 0; k < t_fine_.size(); ++k) {
      const Eigen::Index tf = t_fine_[k];
      switch (e_.theorem) {
        case Theorem::first_order: {
          const Eigen::VectorXd ip = trapezoid_integral(pair.p, grid_, tf);
          for (Eigen::Index i = 0; i < m_; ++i)
            for (Eigen::Index j = 0; j < d_; ++j) out[slot("half_int_p", 0, int(k), int(i), int(j))] = 0.5 * ip[i * d_ + j];
          break;
        }
        case Theorem::clt: {
          const Eigen::MatrixXd sq = pair.p.array().square().matrix();
          const Eigen::VectorXd ip2 = trapezoid_integral(sq, grid_, tf);
          for (Eigen::Index i = 0; i < m_; ++i) {
            for (Eigen::Index j = 0; j < d_; ++j) {
              double target = diag_factor_ * ip2[i * d_ + j];
              for (Eigen::Index c = 0; c < d_; ++c)
                if (c != j) target += offdiag_factor_ * ip2[i * d_ + c];
              out[slot("target_variance", 0, int(k), int(i), int(j))] = target;
            }
          }
          break;
        }
        case Theorem::drift: {
          for (Eigen::Index i = 0; i < std::min(m_, d_); ++i) {
            double target = 0.0;
            if (e_.h.regime() == Regime::high) target = 0.5 * fine_integral_at(pair, path, i, tf, e_.reference)[i];
            out[slot("drift_target", 0, int(k), int(i), 0)] = target;
          }
          break;
        }
        default: break;
      }
    }
  }

 private:
  Eigen::Index dry_run_dims() const {
    FbmPath probe;
    probe.grid = SimGrid(e_.horizon, 2, 1, e_.dims);
    probe.hurst = e_.h;
    probe.values = Eigen::MatrixXd::Zero(e_.dims, 3);
    return build(e_.integrand, probe).m_dims;
  }

  void add(const std::string& q, int n, int t, int i, int j) {
    ChannelKey key{q, n, t, i, j};
    index_.emplace(key, static_cast<int>(keys_.size()));
    keys_.push_back(std::move(key));
  }

  int slot(const std::string& q, int n, int t, int i, int j) const { return index_.at({q, n, t, i, j}); }

  void declare_channels() {
    const int tc = static_cast<int>(e_.t_list.size());
    if (e_.theorem == Theorem::generator_qc) {
      for (int k = 0; k < tc; ++k)
        for (int c = 0; c < d_; ++c) add("B", 0, k, c, 0);
      return;
    }
    for (int n : e_.n_list)
      for (int k = 0; k < tc; ++k)
        for (int i = 0; i < m_; ++i)
          for (int j = 0; j < d_; ++j) {
            add("m_n", n, k, i, j);
            add("corrected", n, k, i, j);
            if (e_.theorem == Theorem::rosenblatt) add("z", n, k, i, j);
            if (e_.theorem == Theorem::drift && j == 0 && i < d_) add("drift", n, k, i, 0);
          }
    for (int k = 0; k < tc; ++k)
      for (int i = 0; i < m_; ++i)
        for (int j = 0; j < d_; ++j) {
          if (e_.theorem == Theorem::first_order) add("half_int_p", 0, k, i, j);
          if (e_.theorem == Theorem::clt) add("target_variance", 0, k, i, j);
          if (e_.theorem == Theorem::drift && j == 0 && i < d_) add("drift_target", 0, k, i, 0);
        }
  }

  Experiment e_;
  SimGrid grid_;
  Eigen::Index m_ = 0;
  Eigen::Index d_ = 1;
  std::vector<Eigen::Index> t_fine_;
  double diag_factor_ = 0.0;
  double offdiag_factor_ = 0.0;
  std::vector<ChannelKey> keys_;
  std::map<ChannelKey, int> index_;
};

// Replication-major table of channel values.
class SampleTable {
 public:
  SampleTable(const Plan& plan, std::vector<std::vector<double>> rows) : plan_(plan), rows_(std::move(rows)) {}

  std::vector<double> column(const std::string& q, int n, int t, int i, int j) const {
    const int c = plan_.index(q, n, t, i, j);
    std::vector<double> out(rows_.size());
    for (std::size_t r = 0; r < rows_.size(); ++r) out[r] = rows_[r][static_cast<std::size_t>(c)];
    return out;
  }

 private:
  const Plan& plan_;
  std::vector<std::vector<double>> rows_;
};

std::vector<double> scaled(std::vector<double> x, double s) {
  for (double& v : x) v *= s;
  return x;
}

std::vector<double> difference(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] - b[k];
  return out;
}

double mean_of(const std::vector<double>& x) {
  return x.empty() ? 0.0 : std::accumulate(x.begin(), x.end(), 0.0) / double(x.size());
}

double mean_square(const std::vector<double>& x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return x.empty() ? 0.0 : acc / double(x.size());
}

// Largest step up along a sequence; <= 0 means non-increasing.
double largest_increase(const std::vector<double>& seq) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < seq.size(); ++k) worst = std::max(worst, seq[k] - seq[k - 1]);
  return seq.size() < 2 ? 0.0 : worst;
}

Criterion criterion(std::string name, double observed, double threshold, bool pass) {
  return Criterion{std::move(name), observed, threshold, pass};
}

// Statistic whose second-order behaviour the theorems describe: at H = 1/2
// the reference is an Ito integral and no drift correction is subtracted.
const char* centred_quantity(const HurstIndex& h) { return h.is_brownian() ? "m_n" : "corrected"; }

bool is_identity_weight(const IntegrandSpec& s) {
  return s.family == IntegrandFamily::identity_B ||
         (s.family == IntegrandFamily::hermite && s.number("k") == 1.0) ||
         (s.family == IntegrandFamily::poly_of_B && s.numbers.at("c").size() >= 2 && s.numbers.at("c")[1] == 1.0 &&
          std::all_of(s.numbers.at("c").begin() + 2, s.numbers.at("c").end(), [](double v) { return v == 0.0; }));
}

void evaluate_first_order(const Plan& plan, const SampleTable& tab, McReport& rep) {
  const Experiment& e = plan.experiment();
  const std::string q = centred_quantity(e.h);
  for (int k = 0; k < int(e.t_list.size()); ++k) {
    const double t = e.t_list[k];
    for (int i = 0; i < plan.m(); ++i) {
      for (int j = 0; j < plan.d(); ++j) {
        std::vector<double> mse_seq;
        Estimate last;
        for (int n : e.n_list) {
          Estimate est = make_estimate(q, n, t, i, j, tab.column(q, n, k, i, j));
          est.target = 0.0;
          mse_seq.push_back(est.mse);
          last = est;
          rep.estimates.push_back(std::move(est));
        }
        const Estimate weight = make_estimate("half_int_p", 0, t, i, j, tab.column("half_int_p", 0, k, i, j));
        rep.estimates.push_back(weight);
        const double rise = largest_increase(mse_seq);
        rep.criteria.push_back(criterion(cell_name("mse_nonincreasing", t, i, j), rise, 0.0, rise <= 0.0));
        if (weight.variance > 0.0 && !e.integrand.deterministic_weight()) {
          const double ratio = last.mse / weight.variance;
          rep.criteria.push_back(criterion(cell_name("final_mse_over_weight_variance", t, i, j), ratio,
                                           e.tol.first_order_fraction, ratio < e.tol.first_order_fraction));
        } else {
          const double bound = e.tol.se_factor * last.se_mean;
          rep.criteria.push_back(
              criterion(cell_name("final_mean_zero", t, i, j), std::abs(last.mean), bound, std::abs(last.mean) <= bound));
        }
      }
    }
  }
}

void evaluate_clt(const Plan& plan, const SampleTable& tab, McReport& rep) {
  const Experiment& e = plan.experiment();
  const std::string q = centred_quantity(e.h);
  const bool gaussian_limit = e.integrand.deterministic_weight();
  int cell = 0;
  for (int k = 0; k < int(e.t_list.size()); ++k) {
    const double t = e.t_list[k];
    for (int i = 0; i < plan.m(); ++i) {
      for (int j = 0; j < plan.d(); ++j, ++cell) {
        const double target = mean_of(tab.column("target_variance", 0, k, i, j));
        Estimate last;
        std::vector<double> stat;
        for (int n : e.n_list) {
          stat = scaled(tab.column(q, n, k, i, j), nu(e.h, n));
          Estimate est = make_estimate("nu_" + q, n, t, i, j, stat);
          est.target = target;
          last = est;
          rep.estimates.push_back(std::move(est));
        }
        const double bound = e.tol.se_factor * last.se_mean;
        rep.criteria.push_back(
            criterion(cell_name("mean_zero", t, i, j), std::abs(last.mean), bound, std::abs(last.mean) <= bound));
        if (target > 0.0) {
          const VarianceCheck vc =
              variance_vs_target(stat, target, e.tol.var_rel_tol, e.base_seed + std::uint64_t(cell));
          rep.estimates.back().variance_ci = std::make_pair(vc.ci_lo, vc.ci_hi);
          rep.criteria.push_back(criterion(cell_name("variance_rel_error", t, i, j),
                                           std::abs(vc.estimate - target) / target, e.tol.var_rel_tol, vc.pass));
        } else {
          rep.criteria.push_back(
              criterion(cell_name("variance_zero", t, i, j), last.variance, 1e-20, last.variance <= 1e-20));
        }
        if (gaussian_limit && target > 0.0) {
          const double p = normality_test(stat);
          rep.ks_p = rep.ks_p ? std::min(*rep.ks_p, p) : p;
          rep.ks_approximate = true;
          rep.criteria.push_back(criterion(cell_name("ks_p", t, i, j), p, e.tol.ks_alpha, p > e.tol.ks_alpha));
        }
      }
    }
  }
}

void evaluate_rate_slope(const Plan& plan, const SampleTable& tab, McReport& rep) {
  const Experiment& e = plan.experiment();
  const std::string q = centred_quantity(e.h);
  const double expected = expected_slope(e.h);
  rep.expected_slope = expected;
  for (int k = int(e.t_list.size()) - 1; k >= 0; --k) {
    const double t = e.t_list[k];
    for (int i = 0; i < plan.m(); ++i) {
      for (int j = 0; j < plan.d(); ++j) {
        std::vector<std::pair<double, double>> pts;
        for (int n : e.n_list) {
          Estimate est = make_estimate(q, n, t, i, j, tab.column(q, n, k, i, j));
          pts.emplace_back(double(n), est.mse);
          rep.estimates.push_back(std::move(est));
        }
        const std::string name = cell_name("slope", t, i, j);
        try {
          const SlopeFit fit = rate_slope(pts);
          if (!rep.slope) {
            rep.slope = fit.slope;
            rep.slope_se = fit.stderr_;
          }
          const double dev = std::abs(fit.slope - expected);
          rep.criteria.push_back(criterion(name, fit.slope, e.tol.slope_tol, dev <= e.tol.slope_tol));
        } catch (const DegenerateFit&) {
          rep.criteria.push_back(criterion(name, std::numeric_limits<double>::quiet_NaN(), e.tol.slope_tol, false));
        }
      }
    }
  }
}

void evaluate_rosenblatt(const Plan& plan, const SampleTable& tab, McReport& rep) {
  const Experiment& e = plan.experiment();
  const bool isserlis = is_identity_weight(e.integrand);
  for (int k = 0; k < int(e.t_list.size()); ++k) {
    const double t = e.t_list[k];
    for (int i = 0; i < plan.m(); ++i) {
      for (int j = 0; j < plan.d(); ++j) {
        std::vector<double> ratios;
        std::vector<double> z_last;
        for (int n : e.n_list) {
          const std::vector<double> stat = scaled(tab.column("corrected", n, k, i, j), nu(e.h, n));
          const std::vector<double> z = tab.column("z", n, k, i, j);
          const std::vector<double> diff = difference(stat, z);
          const double num = mean_square(diff), den = mean_square(z);
          ratios.push_back(den > 0.0 ? num / den : (num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity()));
          rep.estimates.push_back(make_estimate("nu_corrected_minus_z", n, t, i, j, diff));
          rep.estimates.push_back(make_estimate("z", n, t, i, j, z));
          z_last = z;
        }
        const double final_ratio = ratios.back();
        rep.criteria.push_back(criterion(cell_name("final_mse_ratio", t, i, j), final_ratio, e.tol.ratio_bound,
                                         final_ratio < e.tol.ratio_bound));
        const double rise = largest_increase(ratios);
        rep.criteria.push_back(
            criterion(cell_name("ratio_nonincreasing", t, i, j), rise, kMonotoneSlack, rise <= kMonotoneSlack));
        if (isserlis && i == j) {
          const int n = e.n_max();
          const int blocks = static_cast<int>(std::llround(t / e.horizon * n));
          const double exact = rosenblatt_isserlis_variance(e.h, n, blocks, e.horizon);
          const Moments mz = moments(z_last);
          rep.estimates.back().target = exact;
          const double rel = std::abs(mz.variance - exact) / exact;
          rep.criteria.push_back(
              criterion(cell_name("z_variance_isserlis", t, i, j), rel, e.tol.var_rel_tol, rel < e.tol.var_rel_tol));
        }
      }
    }
  }
}

void evaluate_drift(const Plan& plan, const SampleTable& tab, McReport& rep) {
  const Experiment& e = plan.experiment();
  const bool monotone = e.h.regime() != Regime::high;
  for (int k = 0; k < int(e.t_list.size()); ++k) {
    const double t = e.t_list[k];
    for (int i = 0; i < std::min(plan.m(), plan.d()); ++i) {
      const std::vector<double> target = tab.column("drift_target", 0, k, i, 0);
      std::vector<double> mse_seq;
      for (int n : e.n_list) {
        const std::vector<double> diff = difference(tab.column("drift", n, k, i, 0), target);
        Estimate est = make_estimate("drift_minus_target", n, t, i, 0, diff);
        est.target = 0.0;
        mse_seq.push_back(est.mse);
        rep.estimates.push_back(std::move(est));
      }
      rep.criteria.push_back(criterion(cell_name("final_mse", t, i, 0), mse_seq.back(), e.tol.mse_bound,
                                       mse_seq.back() < e.tol.mse_bound));
      if (monotone) {
        const double rise = largest_increase(mse_seq);
        rep.criteria.push_back(criterion(cell_name("mse_nonincreasing", t, i, 0), rise, 0.0, rise <= 0.0));
      }
    }
  }
}

void evaluate_generator(const Plan& plan, const SampleTable& tab, McReport& rep) {
  const Experiment& e = plan.experiment();
  const int tc = static_cast<int>(e.t_list.size());
  for (int c1 = 0; c1 < plan.d(); ++c1) {
    for (int c2 = c1; c2 < plan.d(); ++c2) {
      double worst = 0.0;
      for (int k = 0; k < tc; ++k) {
        for (int l = (c1 == c2 ? k : 0); l < tc; ++l) {
          const std::vector<double> a = tab.column("B", 0, k, c1, 0);
          const std::vector<double> b = tab.column("B", 0, l, c2, 0);
          std::vector<double> prod(a.size());
          for (std::size_t r = 0; r < a.size(); ++r) prod[r] = a[r] * b[r];
          Estimate est = make_estimate("B_product", 0, e.t_list[k], c1, c2, prod);
          est.quantity = "B_product[t2=" + std::to_string(e.t_list[l]) + "]";
          const double target = c1 == c2 ? cov_r(e.h, 0.0, e.t_list[k], 0.0, e.t_list[l]) : 0.0;
          est.target = target;
          worst = std::max(worst, std::abs(est.mean - target) / est.se_mean);
          rep.estimates.push_back(std::move(est));
        }
      }
      const std::string name = (c1 == c2 ? "covariance_z[c=" : "cross_covariance_z[c=") + std::to_string(c1) + "," +
                               std::to_string(c2) + "]";
      rep.criteria.push_back(criterion(name, worst, e.tol.se_factor, worst <= e.tol.se_factor));
    }
  }
}

bool is_power_of_two(int n) { return n > 0 && std::has_single_bit(static_cast<unsigned>(n)); }

}  // namespace

const char* to_string(Theorem t) {
  switch (t) {
    case Theorem::first_order: return "first_order";
    case Theorem::clt: return "clt";
    case Theorem::rosenblatt: return "rosenblatt";
    case Theorem::rate_slope: return "rate_slope";
    case Theorem::drift: return "drift";
    case Theorem::generator_qc: return "generator_qc";
  }
  return "?";
}

Theorem parse_theorem(std::string_view text) {
  for (Theorem t : {Theorem::first_order, Theorem::clt, Theorem::rosenblatt, Theorem::rate_slope, Theorem::drift,
                    Theorem::generator_qc}) {
    if (text == to_string(t)) return t;
  }
  throw DomainError("unknown theorem '" + std::string(text) + "'");
}

void validate(const Experiment& e) {
  if (e.n_list.empty()) throw DomainError("n_list must not be empty");
  for (std::size_t k = 0; k < e.n_list.size(); ++k) {
    if (e.n_list[k] < 2) throw DomainError("every n must be >= 2");
    if (k > 0 && e.n_list[k] <= e.n_list[k - 1]) throw DomainError("n_list must be strictly increasing");
  }
  if (e.replications < 2) throw DomainError("replications must be >= 2");
  if (e.refine_m < 1) throw DomainError("refine_m must be >= 1");
  if (e.dims < 1) throw DomainError("dims must be >= 1");
  if (!(e.horizon > 0.0)) throw DomainError("horizon must be positive");
  const SimGrid grid = e.grid();
  const Eigen::Index total = grid.fine_steps();
  for (int n : e.n_list) {
    if (total % n != 0) throw DomainError("n = " + std::to_string(n) + " does not divide n_max * refine_m");
  }
  if (e.t_list.empty()) throw DomainError("t_list must not be empty");
  for (double t : e.t_list) {
    if (!(t > 0.0 && t <= e.horizon)) throw DomainError("t = " + std::to_string(t) + " lies outside (0, horizon]");
    const auto idx = std::llround(t / e.horizon * double(total));
    const bool on_grid = std::abs(grid.fine_time(idx) - t) <= 1e-9 * e.horizon;
    for (int n : e.n_list) {
      if (!on_grid || idx % (total / n) != 0) {
        throw DomainError("t = " + std::to_string(t) + " is not a coarse node for n = " + std::to_string(n));
      }
    }
  }
  switch (e.theorem) {
    case Theorem::clt:
      if (e.h.regime() == Regime::high) throw RegimeError("clt requires H <= 3/4");
      break;
    case Theorem::rosenblatt:
      if (e.h.regime() != Regime::high) throw RegimeError("rosenblatt requires H > 3/4");
      break;
    case Theorem::rate_slope:
      if (e.n_list.size() < 3) throw DomainError("rate_slope requires at least three n values");
      if (!std::all_of(e.n_list.begin(), e.n_list.end(), is_power_of_two)) {
        throw DomainError("rate_slope requires dyadic n values");
      }
      break;
    default: break;
  }
}

McReport run_experiment(const Experiment& e, int workers) {
  const auto start = std::chrono::steady_clock::now();
  const Plan plan(e);
  const auto reps = static_cast<std::size_t>(e.replications);
  std::vector<std::vector<double>> rows(reps);
  std::vector<std::vector<ErrorRecord>> records(e.keep_samples ? reps : 0);
  std::vector<std::exception_ptr> errors(reps);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < reps; r = next++) {
      try {
        plan.run(r, rows[r], e.keep_samples ? &records[r] : nullptr);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  };
  const int threads = std::clamp(workers, 1, e.replications);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& err : errors)
    if (err) std::rethrow_exception(err);

  McReport rep;
  rep.experiment = e;
  for (std::size_t r = 0; r < records.size(); ++r) {
    for (ErrorRecord& rec : records[r]) {
      rec.replication = r;
      rep.samples.push_back(std::move(rec));
    }
  }
  const SampleTable tab(plan, std::move(rows));
  switch (e.theorem) {
    case Theorem::first_order: evaluate_first_order(plan, tab, rep); break;
    case Theorem::clt: evaluate_clt(plan, tab, rep); break;
    case Theorem::rate_slope: evaluate_rate_slope(plan, tab, rep); break;
    case Theorem::rosenblatt: evaluate_rosenblatt(plan, tab, rep); break;
    case Theorem::drift: evaluate_drift(plan, tab, rep); break;
    case Theorem::generator_qc: evaluate_generator(plan, tab, rep); break;
  }
  rep.pass = !rep.criteria.empty() &&
             std::all_of(rep.criteria.begin(), rep.criteria.end(), [](const Criterion& c) { return c.pass; });
  if (e.record_timing) {
    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return rep;
}

SlopeFit rate_slope(std::span<const std::pair<double, double>> mse_by_n) {
  if (mse_by_n.size() < 3) throw DomainError("rate_slope requires at least three points");
  Eigen::VectorXd x(static_cast<Eigen::Index>(mse_by_n.size()));
  Eigen::VectorXd y(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const auto [n, mse] = mse_by_n[static_cast<std::size_t>(k)];
    if (!(mse > 0.0)) throw DegenerateFit("rate_slope requires positive mse values");
    if (!(n > 0.0)) throw DomainError("rate_slope requires positive n");
    x[k] = std::log(n);
    y[k] = std::log(mse);
  }
  const double xm = x.mean(), ym = y.mean();
  const Eigen::VectorXd xc = x.array() - xm;
  const Eigen::VectorXd yc = y.array() - ym;
  const double sxx = xc.squaredNorm();
  SlopeFit fit;
  fit.slope = xc.dot(yc) / sxx;
  const Eigen::VectorXd resid = yc - fit.slope * xc;
  fit.stderr_ = std::sqrt(resid.squaredNorm() / double(x.size() - 2) / sxx);
  return fit;
}

double expected_slope(const HurstIndex& h) {
  if (h.regime() == Regime::high) return -(4.0 - 4.0 * h.value());
  return -1.0;
}

double normality_test(std::span<const double> samples) {
  const std::size_t n = samples.size();
  if (n < 2) return 1.0;
  const Moments m = moments(samples);
  if (!(m.variance > 0.0)) return 0.0;
  std::vector<double> z(samples.begin(), samples.end());
  const double sd = std::sqrt(m.variance);
  for (double& v : z) v = (v - m.mean) / sd;
  std::sort(z.begin(), z.end());
  double stat = 0.0;
  const double count = double(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double cdf = 0.5 * std::erfc(-z[k] / std::sqrt(2.0));
    stat = std::max({stat, double(k + 1) / count - cdf, cdf - double(k) / count});
  }
  const double root = std::sqrt(count);
  const double lambda = (root + 0.12 + 0.11 / root) * stat;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    p += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(p, 0.0, 1.0);
}

VarianceCheck variance_vs_target(std::span<const double> samples, double target, double rel_tol, std::uint64_t seed) {
  if (!(target > 0.0)) throw DomainError("variance_vs_target requires target > 0");
  VarianceCheck out;
  out.estimate = moments(samples).variance;
  out.pass = std::abs(out.estimate - target) / target < rel_tol;
  const std::size_t n = samples.size();
  if (n < 2) {
    out.ci_lo = out.ci_hi = out.estimate;
    return out;
  }
  RandomStream rng(seed, kBootstrapStream, 0);
  std::vector<double> boot(kBootstrapResamples);
  for (double& b : boot) {
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double v = samples[rng.below(n)];
      sum += v;
      sum_sq += v * v;
    }
    const double mean = sum / double(n);
    b = (sum_sq - double(n) * mean * mean) / double(n - 1);
  }
  std::sort(boot.begin(), boot.end());
  out.ci_lo = boot[static_cast<std::size_t>(0.025 * kBootstrapResamples)];
  out.ci_hi = boot[static_cast<std::size_t>(0.975 * kBootstrapResamples) - 1];
  return out;
}

double rosenblatt_isserlis_variance(const HurstIndex& h, int n, int blocks, double horizon) {
  if (n < 1 || blocks < 0 || blocks > n) throw DomainError("rosenblatt_isserlis_variance: bad block count");
  const double v = std::pow(horizon / double(n), 2.0 * h.value());
  double sum = 0.0;
  for (int lag = -(blocks - 1); lag <= blocks - 1; ++lag) {
    const double rho = fgn_autocov(h, 1.0, lag);
    sum += double(blocks - std::abs(lag)) * rho * rho;
  }
  return double(n) * double(n) * 0.5 * v * v * sum;
}

}  // namespace fbmerr
