#include "fbmerr/report_json.hpp"

#include <cmath>
#include <sstream>

namespace fbmerr {
namespace {

nlohmann::json number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

template <typename T>
nlohmann::json optional(const std::optional<T>& v) {
  if (!v) return nullptr;
  return number(*v);
}

}  // namespace

nlohmann::json to_json(const Experiment& e) {
  return {
      {"h", e.h.value()},
      {"integrand", to_string(e.integrand)},
      {"n_list", e.n_list},
      {"t_list", e.t_list},
      {"replications", e.replications},
      {"refine_m", e.refine_m},
      {"base_seed", e.base_seed},
      {"theorem", to_string(e.theorem)},
      {"horizon", e.horizon},
      {"dims", e.dims},
      {"reference", e.reference == ReferenceScheme::corrected ? "corrected" : "left_point"},
      {"tolerances",
       {{"se_factor", e.tol.se_factor},
        {"var_rel_tol", e.tol.var_rel_tol},
        {"ks_alpha", e.tol.ks_alpha},
        {"slope_tol", e.tol.slope_tol},
        {"mse_bound", e.tol.mse_bound},
        {"ratio_bound", e.tol.ratio_bound},
        {"first_order_fraction", e.tol.first_order_fraction}}},
  };
}

nlohmann::json to_json(const McReport& report) {
  nlohmann::json estimates = nlohmann::json::array();
  for (const Estimate& est : report.estimates) {
    nlohmann::json ci = nullptr;
    if (est.variance_ci) ci = {number(est.variance_ci->first), number(est.variance_ci->second)};
    estimates.push_back({{"quantity", est.quantity},
                         {"n", est.n},
                         {"t", est.t},
                         {"i", est.i},
                         {"j", est.j},
                         {"count", est.count},
                         {"mean", number(est.mean)},
                         {"se_mean", number(est.se_mean)},
                         {"variance", number(est.variance)},
                         {"se_variance", number(est.se_variance)},
                         {"mse", number(est.mse)},
                         {"se_mse", number(est.se_mse)},
                         {"target", optional(est.target)},
                         {"variance_ci", ci}});
  }
  nlohmann::json criteria = nlohmann::json::array();
  for (const Criterion& c : report.criteria) {
    criteria.push_back(
        {{"name", c.name}, {"observed", number(c.observed)}, {"threshold", number(c.threshold)}, {"pass", c.pass}});
  }
  nlohmann::json out = {
      {"schema", kReportSchema},
      {"experiment", to_json(report.experiment)},
      {"estimates", estimates},
      {"slope", optional(report.slope)},
      {"slope_stderr", optional(report.slope_se)},
      {"expected_slope", optional(report.expected_slope)},
      {"ks_p", optional(report.ks_p)},
      {"ks_approximate", report.ks_approximate},
      {"criteria", criteria},
      {"pass", report.pass},
  };
  if (report.wall_time) out["wall_time"] = *report.wall_time;
  return out;
}

nlohmann::json to_json(const LimitConstants& c) {
  return {{"h", c.h.value()},
          {"q", c.q},
          {"r", c.r},
          {"diag_variance_factor", diag_variance_factor(c)},
          {"offdiag_variance_factor", offdiag_variance_factor(c)},
          {"truncation_p", c.truncation_p},
          {"quadrature_err", c.quadrature_err},
          {"alternative_diag_factor", c.alternative_diag_factor}};
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

std::string samples_csv(const McReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "h,n,t,rep,i,j,m_n,corrected\n";
  for (const ErrorRecord& rec : report.samples) {
    for (Eigen::Index i = 0; i < rec.m_n.rows(); ++i) {
      for (Eigen::Index j = 0; j < rec.m_n.cols(); ++j) {
        out << rec.h.value() << ',' << rec.n << ',' << rec.t << ',' << rec.replication << ',' << i << ',' << j << ','
            << rec.m_n(i, j) << ',' << rec.corrected(i, j) << '\n';
      }
    }
  }
  return out.str();
}

nlohmann::json merge_reports(const std::vector<nlohmann::json>& reports) {
  bool pass = !reports.empty();
  for (const auto& r : reports) pass = pass && r.value("pass", false);
  return {{"schema", kReportSchema}, {"reports", reports}, {"pass", pass}};
}

}  // namespace fbmerr
