#include "fbmerr/fbm_gen.hpp"
#include "fbmerr/limit_constants.hpp"
#include "fbmerr/mc_stats.hpp"
#include "fbmerr/report_json.hpp"
#include "fbmerr/run_config.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

struct Overrides {
  std::optional<double> h;
  std::vector<int> n;
  std::optional<int> m;
  std::vector<double> t;
  std::optional<int> reps;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;
  std::optional<std::string> integrand;
  std::optional<int> d;
  std::optional<std::string> theorem;
};

void add_experiment_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--h", o.h, "Hurst index in [0.5, 1)");
  cmd->add_option("--n", o.n, "coarse step counts, comma separated")->delimiter(',');
  cmd->add_option("--m", o.m, "fine refinement factor");
  cmd->add_option("--t", o.t, "evaluation times, comma separated")->delimiter(',');
  cmd->add_option("--reps", o.reps, "replications");
  cmd->add_option("--seed", o.seed, "base seed");
  cmd->add_option("--workers", o.workers, "worker threads");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--integrand", o.integrand, "integrand spec string, e.g. poly_of_B:c=0,0,0,1");
  cmd->add_option("--d", o.d, "number of fBm components");
  cmd->add_option("--theorem", o.theorem, "first_order, clt, rosenblatt, rate_slope, drift or generator_qc");
}

void apply(const Overrides& o, fbmerr::RunConfig& c) {
  auto& e = c.experiment;
  if (o.h) e.h = fbmerr::HurstIndex(*o.h);
  if (!o.n.empty()) e.n_list = o.n;
  if (o.m) e.refine_m = *o.m;
  if (!o.t.empty()) e.t_list = o.t;
  if (o.reps) e.replications = *o.reps;
  if (o.seed) e.base_seed = *o.seed;
  if (o.workers) c.workers = *o.workers;
  if (o.out) c.output_dir = *o.out;
  if (o.integrand) e.integrand = fbmerr::parse_spec(*o.integrand);
  if (o.d) e.dims = *o.d;
  if (o.theorem) e.theorem = fbmerr::parse_theorem(*o.theorem);
}

int run_and_write(const fbmerr::RunConfig& config) {
  const fbmerr::McReport report = fbmerr::run_experiment(config.experiment, config.workers);
  const auto dir = config.output_dir;
  fbmerr::atomic_write(dir / "report.json", fbmerr::dump(fbmerr::to_json(report)));
  if (config.dump_samples) fbmerr::atomic_write(dir / "samples.csv", fbmerr::samples_csv(report));
  for (const auto& c : report.criteria) {
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " observed=" << c.observed << " threshold=" << c.threshold
              << '\n';
  }
  if (report.slope) std::cout << "slope " << *report.slope << " +/- " << report.slope_se.value_or(0.0) << '\n';
  std::cout << (report.pass ? "verdict: pass" : "verdict: fail") << '\n';
  return report.pass ? kExitPass : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discretization error of Riemann sums against fractional Brownian motion"};
  app.set_help_flag("--help", "print this help message and exit");
  app.require_subcommand(1);

  double const_h = 0.5;
  auto* constants_cmd = app.add_subcommand("constants", "print the limit variance constants q_H and r_H as JSON");
  constants_cmd->add_option("--h", const_h, "Hurst index")->required();

  Overrides path_opts;
  int path_count = 1;
  auto* paths_cmd = app.add_subcommand("paths", "dump simulated fBm paths as CSV");
  paths_cmd->add_option("--h", path_opts.h, "Hurst index")->required();
  paths_cmd->add_option("--n", path_opts.n, "coarse steps")->required()->expected(1);
  paths_cmd->add_option("--m", path_opts.m, "refinement factor");
  paths_cmd->add_option("--d", path_opts.d, "components");
  paths_cmd->add_option("--seed", path_opts.seed, "base seed");
  paths_cmd->add_option("--count", path_count, "number of paths");
  paths_cmd->add_option("--out", path_opts.out, "output file; stdout when omitted");

  std::string verify_config;
  Overrides verify_opts;
  auto* verify_cmd = app.add_subcommand("verify", "run an experiment and write report.json");
  verify_cmd->add_option("config", verify_config, "config file")->required();
  add_experiment_flags(verify_cmd, verify_opts);

  std::string rate_config;
  Overrides rate_opts;
  auto* rate_cmd = app.add_subcommand("rate", "fit the log-MSE slope over n");
  rate_cmd->add_option("config", rate_config, "optional config file");
  add_experiment_flags(rate_cmd, rate_opts);

  std::vector<std::string> merge_inputs;
  std::string merge_out;
  auto* merge_cmd = app.add_subcommand("report-merge", "combine report.json files");
  merge_cmd->add_option("reports", merge_inputs, "report files")->required();
  merge_cmd->add_option("--out", merge_out, "output file; stdout when omitted");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  try {
    if (constants_cmd->parsed()) {
      const auto c = fbmerr::constants(fbmerr::HurstIndex(const_h));
      std::cout << fbmerr::dump(fbmerr::to_json(c));
      return kExitPass;
    }
    if (paths_cmd->parsed()) {
      const fbmerr::SimGrid grid(1.0, path_opts.n.front(), path_opts.m.value_or(1), path_opts.d.value_or(1));
      const fbmerr::HurstIndex h(*path_opts.h);
      if (path_count < 1) throw fbmerr::DomainError("--count must be >= 1");
      for (int k = 0; k < path_count; ++k) {
        fbmerr::GeneratorSpec spec;
        spec.base_seed = path_opts.seed.value_or(0);
        spec.stream_index = static_cast<std::uint64_t>(k);
        const auto path = fbmerr::generate(h, grid, spec);
        std::ostringstream csv;
        fbmerr::write_path_csv(path, csv);
        if (!path_opts.out) {
          std::cout << csv.str();
          continue;
        }
        std::filesystem::path target = *path_opts.out;
        if (path_count > 1) {
          target.replace_filename(target.stem().string() + "_" + std::to_string(k) + target.extension().string());
        }
        fbmerr::atomic_write(target, csv.str());
      }
      return kExitPass;
    }
    if (verify_cmd->parsed()) {
      fbmerr::RunConfig config = fbmerr::load_config(verify_config);
      apply(verify_opts, config);
      return run_and_write(config);
    }
    if (rate_cmd->parsed()) {
      fbmerr::RunConfig config = rate_config.empty() ? fbmerr::RunConfig{} : fbmerr::load_config(rate_config);
      apply(rate_opts, config);
      config.experiment.theorem = fbmerr::Theorem::rate_slope;
      return run_and_write(config);
    }
    if (merge_cmd->parsed()) {
      std::vector<nlohmann::json> reports;
      for (const auto& file : merge_inputs) {
        std::ifstream in(file);
        if (!in) throw fbmerr::ConfigError("cannot read report " + file);
        reports.push_back(nlohmann::json::parse(in));
      }
      const auto merged = fbmerr::merge_reports(reports);
      if (merge_out.empty()) {
        std::cout << fbmerr::dump(merged);
      } else {
        fbmerr::atomic_write(merge_out, fbmerr::dump(merged));
      }
      return merged["pass"].get<bool>() ? kExitPass : kExitFail;
    }
  } catch (const fbmerr::OutOfRegime& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
