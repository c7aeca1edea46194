#include "fbmerr/run_config.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <unistd.h>

namespace fbmerr {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string fmt(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

template <typename T>
T parse_scalar(const std::string& key, std::string_view text) {
  text = trim(text);
  T value{};
  const char* first = text.data();
  const char* last = first + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc() || ptr != last) {
    throw ConfigError("bad value '" + std::string(text) + "' for key '" + key + "'", key);
  }
  return value;
}

bool parse_bool(const std::string& key, std::string_view text) {
  text = trim(text);
  if (text == "true") return true;
  if (text == "false") return false;
  throw ConfigError("key '" + key + "' expects true or false, got '" + std::string(text) + "'", key);
}

template <typename T>
std::vector<T> parse_list(const std::string& key, std::string_view text) {
  std::vector<T> out;
  if (trim(text).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = text.find(',', start);
    out.push_back(parse_scalar<T>(key, text.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k > 0) out += ',';
    if constexpr (std::is_floating_point_v<T>) {
      out += fmt(values[k]);
    } else {
      out += std::to_string(values[k]);
    }
  }
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, std::string_view)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct Field {
  const char* key;
  Setter set;
  Getter get;
};

Field real(const char* key, double Tolerances::*member) {
  return {key, [member](RunConfig& c, const std::string& k, std::string_view v) {
            c.experiment.tol.*member = parse_scalar<double>(k, v);
          },
          [member](const RunConfig& c) { return fmt(c.experiment.tol.*member); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"h", [](RunConfig& c, const std::string& k, std::string_view v) {
         try {
           c.experiment.h = HurstIndex(parse_scalar<double>(k, v));
         } catch (const DomainError& err) {
           throw ConfigError(err.what(), k);
         }
       },
       [](const RunConfig& c) { return fmt(c.experiment.h.value()); }},
      {"integrand",
       [](RunConfig& c, const std::string& k, std::string_view v) {
         try {
           c.experiment.integrand = parse_spec(trim(v));
         } catch (const SpecParseError& err) {
           throw ConfigError(std::string("integrand: ") + err.what(), k);
         }
       },
       [](const RunConfig& c) { return to_string(c.experiment.integrand); }},
      {"theorem",
       [](RunConfig& c, const std::string& k, std::string_view v) {
         try {
           c.experiment.theorem = parse_theorem(trim(v));
         } catch (const DomainError& err) {
           throw ConfigError(err.what(), k);
         }
       },
       [](const RunConfig& c) { return std::string(to_string(c.experiment.theorem)); }},
      {"n_list",
       [](RunConfig& c, const std::string& k, std::string_view v) { c.experiment.n_list = parse_list<int>(k, v); },
       [](const RunConfig& c) { return join(c.experiment.n_list); }},
      {"t_list",
       [](RunConfig& c, const std::string& k, std::string_view v) { c.experiment.t_list = parse_list<double>(k, v); },
       [](const RunConfig& c) { return join(c.experiment.t_list); }},
      {"replications",
       [](RunConfig& c, const std::string& k, std::string_view v) { c.experiment.replications = parse_scalar<int>(k, v); },
       [](const RunConfig& c) { return std::to_string(c.experiment.replications); }},
      {"refine_m",
       [](RunConfig& c, const std::string& k, std::string_view v) { c.experiment.refine_m = parse_scalar<int>(k, v); },
       [](const RunConfig& c) { return std::to_string(c.experiment.refine_m); }},
      {"base_seed",
       [](RunConfig& c, const std::string& k, std::string_view v) {
         c.experiment.base_seed = parse_scalar<std::uint64_t>(k, v);
       },
       [](const RunConfig& c) { return std::to_string(c.experiment.base_seed); }},
      {"horizon",
       [](RunConfig& c, const std::string& k, std::string_view v) { c.experiment.horizon = parse_scalar<double>(k, v); },
       [](const RunConfig& c) { return fmt(c.experiment.horizon); }},
      {"dims", [](RunConfig& c, const std::string& k, std::string_view v) { c.experiment.dims = parse_scalar<int>(k, v); },
       [](const RunConfig& c) { return std::to_string(c.experiment.dims); }},
      {"reference",
       [](RunConfig& c, const std::string& k, std::string_view v) {
         v = trim(v);
         if (v == "corrected") {
           c.experiment.reference = ReferenceScheme::corrected;
         } else if (v == "left_point") {
           c.experiment.reference = ReferenceScheme::left_point;
         } else {
           throw ConfigError("key 'reference' expects corrected or left_point", k);
         }
       },
       [](const RunConfig& c) {
         return std::string(c.experiment.reference == ReferenceScheme::corrected ? "corrected" : "left_point");
       }},
      real("se_factor", &Tolerances::se_factor),
      real("var_rel_tol", &Tolerances::var_rel_tol),
      real("ks_alpha", &Tolerances::ks_alpha),
      real("slope_tol", &Tolerances::slope_tol),
      real("mse_bound", &Tolerances::mse_bound),
      real("ratio_bound", &Tolerances::ratio_bound),
      real("first_order_fraction", &Tolerances::first_order_fraction),
      {"record_timing",
       [](RunConfig& c, const std::string& k, std::string_view v) { c.experiment.record_timing = parse_bool(k, v); },
       [](const RunConfig& c) { return std::string(c.experiment.record_timing ? "true" : "false"); }},
      {"output_dir", [](RunConfig& c, const std::string&, std::string_view v) { c.output_dir = std::string(trim(v)); },
       [](const RunConfig& c) { return c.output_dir.string(); }},
      {"workers", [](RunConfig& c, const std::string& k, std::string_view v) { c.workers = parse_scalar<int>(k, v); },
       [](const RunConfig& c) { return std::to_string(c.workers); }},
      {"dump_samples",
       [](RunConfig& c, const std::string& k, std::string_view v) {
         c.dump_samples = parse_bool(k, v);
         c.experiment.keep_samples = c.dump_samples;
       },
       [](const RunConfig& c) { return std::string(c.dump_samples ? "true" : "false"); }},
  };
  return table;
}

}  // namespace

RunConfig parse_config(std::string_view text) {
  RunConfig config;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find('\n', start), text.size());
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(trim(line.substr(0, eq)));
    const auto& table = fields();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return key == f.key; });
    if (it == table.end()) throw ConfigError("unknown config key '" + key + "'", key);
    if (!seen.insert(key).second) throw ConfigError("duplicate config key '" + key + "'", key);
    it->set(config, key, line.substr(eq + 1));
  }
  if (config.workers < 1) throw ConfigError("workers must be >= 1", "workers");
  return config;
}

RunConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read config file " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string print_config(const RunConfig& config) {
  std::string out;
  for (const Field& f : fields()) out += std::string(f.key) + " = " + f.get(config) + "\n";
  return out;
}

void atomic_write(const std::filesystem::path& target, std::string_view content) {
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  std::filesystem::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

}  // namespace fbmerr
