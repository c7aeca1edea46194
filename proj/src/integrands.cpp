#include "fbmerr/integrands.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <functional>
#include <optional>

namespace fbmerr {
namespace {

enum class ValueKind { number_list, number, integer, name };

struct KeyRule {
  std::string key;
  ValueKind kind;
  std::vector<double> default_numbers;
  std::string default_name;
  std::vector<std::string> allowed;
};

struct FamilyRule {
  IntegrandFamily family;
  const char* text;
  std::vector<KeyRule> keys;
};

const std::vector<std::string> kSdeCoefficients = {"zero", "one", "tanh", "sin", "cos"};

const std::vector<FamilyRule>& family_rules() {
  static const std::vector<FamilyRule> rules = {
      {IntegrandFamily::constant, "constant", {{"c", ValueKind::number_list, {1.0}, "", {}}}},
      {IntegrandFamily::identity_B, "identity_B", {}},
      {IntegrandFamily::poly_of_B, "poly_of_B", {{"c", ValueKind::number_list, {0.0, 1.0}, "", {}}}},
      {IntegrandFamily::exp_like_of_B,
       "exp_like_of_B",
       {{"f", ValueKind::name, {}, "exp", {"exp", "sin", "cos", "tanh"}},
        {"lambda", ValueKind::number, {1.0}, "", {}}}},
      {IntegrandFamily::hermite, "hermite", {{"k", ValueKind::integer, {1.0}, "", {}}}},
      {IntegrandFamily::fsde,
       "fsde",
       {{"F", ValueKind::name, {}, "id", {"id", "tanh", "sin"}},
        {"f", ValueKind::name, {}, "tanh", kSdeCoefficients},
        {"g", ValueKind::name, {}, "zero", kSdeCoefficients},
        {"scheme", ValueKind::name, {}, "milstein", {"euler", "milstein"}},
        {"v0", ValueKind::number, {0.0}, "", {}}}},
      {IntegrandFamily::brownian_pathdep, "brownian_pathdep", {}},
      {IntegrandFamily::abs_B, "abs_B", {}},
      {IntegrandFamily::convex_general,
       "convex_general",
       {{"a", ValueKind::number, {0.0}, "", {}}, {"f", ValueKind::name, {}, "abs", {"abs", "hinge"}}}},
  };
  return rules;
}

const FamilyRule& rule_for(IntegrandFamily f) {
  for (const auto& r : family_rules())
    if (r.family == f) return r;
  throw std::logic_error("unregistered integrand family");
}

struct Token {
  std::string_view text;
  std::size_t position;
};

std::vector<Token> split_commas(std::string_view body, std::size_t offset) {
  std::vector<Token> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= body.size(); ++i) {
    if (i == body.size() || body[i] == ',') {
      out.push_back({body.substr(start, i - start), offset + start});
      start = i + 1;
    }
  }
  return out;
}

double parse_number(const Token& tok) {
  double value = 0.0;
  const char* first = tok.text.data();
  const char* last = first + tok.text.size();
  if (!tok.text.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (tok.text.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw SpecParseError(SpecParseError::Kind::MalformedNumber, std::string(tok.text), tok.position);
  }
  return value;
}

std::string format_number(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

using Scalar1 = std::function<double(double)>;

struct ScalarFunction {
  Scalar1 value;
  Scalar1 derivative;
};

ScalarFunction named_function(const std::string& name) {
  if (name == "zero") return {[](double) { return 0.0; }, [](double) { return 0.0; }};
  if (name == "one") return {[](double) { return 1.0; }, [](double) { return 0.0; }};
  if (name == "id") return {[](double x) { return x; }, [](double) { return 1.0; }};
  if (name == "exp") return {[](double x) { return std::exp(x); }, [](double x) { return std::exp(x); }};
  if (name == "sin") return {[](double x) { return std::sin(x); }, [](double x) { return std::cos(x); }};
  if (name == "cos") return {[](double x) { return std::cos(x); }, [](double x) { return -std::sin(x); }};
  if (name == "tanh") {
    return {[](double x) { return std::tanh(x); },
            [](double x) {
              const double c = std::cosh(x);
              return 1.0 / (c * c);
            }};
  }
  throw std::logic_error("unknown function name " + name);
}

void require_low_regime(const HurstIndex& h, const char* what) {
  if (!(h.value() > 0.5 && h.value() < 0.75)) {
    throw RegimeError(std::string(what) + " requires 1/2 < H < 3/4");
  }
}

template <typename F, typename DF>
ProcessPair componentwise(const FbmPath& path, const std::string& label, F&& f, DF&& df) {
  const Eigen::Index d = path.dims();
  ProcessPair pair(d, d, path.values.cols(), label);
  pair.u = path.values.unaryExpr(std::forward<F>(f));
  for (Eigen::Index i = 0; i < d; ++i) pair.p_row(i, i) = path.values.row(i).unaryExpr(df);
  return pair;
}

}  // namespace

const char* to_string(IntegrandFamily f) { return rule_for(f).text; }

const char* to_string(SpecParseError::Kind k) {
  switch (k) {
    case SpecParseError::Kind::UnknownFamily: return "UnknownFamily";
    case SpecParseError::Kind::UnknownKey: return "UnknownKey";
    case SpecParseError::Kind::BadArity: return "BadArity";
    case SpecParseError::Kind::MalformedNumber: return "MalformedNumber";
    case SpecParseError::Kind::BadValue: return "BadValue";
  }
  return "?";
}

SpecParseError::SpecParseError(Kind kind, std::string token, std::size_t position)
    : std::invalid_argument(std::string(fbmerr::to_string(kind)) + ": '" + token + "' at position " +
                            std::to_string(position)),
      kind_(kind),
      token_(std::move(token)),
      position_(position) {}

bool IntegrandSpec::deterministic_weight() const {
  switch (family) {
    case IntegrandFamily::constant:
    case IntegrandFamily::identity_B: return true;
    case IntegrandFamily::hermite: return number("k") == 1.0;
    case IntegrandFamily::poly_of_B: {
      const auto& c = numbers.at("c");
      return std::all_of(c.begin() + std::min<std::size_t>(2, c.size()), c.end(), [](double v) { return v == 0.0; });
    }
    default: return false;
  }
}

IntegrandSpec parse_spec(std::string_view text) {
  const std::size_t colon = text.find(':');
  const std::string_view head = text.substr(0, colon);
  const FamilyRule* rule = nullptr;
  for (const auto& r : family_rules())
    if (head == r.text) rule = &r;
  if (rule == nullptr) throw SpecParseError(SpecParseError::Kind::UnknownFamily, std::string(head), 0);

  IntegrandSpec spec;
  spec.family = rule->family;
  for (const auto& k : rule->keys) {
    if (k.kind == ValueKind::name) {
      spec.names[k.key] = k.default_name;
    } else {
      spec.numbers[k.key] = k.default_numbers;
    }
  }
  if (colon == std::string_view::npos) return spec;

  struct Pending {
    const KeyRule* rule;
    Token key;
    std::vector<Token> values;
  };
  std::vector<Pending> assignments;
  for (const Token& tok : split_commas(text.substr(colon + 1), colon + 1)) {
    const std::size_t eq = tok.text.find('=');
    if (eq == std::string_view::npos) {
      if (assignments.empty()) throw SpecParseError(SpecParseError::Kind::BadArity, std::string(tok.text), tok.position);
      assignments.back().values.push_back(tok);
      continue;
    }
    const Token key{tok.text.substr(0, eq), tok.position};
    const auto it = std::find_if(rule->keys.begin(), rule->keys.end(), [&](const KeyRule& k) { return k.key == key.text; });
    if (it == rule->keys.end()) throw SpecParseError(SpecParseError::Kind::UnknownKey, std::string(key.text), key.position);
    assignments.push_back({&*it, key, {Token{tok.text.substr(eq + 1), tok.position + eq + 1}}});
  }

  for (const auto& a : assignments) {
    const KeyRule& k = *a.rule;
    if (k.kind == ValueKind::name) {
      if (a.values.size() != 1) throw SpecParseError(SpecParseError::Kind::BadArity, k.key, a.key.position);
      const std::string value(a.values.front().text);
      if (std::find(k.allowed.begin(), k.allowed.end(), value) == k.allowed.end()) {
        throw SpecParseError(SpecParseError::Kind::BadValue, value, a.values.front().position);
      }
      spec.names[k.key] = value;
      continue;
    }
    std::vector<double> values;
    for (const Token& v : a.values) values.push_back(parse_number(v));
    if (k.kind != ValueKind::number_list && values.size() != 1) {
      throw SpecParseError(SpecParseError::Kind::BadArity, k.key, a.key.position);
    }
    if (k.kind == ValueKind::integer && (values.front() != std::floor(values.front()) || values.front() < 1.0)) {
      throw SpecParseError(SpecParseError::Kind::BadValue, std::string(a.values.front().text), a.values.front().position);
    }
    spec.numbers[k.key] = std::move(values);
  }
  return spec;
}

std::string to_string(const IntegrandSpec& spec) {
  const FamilyRule& rule = rule_for(spec.family);
  std::string out = rule.text;
  char sep = ':';
  for (const auto& k : rule.keys) {
    out += sep;
    sep = ',';
    out += k.key + "=";
    if (k.kind == ValueKind::name) {
      out += spec.names.at(k.key);
      continue;
    }
    const auto& values = spec.numbers.at(k.key);
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i > 0) out += ',';
      out += format_number(values[i]);
    }
  }
  return out;
}

ProcessPair build_constant(const IntegrandSpec& spec, const FbmPath& path) {
  const auto& c = spec.numbers.at("c");
  const auto m = static_cast<Eigen::Index>(c.size());
  ProcessPair pair(m, path.dims(), path.values.cols(), to_string(spec));
  for (Eigen::Index i = 0; i < m; ++i) pair.u.row(i).setConstant(c[static_cast<std::size_t>(i)]);
  return pair;
}

ProcessPair build_identity(const FbmPath& path) {
  const Eigen::Index d = path.dims();
  ProcessPair pair(d, d, path.values.cols(), "identity_B");
  pair.u = path.values;
  for (Eigen::Index i = 0; i < d; ++i) pair.p_row(i, i).setOnes();
  return pair;
}

ProcessPair build_f_of_B(const IntegrandSpec& spec, const FbmPath& path) {
  const std::string label = to_string(spec);
  if (spec.family == IntegrandFamily::poly_of_B) {
    const auto c = spec.numbers.at("c");
    auto poly = [c](double x) {
      double acc = 0.0;
      for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
      return acc;
    };
    auto dpoly = [c](double x) {
      double acc = 0.0;
      for (std::size_t k = c.size(); k-- > 1;) acc = acc * x + double(k) * c[k];
      return acc;
    };
    return componentwise(path, label, poly, dpoly);
  }
  if (spec.family == IntegrandFamily::exp_like_of_B) {
    const ScalarFunction f = named_function(spec.name("f"));
    const double lambda = spec.number("lambda");
    return componentwise(
        path, label, [&](double x) { return f.value(lambda * x); },
        [&](double x) { return lambda * f.derivative(lambda * x); });
  }
  throw DomainError("build_f_of_B expects poly_of_B or exp_like_of_B");
}

ProcessPair build_hermite(const IntegrandSpec& spec, const FbmPath& path, const HurstIndex& h) {
  const int k = static_cast<int>(spec.number("k"));
  if (k > 3) throw UnsupportedOrder("hermite integrands support k <= 3, got " + std::to_string(k));
  const Eigen::Index d = path.dims();
  ProcessPair pair(d, d, path.values.cols(), to_string(spec));
  for (Eigen::Index l = 0; l < path.values.cols(); ++l) {
    const double var = std::pow(path.grid.fine_time(l), 2.0 * h.value());
    for (Eigen::Index i = 0; i < d; ++i) {
      const double b = path.values(i, l);
      switch (k) {
        case 1:
          pair.u(i, l) = b;
          pair.p(i * d + i, l) = 1.0;
          break;
        case 2:
          pair.u(i, l) = b * b - var;
          pair.p(i * d + i, l) = 2.0 * b;
          break;
        default:
          pair.u(i, l) = b * b * b - 3.0 * var * b;
          pair.p(i * d + i, l) = 3.0 * (b * b - var);
          break;
      }
    }
  }
  return pair;
}

ProcessPair build_fsde(const IntegrandSpec& spec, const FbmPath& path, const HurstIndex& h) {
  if (h.is_brownian()) throw RegimeError("fsde integrands require H > 1/2");
  const ScalarFunction f = named_function(spec.name("f"));
  const ScalarFunction g = named_function(spec.name("g"));
  const ScalarFunction outer = named_function(spec.name("F"));
  const bool milstein = spec.name("scheme") == "milstein";
  const Eigen::Index d = path.dims();
  const Eigen::Index nodes = path.values.cols();
  const double dt = path.grid.fine_step();

  ProcessPair pair(1, d, nodes, to_string(spec));
  double v = spec.number("v0");
  for (Eigen::Index l = 0; l < nodes; ++l) {
    const double fv = f.value(v);
    pair.u(0, l) = outer.value(v);
    pair.p.col(l).setConstant(outer.derivative(v) * fv);
    if (l + 1 == nodes) break;
    const double dw = (path.values.col(l + 1) - path.values.col(l)).sum();
    double step = fv * dw + g.value(v) * dt;
    if (milstein) step += 0.5 * fv * f.derivative(v) * dw * dw;
    v += step;
  }
  return pair;
}

ProcessPair build_brownian_pathdep(const FbmPath& path) {
  if (!path.hurst.is_brownian()) throw RegimeError("path-dependent example requires H = 1/2");
  if (path.dims() != 1) throw DomainError("path-dependent example requires d = 1");
  ProcessPair pair(1, 1, path.values.cols(), "brownian_pathdep");
  double running = path.values(0, 0);
  for (Eigen::Index l = 0; l < path.values.cols(); ++l) {
    running = std::max(running, path.values(0, l));
    pair.u(0, l) = path.values(0, l) * running;
    pair.p(0, l) = running;
  }
  return pair;
}

ProcessPair build_abs_B(const FbmPath& path, const HurstIndex& h) {
  require_low_regime(h, "abs_B");
  return componentwise(
      path, "abs_B", [](double x) { return std::abs(x); }, [](double x) { return x > 0.0 ? 1.0 : -1.0; });
}

ProcessPair build_convex(const IntegrandSpec& spec, const FbmPath& path, const HurstIndex& h) {
  require_low_regime(h, "convex_general");
  const double a = spec.number("a");
  const std::string label = to_string(spec);
  if (spec.name("f") == "hinge") {
    return componentwise(
        path, label, [a](double x) { return std::max(x - a, 0.0); }, [a](double x) { return x > a ? 1.0 : 0.0; });
  }
  return componentwise(
      path, label, [a](double x) { return std::abs(x - a); }, [a](double x) { return x > a ? 1.0 : -1.0; });
}

ProcessPair build(const IntegrandSpec& spec, const FbmPath& path) {
  switch (spec.family) {
    case IntegrandFamily::constant: return build_constant(spec, path);
    case IntegrandFamily::identity_B: return build_identity(path);
    case IntegrandFamily::poly_of_B:
    case IntegrandFamily::exp_like_of_B: return build_f_of_B(spec, path);
    case IntegrandFamily::hermite: return build_hermite(spec, path, path.hurst);
    case IntegrandFamily::fsde: return build_fsde(spec, path, path.hurst);
    case IntegrandFamily::brownian_pathdep: return build_brownian_pathdep(path);
    case IntegrandFamily::abs_B: return build_abs_B(path, path.hurst);
    case IntegrandFamily::convex_general: return build_convex(spec, path, path.hurst);
  }
  throw std::logic_error("unhandled integrand family");
}

}  // namespace fbmerr
