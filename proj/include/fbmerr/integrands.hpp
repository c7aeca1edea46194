#pragma once

#include "fbmerr/core_model.hpp"

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fbmerr {

enum class IntegrandFamily {
  constant,
  identity_B,
  poly_of_B,
  exp_like_of_B,
  hermite,
  fsde,
  brownian_pathdep,
  abs_B,
  convex_general,
};

const char* to_string(IntegrandFamily f);

/// Parsed integrand selection, e.g. `poly_of_B:c=0,0,1` or `fsde:f=tanh,g=zero`.
/// The parser fills every default, so printing yields the canonical form.
struct IntegrandSpec {
  IntegrandFamily family = IntegrandFamily::identity_B;
  std::map<std::string, std::vector<double>> numbers;
  std::map<std::string, std::string> names;

  double number(const std::string& key) const { return numbers.at(key).front(); }
  const std::string& name(const std::string& key) const { return names.at(key); }

  /// True when the weight process P is deterministic for this family.
  bool deterministic_weight() const;

  friend bool operator==(const IntegrandSpec&, const IntegrandSpec&) = default;
};

class SpecParseError : public std::invalid_argument {
 public:
  enum class Kind { UnknownFamily, UnknownKey, BadArity, MalformedNumber, BadValue };

  SpecParseError(Kind kind, std::string token, std::size_t position);

  Kind kind() const { return kind_; }
  const std::string& token() const { return token_; }
  std::size_t position() const { return position_; }

 private:
  Kind kind_;
  std::string token_;
  std::size_t position_;
};

const char* to_string(SpecParseError::Kind k);

/// Grammar: family[:key=val[,val]*[,key=val[,val]*]*]. A token without '='
/// extends the list of the preceding key.
IntegrandSpec parse_spec(std::string_view text);

/// Canonical printer; parse_spec(to_string(s)) == s.
std::string to_string(const IntegrandSpec& spec);

class UnsupportedOrder : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

ProcessPair build_constant(const IntegrandSpec& spec, const FbmPath& path);
ProcessPair build_identity(const FbmPath& path);
/// Component-wise u^i = F(B^i), P^{(i,i)} = F'(B^i); covers poly_of_B and exp_like_of_B.
ProcessPair build_f_of_B(const IntegrandSpec& spec, const FbmPath& path);
/// u_s = s^{kH} He_k(B_s / s^H), P_s = k s^{(k-1)H} He_{k-1}(B_s / s^H), scalar B.
ProcessPair build_hermite(const IntegrandSpec& spec, const FbmPath& path, const HurstIndex& h);
/// u = F(v) with v solving dv = f(v) sum_j dB^j + g(v) dt on the fine grid.
ProcessPair build_fsde(const IntegrandSpec& spec, const FbmPath& path, const HurstIndex& h);
/// u_s = B_s max_{r <= s} B_r, P_s = max_{r <= s} B_r (fine-grid running max).
ProcessPair build_brownian_pathdep(const FbmPath& path);
/// u = |B|, P = sign(B) with sign(0) = -1.
ProcessPair build_abs_B(const FbmPath& path, const HurstIndex& h);
/// Convex F from the catalog (abs or hinge, shifted by a), P = left derivative.
ProcessPair build_convex(const IntegrandSpec& spec, const FbmPath& path, const HurstIndex& h);

/// Dispatches on the family.
ProcessPair build(const IntegrandSpec& spec, const FbmPath& path);

}  // namespace fbmerr
