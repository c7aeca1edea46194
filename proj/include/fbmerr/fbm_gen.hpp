#pragma once

#include "fbmerr/core_model.hpp"

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <stdexcept>

namespace fbmerr {

enum class GeneratorMethod { circulant_embedding, cholesky };

struct GeneratorSpec {
  GeneratorMethod method = GeneratorMethod::circulant_embedding;
  std::uint64_t base_seed = 0;
  std::uint64_t stream_index = 0;
  /// Use the Cholesky generator when the circulant spectrum has a negative eigenvalue.
  bool cholesky_fallback = false;
};

/// Circulant spectrum has an eigenvalue below -1e-9 * max.
class NonPositiveSpectrum : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Autocovariance of fractional Gaussian noise with the given step.
template <typename Scalar>
Scalar fgn_autocov(Scalar h, Scalar step, long long lag) {
  using std::abs;
  using std::pow;
  if (!(step > Scalar(0))) throw DomainError("fgn_autocov requires step > 0");
  const Scalar two_h = Scalar(2) * h;
  const Scalar k = Scalar(lag < 0 ? -lag : lag);
  return Scalar(0.5) * pow(step, two_h) *
         (pow(abs(k + Scalar(1)), two_h) + pow(abs(k - Scalar(1)), two_h) - Scalar(2) * pow(k, two_h));
}

inline double fgn_autocov(const HurstIndex& h, double step, long long lag) {
  return fgn_autocov<double>(h.value(), step, lag);
}

/// Eigenvalues of the minimal power-of-two circulant embedding of unit-step
/// fGn of length `n_increments`. Cached per (H, embedding size).
Eigen::VectorXd circulant_spectrum(const HurstIndex& h, Eigen::Index n_increments);

/// Exact sample of d independent fBm components on the fine grid.
FbmPath generate(const HurstIndex& h, const SimGrid& grid, const GeneratorSpec& spec);

/// Values at fine indices 0, m, 2m, ...
Eigen::MatrixXd subsample_coarse(const FbmPath& path);

/// Writes `t,comp_0,...,comp_{d-1}` CSV, one row per fine node.
void write_path_csv(const FbmPath& path, const std::filesystem::path& file);
void write_path_csv(const FbmPath& path, std::ostream& out);

}  // namespace fbmerr
