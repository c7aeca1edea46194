#include "fbmerr/fbm_gen.hpp"

#include "fbmerr/rng.hpp"

#include <unsupported/Eigen/FFT>

#include <bit>
#include <complex>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

namespace fbmerr {
namespace {

constexpr Eigen::Index kCholeskyMaxSize = 2048;

Eigen::Index embedding_size(Eigen::Index n_increments) {
  const auto minimal = static_cast<std::uint64_t>(std::max<Eigen::Index>(2, 2 * (n_increments - 1)));
  return static_cast<Eigen::Index>(std::bit_ceil(minimal));
}

template <typename Value>
class KeyedCache {
 public:
  template <typename Make>
  std::shared_ptr<const Value> get(double h, Eigen::Index size, Make&& make) {
    const Key key{h, size};
    {
      std::lock_guard lock(mutex_);
      if (auto it = entries_.find(key); it != entries_.end()) return it->second;
    }
    auto value = std::make_shared<const Value>(make());
    std::lock_guard lock(mutex_);
    return entries_.try_emplace(key, std::move(value)).first->second;
  }

 private:
  using Key = std::pair<double, Eigen::Index>;
  std::mutex mutex_;
  std::map<Key, std::shared_ptr<const Value>> entries_;
};

KeyedCache<Eigen::VectorXd>& spectrum_cache() {
  static KeyedCache<Eigen::VectorXd> cache;
  return cache;
}

KeyedCache<Eigen::MatrixXd>& cholesky_cache() {
  static KeyedCache<Eigen::MatrixXd> cache;
  return cache;
}

Eigen::FFT<double>& local_fft() {
  thread_local Eigen::FFT<double> fft;
  return fft;
}

Eigen::VectorXd compute_spectrum(double h, Eigen::Index size) {
  const Eigen::Index half = size / 2;
  std::vector<double> row(static_cast<std::size_t>(size));
  for (Eigen::Index k = 0; k < size; ++k) {
    const Eigen::Index lag = k <= half ? k : size - k;
    row[static_cast<std::size_t>(k)] = fgn_autocov<double>(h, 1.0, lag);
  }
  std::vector<std::complex<double>> freq;
  local_fft().fwd(freq, row);
  Eigen::VectorXd lambda(size);
  for (Eigen::Index k = 0; k < size; ++k) lambda[k] = freq[static_cast<std::size_t>(k)].real();
  return lambda;
}

Eigen::MatrixXd compute_cholesky(double h, Eigen::Index n) {
  Eigen::MatrixXd cov(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) cov(i, j) = fgn_autocov<double>(h, 1.0, i - j);
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw NonPositiveSpectrum("fGn covariance is not positive definite");
  return llt.matrixL();
}

void check_spectrum(const Eigen::VectorXd& lambda) {
  const double top = lambda.maxCoeff();
  if (lambda.minCoeff() < -1e-9 * top) {
    throw NonPositiveSpectrum("circulant embedding has eigenvalue " + std::to_string(lambda.minCoeff()));
  }
}

// Unit-step fGn of length n via circulant embedding; real part of one FFT.
Eigen::VectorXd circulant_increments(const Eigen::VectorXd& lambda, Eigen::Index n, RandomStream& rng) {
  const Eigen::Index size = lambda.size();
  std::vector<std::complex<double>> z(static_cast<std::size_t>(size));
  for (Eigen::Index k = 0; k < size; ++k) {
    const double scale = std::sqrt(std::max(lambda[k], 0.0) / double(size));
    const double a = rng.normal();
    const double b = rng.normal();
    z[static_cast<std::size_t>(k)] = {scale * a, scale * b};
  }
  std::vector<std::complex<double>> y;
  local_fft().fwd(y, z);
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = y[static_cast<std::size_t>(i)].real();
  return out;
}

Eigen::VectorXd cholesky_increments(const Eigen::MatrixXd& lower, RandomStream& rng) {
  Eigen::VectorXd z(lower.rows());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return lower.triangularView<Eigen::Lower>() * z;
}

}  // namespace

Eigen::VectorXd circulant_spectrum(const HurstIndex& h, Eigen::Index n_increments) {
  if (n_increments < 1) throw DomainError("need at least one increment");
  const Eigen::Index size = embedding_size(n_increments);
  auto lambda = spectrum_cache().get(h.value(), size, [&] { return compute_spectrum(h.value(), size); });
  return *lambda;
}

FbmPath generate(const HurstIndex& h, const SimGrid& grid, const GeneratorSpec& spec) {
  grid.validate();
  const Eigen::Index n = grid.fine_steps();
  const double scale = std::pow(grid.fine_step(), h.value());

  GeneratorMethod method = spec.method;
  std::shared_ptr<const Eigen::VectorXd> lambda;
  if (method == GeneratorMethod::circulant_embedding) {
    const Eigen::Index size = embedding_size(n);
    lambda = spectrum_cache().get(h.value(), size, [&] { return compute_spectrum(h.value(), size); });
    try {
      check_spectrum(*lambda);
    } catch (const NonPositiveSpectrum&) {
      if (!spec.cholesky_fallback) throw;
      method = GeneratorMethod::cholesky;
    }
  }
  std::shared_ptr<const Eigen::MatrixXd> lower;
  if (method == GeneratorMethod::cholesky) {
    if (n > kCholeskyMaxSize) throw DomainError("cholesky generator limited to 2048 increments");
    lower = cholesky_cache().get(h.value(), n, [&] { return compute_cholesky(h.value(), n); });
  }

  FbmPath path;
  path.values = Eigen::MatrixXd::Zero(grid.d_dims, n + 1);
  path.seed = spec.base_seed;
  path.stream = spec.stream_index;
  path.grid = grid;
  path.hurst = h;

  for (int comp = 0; comp < grid.d_dims; ++comp) {
    RandomStream rng(spec.base_seed, static_cast<std::uint32_t>(spec.stream_index), static_cast<std::uint32_t>(comp));
    const Eigen::VectorXd inc = method == GeneratorMethod::circulant_embedding
                                    ? circulant_increments(*lambda, n, rng)
                                    : cholesky_increments(*lower, rng);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      acc += scale * inc[i];
      path.values(comp, i + 1) = acc;
    }
  }
  return path;
}

Eigen::MatrixXd subsample_coarse(const FbmPath& path) {
  const int m = path.grid.refine_m;
  const Eigen::Index n = path.grid.n_coarse;
  Eigen::MatrixXd coarse(path.dims(), n + 1);
  for (Eigen::Index k = 0; k <= n; ++k) coarse.col(k) = path.values.col(k * m);
  return coarse;
}

void write_path_csv(const FbmPath& path, std::ostream& out) {
  const auto old_precision = out.precision(17);
  out << "t";
  for (Eigen::Index c = 0; c < path.dims(); ++c) out << ",comp_" << c;
  out << '\n';
  for (Eigen::Index k = 0; k < path.values.cols(); ++k) {
    out << path.grid.fine_time(k);
    for (Eigen::Index c = 0; c < path.dims(); ++c) out << ',' << path.values(c, k);
    out << '\n';
  }
  out.precision(old_precision);
}

void write_path_csv(const FbmPath& path, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot open " + file.string());
  write_path_csv(path, out);
  if (!out) throw std::runtime_error("failed writing " + file.string());
}

}  // namespace fbmerr
