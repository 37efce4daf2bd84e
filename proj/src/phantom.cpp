#include "spectrec/phantom.hpp"

#include "spectrec/error.hpp"
#include "spectrec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace spectrec {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Matrix make_abundance_maps(Index height, Index width, Index nc, std::uint64_t seed,
                           int blobs_per_component) {
  if (height < 1 || width < 1) throw InvalidArgument("abundance maps need height, width >= 1");
  if (nc < 2) throw InvalidArgument("abundance maps need at least 2 components");
  if (nc > height * width) throw InvalidArgument("more components than pixels");
  if (blobs_per_component < 1) throw InvalidArgument("blobs_per_component must be >= 1");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double extent = static_cast<double>(std::min(height, width));

  Matrix raw(nc, height * width);
  raw.row(0).setOnes();
  for (Index k = 1; k < nc; ++k) {
    raw.row(k).setZero();
    for (int j = 0; j < blobs_per_component; ++j) {
      const double cy = unit(rng) * static_cast<double>(height);
      const double cx = unit(rng) * static_cast<double>(width);
      const double amplitude = 2.0 + 4.0 * unit(rng);
      const double spread = std::max(0.75, (0.08 + 0.12 * unit(rng)) * extent);
      const double denom = 2.0 * spread * spread;
      for (Index y = 0; y < height; ++y) {
        for (Index x = 0; x < width; ++x) {
          const double dy = static_cast<double>(y) - cy;
          const double dx = static_cast<double>(x) - cx;
          raw(k, y * width + x) += amplitude * std::exp(-(dy * dy + dx * dx) / denom);
        }
      }
    }
  }
  const Eigen::RowVectorXd totals = raw.colwise().sum();
  for (Index p = 0; p < raw.cols(); ++p) raw.col(p) /= totals(p);
  return raw;
}

namespace {

Vector draw_spectrum(Index nb, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto between = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  const double level = between(0.2, 1.0);
  const double offset = between(0.05, 0.3);
  const double power = between(0.5, 2.5);

  struct Edge {
    double onset, height, decay;
  };
  struct Peak {
    double center, amplitude, width;
  };
  std::vector<Edge> edges(unit(rng) < 0.5 ? 1 : 2);
  for (auto& e : edges) e = {between(0.1, 0.85), between(0.3, 1.0), between(0.5, 1.5)};
  std::vector<Peak> peaks(unit(rng) < 0.5 ? 1 : 2);
  for (auto& p : peaks) p = {between(0.05, 0.95), between(0.2, 0.8), between(0.01, 0.04)};

  Vector m(nb);
  for (Index b = 0; b < nb; ++b) {
    const double t = static_cast<double>(b) / static_cast<double>(nb - 1);
    double value = level * std::pow((t + offset) / offset, -power);
    for (const auto& e : edges) {
      const double rise = 1.0 / (1.0 + std::exp(-(t - e.onset) / 0.01));
      value += e.height * rise * std::pow(1.0 + std::max(t - e.onset, 0.0) / 0.1, -e.decay);
    }
    for (const auto& p : peaks) {
      const double u = (t - p.center) / p.width;
      value += p.amplitude * std::exp(-0.5 * u * u);
    }
    m(b) = value;
  }
  return m / m.maxCoeff();
}

bool well_separated(const Matrix& m) {
  for (Index i = 0; i < m.cols(); ++i) {
    for (Index j = i + 1; j < m.cols(); ++j) {
      if (spectral_angle(m.col(i), m.col(j)) < 0.05) return false;
    }
  }
  return true;
}

}  // namespace

Matrix make_endmembers(Index nb, Index nc, std::uint64_t seed) {
  if (nc < 1) throw InvalidArgument("endmembers need at least 1 component");
  if (nb <= nc) throw InvalidArgument("endmembers need more bands than components");

  std::mt19937_64 rng(seed);
  Matrix m(nb, nc);
  for (int attempt = 0; attempt < 100; ++attempt) {
    for (Index k = 0; k < nc; ++k) m.col(k) = draw_spectrum(nb, rng);
    if (well_separated(m)) return m;
  }
  throw DataError("could not draw endmembers at least 0.05 rad apart in 100 attempts");
}

NoisyImage add_noise(const SpectrumImage& truth, double snr_db, std::uint64_t seed) {
  if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity()) {
    throw InvalidArgument("snr_db must be finite or +inf");
  }
  if (std::isinf(snr_db) || truth.data().size() == 0) return {truth, 0.0};

  const double power = truth.data().squaredNorm() / static_cast<double>(truth.data().size());
  const double sigma2 = power / std::pow(10.0, snr_db / 10.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, std::sqrt(sigma2));

  Matrix data = truth.data();
  double* values = data.data();
  for (Index i = 0; i < data.size(); ++i) values[i] += noise(rng);
  return {SpectrumImage(truth.shape(), std::move(data)), sigma2};
}

void PhantomConfig::validate() const {
  if (height < 1 || width < 1) throw InvalidArgument("phantom height and width must be >= 1");
  if (components < 2) throw InvalidArgument("phantom needs at least 2 components");
  if (bands <= components) throw InvalidArgument("phantom needs more bands than components");
  if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity()) {
    throw InvalidArgument("snr_db must be finite or +inf");
  }
}

Phantom make_phantom(const PhantomConfig& config) {
  config.validate();
  Phantom phantom;
  phantom.abundance_seed = derive_seed(config.seed, 0);
  phantom.endmember_seed = derive_seed(config.seed, 1);
  phantom.noise_seed = derive_seed(config.seed, 2);
  phantom.abundances = make_abundance_maps(config.height, config.width, config.components,
                                           phantom.abundance_seed, config.blobs_per_component);
  phantom.endmembers = make_endmembers(config.bands, config.components, phantom.endmember_seed);
  phantom.truth = SpectrumImage(config.height, config.width, phantom.endmembers * phantom.abundances);
  NoisyImage noisy = add_noise(phantom.truth, config.snr_db, phantom.noise_seed);
  phantom.noisy = std::move(noisy.image);
  phantom.sigma2 = noisy.sigma2;
  phantom.snr_db = config.snr_db;
  return phantom;
}

}  // namespace spectrec
