#pragma once

#include "spectrec/core.hpp"

#include <cstdint>
#include <limits>

namespace spectrec {

/// Nc x Np abundance maps: component 0 is a flat background, every other
/// component a sum of randomly placed Gaussian blobs. Columns are normalized
/// to sum to one.
Matrix make_abundance_maps(Index height, Index width, Index nc, std::uint64_t seed,
                           int blobs_per_component = 2);

/// Nb x Nc synthetic loss spectra: a decaying power-law background plus
/// per-component edges and Gaussian peaks, each scaled to a maximum of 1.
/// Draws are rejected until every pair is at least 0.05 rad apart.
Matrix make_endmembers(Index nb, Index nc, std::uint64_t seed);

struct NoisyImage {
  SpectrumImage image;
  // Variance of the added Gaussian noise, mean(X^2) / 10^(snr_db / 10).
  double sigma2 = 0.0;
};

// snr_db = +infinity means no noise.
NoisyImage add_noise(const SpectrumImage& truth, double snr_db, std::uint64_t seed);

struct PhantomConfig {
  Index height = 100;
  Index width = 100;
  Index bands = 200;
  Index components = 4;
  double snr_db = 25.0;
  std::uint64_t seed = 0;
  int blobs_per_component = 2;

  void validate() const;
};

struct Phantom {
  Matrix endmembers;
  Matrix abundances;
  SpectrumImage truth;
  SpectrumImage noisy;
  double snr_db = std::numeric_limits<double>::infinity();
  double sigma2 = 0.0;
  std::uint64_t abundance_seed = 0;
  std::uint64_t endmember_seed = 0;
  std::uint64_t noise_seed = 0;
};

Phantom make_phantom(const PhantomConfig& config);

// Independent stream seed derived from a base seed (splitmix64 mixing).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace spectrec
