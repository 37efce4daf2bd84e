#pragma once

#include "spectrec/core.hpp"
#include "spectrec/fista.hpp"

namespace spectrec {

struct Reconstruction {
  SpectrumImage image;
  SolveReport report;
};

}  // namespace spectrec
