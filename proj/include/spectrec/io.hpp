#pragma once

#include "spectrec/core.hpp"
#include "spectrec/fista.hpp"
#include "spectrec/metrics.hpp"
#include "spectrec/snn.hpp"
#include "spectrec/sss.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace spectrec {

using Json = nlohmann::ordered_json;

/// .sib: one JSON header line
///   {"magic":"SIB1","bands":Nb,"height":H,"width":W,"dtype":"f64","layout":"band-major"}
/// then Nb*H*W little-endian doubles, band 0's pixels (row-major) first.
///
/// Readers throw DataError on a malformed file. Non-finite values are read
/// as-is and reported through `warnings` when given.
SpectrumImage read_sib(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr);
void write_sib(const SpectrumImage& image, const std::filesystem::path& path);

// Mask file: {"np": Np, "indices": [sorted indices]}.
SamplingMask read_mask(const std::filesystem::path& path);
void write_mask(const SamplingMask& mask, const std::filesystem::path& path);
Json mask_to_json(const SamplingMask& mask);
SamplingMask mask_from_json(const Json& json);

Json read_json(const std::filesystem::path& path);
// Pretty-printed with a trailing newline.
void write_json(const Json& json, const std::filesystem::path& path);

Json to_json(const SolveReport& report);
Json to_json(const TuningState& state);
Json to_json(const EvalReport& report);
// Dimension, noise variance and eigenvalue table of a subspace model.
Json to_json(const SubspaceModel& model);

/// CSV with header index,raw_eig,corrected_eig,weight and one row per band
/// (index starts at 1). Weights past the signal dimension are written as inf.
void write_eigen_csv(const SubspaceModel& model, const std::filesystem::path& path);

// objective trace as CSV: iteration,objective
void write_trace_csv(const SolveReport& report, int monitor_every,
                     const std::filesystem::path& path);

}  // namespace spectrec
