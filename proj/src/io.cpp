#include "spectrec/io.hpp"

#include "spectrec/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

namespace spectrec {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::ofstream open_output(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ofstream out(path, mode);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::ifstream open_input(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ifstream in(path, mode);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

void swap_bytes(double* values, std::size_t count) {
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < count; ++i) {
      unsigned char bytes[sizeof(double)];
      std::memcpy(bytes, values + i, sizeof(double));
      std::reverse(bytes, bytes + sizeof(double));
      std::memcpy(values + i, bytes, sizeof(double));
    }
  } else {
    (void)values;
    (void)count;
  }
}

Index header_count(const Json& header, const char* key, const std::string& where) {
  const auto it = header.find(key);
  if (it == header.end() || !it->is_number_integer()) {
    throw DataError("invalid header in " + where + ": missing integer '" + key + "'");
  }
  const auto value = it->get<long long>();
  if (value < 1) throw DataError("invalid header in " + where + ": " + key + " must be >= 1");
  return static_cast<Index>(value);
}

std::string format_double(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::isnan(value)) return "nan";
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

}  // namespace

SpectrumImage read_sib(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  std::ifstream in = open_input(path, std::ios::binary);
  const std::string where = path.string();

  std::string line;
  if (!std::getline(in, line) || in.eof()) throw DataError("bad magic in " + where + ": no header line");
  Json header;
  try {
    header = Json::parse(line);
  } catch (const Json::exception&) {
    throw DataError("bad magic in " + where + ": header is not a JSON line");
  }
  if (!header.is_object() || header.value("magic", std::string()) != "SIB1") {
    throw DataError("bad magic in " + where);
  }
  if (header.value("dtype", std::string()) != "f64" ||
      header.value("layout", std::string()) != "band-major") {
    throw DataError("invalid header in " + where + ": dtype must be f64, layout band-major");
  }
  const Index bands = header_count(header, "bands", where);
  const Index height = header_count(header, "height", where);
  const Index width = header_count(header, "width", where);
  const auto max_values = static_cast<Index>(std::numeric_limits<std::streamsize>::max() / 8);
  if (bands > max_values / height || bands * height > max_values / width) {
    throw DataError("invalid header in " + where + ": image too large");
  }

  RowMajor data(bands, height * width);
  const auto expected = static_cast<std::streamsize>(data.size()) * 8;
  in.read(reinterpret_cast<char*>(data.data()), expected);
  if (in.gcount() != expected) {
    throw DataError("truncated payload in " + where + ": expected " + std::to_string(expected) +
                    " bytes, got " + std::to_string(in.gcount()));
  }
  if (in.peek() != std::ifstream::traits_type::eof()) {
    throw DataError("trailing bytes after payload in " + where);
  }
  swap_bytes(data.data(), static_cast<std::size_t>(data.size()));

  SpectrumImage image(ImageShape{bands, height, width}, Matrix(data));
  if (warnings && !image.all_finite()) warnings->push_back(where + " contains non-finite values");
  return image;
}

void write_sib(const SpectrumImage& image, const std::filesystem::path& path) {
  Json header;
  header["magic"] = "SIB1";
  header["bands"] = image.bands();
  header["height"] = image.height();
  header["width"] = image.width();
  header["dtype"] = "f64";
  header["layout"] = "band-major";

  RowMajor data = image.data();
  swap_bytes(data.data(), static_cast<std::size_t>(data.size()));

  std::ofstream out = open_output(path, std::ios::binary | std::ios::trunc);
  out << header.dump() << '\n';
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()) * 8);
  if (!out) throw DataError("failed writing " + path.string());
}

Json mask_to_json(const SamplingMask& mask) {
  Json json;
  json["np"] = mask.np();
  json["indices"] = mask.indices();
  return json;
}

SamplingMask mask_from_json(const Json& json) {
  if (!json.is_object()) throw DataError("invalid mask: expected a JSON object");
  const auto np = json.find("np");
  const auto indices = json.find("indices");
  if (np == json.end() || !np->is_number_integer()) throw DataError("invalid mask: missing integer 'np'");
  if (indices == json.end() || !indices->is_array()) throw DataError("invalid mask: missing 'indices' array");
  std::vector<Index> values;
  values.reserve(indices->size());
  for (const auto& v : *indices) {
    if (!v.is_number_integer()) throw DataError("invalid mask: indices must be integers");
    values.push_back(static_cast<Index>(v.get<long long>()));
  }
  try {
    return SamplingMask(std::move(values), static_cast<Index>(np->get<long long>()));
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("invalid mask: ") + e.what());
  }
}

SamplingMask read_mask(const std::filesystem::path& path) { return mask_from_json(read_json(path)); }

void write_mask(const SamplingMask& mask, const std::filesystem::path& path) {
  std::ofstream out = open_output(path, std::ios::trunc);
  out << mask_to_json(mask).dump() << '\n';
  if (!out) throw DataError("failed writing " + path.string());
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in = open_input(path, std::ios::in);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw DataError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_json(const Json& json, const std::filesystem::path& path) {
  std::ofstream out = open_output(path, std::ios::trunc);
  out << json.dump(2) << '\n';
  if (!out) throw DataError("failed writing " + path.string());
}

Json to_json(const SolveReport& report) {
  Json json;
  json["iterations"] = report.iterations;
  json["stop_reason"] = to_string(report.stop_reason);
  json["final_relative_change"] = report.final_relative_change;
  json["wall_seconds"] = report.wall_seconds;
  json["objective_trace"] = report.objective_trace;
  return json;
}

Json to_json(const TuningState& state) {
  Json json;
  json["lambda_circ"] = state.lambda_circ;
  json["mu_circ"] = state.mu_circ;
  json["c_circ"] = state.c_circ;
  json["lambda_star"] = state.lambda_star;
  json["mu_star"] = state.mu_star;
  json["sigma2_hat"] = state.sigma2_hat;
  json["final_residual"] = state.final_residual;
  json["residual_relative_gap"] = std::abs(state.final_residual - state.sigma2_hat) / state.sigma2_hat;
  json["warning"] = state.warning;
  Json searches = Json::array();
  for (const auto& search : state.searches) {
    Json s;
    s["name"] = search.name;
    s["found"] = search.found;
    s["bracketed"] = search.bracketed;
    Json evaluations = Json::array();
    for (const auto& e : search.evaluations) {
      evaluations.push_back({{"value", e.value}, {"signed_residual", e.signed_residual},
                             {"iterations", e.iterations}});
    }
    s["evaluations"] = std::move(evaluations);
    searches.push_back(std::move(s));
  }
  json["searches"] = std::move(searches);
  return json;
}

Json to_json(const EvalReport& report) {
  Json json;
  json["nmse_image"] = report.nmse_image;
  json["asad"] = report.asad ? Json(*report.asad) : Json(nullptr);
  json["nmse_abundance"] = report.nmse_abundance ? Json(*report.nmse_abundance) : Json(nullptr);
  json["sad"] = report.sad;
  return json;
}

Json to_json(const SubspaceModel& model) {
  Json json;
  json["dim"] = model.dim;
  json["sigma2_hat"] = model.sigma2_hat;
  json["raw_eigs"] = std::vector<double>(model.raw_eigs.begin(), model.raw_eigs.end());
  json["corrected_eigs"] =
      std::vector<double>(model.corrected_eigs.begin(), model.corrected_eigs.end());
  json["weights"] = std::vector<double>(model.weights.begin(), model.weights.end());
  return json;
}

void write_eigen_csv(const SubspaceModel& model, const std::filesystem::path& path) {
  std::ofstream out = open_output(path, std::ios::trunc);
  out << "index,raw_eig,corrected_eig,weight\n";
  for (Index b = 0; b < model.raw_eigs.size(); ++b) {
    const double weight =
        b < model.dim ? model.weights(b) : std::numeric_limits<double>::infinity();
    out << b + 1 << ',' << format_double(model.raw_eigs(b)) << ','
        << format_double(model.corrected_eigs(b)) << ',' << format_double(weight) << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());
}

void write_trace_csv(const SolveReport& report, int monitor_every,
                     const std::filesystem::path& path) {
  std::ofstream out = open_output(path, std::ios::trunc);
  out << "iteration,objective\n";
  for (std::size_t i = 0; i < report.objective_trace.size(); ++i) {
    const long long iteration =
        i == 0 ? 0 : std::min<long long>(static_cast<long long>(i) * monitor_every, report.iterations);
    out << iteration << ',' << format_double(report.objective_trace[i]) << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace spectrec
