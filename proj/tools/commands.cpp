#include "commands.hpp"

#include "spectrec/error.hpp"
#include "spectrec/io.hpp"
#include "spectrec/metrics.hpp"
#include "spectrec/phantom.hpp"
#include "spectrec/snn.hpp"
#include "spectrec/sss.hpp"

#include <CLI11.hpp>

#ifdef SPECTREC_HAVE_OPENMP
#include <omp.h>
#endif

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>

namespace spectrec::cli {

namespace fs = std::filesystem;

namespace {

// Everything a command records about itself besides argv and timing.
struct Manifest {
  std::string command;
  Json inputs = Json::object();
  Json params = Json::object();
  Json seeds = Json::object();
  Json outputs = Json::object();
};

fs::path manifest_path_for(const fs::path& output) {
  return fs::path(output.string() + ".manifest.json");
}

Json snr_to_json(double snr_db) { return std::isfinite(snr_db) ? Json(snr_db) : Json("inf"); }

void ensure_parent(const fs::path& path) {
  const fs::path parent = path.parent_path();
  if (parent.empty()) return;
  std::error_code ec;
  fs::create_directories(parent, ec);
  if (ec) throw DataError("cannot create directory " + parent.string() + ": " + ec.message());
}

void warn(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

SpectrumImage load_image(const std::string& path) {
  std::vector<std::string> warnings;
  SpectrumImage image = read_sib(path, &warnings);
  warn(warnings);
  return image;
}

FistaConfig solve_config(int max_iters, double tol, int monitor_every) {
  FistaConfig config;
  config.max_iters = max_iters;
  config.tol = tol;
  config.monitor_every = monitor_every;
  config.validate();
  return config;
}

struct SimulateOptions {
  Index height = 100;
  Index width = 100;
  Index bands = 200;
  Index components = 4;
  double snr_db = 25.0;
  std::uint64_t seed = 0;
  int blobs = 2;
  std::string out_dir;
};

Manifest simulate(const SimulateOptions& o) {
  PhantomConfig config;
  config.height = o.height;
  config.width = o.width;
  config.bands = o.bands;
  config.components = o.components;
  config.snr_db = o.snr_db;
  config.seed = o.seed;
  config.blobs_per_component = o.blobs;
  const Phantom phantom = make_phantom(config);

  const fs::path dir(o.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DataError("cannot create output directory " + dir.string());

  Manifest m;
  m.command = "simulate";
  m.params = {{"height", o.height}, {"width", o.width}, {"bands", o.bands},
              {"components", o.components}, {"snr_db", snr_to_json(o.snr_db)},
              {"blobs_per_component", o.blobs}};
  m.seeds = {{"seed", o.seed}, {"abundance", phantom.abundance_seed},
             {"endmember", phantom.endmember_seed}, {"noise", phantom.noise_seed}};

  const SpectrumImage endmembers(1, o.components, phantom.endmembers);
  const SpectrumImage abundances(o.height, o.width, phantom.abundances);
  const std::vector<std::pair<std::string, const SpectrumImage*>> images = {
      {"truth", &phantom.truth}, {"noisy", &phantom.noisy},
      {"endmembers", &endmembers}, {"abundances", &abundances}};
  for (const auto& [name, image] : images) {
    const fs::path path = dir / (name + ".sib");
    write_sib(*image, path);
    m.outputs[name] = path.string();
  }

  Json sidecar;
  sidecar["nc"] = o.components;
  sidecar["snr_db"] = snr_to_json(o.snr_db);
  sidecar["sigma2"] = phantom.sigma2;
  sidecar["seeds"] = m.seeds;
  const fs::path sidecar_path = dir / "phantom.json";
  write_json(sidecar, sidecar_path);
  m.outputs["sidecar"] = sidecar_path.string();

  std::cout << "simulated " << o.height << "x" << o.width << "x" << o.bands << " phantom, "
            << o.components << " components, sigma2 " << phantom.sigma2 << '\n';
  return m;
}

struct MaskOptions {
  Index np = 0;
  std::string from_image;
  double ratio = 0.0;
  std::uint64_t seed = 0;
  std::string out;
};

Manifest mask(const MaskOptions& o) {
  if (!(o.ratio > 0.0) || o.ratio > 1.0) throw InvalidArgument("--ratio must be in (0, 1]");
  Manifest m;
  m.command = "mask";
  Index np = o.np;
  if (!o.from_image.empty()) {
    np = load_image(o.from_image).pixels();
    m.inputs["image"] = o.from_image;
  } else if (np < 1) {
    throw InvalidArgument("one of --np (>= 1) or --from-image is required");
  }
  const auto ns = static_cast<Index>(std::llround(o.ratio * static_cast<double>(np)));
  if (ns < 1) throw InvalidArgument("--ratio selects no pixel out of " + std::to_string(np));

  const SamplingMask sampling = make_random_mask(np, ns, o.seed);
  ensure_parent(o.out);
  write_mask(sampling, o.out);

  m.params = {{"np", np}, {"ratio", o.ratio}, {"ns", ns}};
  m.seeds = {{"seed", o.seed}};
  m.outputs["mask"] = o.out;
  std::cout << "mask: " << ns << " of " << np << " pixels\n";
  return m;
}

struct SolveOptions {
  int max_iters = 2000;
  double tol = 1e-6;
  int monitor_every = 1;
  int tune_max_iters = 2000;
  bool verbose = false;
};

TuningConfig tuning_config(const SolveOptions& o) {
  TuningConfig config;
  config.solve = solve_config(o.tune_max_iters, o.tol, 0);
  if (o.verbose) {
    config.on_evaluation = [](const std::string& name, const SearchEvaluation& e) {
      std::cerr << "tune " << name << " = " << e.value << ": residual gap " << e.signed_residual
                << ", " << e.iterations << " iterations, " << e.wall_seconds << " s\n";
    };
  }
  return config;
}

struct ReconstructOptions {
  std::string method;
  std::string image;
  std::string mask;
  double lambda = 0.0;
  double mu = 0.0;
  bool has_lambda = false;
  bool has_mu = false;
  SolveOptions solve;
  std::string out;
  std::string report;
  std::string trace_csv;
};

Json subspace_summary(const SubspaceModel& model) {
  return {{"dim", model.dim}, {"sigma2_hat", model.sigma2_hat}};
}

Manifest reconstruct(const ReconstructOptions& o) {
  const SpectrumImage image = load_image(o.image);
  const SamplingMask sampling = read_mask(o.mask);
  if (sampling.np() != image.pixels()) {
    throw DataError("incompatible mask: mask covers " + std::to_string(sampling.np()) +
                    " pixels, image has " + std::to_string(image.pixels()));
  }
  const Matrix measurements = restrict(image, sampling);
  const FistaConfig config = solve_config(o.solve.max_iters, o.solve.tol, o.solve.monitor_every);

  Manifest m;
  m.command = "reconstruct";
  m.inputs = {{"image", o.image}, {"mask", o.mask}};
  m.params = {{"method", o.method}, {"max_iters", o.solve.max_iters}, {"tol", o.solve.tol},
              {"monitor_every", o.solve.monitor_every}};
  if (o.method == "snn") m.params["tune_max_iters"] = o.solve.tune_max_iters;

  Json report;
  report["method"] = o.method;
  SpectrumImage estimate;
  SolveReport solve;

  if (o.method == "sss") {
    if (o.has_mu) throw InvalidArgument("--mu applies to the snn method only");
    SssParams params;
    if (o.has_lambda) params.lambda = o.lambda;
    params.validate();
    const SubspaceModel subspace = estimate_subspace(measurements);
    SssReconstruction rec = sss_reconstruct(measurements, sampling, image.shape(), subspace, params, config);
    estimate = std::move(rec.image);
    solve = std::move(rec.report);
    m.params["lambda"] = params.lambda;
    report["params"] = {{"lambda", params.lambda}};
    report["subspace"] = subspace_summary(subspace);
  } else {
    if (o.has_lambda != o.has_mu) {
      throw InvalidArgument("snn needs both --lambda and --mu, or neither to tune them");
    }
    SnnParams params{o.lambda, o.mu};
    const bool tuned = !o.has_lambda;
    if (tuned) {
      const SubspaceModel subspace = estimate_subspace(measurements);
      const TuningResult result = snn_tune(measurements, sampling, image.shape(),
                                           subspace.sigma2_hat, tuning_config(o.solve));
      params = result.params;
      report["tuning"] = to_json(result.state);
      report["subspace"] = subspace_summary(subspace);
      std::cout << "tuned lambda* " << params.lambda << ", mu* " << params.mu << '\n';
    }
    params.validate();
    Reconstruction rec = snn_reconstruct(measurements, sampling, image.shape(), params, config);
    estimate = std::move(rec.image);
    solve = std::move(rec.report);
    m.params["lambda"] = params.lambda;
    m.params["mu"] = params.mu;
    m.params["tuned"] = tuned;
    report["params"] = {{"lambda", params.lambda}, {"mu", params.mu}, {"tuned", tuned}};
  }
  report["solve"] = to_json(solve);

  ensure_parent(o.out);
  write_sib(estimate, o.out);
  m.outputs["image"] = o.out;
  const std::string report_path = o.report.empty() ? o.out + ".report.json" : o.report;
  ensure_parent(report_path);
  write_json(report, report_path);
  m.outputs["report"] = report_path;
  if (!o.trace_csv.empty()) {
    ensure_parent(o.trace_csv);
    write_trace_csv(solve, o.solve.monitor_every, o.trace_csv);
    m.outputs["trace_csv"] = o.trace_csv;
  }
  std::cout << o.method << ": " << solve.iterations << " iterations, stopped on "
            << to_string(solve.stop_reason) << '\n';
  return m;
}

struct TuneOptions {
  std::string image;
  std::string mask;
  std::string out;
  SolveOptions solve;
};

Manifest tune(const TuneOptions& o) {
  const SpectrumImage image = load_image(o.image);
  const SamplingMask sampling = read_mask(o.mask);
  if (sampling.np() != image.pixels()) throw DataError("incompatible mask for " + o.image);
  const Matrix measurements = restrict(image, sampling);

  const SubspaceModel subspace = estimate_subspace(measurements);
  const TuningConfig config = tuning_config(o.solve);
  const TuningResult result =
      snn_tune(measurements, sampling, image.shape(), subspace.sigma2_hat, config);

  ensure_parent(o.out);
  write_json(to_json(result.state), o.out);
  if (result.state.warning) std::cerr << "warning: a tuning search found no sign change\n";
  std::cout << "lambda* " << result.params.lambda << ", mu* " << result.params.mu << '\n';

  Manifest m;
  m.command = "tune";
  m.inputs = {{"image", o.image}, {"mask", o.mask}};
  m.params = {{"tune_max_iters", o.solve.tune_max_iters}, {"tol", o.solve.tol},
              {"grid_min", config.grid_min}, {"grid_max", config.grid_max},
              {"points_per_decade", config.points_per_decade},
              {"bisection_steps", config.bisection_steps}};
  m.outputs["tuning"] = o.out;
  return m;
}

struct EvalOptions {
  std::string truth;
  std::string estimate;
  std::string endmembers;
  std::string abundances;
  std::string out;
};

Manifest eval(const EvalOptions& o) {
  const SpectrumImage truth = load_image(o.truth);
  const SpectrumImage estimate = load_image(o.estimate);
  if (!(truth.shape() == estimate.shape())) throw DataError("truth and estimate shapes differ");

  EvalReport report;
  report.nmse_image = nmse(truth.data(), estimate.data());
  Manifest m;
  m.command = "eval";
  m.inputs = {{"truth", o.truth}, {"estimate", o.estimate}};

  if (!o.endmembers.empty()) {
    // Endmembers are stored as a 1 x Nc image with Nb bands.
    const Matrix m_true = load_image(o.endmembers).data();
    const SpectrumImage abundances = load_image(o.abundances);
    const Matrix& a_true = abundances.data();
    if (m_true.rows() != truth.bands() || a_true.rows() != m_true.cols() ||
        a_true.cols() != truth.pixels()) {
      throw DataError("endmember/abundance files do not match the truth image");
    }
    m.inputs["endmembers"] = o.endmembers;
    m.inputs["abundances"] = o.abundances;

    const Matrix a_est = invert_abundances(estimate, m_true).abundances;
    report.nmse_abundance = nmse(a_true, a_est);

    // Endmembers implied by the estimate: least-squares fit of X_hat = M A.
    const Matrix gram = a_true * a_true.transpose();
    const Matrix m_est = gram.ldlt().solve(a_true * estimate.data().transpose()).transpose();
    if (!m_est.allFinite()) throw NumericalError("endmember fit failed");
    for (const auto& match : match_spectra(m_true, m_est)) report.sad.push_back(match.angle);
    report.asad = asad(m_true, m_est);
  }

  const std::string out = o.out.empty() ? o.estimate + ".eval.json" : o.out;
  const Json json = to_json(report);
  ensure_parent(out);
  write_json(json, out);
  m.outputs["report"] = out;
  std::cout << json.dump(2) << '\n';
  return m;
}

struct PcaDiagOptions {
  std::string image;
  std::string mask;
  std::string out_csv;
};

Manifest pca_diag(const PcaDiagOptions& o) {
  const SpectrumImage image = load_image(o.image);
  const SamplingMask sampling = read_mask(o.mask);
  if (sampling.np() != image.pixels()) throw DataError("incompatible mask for " + o.image);
  const SubspaceModel model = estimate_subspace(restrict(image, sampling));

  ensure_parent(o.out_csv);
  write_eigen_csv(model, o.out_csv);
  std::cout << "R " << model.dim << "\nsigma2_hat " << model.sigma2_hat << '\n';

  Manifest m;
  m.command = "pca-diag";
  m.inputs = {{"image", o.image}, {"mask", o.mask}};
  m.outputs["csv"] = o.out_csv;
  return m;
}

fs::path primary_output(const Manifest& m) {
  if (m.command == "simulate") {
    return fs::path(m.outputs["sidecar"].get<std::string>()).parent_path() / "simulate";
  }
  return fs::path(m.outputs.begin().value().get<std::string>());
}

void write_manifest(const Manifest& m, const std::vector<std::string>& args, double wall_seconds) {
  Json json;
  json["command"] = m.command;
  json["version"] = kVersion;
  json["argv"] = args;
  json["working_directory"] = fs::current_path().string();
  json["inputs"] = m.inputs;
  json["params"] = m.params;
  json["seeds"] = m.seeds;
  json["outputs"] = m.outputs;
  json["wall_time_seconds"] = wall_seconds;
  write_json(json, manifest_path_for(primary_output(m)));
}

void apply_thread_limit() {
  const char* value = std::getenv("SPECTREC_THREADS");
  if (!value || !*value) return;
  char* end = nullptr;
  const long threads = std::strtol(value, &end, 10);
  if (*end != '\0' || threads < 1) {
    std::cerr << "warning: ignoring SPECTREC_THREADS=" << value << '\n';
    return;
  }
#ifdef SPECTREC_HAVE_OPENMP
  omp_set_num_threads(static_cast<int>(threads));
#endif
}

void add_solve_options(CLI::App* cmd, SolveOptions& solve, bool final_solve) {
  if (final_solve) {
    cmd->add_option("--max-iters", solve.max_iters, "FISTA iteration cap")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  }
  cmd->add_option("--tol", solve.tol, "relative-change stopping tolerance")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--tune-max-iters", solve.tune_max_iters, "iteration cap for each solve inside the tuning searches")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_flag("--verbose", solve.verbose, "report tuning progress on stderr");
}

int execute(const std::vector<std::string>& args, int depth);

int rerun(const std::string& manifest_path, int depth) {
  const Json manifest = read_json(manifest_path);
  if (!manifest.contains("argv") || !manifest["argv"].is_array()) {
    throw DataError("manifest " + manifest_path + " has no argv");
  }
  const auto args = manifest["argv"].get<std::vector<std::string>>();
  if (!args.empty() && args.front() == "rerun") throw DataError("manifest records a rerun");
  struct RestoreDirectory {
    fs::path path = fs::current_path();
    ~RestoreDirectory() { fs::current_path(path); }
  } restore;
  if (manifest.contains("working_directory")) {
    fs::current_path(manifest["working_directory"].get<std::string>());
  }
  return execute(args, depth + 1);
}

int execute(const std::vector<std::string>& args, int depth) {
  CLI::App app{"Reconstruction of partially sampled spectrum-images", "spectrec"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::function<Manifest()> action;
  std::string rerun_manifest;

  SimulateOptions sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "generate a synthetic phantom");
  simulate_cmd->add_option("--height", sim.height)->check(CLI::PositiveNumber)->capture_default_str();
  simulate_cmd->add_option("--width", sim.width)->check(CLI::PositiveNumber)->capture_default_str();
  simulate_cmd->add_option("--bands", sim.bands)->check(CLI::PositiveNumber)->capture_default_str();
  simulate_cmd->add_option("--components", sim.components)->check(CLI::Range(2, 1000000))->capture_default_str();
  simulate_cmd->add_option("--snr-db", sim.snr_db, "noise level; inf for none")->capture_default_str();
  simulate_cmd->add_option("--seed", sim.seed)->capture_default_str();
  simulate_cmd->add_option("--blobs", sim.blobs, "blobs per abundance map")->check(CLI::PositiveNumber)->capture_default_str();
  simulate_cmd->add_option("--out-dir", sim.out_dir)->required();
  simulate_cmd->callback([&] { action = [&] { return simulate(sim); }; });

  MaskOptions mk;
  auto* mask_cmd = app.add_subcommand("mask", "draw a random sampling mask");
  auto* np_opt = mask_cmd->add_option("--np", mk.np, "number of pixels")->check(CLI::PositiveNumber);
  auto* from_opt = mask_cmd->add_option("--from-image", mk.from_image, "take Np from a .sib file");
  np_opt->excludes(from_opt);
  mask_cmd->add_option("--ratio", mk.ratio, "sampling ratio in (0, 1]")->required();
  mask_cmd->add_option("--seed", mk.seed)->capture_default_str();
  mask_cmd->add_option("--out", mk.out)->required();
  mask_cmd->callback([&] { action = [&] { return mask(mk); }; });

  ReconstructOptions rc;
  auto* rec_cmd = app.add_subcommand("reconstruct", "reconstruct a partially sampled image");
  rec_cmd->add_option("--method", rc.method)->required()->check(CLI::IsMember({"snn", "sss"}));
  rec_cmd->add_option("--image", rc.image, "full noisy image (.sib)")->required();
  rec_cmd->add_option("--mask", rc.mask)->required();
  auto* lambda_opt = rec_cmd->add_option("--lambda", rc.lambda);
  auto* mu_opt = rec_cmd->add_option("--mu", rc.mu);
  add_solve_options(rec_cmd, rc.solve, true);
  rec_cmd->add_option("--monitor-every", rc.solve.monitor_every, "objective sampling period, 0 for none")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  rec_cmd->add_option("--out", rc.out)->required();
  rec_cmd->add_option("--report", rc.report, "solve report JSON (default <out>.report.json)");
  rec_cmd->add_option("--trace-csv", rc.trace_csv, "objective trace as CSV");
  rec_cmd->callback([&] {
    rc.has_lambda = lambda_opt->count() > 0;
    rc.has_mu = mu_opt->count() > 0;
    action = [&] { return reconstruct(rc); };
  });

  TuneOptions tn;
  auto* tune_cmd = app.add_subcommand("tune", "tune the S2N weights");
  tune_cmd->add_option("--image", tn.image)->required();
  tune_cmd->add_option("--mask", tn.mask)->required();
  tune_cmd->add_option("--out", tn.out)->required();
  add_solve_options(tune_cmd, tn.solve, false);
  tune_cmd->callback([&] { action = [&] { return tune(tn); }; });

  EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "compare an estimate with the ground truth");
  eval_cmd->add_option("--truth", ev.truth)->required();
  eval_cmd->add_option("--estimate", ev.estimate)->required();
  auto* em_opt = eval_cmd->add_option("--endmembers", ev.endmembers);
  auto* ab_opt = eval_cmd->add_option("--abundances", ev.abundances);
  em_opt->needs(ab_opt);
  ab_opt->needs(em_opt);
  eval_cmd->add_option("--out", ev.out, "report JSON (default <estimate>.eval.json)");
  eval_cmd->callback([&] { action = [&] { return eval(ev); }; });

  PcaDiagOptions pd;
  auto* pca_cmd = app.add_subcommand("pca-diag", "eigenvalue and weight diagnostics");
  pca_cmd->add_option("--image", pd.image)->required();
  pca_cmd->add_option("--mask", pd.mask)->required();
  pca_cmd->add_option("--out-csv", pd.out_csv)->required();
  pca_cmd->callback([&] { action = [&] { return pca_diag(pd); }; });

  auto* rerun_cmd = app.add_subcommand("rerun", "repeat the run recorded in a manifest");
  rerun_cmd->add_option("manifest", rerun_manifest)->required();

  std::vector<const char*> argv{"spectrec"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ExitCode::ok : ExitCode::usage;
  }

  try {
    if (rerun_cmd->parsed()) {
      if (depth > 0) throw DataError("nested rerun");
      return rerun(rerun_manifest, depth);
    }
    apply_thread_limit();
    const auto start = std::chrono::steady_clock::now();
    const Manifest manifest = action();
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(manifest, args, wall);
    return ExitCode::ok;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ExitCode::usage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ExitCode::data;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ExitCode::data;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ExitCode::numerical;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return ExitCode::internal;
  }
}

}  // namespace

int run(const std::vector<std::string>& args) { return execute(args, 0); }

}  // namespace spectrec::cli
