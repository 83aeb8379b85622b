#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fstk/error.hpp"
#include "fstk/pipeline.hpp"

namespace {

// 0 ok, 1 compute failure, 2 I/O, 3 bad parameters.
int exit_code_for(fstk::ErrorKind kind) {
  switch (kind) {
    case fstk::ErrorKind::Io:
    case fstk::ErrorKind::Decode:
      return 2;
    case fstk::ErrorKind::Parameter:
    case fstk::ErrorKind::Shape:
    case fstk::ErrorKind::Domain:
      return 3;
    case fstk::ErrorKind::Data:
    case fstk::ErrorKind::Compute:
      return 1;
  }
  return 1;
}

fstk::MixingTransform parse_transform(const std::string& name) {
  if (name == "dct") return fstk::MixingTransform::Dct;
  if (name == "wht") return fstk::MixingTransform::Wht;
  if (name == "fft") return fstk::MixingTransform::Fft;
  fstk::fail(fstk::ErrorKind::Parameter,
             "unknown mixing transform: " + name +
                 " (expected dct, wht, or fft)");
}

std::vector<std::pair<int, double>> parse_fixed(
    const std::vector<std::string>& specs) {
  std::vector<std::pair<int, double>> out;
  for (const auto& s : specs) {
    const auto eq = s.find('=');
    fstk::require(eq != std::string::npos && eq > 0 && eq + 1 < s.size(),
                  fstk::ErrorKind::Parameter,
                  "--fix expects mode=value, got: " + s);
    try {
      std::size_t used = 0;
      const int mode = std::stoi(s.substr(0, eq), &used);
      fstk::require(used == eq, fstk::ErrorKind::Parameter,
                    "--fix expects an integer mode, got: " + s);
      const std::string vtext = s.substr(eq + 1);
      const double value = std::stod(vtext, &used);
      fstk::require(used == vtext.size(), fstk::ErrorKind::Parameter,
                    "--fix expects a numeric value, got: " + s);
      out.emplace_back(mode, value);
    } catch (const fstk::Error&) {
      throw;
    } catch (const std::exception&) {
      fstk::fail(fstk::ErrorKind::Parameter,
                 "--fix expects mode=value, got: " + s);
    }
  }
  return out;
}

void add_seed_threads(CLI::App* cmd, fstk::RunConfig& cfg) {
  cmd->add_option("--seed", cfg.seed, "Seed for every stochastic choice");
  cmd->add_option("--threads", cfg.threads,
                  "Worker thread cap (0 = hardware); never changes results");
}

void add_sketch_flags(CLI::App* cmd, fstk::RunConfig& cfg,
                      std::string& transform) {
  cmd->add_option("--sketch-s", cfg.sketch.sample_rows,
                  "Sampled sketch rows S (0 = ceil(2.5 R))");
  cmd->add_option("--sketch-qw", cfg.sketch.working_subset,
                  "Working-subset row cap fed to the sketch (0 = all)");
  cmd->add_option("--sketch-transform", transform,
                  "Mixing transform: dct, wht, or fft");
  cmd->add_option("--sketch-validation", cfg.sketch.validation_fraction,
                  "Held-out fraction for before/after residuals");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Compress gridded or scattered scientific fields into a functional "
      "sparse Tucker model, re-estimate it against raw data, and evaluate "
      "it anywhere"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from an INI/TOML file");

  fstk::RunConfig cfg;
  std::string transform = "dct";
  std::vector<std::string> fix_specs;

  auto* compress = app.add_subcommand(
      "compress", "Build a model from a dataset (FTEN, FPTC, or CSV)");
  compress->add_option("input", cfg.input, "Dataset path")->required();
  compress->add_option("-o,--output", cfg.output, "Model file to write")
      ->required();
  compress->add_option("--grid", cfg.grid,
                       "Grid sizes per mode (required for scattered input)")
      ->delimiter(',');
  compress->add_option("--tucker-eps", cfg.tucker_eps,
                       "Relative decomposition error target in (0, 1)");
  compress->add_option("--basis-legendre-p", cfg.legendre_p,
                       "Polynomial candidate degree");
  compress->add_option("--basis-wavelet-s", cfg.wavelet_s,
                       "Multiresolution candidate levels");
  compress->add_option("--basis-wavelet-p", cfg.wavelet_p,
                       "Multiresolution candidate degree");
  compress->add_option("--subsample-frac", cfg.subsample_frac,
                       "Training fraction kept before interpolation");
  compress->add_option("--validation-frac", cfg.validation_frac,
                       "Held-out fraction for the reported residual");
  compress->add_option("--fit-ceiling", cfg.residual_ceiling,
                       "Relative fit residual above which a fit is flagged");
  add_seed_threads(compress, cfg);

  auto* reestimate = app.add_subcommand(
      "reestimate", "Re-fit the core tensor against scattered data");
  reestimate->add_option("input", cfg.input, "Model file")->required();
  reestimate->add_option("--data", cfg.data_file, "Dataset path")->required();
  reestimate->add_option("-o,--output", cfg.output, "Model file to write")
      ->required();
  add_sketch_flags(reestimate, cfg, transform);
  add_seed_threads(reestimate, cfg);

  auto* reconstruct = app.add_subcommand(
      "reconstruct", "Evaluate a model on a grid (FTEN) or point list (CSV)");
  reconstruct->add_option("input", cfg.input, "Model file")->required();
  reconstruct->add_option("-o,--output", cfg.output, "Output path")
      ->required();
  reconstruct->add_option("--points", cfg.points_file,
                          "CSV of evaluation points (else a grid is used)");
  reconstruct->add_option("--grid", cfg.grid,
                          "Grid sizes (default: the model's source grid)")
      ->delimiter(',');
  add_seed_threads(reconstruct, cfg);

  auto* slice = app.add_subcommand(
      "slice", "Render a 2-D slice of a model as PGM + CSV");
  slice->add_option("input", cfg.input, "Model file")->required();
  slice->add_option("-o,--output", cfg.output, "Output path or stem")
      ->required();
  slice->add_option("--mode-x", cfg.slice_mode_x, "Mode on the image x axis");
  slice->add_option("--mode-y", cfg.slice_mode_y, "Mode on the image y axis");
  slice->add_option("--fix", fix_specs,
                    "Fixed coordinate mode=value (repeat per mode)");
  slice->add_option("--width", cfg.slice_width, "Image width (0 = grid size)");
  slice->add_option("--height", cfg.slice_height,
                    "Image height (0 = grid size)");
  add_seed_threads(slice, cfg);

  auto* diagnostics = app.add_subcommand(
      "diagnostics",
      "Write decay, per-fit, leverage, and self-convergence CSVs");
  diagnostics->add_option("input", cfg.input, "Model file")->required();
  diagnostics->add_option("-o,--output", cfg.output, "Output directory")
      ->required();
  diagnostics->add_option("--data", cfg.data_file,
                          "Dataset for leverage/self-convergence");
  diagnostics->add_option("--conv-s", cfg.conv_samples,
                          "Sample-count ladder (default: multiples of R)")
      ->delimiter(',');
  diagnostics->add_option("--leverage-rows", cfg.leverage_rows,
                          "Design rows used for the score histograms");
  add_sketch_flags(diagnostics, cfg, transform);
  add_seed_threads(diagnostics, cfg);

  auto* synth = app.add_subcommand(
      "synth", "Generate a synthetic dataset (gridded and/or scattered)");
  synth->add_option("--kind", cfg.synth_kind,
                    "smooth, flame-front, or multiscale");
  synth->add_option("--dim", cfg.synth_dim, "Dimension for scattered output");
  synth->add_option("--grid", cfg.grid, "Grid sizes for the FTEN output")
      ->delimiter(',');
  synth->add_option("--points", cfg.synth_points,
                    "Scattered sample count for the cloud output");
  synth->add_option("-o,--output", cfg.output, "FTEN output path");
  synth->add_option("--cloud-out", cfg.cloud_output,
                    "Cloud output path (.csv = text, else binary)");
  synth->add_option("--synth-terms", cfg.synth.terms, "Separable terms");
  synth->add_option("--synth-amplitude", cfg.synth.amplitude,
                    "Term amplitude scale");
  synth->add_option("--synth-thickness", cfg.synth.thickness,
                    "Front thickness (flame-front)");
  synth->add_option("--synth-harmonics", cfg.synth.harmonics,
                    "Front perturbation harmonics (flame-front)");
  synth->add_option("--synth-perturbation", cfg.synth.perturbation,
                    "Front perturbation amplitude (flame-front)");
  add_seed_threads(synth, cfg);

  auto* info =
      app.add_subcommand("info", "Describe a model, tensor, or cloud file");
  info->add_option("input", cfg.input, "Path to inspect")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 3;
  }

  try {
    cfg.sketch.transform = parse_transform(transform);
    cfg.slice_fixed = parse_fixed(fix_specs);

    nlohmann::json summary;
    if (app.got_subcommand(compress))
      summary = fstk::run_compress(cfg, std::cout);
    else if (app.got_subcommand(reestimate))
      summary = fstk::run_reestimate(cfg, std::cout);
    else if (app.got_subcommand(reconstruct))
      summary = fstk::run_reconstruct(cfg, std::cout);
    else if (app.got_subcommand(slice))
      summary = fstk::run_slice(cfg, std::cout);
    else if (app.got_subcommand(diagnostics))
      summary = fstk::run_diagnostics(cfg, std::cout);
    else if (app.got_subcommand(synth))
      summary = fstk::run_synth(cfg, std::cout);
    else
      summary = fstk::run_info(cfg, std::cout);
    std::cout << summary.dump() << std::endl;
    return 0;
  } catch (const fstk::Error& e) {
    const int code = exit_code_for(e.kind());
    std::cerr << "error: " << e.what() << "\n";
    nlohmann::json err{{"error", e.what()}, {"exit_code", code}};
    std::cout << err.dump() << std::endl;
    return code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    nlohmann::json err{{"error", e.what()}, {"exit_code", 1}};
    std::cout << err.dump() << std::endl;
    return 1;
  }
}
