#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "fstk/ingest.hpp"
#include "fstk/randls.hpp"
#include "fstk/tensor.hpp"

namespace fstk {

// One validated bag of options shared by every command; the driver fills it
// from flags / a config file, the run_* functions below do the work. Compute-
// relevant fields are echoed into model metadata so a model file records how
// it was produced.
struct RunConfig {
  // Paths. `input` is the positional argument: the dataset for compress, the
  // model file for reestimate/reconstruct/slice/diagnostics/info.
  std::string input;
  std::string data_file;    // scattered dataset (reestimate, diagnostics)
  std::string points_file;  // evaluation points CSV (reconstruct)
  std::string output;       // main output path; a directory for diagnostics
  std::string cloud_output; // scattered output (synth)

  std::vector<Index> grid;  // target grid sizes (compress/synth/reconstruct)

  double tucker_eps = 1e-2;
  int legendre_p = 10;
  int wavelet_s = 3;
  int wavelet_p = 1;
  double subsample_frac = 1.0;
  double validation_frac = 0.05;
  double residual_ceiling = 0.5;
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = hardware concurrency

  SketchConfig sketch;  // seed field is overwritten from `seed`

  // slice
  int slice_mode_x = 0;
  int slice_mode_y = 1;
  std::vector<std::pair<int, double>> slice_fixed;  // (mode, value)
  Index slice_width = 0;   // 0 = source grid size (128 if unknown)
  Index slice_height = 0;

  // synth
  std::string synth_kind = "smooth";
  int synth_dim = 3;
  Index synth_points = 0;
  SynthParams synth;

  // diagnostics
  std::vector<std::uint64_t> conv_samples;  // empty = auto ladder
  std::uint64_t leverage_rows = 16384;      // design rows for score histograms
};

// Each command returns the machine-readable summary the driver prints as the
// final stdout line, and writes progress / human-readable lines to `log`.
// Failures throw Error; the driver maps ErrorKind to the exit code.
nlohmann::json run_compress(const RunConfig& cfg, std::ostream& log);
nlohmann::json run_reestimate(const RunConfig& cfg, std::ostream& log);
nlohmann::json run_reconstruct(const RunConfig& cfg, std::ostream& log);
nlohmann::json run_slice(const RunConfig& cfg, std::ostream& log);
nlohmann::json run_diagnostics(const RunConfig& cfg, std::ostream& log);
nlohmann::json run_synth(const RunConfig& cfg, std::ostream& log);
nlohmann::json run_info(const RunConfig& cfg, std::ostream& log);

}  // namespace fstk
