#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gisc/config.hpp"
#include "gisc/hsi.hpp"
#include "gisc/metrics.hpp"
#include "gisc/optics.hpp"
#include "gisc/recon.hpp"
#include "gisc/sensing.hpp"

namespace gisc::pipeline {

// Output tree under the configured directory:
//   calib/<kind>/calibration.json, band_NN.hsib
//   slices/<slice>.hsib, manifest.json, slices.json
//   meas/<kind>/<slice>.hsib
//   recon/<kind>/<algorithm>/<slice>.hsib, <slice>.trace.csv
//   bundle/<kind>/{Y,X_cs,X}/<slice>.hsib, bundle/manifest.json
//   eval/metrics.csv, eval/summary.csv
//   render/<relative path>.png
// Every HSIB file has a "<file>.json" sidecar carrying the config hash.
struct Layout {
  std::filesystem::path root;

  std::filesystem::path calib_dir(optics::SpeckleKind kind) const;
  std::filesystem::path slices_dir() const { return root / "slices"; }
  std::filesystem::path meas_dir(optics::SpeckleKind kind) const;
  std::filesystem::path recon_dir(optics::SpeckleKind kind, const std::string& algorithm) const;
  std::filesystem::path bundle_dir() const { return root / "bundle"; }
  std::filesystem::path eval_dir() const { return root / "eval"; }
  std::filesystem::path render_dir() const { return root / "render"; }
};

std::filesystem::path sidecar_path(const std::filesystem::path& file);

// Runs fn(0..count-1) on up to `workers` threads. Tasks are claimed in index
// order; if any throw, the exception of the lowest failing index is rethrown
// after all workers stop.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn);

std::vector<optics::SpeckleKind> speckle_kinds(const config::ExperimentConfig& cfg);

// Calibration metadata for a speckle kind, without reference patterns; enough
// to compute the expected operator fingerprint.
sensing::CalibrationSet calibration_metadata(const config::ExperimentConfig& cfg,
                                             optics::SpeckleKind kind);
std::uint64_t expected_fingerprint(const config::ExperimentConfig& cfg, optics::SpeckleKind kind);

// Reads the reference patterns of one kind back from disk. Throws
// PairingError when they were written under a different configuration.
sensing::CalibrationSet load_calibration(const config::ExperimentConfig& cfg,
                                         optics::SpeckleKind kind);
sensing::SensingOperator make_operator(const config::ExperimentConfig& cfg,
                                       const sensing::CalibrationSet& calib);

struct SliceRecord {
  std::string name;
  std::string source;
  std::size_t index = 0;
  hsi::Role role = hsi::Role::train;
};
std::vector<SliceRecord> load_slice_records(const config::ExperimentConfig& cfg);

sensing::Measurement load_measurement(const std::filesystem::path& path);

void cmd_gen_speckles(const config::ExperimentConfig& cfg);
void cmd_slice(const config::ExperimentConfig& cfg);
void cmd_measure(const config::ExperimentConfig& cfg);
// Runs the given algorithms, or the configured ones when empty.
void cmd_reconstruct(const config::ExperimentConfig& cfg,
                     const std::vector<recon::Algorithm>& algorithms = {});
void cmd_export_for_net(const config::ExperimentConfig& cfg);

struct EvalResult {
  std::vector<metrics::LabeledReport> rows;     // per slice, sorted by kind, algorithm, slice
  std::vector<metrics::LabeledReport> summary;  // one MEAN row per (kind, algorithm)
};
// Scores every HSIB under recon/<kind>/<algorithm>/ against its ground-truth
// slice. Refuses inputs whose sidecar hash differs from the config's.
EvalResult cmd_eval(const config::ExperimentConfig& cfg);

// Renders the given cubes, or every slice and reconstruction when empty.
// Returns the written PNG paths.
std::vector<std::filesystem::path> cmd_render(const config::ExperimentConfig& cfg,
                                              const std::vector<std::filesystem::path>& inputs = {});

// gen-speckles, slice, measure, reconstruct, export-for-net, eval.
EvalResult run_all(const config::ExperimentConfig& cfg);

}  // namespace gisc::pipeline
