#include "gisc/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

#include "gisc/error.hpp"
#include "gisc/hash.hpp"
#include "gisc/io_util.hpp"
#include "gisc/log.hpp"
#include "gisc/pseudocolor.hpp"
#include "gisc/synthetic.hpp"
#include "json.hpp"

namespace gisc::pipeline {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

constexpr const char* kCsName = "cs_fista";

std::string hash_hex(const config::ExperimentConfig& cfg) { return to_hex(config::config_hash(cfg)); }

void write_json(const fs::path& path, const json& j) { atomic_write(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what(), e.byte);
  }
}

void store_with_sidecar(const hsi::HsiCube& cube, const fs::path& path, const json& sidecar) {
  hsi::store_hsib(cube, path);
  write_json(sidecar_path(path), sidecar);
}

// Reads a sidecar and checks that it was written under this configuration.
json checked_sidecar(const fs::path& file, const std::string& hash) {
  const fs::path side = sidecar_path(file);
  if (!fs::exists(side)) {
    throw PairingError(file.string() + " has no sidecar " + side.filename().string());
  }
  json j = read_json(side);
  if (!j.contains("config_hash") || !j["config_hash"].is_string() || j["config_hash"] != hash) {
    throw PairingError(file.string() + " was written under config hash " +
                       (j.contains("config_hash") ? j["config_hash"].dump() : std::string("(none)")) +
                       ", the current config hashes to \"" + hash + "\"; rerun the earlier stages");
  }
  return j;
}

std::string band_file(std::size_t b) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "band_%02zu.hsib", b);
  return buf;
}

std::string sampling_text(const sensing::SensingOperator& op) {
  const auto [num, den] = op.sampling_ratio();
  return std::to_string(num) + "/" + std::to_string(den);
}

std::uint64_t screen_seed(const config::ExperimentConfig& cfg) { return derive_seed(cfg.seed, "screen"); }

std::vector<fs::path> sorted_entries(const fs::path& dir, bool directories) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (directories ? e.is_directory() : (e.is_regular_file() && e.path().extension() == ".hsib")) {
      out.push_back(e.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void copy_file_atomic(const fs::path& from, const fs::path& to) { atomic_write(to, read_file(from)); }

}  // namespace

fs::path Layout::calib_dir(optics::SpeckleKind kind) const {
  return root / "calib" / optics::to_string(kind);
}

fs::path Layout::meas_dir(optics::SpeckleKind kind) const { return root / "meas" / optics::to_string(kind); }

fs::path Layout::recon_dir(optics::SpeckleKind kind, const std::string& algorithm) const {
  return root / "recon" / optics::to_string(kind) / algorithm;
}

fs::path sidecar_path(const fs::path& file) {
  fs::path p = file;
  p += ".json";
  return p;
}

void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  if (count == 0) return;
  workers = std::clamp<std::size_t>(workers, 1, count);
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex mu;
  std::size_t failed_index = count;
  std::exception_ptr failure;
  auto work = [&] {
    while (!stop.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) break;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
        stop = true;
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) threads.emplace_back(work);
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<optics::SpeckleKind> speckle_kinds(const config::ExperimentConfig& cfg) {
  std::vector<optics::SpeckleKind> kinds{optics::SpeckleKind::rayleigh};
  if (cfg.optics.gamma) kinds.push_back(optics::SpeckleKind::super_rayleigh);
  return kinds;
}

sensing::CalibrationSet calibration_metadata(const config::ExperimentConfig& cfg,
                                             optics::SpeckleKind kind) {
  sensing::CalibrationSet c;
  c.wavelengths_nm = cfg.sensing.wavelengths_nm();
  c.magnification = cfg.optics.geometry.magnification;
  c.n = cfg.sensing.n;
  c.m = cfg.sensing.m;
  c.screen_seed = screen_seed(cfg);
  c.screen = cfg.optics.screen;
  c.geometry = cfg.optics.geometry;
  c.geometry.detector_size = cfg.sensing.m;
  if (kind == optics::SpeckleKind::super_rayleigh) {
    if (!cfg.optics.gamma) throw ConfigError("super-Rayleigh speckles need optics.gamma");
    c.gamma = cfg.optics.gamma;
  }
  return c;
}

std::uint64_t expected_fingerprint(const config::ExperimentConfig& cfg, optics::SpeckleKind kind) {
  return sensing::operator_fingerprint(calibration_metadata(cfg, kind), cfg.sensing.m,
                                       cfg.sensing.normalization);
}

void cmd_gen_speckles(const config::ExperimentConfig& cfg) {
  cfg.validate();
  const Layout layout{cfg.out_dir};
  const std::string hash = hash_hex(cfg);
  const auto wl = cfg.sensing.wavelengths_nm();
  const auto screen = optics::make_phase_screen(screen_seed(cfg), cfg.optics.screen);
  auto meta = calibration_metadata(cfg, optics::SpeckleKind::rayleigh);
  const auto base = sensing::calibrate(screen, meta.geometry, wl, cfg.sensing.n);

  // Full-screen patterns give the contrast figures reported in the sidecars.
  std::vector<optics::SpecklePattern> full(wl.size());
  optics::Geometry full_geometry = cfg.optics.geometry;
  full_geometry.detector_size = cfg.optics.screen.size;
  parallel_for(wl.size(), cfg.workers, [&](std::size_t b) {
    full[b] = optics::speckle_from_point_source(screen, {}, wl[b], full_geometry);
  });

  for (const auto kind : speckle_kinds(cfg)) {
    const bool sr = kind == optics::SpeckleKind::super_rayleigh;
    sensing::CalibrationSet calib = base;
    if (sr) {
      calib.gamma = cfg.optics.gamma;
      for (auto& p : calib.reference_patterns) p = optics::to_super_rayleigh(p, *cfg.optics.gamma);
    }
    const auto fingerprint = expected_fingerprint(cfg, kind);
    const fs::path dir = layout.calib_dir(kind);
    json contrasts = json::array();
    json files = json::array();
    for (std::size_t b = 0; b < wl.size(); ++b) {
      const auto& pattern = calib.reference_patterns[b];
      const auto stats = optics::contrast(sr ? optics::to_super_rayleigh(full[b], *cfg.optics.gamma) : full[b]);
      const auto window = optics::contrast(pattern);
      const auto size = pattern.intensity.rows();
      const auto cube = hsi::HsiCube::from_vector(size, size, {wl[b]}, pattern.intensity.values(),
                                                  band_file(b).substr(0, 7));
      json side;
      side["config_hash"] = hash;
      side["speckle_kind"] = optics::to_string(kind);
      side["band"] = b;
      side["wavelength_nm"] = wl[b];
      side["contrast"] = stats.contrast;
      side["contrast_samples"] = stats.sample_count;
      side["window_contrast"] = window.contrast;
      side["operator_fingerprint"] = to_hex(fingerprint);
      store_with_sidecar(cube, dir / band_file(b), side);
      contrasts.push_back(stats.contrast);
      files.push_back(band_file(b));
    }
    json j;
    j["config_hash"] = hash;
    j["speckle_kind"] = optics::to_string(kind);
    j["gamma"] = sr ? json(*cfg.optics.gamma) : json(nullptr);
    j["n"] = cfg.sensing.n;
    j["m"] = cfg.sensing.m;
    j["magnification"] = cfg.optics.geometry.magnification;
    j["pattern_size"] = calib.pattern_size();
    j["screen_seed"] = to_hex(calib.screen_seed);
    j["wavelengths_nm"] = wl;
    j["operator_fingerprint"] = to_hex(fingerprint);
    j["contrast"] = contrasts;
    j["files"] = files;
    write_json(dir / "calibration.json", j);
    log::info("gen-speckles: " + std::to_string(wl.size()) + " " + optics::to_string(kind) +
              " reference patterns in " + dir.string());
  }
}

sensing::CalibrationSet load_calibration(const config::ExperimentConfig& cfg,
                                         optics::SpeckleKind kind) {
  const Layout layout{cfg.out_dir};
  const fs::path dir = layout.calib_dir(kind);
  const fs::path index = dir / "calibration.json";
  if (!fs::exists(index)) {
    throw PairingError("no " + std::string(optics::to_string(kind)) +
                       " calibration in " + dir.string() + "; run gen-speckles first");
  }
  const json j = read_json(index);
  const auto expected = expected_fingerprint(cfg, kind);
  const std::string recorded = j.value("operator_fingerprint", std::string());
  if (recorded != to_hex(expected)) {
    throw PairingError("calibration in " + dir.string() + " has operator fingerprint " + recorded +
                       " but the config implies " + to_hex(expected) + "; rerun gen-speckles");
  }
  sensing::CalibrationSet calib = calibration_metadata(cfg, kind);
  const auto& wl = calib.wavelengths_nm;
  const auto sr = kind == optics::SpeckleKind::super_rayleigh;
  for (std::size_t b = 0; b < wl.size(); ++b) {
    const auto cube = hsi::load_hsib(dir / band_file(b));
    if (cube.bands() != 1 || cube.height() != cube.width() ||
        std::abs(cube.wavelengths_nm()[0] - wl[b]) > 1e-6) {
      throw PairingError(dir.string() + "/" + band_file(b) + " does not match the configured bands");
    }
    optics::SpecklePattern p;
    p.wavelength_nm = wl[b];
    p.tag = sr ? optics::StatisticsTag::super_rayleigh(*cfg.optics.gamma) : optics::StatisticsTag::rayleigh();
    p.intensity = RealGrid(cube.height(), cube.width());
    auto out = p.intensity.values();
    const auto in = cube.data();
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = static_cast<double>(in[i]) * cube.scale();
    calib.reference_patterns.push_back(std::move(p));
  }
  return calib;
}

sensing::SensingOperator make_operator(const config::ExperimentConfig& cfg,
                                       const sensing::CalibrationSet& calib) {
  const auto& s = cfg.sensing;
  if (s.automatic_mode) return sensing::SensingOperator::automatic(calib, s.m, s.normalization);
  if (s.mode == sensing::Mode::dense) return sensing::SensingOperator::dense(calib, s.m, s.normalization);
  return sensing::SensingOperator::convolutional(calib, s.m, s.normalization);
}

void cmd_slice(const config::ExperimentConfig& cfg) {
  cfg.validate();
  const Layout layout{cfg.out_dir};
  const std::string hash = hash_hex(cfg);
  const auto wl = cfg.sensing.wavelengths_nm();
  const auto& ds = cfg.dataset;

  struct Source {
    std::string label;  // manifest cube_path
    std::string name;   // slice name prefix
    fs::path path;      // empty for synthetic scenes
    std::size_t synthetic_index = 0;
    bool test = false;
  };
  std::vector<Source> sources;
  for (const auto& p : ds.inputs) sources.push_back({p.generic_string(), p.stem().string(), p, 0, false});
  for (const auto& p : ds.test_inputs) sources.push_back({p.generic_string(), p.stem().string(), p, 0, true});
  if (ds.inputs.empty()) {
    for (std::size_t i = 0; i < ds.synthetic_count; ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "synth_%03zu", i);
      sources.push_back({std::string("synthetic:") + std::to_string(i), name, {}, i, false});
    }
  }
  std::set<std::string> names;
  for (const auto& s : sources) {
    if (!names.insert(s.name).second) throw ConfigError("two dataset inputs share the name '" + s.name + "'");
  }

  std::vector<std::size_t> slice_counts(sources.size(), 0);
  parallel_for(sources.size(), cfg.workers, [&](std::size_t i) {
    const auto& src = sources[i];
    hsi::HsiCube cube;
    if (src.path.empty()) {
      cube = synthetic::make_scene(derive_seed(cfg.seed, "synthetic/" + std::to_string(src.synthetic_index)),
                                   ds.synthetic_size, ds.synthetic_size, wl);
    } else {
      cube = hsi::select_bands(hsi::load_hsib(src.path), cfg.sensing.band_lo_nm, cfg.sensing.band_hi_nm);
      bool match = cube.bands() == wl.size();
      for (std::size_t b = 0; match && b < wl.size(); ++b) {
        match = std::abs(cube.wavelengths_nm()[b] - wl[b]) <= 1e-6;
      }
      if (!match) {
        throw ShapeError(src.path.string() + ": bands in [" + std::to_string(cfg.sensing.band_lo_nm) + ", " +
                         std::to_string(cfg.sensing.band_hi_nm) + "] nm do not match the " +
                         std::to_string(wl.size()) + " configured wavelengths");
      }
      float peak = 0.0f;
      for (float v : cube.data()) peak = std::max(peak, v);
      if (peak > 0.0f) {
        for (auto& v : cube.data()) v /= peak;
      }
    }
    cube.set_name(src.name);
    const auto slices = hsi::slice(cube, ds.slice);
    for (std::size_t k = 0; k < slices.size(); ++k) {
      json side;
      side["config_hash"] = hash;
      side["source"] = src.label;
      side["index"] = k;
      store_with_sidecar(slices[k], layout.slices_dir() / (slices[k].name() + ".hsib"), side);
    }
    slice_counts[i] = slices.size();
  });

  hsi::DatasetManifest manifest;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    hsi::ManifestEntry e;
    e.cube_path = sources[i].label;
    e.role = sources[i].test ? hsi::Role::test : hsi::Role::train;
    e.slice_indices.resize(slice_counts[i]);
    std::iota(e.slice_indices.begin(), e.slice_indices.end(), std::size_t{0});
    manifest.entries.push_back(std::move(e));
  }
  manifest = hsi::split(manifest, ds.split_fraction, derive_seed(cfg.seed, "split"));
  hsi::store_manifest(manifest, layout.slices_dir() / "manifest.json");

  std::map<std::pair<std::string, std::size_t>, hsi::Role> roles;
  for (const auto& e : manifest.entries) {
    for (auto k : e.slice_indices) roles[{e.cube_path, k}] = e.role;
  }
  json list = json::array();
  std::size_t total = 0;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    for (std::size_t k = 0; k < slice_counts[i]; ++k) {
      json r;
      r["name"] = sources[i].name + "_s" + std::to_string(k);
      r["source"] = sources[i].label;
      r["index"] = k;
      r["role"] = hsi::to_string(roles.at({sources[i].label, k}));
      list.push_back(r);
      ++total;
    }
  }
  json j;
  j["config_hash"] = hash;
  j["slice_size"] = ds.slice.size;
  j["slice_stride"] = ds.slice.stride;
  j["slices"] = list;
  write_json(layout.slices_dir() / "slices.json", j);
  log::info("slice: " + std::to_string(total) + " slices from " + std::to_string(sources.size()) + " cubes");
}

std::vector<SliceRecord> load_slice_records(const config::ExperimentConfig& cfg) {
  const Layout layout{cfg.out_dir};
  const fs::path path = layout.slices_dir() / "slices.json";
  if (!fs::exists(path)) throw PairingError("no slice index at " + path.string() + "; run slice first");
  const json j = read_json(path);
  if (j.value("config_hash", std::string()) != hash_hex(cfg)) {
    throw PairingError(path.string() + " was written under a different config; rerun slice");
  }
  std::vector<SliceRecord> out;
  try {
    for (const auto& r : j.at("slices")) {
      out.push_back({r.at("name").get<std::string>(), r.at("source").get<std::string>(),
                     r.at("index").get<std::size_t>(), hsi::role_from_string(r.at("role").get<std::string>())});
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what(), 0);
  }
  return out;
}

sensing::Measurement load_measurement(const fs::path& path) {
  const auto cube = hsi::load_hsib(path);
  if (cube.bands() != 1 || cube.height() != cube.width()) {
    throw ShapeError(path.string() + " is not a square single-band measurement");
  }
  const json side = read_json(sidecar_path(path));
  sensing::Measurement y;
  y.image = RealGrid(cube.height(), cube.width());
  auto out = y.image.values();
  const auto in = cube.data();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = static_cast<double>(in[i]) * cube.scale();
  try {
    y.noise.kind = sensing::noise_kind_from_string(side.at("noise_kind").get<std::string>());
    y.noise.target_snr_db = side.at("target_snr_db").get<double>();
    y.seed = side.at("seed").get<std::uint64_t>();
    y.operator_fingerprint = from_hex(side.at("operator_fingerprint").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(sidecar_path(path).string() + ": " + e.what(), 0);
  }
  return y;
}

void cmd_measure(const config::ExperimentConfig& cfg) {
  cfg.validate();
  const Layout layout{cfg.out_dir};
  const std::string hash = hash_hex(cfg);
  const auto records = load_slice_records(cfg);
  const auto kinds = speckle_kinds(cfg);
  const auto wl = cfg.sensing.wavelengths_nm();
  std::vector<sensing::SensingOperator> ops;
  for (auto kind : kinds) ops.push_back(make_operator(cfg, load_calibration(cfg, kind)));

  parallel_for(kinds.size() * records.size(), cfg.workers, [&](std::size_t t) {
    const std::size_t ki = t / records.size();
    const auto& rec = records[t % records.size()];
    const auto& op = ops[ki];
    const fs::path src = layout.slices_dir() / (rec.name + ".hsib");
    checked_sidecar(src, hash);
    const auto x = hsi::load_hsib(src);
    const std::string kind = optics::to_string(kinds[ki]);
    const auto seed = derive_seed(cfg.seed, "noise/" + kind + "/" + rec.name);
    const auto y = sensing::forward(op, x, cfg.sensing.noise, seed);
    json side;
    side["config_hash"] = hash;
    side["slice"] = rec.name;
    side["speckle_kind"] = kind;
    side["noise_kind"] = sensing::to_string(y.noise.kind);
    side["target_snr_db"] = y.noise.target_snr_db;
    side["seed"] = y.seed;
    side["operator_fingerprint"] = to_hex(y.operator_fingerprint);
    side["sampling_rate"] = sampling_text(op);
    const auto cube = hsi::HsiCube::from_vector(op.m(), op.m(), {wl.front()}, y.image.values(), rec.name);
    store_with_sidecar(cube, layout.meas_dir(kinds[ki]) / (rec.name + ".hsib"), side);
  });

  for (std::size_t ki = 0; ki < kinds.size(); ++ki) {
    json j;
    j["config_hash"] = hash;
    j["speckle_kind"] = optics::to_string(kinds[ki]);
    j["operator_fingerprint"] = to_hex(ops[ki].fingerprint());
    j["sampling_rate"] = sampling_text(ops[ki]);
    j["mode"] = sensing::to_string(ops[ki].mode());
    json list = json::array();
    for (const auto& r : records) list.push_back(r.name + ".hsib");
    j["measurements"] = list;
    write_json(layout.meas_dir(kinds[ki]) / "measurements.json", j);
  }
  log::info("measure: " + std::to_string(records.size() * kinds.size()) + " measurements at sampling rate " +
            sampling_text(ops.front()));
}

namespace {

recon::ReconResult reconstruct_one(const config::ExperimentConfig& cfg, const Layout& layout,
                                   const std::string& hash, const sensing::SensingOperator& op,
                                   optics::SpeckleKind kind, const std::string& slice,
                                   recon::Algorithm algorithm) {
  const fs::path mpath = layout.meas_dir(kind) / (slice + ".hsib");
  checked_sidecar(mpath, hash);
  const auto y = load_measurement(mpath);
  recon::ReconConfig rc = cfg.recon;
  rc.algorithm = algorithm;
  auto result = recon::reconstruct(y, op, rc);
  const std::string alg = recon::to_string(algorithm);
  auto estimate = algorithm == recon::Algorithm::cs_fista ? recon::clamp_for_export(result.estimate)
                                                          : result.estimate;
  estimate.set_name(slice);
  json side;
  side["config_hash"] = hash;
  side["slice"] = slice;
  side["speckle_kind"] = optics::to_string(kind);
  side["algorithm"] = alg;
  side["operator_fingerprint"] = to_hex(op.fingerprint());
  side["iterations_used"] = result.iterations_used;
  if (algorithm == recon::Algorithm::cs_fista) {
    side["tau"] = result.tau;
    side["step"] = result.step;
    side["lipschitz"] = result.lipschitz;
    side["final_relative_change"] = result.final_relative_change;
    side["max_iters"] = rc.max_iters;
    side["transform"] = recon::to_string(rc.transform);
    side["tau_rule"] = recon::to_string(rc.tau_rule);
    side["column_normalization"] = sensing::to_string(op.column_norm());
  }
  const fs::path dir = layout.recon_dir(kind, alg);
  store_with_sidecar(estimate, dir / (slice + ".hsib"), side);
  if (algorithm == recon::Algorithm::cs_fista) {
    std::string csv = "iter,objective,wall_ms\n";
    char buf[96];
    for (std::size_t i = 0; i < result.objective_trace.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.6f\n", i + 1, result.objective_trace[i],
                    result.iteration_ms[i]);
      csv += buf;
    }
    atomic_write(dir / (slice + ".trace.csv"), csv);
  }
  result.estimate = std::move(estimate);
  return result;
}

}  // namespace

void cmd_reconstruct(const config::ExperimentConfig& cfg, const std::vector<recon::Algorithm>& algorithms) {
  cfg.validate();
  const Layout layout{cfg.out_dir};
  const std::string hash = hash_hex(cfg);
  const auto records = load_slice_records(cfg);
  const auto kinds = speckle_kinds(cfg);
  const auto& algs = algorithms.empty() ? cfg.algorithms : algorithms;
  std::vector<sensing::SensingOperator> ops;
  for (auto kind : kinds) ops.push_back(make_operator(cfg, load_calibration(cfg, kind)));

  const std::size_t per_kind = algs.size() * records.size();
  parallel_for(kinds.size() * per_kind, cfg.workers, [&](std::size_t t) {
    const std::size_t ki = t / per_kind;
    const std::size_t ai = (t % per_kind) / records.size();
    const auto& rec = records[t % records.size()];
    reconstruct_one(cfg, layout, hash, ops[ki], kinds[ki], rec.name, algs[ai]);
  });
  log::info("reconstruct: " + std::to_string(kinds.size() * per_kind) + " reconstructions");
}

void cmd_export_for_net(const config::ExperimentConfig& cfg) {
  cfg.validate();
  const Layout layout{cfg.out_dir};
  const std::string hash = hash_hex(cfg);
  const auto records = load_slice_records(cfg);
  const auto kinds = speckle_kinds(cfg);
  const auto wl = cfg.sensing.wavelengths_nm();
  const fs::path root = layout.bundle_dir();

  std::vector<std::optional<sensing::SensingOperator>> ops(kinds.size());
  std::mutex ops_mu;
  auto op_for = [&](std::size_t ki) -> const sensing::SensingOperator& {
    std::lock_guard lock(ops_mu);
    if (!ops[ki]) ops[ki] = make_operator(cfg, load_calibration(cfg, kinds[ki]));
    return *ops[ki];
  };

  parallel_for(kinds.size() * records.size(), cfg.workers, [&](std::size_t t) {
    const std::size_t ki = t / records.size();
    const auto& rec = records[t % records.size()];
    const auto kind = kinds[ki];
    const fs::path out = root / optics::to_string(kind);
    const std::string file = rec.name + ".hsib";

    const fs::path y = layout.meas_dir(kind) / file;
    checked_sidecar(y, hash);
    const fs::path xcs = layout.recon_dir(kind, kCsName) / file;
    if (!fs::exists(xcs) || !fs::exists(sidecar_path(xcs))) {
      reconstruct_one(cfg, layout, hash, op_for(ki), kind, rec.name, recon::Algorithm::cs_fista);
    }
    checked_sidecar(xcs, hash);
    const fs::path x = layout.slices_dir() / file;
    checked_sidecar(x, hash);
    for (const auto& [from, sub] : {std::pair{y, "Y"}, std::pair{xcs, "X_cs"}, std::pair{x, "X"}}) {
      copy_file_atomic(from, out / sub / file);
      copy_file_atomic(sidecar_path(from), sidecar_path(out / sub / file));
    }
  });

  json entries = json::array();
  for (auto kind : kinds) {
    const std::string k = optics::to_string(kind);
    for (const auto& rec : records) {
      json e;
      e["slice"] = rec.name;
      e["speckle_kind"] = k;
      e["role"] = hsi::to_string(rec.role);
      e["y"] = k + "/Y/" + rec.name + ".hsib";
      e["x_cs"] = k + "/X_cs/" + rec.name + ".hsib";
      e["x"] = k + "/X/" + rec.name + ".hsib";
      entries.push_back(e);
    }
  }
  json j;
  j["format"] = "gisc-bundle-v1";
  j["config_hash"] = hash;
  j["n"] = cfg.sensing.n;
  j["m"] = cfg.sensing.m;
  j["bands"] = wl.size();
  j["wavelengths_nm"] = wl;
  {
    const auto nn = cfg.sensing.n * cfg.sensing.n * wl.size();
    const auto mm = cfg.sensing.m * cfg.sensing.m;
    const auto g = std::gcd(mm, nn);
    j["sampling_rate"] = std::to_string(mm / g) + "/" + std::to_string(nn / g);
  }
  j["split_fraction"] = cfg.dataset.split_fraction;
  j["y_layout"] = "single m x m image; split into quadrants at the network input";
  j["results"] =
      "write estimates to recon/<speckle_kind>/<name>/<slice>.hsib with a sidecar "
      "<slice>.hsib.json holding this config_hash, then run eval";
  j["entries"] = entries;
  write_json(root / "manifest.json", j);
  log::info("export-for-net: " + std::to_string(entries.size()) + " triples in " + root.string());
}

EvalResult cmd_eval(const config::ExperimentConfig& cfg) {
  cfg.validate();
  const Layout layout{cfg.out_dir};
  const std::string hash = hash_hex(cfg);

  struct Item {
    std::string kind, algorithm, slice;
    fs::path path;
  };
  std::vector<Item> items;
  for (const auto& kdir : sorted_entries(layout.root / "recon", true)) {
    for (const auto& adir : sorted_entries(kdir, true)) {
      for (const auto& f : sorted_entries(adir, false)) {
        items.push_back({kdir.filename().string(), adir.filename().string(), f.stem().string(), f});
      }
    }
  }
  if (items.empty()) throw PairingError("no reconstructions under " + (layout.root / "recon").string());
  for (const auto& it : items) checked_sidecar(it.path, hash);

  std::vector<metrics::LabeledReport> rows(items.size());
  parallel_for(items.size(), cfg.workers, [&](std::size_t i) {
    const auto& it = items[i];
    const fs::path truth_path = layout.slices_dir() / (it.slice + ".hsib");
    if (!fs::exists(truth_path)) {
      throw PairingError(it.path.string() + " has no ground-truth slice " + truth_path.string());
    }
    checked_sidecar(truth_path, hash);
    const auto truth = hsi::load_hsib(truth_path);
    const auto estimate = hsi::load_hsib(it.path);
    if (!truth.same_shape(estimate)) {
      throw ShapeError(it.path.string() + " does not have the shape of its ground-truth slice");
    }
    rows[i] = {it.slice, it.algorithm, it.kind, metrics::evaluate(truth, estimate)};
    rows[i].report.per_band_psnr.clear();
  });

  EvalResult result;
  std::string csv = std::string(metrics::kCsvHeader) + "\n";
  std::string summary = csv;
  std::size_t begin = 0;
  while (begin < rows.size()) {
    std::size_t end = begin;
    std::vector<metrics::MetricsReport> group;
    while (end < rows.size() && rows[end].speckle_kind == rows[begin].speckle_kind &&
           rows[end].algorithm == rows[begin].algorithm) {
      csv += metrics::csv_row(rows[end]) + "\n";
      group.push_back(rows[end].report);
      ++end;
    }
    metrics::LabeledReport mean{"MEAN", rows[begin].algorithm, rows[begin].speckle_kind,
                                metrics::aggregate(group)};
    csv += metrics::csv_row(mean) + "\n";
    summary += metrics::csv_row(mean) + "\n";
    result.summary.push_back(mean);
    begin = end;
  }
  atomic_write(layout.eval_dir() / "metrics.csv", csv);
  atomic_write(layout.eval_dir() / "summary.csv", summary);
  result.rows = std::move(rows);
  log::info("eval: " + std::to_string(result.rows.size()) + " reconstructions in " +
            std::to_string(result.summary.size()) + " groups");
  return result;
}

std::vector<fs::path> cmd_render(const config::ExperimentConfig& cfg, const std::vector<fs::path>& inputs) {
  const Layout layout{cfg.out_dir};
  std::vector<fs::path> sources = inputs;
  if (sources.empty()) {
    for (const auto& f : sorted_entries(layout.slices_dir(), false)) sources.push_back(f);
    for (const auto& kdir : sorted_entries(layout.root / "recon", true)) {
      for (const auto& adir : sorted_entries(kdir, true)) {
        for (const auto& f : sorted_entries(adir, false)) sources.push_back(f);
      }
    }
  }
  std::vector<fs::path> outputs(sources.size());
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto rel = sources[i].lexically_relative(layout.root);
    const bool inside = !rel.empty() && *rel.begin() != "..";
    outputs[i] = layout.render_dir() / (inside ? rel : sources[i].filename());
    outputs[i].replace_extension(".png");
  }
  parallel_for(sources.size(), cfg.workers, [&](std::size_t i) {
    pseudocolor::write_png(pseudocolor::render(hsi::load_hsib(sources[i])), outputs[i]);
  });
  log::info("render: " + std::to_string(outputs.size()) + " images (" + pseudocolor::kTableVersion + ")");
  return outputs;
}

EvalResult run_all(const config::ExperimentConfig& cfg) {
  cmd_gen_speckles(cfg);
  cmd_slice(cfg);
  cmd_measure(cfg);
  cmd_reconstruct(cfg);
  cmd_export_for_net(cfg);
  return cmd_eval(cfg);
}

}  // namespace gisc::pipeline
