#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "fixtures.hpp"
#include "gisc/config.hpp"
#include "gisc/error.hpp"
#include "gisc/hash.hpp"
#include "gisc/hsi.hpp"
#include "gisc/io_util.hpp"
#include "gisc/pipeline.hpp"
#include "json.hpp"

namespace gisc::pipeline {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr const char* kSmall = R"(seed = 5
[optics]
gamma = 2.0
[sensing]
n = 16
m = 32
band_step_nm = 20.0
snr_db = 30.0
[recon]
max_iters = 60
tau_rule = "noise"
tau_noise_scale = 0.5
[dataset]
synthetic_count = 3
synthetic_size = 16
slice_size = 16
split_fraction = 0.9
)";

config::ExperimentConfig small_config(const fs::path& out, std::size_t workers = 1) {
  auto cfg = config::from_table(config::parse_toml(kSmall));
  cfg.out_dir = out;
  cfg.workers = workers;
  cfg.validate();
  return cfg;
}

// Relative path -> contents of every file under root.
std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = read_file(e.path());
  }
  return files;
}

// Drops the wall-clock column of a trace CSV.
std::string strip_timing(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

json read_json(const fs::path& p) { return json::parse(read_file(p)); }

class PipelineRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = new fs::path(testing::scratch_dir("pipeline"));
    result_ = new EvalResult(run_all(small_config(*root_ / "a")));
  }
  static void TearDownTestSuite() {
    delete result_;
    delete root_;
  }
  static fs::path* root_;
  static EvalResult* result_;
};
fs::path* PipelineRun::root_ = nullptr;
EvalResult* PipelineRun::result_ = nullptr;

TEST_F(PipelineRun, SecondRunIsByteIdentical) {
  run_all(small_config(*root_ / "b", 2));
  const auto a = snapshot(*root_ / "a");
  const auto b = snapshot(*root_ / "b");
  ASSERT_EQ(a.size(), b.size());
  std::size_t payloads = 0, csvs = 0;
  for (const auto& [path, bytes] : a) {
    ASSERT_TRUE(b.count(path)) << path;
    const auto& other = b.at(path);
    if (path.ends_with(".hsib")) {
      EXPECT_EQ(bytes, other) << path;
      ++payloads;
    } else if (path.ends_with(".trace.csv")) {
      EXPECT_EQ(strip_timing(bytes), strip_timing(other)) << path;
      ++csvs;
    } else {
      EXPECT_EQ(bytes, other) << path;
      if (path.ends_with(".csv")) ++csvs;
    }
  }
  EXPECT_GT(payloads, 0u);
  EXPECT_GT(csvs, 0u);
}

TEST_F(PipelineRun, CalibrationSidecarsReportContrast) {
  const auto cfg = small_config(*root_ / "a");
  for (auto kind : speckle_kinds(cfg)) {
    const auto dir = *root_ / "a" / "calib" / optics::to_string(kind);
    std::size_t bands = 0;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.path().extension() != ".hsib") continue;
      ++bands;
      const auto side = read_json(sidecar_path(e.path()));
      const double want = kind == optics::SpeckleKind::rayleigh ? 1.0 : std::sqrt(5.0);
      EXPECT_NEAR(side["contrast"].get<double>(), want, 0.05 * want) << e.path();
      EXPECT_EQ(side["config_hash"], to_hex(config::config_hash(cfg)));
    }
    EXPECT_EQ(bands, cfg.sensing.wavelengths_nm().size());
  }
}

TEST_F(PipelineRun, EvalGroupsAndMeans) {
  ASSERT_EQ(result_->summary.size(), 6u);  // two speckle kinds x three algorithms
  for (const auto& s : result_->summary) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& r : result_->rows) {
      if (r.algorithm == s.algorithm && r.speckle_kind == s.speckle_kind) {
        sum += r.report.psnr_db;
        ++count;
      }
    }
    ASSERT_EQ(count, 3u);
    EXPECT_NEAR(sum / count, s.report.psnr_db, 1e-9);
  }
  const auto csv = read_file(*root_ / "a" / "eval" / "metrics.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), metrics::kCsvHeader);
}

TEST_F(PipelineRun, BundleTriplesAndManifest) {
  const auto bundle = *root_ / "a" / "bundle";
  const auto manifest = read_json(bundle / "manifest.json");
  EXPECT_EQ(manifest["sampling_rate"], "1/2");
  std::map<std::string, int> roles;
  for (const auto& e : manifest["entries"]) {
    const auto y = hsi::load_hsib(bundle / e["y"].get<std::string>());
    const auto xcs = hsi::load_hsib(bundle / e["x_cs"].get<std::string>());
    const auto x = hsi::load_hsib(bundle / e["x"].get<std::string>());
    EXPECT_EQ(y.height(), 32u);
    EXPECT_EQ(y.bands(), 1u);
    EXPECT_EQ(xcs.height(), 16u);
    EXPECT_EQ(xcs.bands(), 8u);
    EXPECT_TRUE(x.same_shape(xcs));
    ++roles[e["role"].get<std::string>()];
  }
  EXPECT_EQ(roles["train"], 6);  // ceil(0.9 * 3) per speckle kind
  EXPECT_EQ(roles["val"], 0);
}

TEST_F(PipelineRun, EvalRefusesForeignReconstructions) {
  const auto copy = *root_ / "mixed";
  fs::copy(*root_ / "a", copy, fs::copy_options::recursive);
  const auto cfg = small_config(copy);
  const auto victim = copy / "recon" / "rayleigh" / "dgi" / "synth_000_s0.hsib.json";
  auto side = read_json(victim);
  side["config_hash"] = "0000000000000000";
  atomic_write(victim, side.dump());
  EXPECT_THROW(cmd_eval(cfg), PairingError);
}

TEST_F(PipelineRun, ExternalEstimatesAreScored) {
  const auto copy = *root_ / "external";
  fs::copy(*root_ / "a", copy, fs::copy_options::recursive);
  const auto cfg = small_config(copy);
  const auto dir = copy / "recon" / "rayleigh" / "net";
  fs::create_directories(dir);
  const auto truth = hsi::load_hsib(copy / "slices" / "synth_001_s0.hsib");
  hsi::store_hsib(truth, dir / "synth_001_s0.hsib");
  atomic_write(sidecar_path(dir / "synth_001_s0.hsib"),
               json{{"config_hash", to_hex(config::config_hash(cfg))}}.dump());
  const auto result = cmd_eval(cfg);
  bool found = false;
  for (const auto& s : result.summary) {
    if (s.algorithm == "net") {
      found = true;
      EXPECT_EQ(s.report.psnr_db, metrics::kPsnrCap);
    }
  }
  EXPECT_TRUE(found);
}

TEST_F(PipelineRun, MeasureRejectsCalibrationFromAnotherConfig) {
  const auto copy = *root_ / "foreign";
  fs::copy(*root_ / "a", copy, fs::copy_options::recursive);
  auto cfg = small_config(copy);
  cfg.optics.screen.rms_height_um = 1.3;
  EXPECT_THROW(cmd_measure(cfg), PairingError);
}

TEST_F(PipelineRun, RenderWritesPngs) {
  const auto out = cmd_render(small_config(*root_ / "a"));
  EXPECT_FALSE(out.empty());
  for (const auto& p : out) {
    const auto bytes = read_file(p);
    EXPECT_EQ(bytes.substr(1, 3), "PNG");
  }
}

#ifdef GISC_BENCH_PATH
int run_cli(const std::string& args) {
  const std::string cmd = std::string(GISC_BENCH_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

TEST(Cli, ExitCodes) {
  const auto dir = testing::scratch_dir("cli");
  atomic_write(dir / "ok.toml", kSmall);
  atomic_write(dir / "bad.toml", "[sensing]\nn = \n");
  const std::string ok = "--config " + (dir / "ok.toml").string() + " --out " + (dir / "out").string();
  EXPECT_EQ(run_cli("--config " + (dir / "bad.toml").string() + " gen-speckles"), 2);
  EXPECT_EQ(run_cli(ok + " --set sensing.m=-3 gen-speckles"), 2);
  EXPECT_EQ(run_cli(ok + " gen-speckles"), 0);
  EXPECT_EQ(run_cli(ok + " slice"), 0);
  EXPECT_EQ(run_cli(ok + " --seed 6 measure"), 3);
  EXPECT_EQ(run_cli(ok + " measure"), 0);
  // Solver settings are part of the config hash.
  EXPECT_EQ(run_cli(ok + " --tau-rule fraction reconstruct --algorithm cs_fista"), 3);
  EXPECT_EQ(run_cli(ok + " reconstruct --algorithm cs_fista"), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "recon" / "rayleigh" / "cs_fista" / "synth_000_s0.hsib"));

  const std::string diverging =
      "--config " + (dir / "ok.toml").string() + " --out " + (dir / "div").string() + " --step 1e3 ";
  for (const char* step : {"gen-speckles", "slice", "measure"}) ASSERT_EQ(run_cli(diverging + step), 0) << step;
  EXPECT_EQ(run_cli(diverging + "reconstruct --algorithm cs_fista"), 4);
}
#endif

}  // namespace
}  // namespace gisc::pipeline
