#include "gisc/config.hpp"

#include <cctype>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>

#include "gisc/error.hpp"
#include "gisc/hash.hpp"
#include "gisc/io_util.hpp"
#include "gisc/synthetic.hpp"

namespace gisc::config {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool is_bare_key(std::string_view k) {
  if (k.empty()) return false;
  for (char c : k) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  }
  return true;
}

class ValueParser {
 public:
  explicit ValueParser(std::string_view text) : t_(text) {}

  Value parse_all(bool allow_bare) {
    skip_ws();
    Value v = parse(allow_bare);
    skip_ws();
    if (p_ < t_.size() && t_[p_] == '#') p_ = t_.size();
    if (p_ != t_.size()) fail("unexpected trailing text");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError(what + " at column " + std::to_string(p_ + 1));
  }

  void skip_ws() {
    while (p_ < t_.size() && (t_[p_] == ' ' || t_[p_] == '\t' || t_[p_] == '\r')) ++p_;
  }

  Value parse(bool allow_bare) {
    if (p_ >= t_.size()) fail("missing value");
    const char c = t_[p_];
    if (c == '"') return parse_string();
    if (c == '[') return parse_array();
    return parse_scalar(allow_bare);
  }

  Value parse_string() {
    ++p_;
    Value v;
    v.kind = Value::Kind::string;
    while (true) {
      if (p_ >= t_.size()) fail("unterminated string");
      const char c = t_[p_++];
      if (c == '"') break;
      if (c != '\\') {
        v.s += c;
        continue;
      }
      if (p_ >= t_.size()) fail("unterminated escape");
      switch (t_[p_++]) {
        case '"': v.s += '"'; break;
        case '\\': v.s += '\\'; break;
        case 'n': v.s += '\n'; break;
        case 't': v.s += '\t'; break;
        default: fail("unsupported escape sequence");
      }
    }
    return v;
  }

  Value parse_array() {
    ++p_;
    Value v;
    v.kind = Value::Kind::array;
    skip_ws();
    if (p_ < t_.size() && t_[p_] == ']') {
      ++p_;
      return v;
    }
    while (true) {
      skip_ws();
      v.items.push_back(parse(false));
      if (v.items.back().kind == Value::Kind::array) fail("nested arrays are not supported");
      skip_ws();
      if (p_ >= t_.size()) fail("unterminated array");
      if (t_[p_] == ',') {
        ++p_;
        skip_ws();
        if (p_ < t_.size() && t_[p_] == ']') {
          ++p_;
          return v;
        }
        continue;
      }
      if (t_[p_] == ']') {
        ++p_;
        return v;
      }
      fail("expected ',' or ']' in array");
    }
  }

  Value parse_scalar(bool allow_bare) {
    const std::size_t start = p_;
    while (p_ < t_.size() && t_[p_] != ',' && t_[p_] != ']' && t_[p_] != '#' && t_[p_] != ' ' &&
           t_[p_] != '\t' && t_[p_] != '\r') {
      ++p_;
    }
    const std::string_view tok = t_.substr(start, p_ - start);
    Value v;
    if (tok == "true" || tok == "false") {
      v.kind = Value::Kind::boolean;
      v.b = tok == "true";
      return v;
    }
    std::string digits;
    for (char c : tok) {
      if (c != '_') digits += c;
    }
    if (!digits.empty()) {
      std::int64_t iv = 0;
      const char* first = digits.data() + (digits[0] == '+' ? 1 : 0);
      const char* last = digits.data() + digits.size();
      const auto [ptr, ec] = std::from_chars(first, last, iv);
      if (ec == std::errc() && ptr == last) {
        v.kind = Value::Kind::integer;
        v.i = iv;
        return v;
      }
      char* end = nullptr;
      errno = 0;
      const double dv = std::strtod(digits.c_str(), &end);
      if (end == digits.c_str() + digits.size() && errno == 0 && std::isfinite(dv)) {
        v.kind = Value::Kind::real;
        v.d = dv;
        return v;
      }
    }
    if (allow_bare && !tok.empty()) {
      v.kind = Value::Kind::string;
      v.s = std::string(tok);
      return v;
    }
    p_ = start;
    fail("invalid value '" + std::string(tok) + "'");
  }

  std::string_view t_;
  std::size_t p_ = 0;
};

[[noreturn]] void type_error(const std::string& key, const char* want) {
  throw ConfigError("config key '" + key + "' must be " + want);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::size_t to_size(const Value& v, const std::string& key) {
  const auto i = v.as_int(key);
  if (i < 0) throw ConfigError("config key '" + key + "' must be non-negative");
  return static_cast<std::size_t>(i);
}

}  // namespace

double Value::as_real(const std::string& key) const {
  if (kind == Kind::real) return d;
  if (kind == Kind::integer) return static_cast<double>(i);
  type_error(key, "a number");
}

std::int64_t Value::as_int(const std::string& key) const {
  if (kind == Kind::integer) return i;
  type_error(key, "an integer");
}

bool Value::as_bool(const std::string& key) const {
  if (kind == Kind::boolean) return b;
  type_error(key, "true or false");
}

const std::string& Value::as_string(const std::string& key) const {
  if (kind == Kind::string) return s;
  type_error(key, "a string");
}

std::vector<std::string> Value::as_strings(const std::string& key) const {
  if (kind == Kind::string) return {s};
  if (kind != Kind::array) type_error(key, "a string or an array of strings");
  std::vector<std::string> out;
  for (const auto& item : items) out.push_back(item.as_string(key));
  return out;
}

Table parse_toml(std::string_view text) {
  Table table;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string_view raw =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string where = "config line " + std::to_string(line_no) + ": ";
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    try {
      if (line.front() == '[') {
        const auto close = line.find(']');
        if (close == std::string_view::npos) throw ConfigError("unterminated section header");
        const auto rest = trim(line.substr(close + 1));
        if (!rest.empty() && rest.front() != '#') throw ConfigError("text after section header");
        const auto name = trim(line.substr(1, close - 1));
        if (!is_bare_key(name)) throw ConfigError("invalid section name");
        section = std::string(name);
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'");
      const auto key = trim(line.substr(0, eq));
      if (!is_bare_key(key)) throw ConfigError("invalid key '" + std::string(key) + "'");
      const std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
      Value v = ValueParser(line.substr(eq + 1)).parse_all(false);
      if (!table.emplace(full, std::move(v)).second) {
        throw ConfigError("duplicate key '" + full + "'");
      }
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  return table;
}

Value parse_value(std::string_view text) { return ValueParser(trim(text)).parse_all(true); }

void apply_override(Table& table, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("override '" + std::string(assignment) + "' is not of the form key=value");
  }
  const std::string key(trim(assignment.substr(0, eq)));
  if (key.empty()) throw ConfigError("override has an empty key");
  table[key] = parse_value(assignment.substr(eq + 1));
}

std::vector<double> SensingBlock::wavelengths_nm() const {
  return synthetic::wavelength_grid(band_lo_nm, band_hi_nm, band_step_nm);
}

ExperimentConfig from_table(const Table& table, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  std::set<std::string> used;
  auto get = [&](const std::string& key) -> const Value* {
    const auto it = table.find(key);
    if (it == table.end()) return nullptr;
    used.insert(key);
    return &it->second;
  };
  auto real = [&](const std::string& key, double& dst) {
    if (const Value* v = get(key)) dst = v->as_real(key);
  };
  auto size = [&](const std::string& key, std::size_t& dst) {
    if (const Value* v = get(key)) dst = to_size(*v, key);
  };
  auto text = [&](const std::string& key, const std::function<void(const std::string&)>& f) {
    if (const Value* v = get(key)) f(v->as_string(key));
  };
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };

  if (const Value* v = get("seed")) {
    const auto s = v->as_int("seed");
    if (s < 0) throw ConfigError("seed must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(s);
  }
  size("workers", cfg.workers);
  text("out", [&](const std::string& s) { cfg.out_dir = resolve(s); });
  text("output.dir", [&](const std::string& s) { cfg.out_dir = resolve(s); });

  auto& sc = cfg.optics.screen;
  auto& geo = cfg.optics.geometry;
  size("optics.screen_size", sc.size);
  real("optics.pitch_um", sc.pitch_um);
  real("optics.corr_len_um", sc.correlation_length_um);
  real("optics.refractive_delta", sc.refractive_delta);
  real("optics.rms_height_um", sc.rms_height_um);
  real("optics.distance_um", geo.distance_um);
  if (const Value* v = get("optics.magnification")) {
    const auto mag = v->as_int("optics.magnification");
    if (mag < 1) throw ConfigError("optics.magnification must be a positive integer");
    geo.magnification = static_cast<int>(mag);
  }
  if (const Value* v = get("optics.gamma")) {
    if (v->kind == Value::Kind::string && v->s == "none") {
      cfg.optics.gamma.reset();
    } else {
      cfg.optics.gamma = v->as_real("optics.gamma");
    }
  }

  auto& se = cfg.sensing;
  size("sensing.n", se.n);
  size("sensing.m", se.m);
  real("sensing.band_lo_nm", se.band_lo_nm);
  real("sensing.band_hi_nm", se.band_hi_nm);
  real("sensing.band_step_nm", se.band_step_nm);
  text("sensing.mode", [&](const std::string& s) {
    if (s == "auto") {
      se.automatic_mode = true;
    } else if (s == "dense" || s == "convolutional") {
      se.automatic_mode = false;
      se.mode = s == "dense" ? sensing::Mode::dense : sensing::Mode::convolutional;
    } else {
      throw ConfigError("sensing.mode must be auto, dense or convolutional");
    }
  });
  text("sensing.normalization",
       [&](const std::string& s) { se.normalization = sensing::column_norm_from_string(s); });
  text("sensing.noise", [&](const std::string& s) { se.noise.kind = sensing::noise_kind_from_string(s); });
  real("sensing.snr_db", se.noise.target_snr_db);

  auto& rc = cfg.recon;
  if (const Value* v = get("recon.algorithms")) {
    cfg.algorithms.clear();
    for (const auto& a : v->as_strings("recon.algorithms")) {
      cfg.algorithms.push_back(recon::algorithm_from_string(a));
    }
  }
  if (const Value* v = get("recon.max_iters")) rc.max_iters = static_cast<int>(v->as_int("recon.max_iters"));
  for (const char* key : {"recon.step", "recon.tau"}) {
    if (const Value* v = get(key)) {
      auto& dst = std::string_view(key) == "recon.step" ? rc.step : rc.tau;
      if (v->kind == Value::Kind::string && v->s == "auto") {
        dst.reset();
      } else {
        dst = v->as_real(key);
      }
    }
  }
  real("recon.tau_fraction", rc.tau_fraction);
  text("recon.tau_rule", [&](const std::string& s) { rc.tau_rule = recon::tau_rule_from_string(s); });
  real("recon.tau_noise_scale", rc.tau_noise_scale);
  real("recon.tol", rc.tol);
  text("recon.transform", [&](const std::string& s) { rc.transform = recon::transform_from_string(s); });
  if (const Value* v = get("recon.momentum")) rc.momentum = v->as_bool("recon.momentum");
  if (const Value* v = get("recon.restart")) rc.restart = v->as_bool("recon.restart");
  if (const Value* v = get("recon.power_iterations")) {
    rc.power_iterations = static_cast<int>(v->as_int("recon.power_iterations"));
  }
  if (const Value* v = get("recon.nonnegative")) rc.nonnegative = v->as_bool("recon.nonnegative");
  if (const Value* v = get("recon.debias")) rc.debias = v->as_bool("recon.debias");
  if (const Value* v = get("recon.debias_iterations")) {
    rc.debias_iterations = static_cast<int>(v->as_int("recon.debias_iterations"));
  }
  real("recon.mean_weight", rc.mean_weight);

  auto& ds = cfg.dataset;
  if (const Value* v = get("dataset.inputs")) {
    for (const auto& p : v->as_strings("dataset.inputs")) ds.inputs.push_back(resolve(p));
  }
  if (const Value* v = get("dataset.test_inputs")) {
    for (const auto& p : v->as_strings("dataset.test_inputs")) ds.test_inputs.push_back(resolve(p));
  }
  size("dataset.synthetic_count", ds.synthetic_count);
  size("dataset.synthetic_size", ds.synthetic_size);
  size("dataset.slice_size", ds.slice.size);
  ds.slice.stride = ds.slice.size;  // non-overlapping unless set
  size("dataset.slice_stride", ds.slice.stride);
  real("dataset.split_fraction", ds.split_fraction);

  for (const auto& [key, value] : table) {
    if (!used.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  return cfg;
}

ExperimentConfig load(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  return from_table(parse_toml(text), path.parent_path());
}

void ExperimentConfig::validate() const {
  const auto& sc = optics.screen;
  if (sc.size < 16) throw ConfigError("optics.screen_size must be at least 16");
  if (!(sc.pitch_um > 0.0)) throw ConfigError("optics.pitch_um must be positive");
  if (!(sc.correlation_length_um >= sc.pitch_um)) {
    throw ConfigError("optics.corr_len_um must be at least optics.pitch_um");
  }
  if (!(sc.rms_height_um > 0.0)) throw ConfigError("optics.rms_height_um must be positive");
  if (!(optics.geometry.distance_um >= 0.0)) throw ConfigError("optics.distance_um must be >= 0");
  if (optics.gamma && !(*optics.gamma > 0.0)) throw ConfigError("optics.gamma must be positive");
  if (sensing.n < 4) throw ConfigError("sensing.n must be at least 4");
  if (sensing.m < 1) throw ConfigError("sensing.m must be positive");
  if (!(sensing.band_step_nm > 0.0) || !(sensing.band_hi_nm >= sensing.band_lo_nm)) {
    throw ConfigError("sensing band range is empty or the step is not positive");
  }
  const std::size_t pattern =
      sensing::required_pattern_size(sensing.n, sensing.m, optics.geometry.magnification);
  if (pattern > sc.size) {
    throw ConfigError("optics.screen_size " + std::to_string(sc.size) + " is smaller than the " +
                      std::to_string(pattern) + " px calibration patterns this geometry needs");
  }
  if (workers < 1) throw ConfigError("workers must be at least 1");
  if (algorithms.empty()) throw ConfigError("recon.algorithms is empty");
  try {
    recon.validate();
  } catch (const InvalidParameter& e) {
    throw ConfigError(std::string("recon: ") + e.what());
  }
  if (dataset.slice.size == 0 || dataset.slice.stride == 0) {
    throw ConfigError("dataset slice size and stride must be positive");
  }
  if (dataset.slice.size != sensing.n) {
    throw ConfigError("dataset.slice_size (" + std::to_string(dataset.slice.size) +
                      ") must equal sensing.n (" + std::to_string(sensing.n) + ")");
  }
  if (!(dataset.split_fraction > 0.0 && dataset.split_fraction <= 1.0)) {
    throw ConfigError("dataset.split_fraction must be in (0, 1]");
  }
  if (dataset.inputs.empty() && dataset.synthetic_count == 0) {
    throw ConfigError("dataset needs inputs or a positive synthetic_count");
  }
  for (const auto* list : {&dataset.inputs, &dataset.test_inputs}) {
    for (const auto& p : *list) {
      if (!std::filesystem::exists(p)) throw ConfigError("dataset file not found: " + p.string());
    }
  }
}

std::string canonical_text(const ExperimentConfig& cfg) {
  std::string s = "gisc-config-v1\n";
  auto add = [&s](const std::string& key, const std::string& value) {
    s += key;
    s += '=';
    s += value;
    s += '\n';
  };
  const auto& sc = cfg.optics.screen;
  add("seed", std::to_string(cfg.seed));
  add("optics.screen_size", std::to_string(sc.size));
  add("optics.pitch_um", fmt(sc.pitch_um));
  add("optics.corr_len_um", fmt(sc.correlation_length_um));
  add("optics.refractive_delta", fmt(sc.refractive_delta));
  add("optics.rms_height_um", fmt(sc.rms_height_um));
  add("optics.distance_um", fmt(cfg.optics.geometry.distance_um));
  add("optics.magnification", std::to_string(cfg.optics.geometry.magnification));
  add("optics.gamma", cfg.optics.gamma ? fmt(*cfg.optics.gamma) : "none");
  const auto& se = cfg.sensing;
  add("sensing.n", std::to_string(se.n));
  add("sensing.m", std::to_string(se.m));
  add("sensing.band_lo_nm", fmt(se.band_lo_nm));
  add("sensing.band_hi_nm", fmt(se.band_hi_nm));
  add("sensing.band_step_nm", fmt(se.band_step_nm));
  add("sensing.mode", se.automatic_mode ? "auto" : sensing::to_string(se.mode));
  add("sensing.normalization", sensing::to_string(se.normalization));
  add("sensing.noise", sensing::to_string(se.noise.kind));
  add("sensing.snr_db", fmt(se.noise.target_snr_db));
  const auto& rc = cfg.recon;
  std::string algs;
  for (auto a : cfg.algorithms) algs += std::string(recon::to_string(a)) + ",";
  add("recon.algorithms", algs);
  add("recon.max_iters", std::to_string(rc.max_iters));
  add("recon.step", rc.step ? fmt(*rc.step) : "auto");
  add("recon.tau", rc.tau ? fmt(*rc.tau) : "auto");
  add("recon.tau_fraction", fmt(rc.tau_fraction));
  add("recon.tau_rule", recon::to_string(rc.tau_rule));
  add("recon.tau_noise_scale", fmt(rc.tau_noise_scale));
  add("recon.tol", fmt(rc.tol));
  add("recon.transform", recon::to_string(rc.transform));
  add("recon.momentum", rc.momentum ? "true" : "false");
  add("recon.restart", rc.restart ? "true" : "false");
  add("recon.power_iterations", std::to_string(rc.power_iterations));
  add("recon.nonnegative", rc.nonnegative ? "true" : "false");
  add("recon.debias", rc.debias ? "true" : "false");
  add("recon.debias_iterations", std::to_string(rc.debias_iterations));
  add("recon.mean_weight", fmt(rc.mean_weight));
  const auto& ds = cfg.dataset;
  std::string paths;
  for (const auto& p : ds.inputs) paths += p.generic_string() + ",";
  add("dataset.inputs", paths);
  paths.clear();
  for (const auto& p : ds.test_inputs) paths += p.generic_string() + ",";
  add("dataset.test_inputs", paths);
  add("dataset.synthetic_count", std::to_string(ds.synthetic_count));
  add("dataset.synthetic_size", std::to_string(ds.synthetic_size));
  add("dataset.slice_size", std::to_string(ds.slice.size));
  add("dataset.slice_stride", std::to_string(ds.slice.stride));
  add("dataset.split_fraction", fmt(ds.split_fraction));
  return s;
}

std::uint64_t config_hash(const ExperimentConfig& cfg) { return fnv1a64(canonical_text(cfg)); }

}  // namespace gisc::config
