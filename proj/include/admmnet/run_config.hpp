#pragma once

// Run configuration: a JSON document validated against a fixed schema.
//
// {
//   "net":   "basic" | "generic" | "complex",
//   "init":  "model" | "random",
//   "seed":  integer >= 0,
//   "threads": integer >= 1,
//   "arch":  { "filters", "filter_size", "fusion_size", "stages", "sub_iterations", "controls" },
//   "init_params": { "rho" > 0, "lambda" >= 0, "step" > 0 },
//   "data":  { "n", "sampling_rate", "noise_sigma_min", "noise_sigma_max",
//              "train", "val", "test", "phase" },
//   "train": { "max_iterations", "history", "sufficient_decrease", "curvature",
//              "grad_tolerance", "record_every" },
//   "paths": { "out_dir", "train_data", "val_data", "test_data", "params", "metrics" }
// }
//
// Every section and field is optional; missing values come from the selected profile.
// Unknown fields and wrong types are errors naming the JSON path.

#include <cstdint>
#include <fstream>
#include <string>

#include <json.hpp>

#include "admmnet/errors.hpp"
#include "admmnet/lbfgs.hpp"

namespace admmnet {

struct ArchConfig {
  int filters = 8;
  int filter_size = 3;
  int fusion_size = 3;
  int stages = 3;
  int sub_iterations = 1;
  int controls = 101;
};

struct InitConfig {
  double rho = 0.5;
  double lambda = 0.05;  // threshold lambda / rho = 0.1
  double step = 0.1;
};

struct DataConfig {
  int n = 32;
  double sampling_rate = 0.2;
  double noise_sigma_min = 0.0;
  double noise_sigma_max = 0.0;
  int train = 20;
  int val = 5;
  int test = 10;
  bool phase = false;
};

struct PathConfig {
  std::string out_dir = "run";
  std::string train_data;  // empty: <out_dir>/train.admm
  std::string val_data;
  std::string test_data;
  std::string params;
  std::string metrics;

  std::string resolve(const std::string& v, const char* file) const { return v.empty() ? out_dir + "/" + file : v; }
  std::string train_path() const { return resolve(train_data, "train.admm"); }
  std::string val_path() const { return resolve(val_data, "val.admm"); }
  std::string test_path() const { return resolve(test_data, "test.admm"); }
  std::string params_path() const { return resolve(params, "params.admm"); }
  std::string metrics_path() const { return resolve(metrics, "metrics.csv"); }
};

enum class NetKind { basic, generic, complex };
enum class InitMode { model, random };

struct RunConfig {
  NetKind net = NetKind::generic;
  InitMode init = InitMode::model;
  std::uint64_t seed = 1;
  int threads = 1;
  ArchConfig arch;
  InitConfig init_params;
  DataConfig data;
  TrainConfig train;
  PathConfig paths;
};

inline const char* to_string(NetKind k) {
  switch (k) {
    case NetKind::basic: return "basic";
    case NetKind::generic: return "generic";
    case NetKind::complex: return "complex";
  }
  return "?";
}

inline const char* to_string(InitMode m) { return m == InitMode::model ? "model" : "random"; }

/// Named presets. "desk" is the default: 32x32, L = 8, w_f = 3, N_s = 3.
inline RunConfig profile(const std::string& name) {
  RunConfig c;
  if (name == "desk") return c;
  if (name == "tiny") {
    c.arch = {2, 3, 3, 2, 2, 11};
    c.init_params = {1.0, 0.2, 0.1};
    c.data = {8, 0.45, 0.0, 0.0, 4, 2, 2, false};
    c.train.max_iterations = 20;
    return c;
  }
  if (name == "paper") {
    // Architecture knobs of the large experiments. Model-based init supports at most
    // w_f^2 - 1 filters, so this profile starts from random filters.
    c.arch = {128, 5, 5, 10, 1, 101};
    c.init = InitMode::random;
    c.data = {256, 0.2, 0.0, 0.0, 100, 0, 50, false};
    c.train.max_iterations = 200;
    return c;
  }
  throw ConfigError("$.profile", "unknown profile '" + name + "' (expected tiny, desk or paper)");
}

namespace detail {

using nlohmann::json;

class ConfigReader {
 public:
  ConfigReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  void allow(std::initializer_list<const char*> keys) const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      bool ok = false;
      for (const char* k : keys) ok = ok || it.key() == k;
      if (!ok) throw ConfigError(path_ + "." + it.key(), "unknown field");
    }
  }

  void integer(const char* key, int& out, int lo, int hi = 1 << 30) const {
    if (!j_.contains(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(at(key), "expected an integer");
    const auto x = v.get<std::int64_t>();
    if (x < lo || x > hi)
      throw ConfigError(at(key), "value " + std::to_string(x) + " outside [" + std::to_string(lo) + ", " +
                                     std::to_string(hi) + "]");
    out = static_cast<int>(x);
  }

  void u64(const char* key, std::uint64_t& out) const {
    if (!j_.contains(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) throw ConfigError(at(key), "expected a nonnegative integer");
    out = v.get<std::uint64_t>();
  }

  // open == true excludes the bound itself
  void number(const char* key, double& out, double lo, double hi, bool lo_open = false, bool hi_open = false) const {
    if (!j_.contains(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(at(key), "expected a number");
    const double x = v.get<double>();
    const bool ok = (lo_open ? x > lo : x >= lo) && (hi_open ? x < hi : x <= hi);
    if (!ok) throw ConfigError(at(key), "value " + std::to_string(x) + " out of range");
    out = x;
  }

  void boolean(const char* key, bool& out) const {
    if (!j_.contains(key)) return;
    if (!j_.at(key).is_boolean()) throw ConfigError(at(key), "expected true or false");
    out = j_.at(key).get<bool>();
  }

  void string(const char* key, std::string& out) const {
    if (!j_.contains(key)) return;
    if (!j_.at(key).is_string()) throw ConfigError(at(key), "expected a string");
    out = j_.at(key).get<std::string>();
  }

  template <typename F>
  void section(const char* key, F&& f) const {
    if (!j_.contains(key)) return;
    f(ConfigReader(j_.at(key), at(key)));
  }

  std::string at(const char* key) const { return path_ + "." + key; }

 private:
  const json& j_;
  std::string path_;
};

}  // namespace detail

/// Applies a JSON document on top of `base`; throws ConfigError naming the first bad path.
inline RunConfig apply_config(RunConfig c, const nlohmann::json& j) {
  const detail::ConfigReader r(j, "$");
  r.allow({"net", "init", "seed", "threads", "arch", "init_params", "data", "train", "paths", "profile"});
  std::string s;
  if (j.contains("net")) {
    r.string("net", s);
    if (s == "basic") c.net = NetKind::basic;
    else if (s == "generic") c.net = NetKind::generic;
    else if (s == "complex") c.net = NetKind::complex;
    else throw ConfigError("$.net", "expected basic, generic or complex, got '" + s + "'");
  }
  if (j.contains("init")) {
    r.string("init", s);
    if (s == "model") c.init = InitMode::model;
    else if (s == "random") c.init = InitMode::random;
    else throw ConfigError("$.init", "expected model or random, got '" + s + "'");
  }
  r.u64("seed", c.seed);
  r.integer("threads", c.threads, 1, 1024);
  r.section("arch", [&](const detail::ConfigReader& a) {
    a.allow({"filters", "filter_size", "fusion_size", "stages", "sub_iterations", "controls"});
    a.integer("filters", c.arch.filters, 1, 4096);
    a.integer("filter_size", c.arch.filter_size, 1, 63);
    a.integer("fusion_size", c.arch.fusion_size, 1, 63);
    a.integer("stages", c.arch.stages, 1, 1000);
    a.integer("sub_iterations", c.arch.sub_iterations, 1, 1000);
    a.integer("controls", c.arch.controls, 3, 100001);
    if (c.arch.filter_size % 2 == 0) throw ConfigError("$.arch.filter_size", "must be odd");
    if (c.arch.fusion_size % 2 == 0) throw ConfigError("$.arch.fusion_size", "must be odd");
    if (c.arch.controls % 2 == 0) throw ConfigError("$.arch.controls", "must be odd so that 0 is a knot");
  });
  r.section("init_params", [&](const detail::ConfigReader& a) {
    a.allow({"rho", "lambda", "step"});
    a.number("rho", c.init_params.rho, 0.0, 1e12, true);
    a.number("lambda", c.init_params.lambda, 0.0, 1e12);
    a.number("step", c.init_params.step, 0.0, 1e12, true);
  });
  r.section("data", [&](const detail::ConfigReader& a) {
    a.allow({"n", "sampling_rate", "noise_sigma_min", "noise_sigma_max", "train", "val", "test", "phase"});
    a.integer("n", c.data.n, 8, 8192);
    a.number("sampling_rate", c.data.sampling_rate, 0.01, 1.0, true);
    a.number("noise_sigma_min", c.data.noise_sigma_min, 0.0, 1e6);
    a.number("noise_sigma_max", c.data.noise_sigma_max, 0.0, 1e6);
    a.integer("train", c.data.train, 0, 1000000);
    a.integer("val", c.data.val, 0, 1000000);
    a.integer("test", c.data.test, 0, 1000000);
    a.boolean("phase", c.data.phase);
  });
  if (c.data.noise_sigma_max < c.data.noise_sigma_min)
    throw ConfigError("$.data.noise_sigma_max", "must be >= noise_sigma_min");
  r.section("train", [&](const detail::ConfigReader& a) {
    a.allow({"max_iterations", "history", "sufficient_decrease", "curvature", "grad_tolerance", "record_every"});
    a.integer("max_iterations", c.train.max_iterations, 0, 100000000);
    a.integer("history", c.train.history, 1, 100000);
    a.number("sufficient_decrease", c.train.sufficient_decrease, 0.0, 1.0, true, true);
    a.number("curvature", c.train.curvature, 0.0, 1.0, true, true);
    a.number("grad_tolerance", c.train.grad_tolerance, 0.0, 1e12);
    a.integer("record_every", c.train.record_every, 1, 100000000);
  });
  if (!(c.train.sufficient_decrease < c.train.curvature))
    throw ConfigError("$.train.sufficient_decrease", "must be smaller than curvature");
  r.section("paths", [&](const detail::ConfigReader& a) {
    a.allow({"out_dir", "train_data", "val_data", "test_data", "params", "metrics"});
    a.string("out_dir", c.paths.out_dir);
    a.string("train_data", c.paths.train_data);
    a.string("val_data", c.paths.val_data);
    a.string("test_data", c.paths.test_data);
    a.string("params", c.paths.params);
    a.string("metrics", c.paths.metrics);
  });
  if (c.arch.filter_size > c.data.n) throw ConfigError("$.arch.filter_size", "larger than the image size");
  if (c.arch.fusion_size > c.data.n) throw ConfigError("$.arch.fusion_size", "larger than the image size");
  return c;
}

/// Profile named by the document's "profile" field (default "desk"), then the document.
inline RunConfig parse_config(const nlohmann::json& j, const std::string& default_profile = "desk") {
  std::string name = default_profile;
  if (j.is_object() && j.contains("profile")) {
    if (!j.at("profile").is_string()) throw ConfigError("$.profile", "expected a string");
    name = j.at("profile").get<std::string>();
  }
  return apply_config(profile(name), j);
}

inline nlohmann::json load_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("$", "cannot open config file '" + path + "'");
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("$", std::string("invalid JSON in '") + path + "': " + e.what());
  }
}

inline nlohmann::json to_json(const RunConfig& c) {
  return {
      {"net", to_string(c.net)},
      {"init", to_string(c.init)},
      {"seed", c.seed},
      {"threads", c.threads},
      {"arch",
       {{"filters", c.arch.filters},
        {"filter_size", c.arch.filter_size},
        {"fusion_size", c.arch.fusion_size},
        {"stages", c.arch.stages},
        {"sub_iterations", c.arch.sub_iterations},
        {"controls", c.arch.controls}}},
      {"init_params", {{"rho", c.init_params.rho}, {"lambda", c.init_params.lambda}, {"step", c.init_params.step}}},
      {"data",
       {{"n", c.data.n},
        {"sampling_rate", c.data.sampling_rate},
        {"noise_sigma_min", c.data.noise_sigma_min},
        {"noise_sigma_max", c.data.noise_sigma_max},
        {"train", c.data.train},
        {"val", c.data.val},
        {"test", c.data.test},
        {"phase", c.data.phase}}},
      {"train",
       {{"max_iterations", c.train.max_iterations},
        {"history", c.train.history},
        {"sufficient_decrease", c.train.sufficient_decrease},
        {"curvature", c.train.curvature},
        {"grad_tolerance", c.train.grad_tolerance},
        {"record_every", c.train.record_every}}},
      {"paths",
       {{"out_dir", c.paths.out_dir},
        {"train_data", c.paths.train_data},
        {"val_data", c.paths.val_data},
        {"test_data", c.paths.test_data},
        {"params", c.paths.params},
        {"metrics", c.paths.metrics}}},
  };
}

}  // namespace admmnet
