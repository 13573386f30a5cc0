#include "molz/io.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include <json.hpp>

namespace molz {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw Error("ConfigError", msg); }

void only_keys(const json& j, const std::string& where, std::set<std::string> allowed) {
  if (!j.is_object()) fail(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) fail("unknown key '" + it.key() + "' in " + where);
}

double num(const json& j, const std::string& what) {
  if (!j.is_number()) fail(what + " must be a number");
  return j.get<double>();
}

int integer(const json& j, const std::string& what) {
  if (!j.is_number_integer()) fail(what + " must be an integer");
  return j.get<int>();
}

cplx complex_value(const json& j, const std::string& what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  fail(what + " must be a number or a [re, im] pair");
}

std::vector<double> numbers(const json& j, const std::string& what) {
  std::vector<double> v;
  if (j.is_number()) return {j.get<double>()};
  if (!j.is_array()) fail(what + " must be a number or an array of numbers");
  for (const auto& x : j) v.push_back(num(x, what));
  return v;
}

template <class T>
void get(const json& j, const char* key, T& dst, T (*conv)(const json&, const std::string&)) {
  if (j.contains(key)) dst = conv(j.at(key), key);
}

json complex_json(cplx z) {
  if (z.imag() == 0) return z.real();
  return json::array({z.real(), z.imag()});
}

json to_json(const RunConfig& c) {
  const ExperimentConfig& e = c.experiment;
  json j;
  j["model"] = {{"name", e.model}, {"params", json(e.params)}, {"delta", e.delta}};
  j["epsilon"] = c.eps_list.empty() ? json::array({e.eps}) : json(c.eps_list);
  j["packet"] = {{"A", complex_json(e.A)}, {"B", complex_json(e.B)}, {"a", e.a},     {"eta", e.eta},
                 {"m", e.m},              {"level", e.level},     {"target", e.target}};
  j["evolve"] = {{"t0", e.t0},
                 {"t1", e.t1},
                 {"x_min", e.x_min},
                 {"x_max", e.x_max},
                 {"N", e.N},
                 {"dt_factor", e.dt_factor},
                 {"precision", e.precision},
                 {"samples", e.samples},
                 {"snapshot_times", e.snapshot_times},
                 {"k_split", e.k_split},
                 {"x_split", std::isfinite(e.x_split) ? json(e.x_split) : json(nullptr)}};
  j["predict"] = {{"window", e.window_E2 > e.window_E1 ? json::array({e.window_E1, e.window_E2}) : json(nullptr)},
                  {"window_n", e.window_n},
                  {"cutoff_margin", e.cutoff_margin},
                  {"clip_tolerance", e.clip_tolerance}};
  j["smatrix"] = {{"energies", c.smatrix.energies},
                  {"L", c.smatrix.integration.L},
                  {"tol", c.smatrix.integration.tol}};
  j["contour"] = {{"energy", c.contour.energy}, {"panels", c.contour.panels}};
  return j;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
  only_keys(j, "config", {"model", "epsilon", "packet", "evolve", "predict", "smatrix", "contour"});
  RunConfig c;
  ExperimentConfig& e = c.experiment;

  if (!j.contains("model")) fail("missing 'model'");
  const json& m = j["model"];
  only_keys(m, "model", {"name", "params", "delta"});
  if (!m.contains("name") || !m["name"].is_string()) fail("missing model name");
  e.model = m["name"].get<std::string>();
  if (m.contains("params")) {
    if (!m["params"].is_object()) fail("model.params must be an object");
    for (auto it = m["params"].begin(); it != m["params"].end(); ++it)
      e.params[it.key()] = num(it.value(), "model.params." + it.key());
  }
  get(m, "delta", e.delta, num);

  if (j.contains("epsilon")) c.eps_list = numbers(j["epsilon"], "epsilon");

  if (j.contains("packet")) {
    const json& p = j["packet"];
    only_keys(p, "packet", {"A", "B", "a", "eta", "m", "level", "target"});
    get(p, "A", e.A, complex_value);
    get(p, "B", e.B, complex_value);
    get(p, "a", e.a, num);
    get(p, "eta", e.eta, num);
    get(p, "m", e.m, integer);
    get(p, "level", e.level, integer);
    get(p, "target", e.target, integer);
  }

  if (j.contains("evolve")) {
    const json& v = j["evolve"];
    only_keys(v, "evolve",
              {"t0", "t1", "x_min", "x_max", "N", "dt_factor", "precision", "samples", "snapshot_times", "k_split",
               "x_split"});
    get(v, "t0", e.t0, num);
    get(v, "t1", e.t1, num);
    get(v, "x_min", e.x_min, num);
    get(v, "x_max", e.x_max, num);
    get(v, "N", e.N, integer);
    get(v, "dt_factor", e.dt_factor, num);
    if (v.contains("precision")) {
      if (!v["precision"].is_string()) fail("evolve.precision must be a string");
      e.precision = v["precision"].get<std::string>();
    }
    get(v, "samples", e.samples, integer);
    if (v.contains("snapshot_times")) e.snapshot_times = numbers(v["snapshot_times"], "evolve.snapshot_times");
    get(v, "k_split", e.k_split, num);
    if (v.contains("x_split") && !v["x_split"].is_null()) e.x_split = num(v["x_split"], "evolve.x_split");
  }

  if (j.contains("predict")) {
    const json& p = j["predict"];
    only_keys(p, "predict", {"window", "window_n", "cutoff_margin", "clip_tolerance"});
    if (p.contains("window") && !p["window"].is_null()) {
      auto w = numbers(p["window"], "predict.window");
      if (w.size() != 2) fail("predict.window must be [E1, E2]");
      e.window_E1 = w[0];
      e.window_E2 = w[1];
      if (!(w[1] > w[0])) fail("predict.window must satisfy E1 < E2");
    }
    get(p, "window_n", e.window_n, integer);
    get(p, "cutoff_margin", e.cutoff_margin, num);
    get(p, "clip_tolerance", e.clip_tolerance, num);
  }

  if (j.contains("smatrix")) {
    const json& s = j["smatrix"];
    only_keys(s, "smatrix", {"energies", "L", "tol"});
    if (s.contains("energies")) c.smatrix.energies = numbers(s["energies"], "smatrix.energies");
    get(s, "L", c.smatrix.integration.L, num);
    get(s, "tol", c.smatrix.integration.tol, num);
  }

  if (j.contains("contour")) {
    const json& s = j["contour"];
    only_keys(s, "contour", {"energy", "panels"});
    get(s, "energy", c.contour.energy, num);
    get(s, "panels", c.contour.panels, integer);
  }
  validate(c);
  return c;
}

double mean_energy(const ExperimentConfig& e) {
  ElectronicModel model = make_model(e.model, e.params);
  return 0.5 * e.eta * e.eta + level_energy(model, e.level, -INFINITY, e.delta);
}

void validate(const RunConfig& c) {
  const ExperimentConfig& e = c.experiment;
  ElectronicModel model;
  try {
    model = make_model(e.model, e.params);
  } catch (const Error& err) {
    fail(err.what());
  }
  std::vector<double> eps = c.eps_list.empty() ? std::vector<double>{e.eps} : c.eps_list;
  for (double x : eps)
    if (!(x > 0 && x < 1)) fail("epsilon must lie in (0, 1)");
  if (!(e.eta > 0)) fail("packet.eta must be positive");
  if (std::abs((std::conj(e.A) * e.B).real() - 1.0) > 1e-10) fail("packet must satisfy Re(conj(A) B) = 1");
  if (e.m < 0 || e.m > 20) fail("packet.m must lie in [0, 20]");
  if (e.level < 1 || e.level > model.dim || e.target < 1 || e.target > model.dim || e.level == e.target)
    fail("packet.level and packet.target must be distinct levels of the model");
  if (!(e.t1 >= e.t0)) fail("evolve.t1 must not precede evolve.t0");
  if (!(e.x_max > e.x_min)) fail("evolve.x_max must exceed evolve.x_min");
  if (e.N != 0 && (e.N < 16 || (e.N & (e.N - 1)) != 0)) fail("evolve.N must be 0 or a power of two >= 16");
  if (!(e.dt_factor >= 0)) fail("evolve.dt_factor must be non-negative");
  if (e.precision != "auto" && e.precision != "double" && e.precision != "dd")
    fail("evolve.precision must be auto, double or dd");
  if (e.samples < 2) fail("evolve.samples must be at least 2");
  if (e.k_split < 0) fail("evolve.k_split must be non-negative");
  if (e.window_n < 16) fail("predict.window_n must be at least 16");
  if (!(e.cutoff_margin > 0)) fail("predict.cutoff_margin must be positive");
  if (e.window_E2 > e.window_E1) {
    EnergyWindow w{e.window_E1, e.window_E2, e.window_n};
    if (window_clearance(model, w, e.delta) <= 0) fail("predict.window must lie above the spectrum");
  }
  if (model.has_limits() && mean_energy(e) <= level_energy(model, e.target, INFINITY, e.delta))
    fail("packet energy lies below the target level at +infinity");
  if (!(c.smatrix.integration.L > 0) || !(c.smatrix.integration.tol > 0)) fail("smatrix.L and smatrix.tol must be positive");
  if (c.contour.panels < 1) fail("contour.panels must be positive");
}

std::string config_json(const RunConfig& cfg, int indent) { return to_json(cfg).dump(indent); }

std::uint64_t config_hash(const RunConfig& cfg) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : config_json(cfg, -1)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path), width_(header.size()) {
  if (!out_) throw Error("IoError", "cannot write " + path);
  for (size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
  out_ << '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != width_) throw Error("IoError", "CSV row width does not match the header");
  for (size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << fmt17(values[i]);
  out_ << '\n';
}

}  // namespace molz
