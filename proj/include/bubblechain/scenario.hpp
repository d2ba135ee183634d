#pragma once

// Scenario configuration and runners behind the command-line tool.
//
// A config is a JSON document. Every run writes its outputs plus a
// metadata.json that is itself a valid config for re-running.

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "bubblechain/compiler.hpp"
#include "bubblechain/effective.hpp"
#include "bubblechain/errors.hpp"
#include "bubblechain/evolution.hpp"
#include "bubblechain/model.hpp"

namespace bubblechain {

using json = nlohmann::ordered_json;

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {"fluctuations",   "breaking",          "resonance-scan",
                                                 "gatecount",      "effective-compare", "full-populations"};
  return names;
}

struct StateTerm {
  std::string label;
  complex weight;
};

struct GridSpec {
  std::vector<double> values;
  json source;  // as written in the config
};

struct ScenarioConfig {
  std::string scenario;
  ModelParams params;
  json coupling_map = json::object();  // alias -> canonical name, echoed for provenance
  json params_source = json::object();
  int n_steps = 2;
  std::optional<PairForm> pair_form;
  std::string initial_preset;          // empty when explicit terms are given
  std::vector<StateTerm> initial_terms;
  GridSpec time_grid;
  std::string time_unit = "t";  // "t" or "xt"
  std::string mode = "exact";   // resonance-scan: "exact" or "trotter"
  GridSpec scan_grid;           // values of g_par2 / g_perp2
  long long shots = 0;
  std::uint64_t seed = 1;
  double noise_p = 0.0;
  std::string output_dir = "out";
  std::vector<std::pair<std::string, std::string>> aggregate;
  LoweringOptions lowering;
  json compiler_source = json::object();

  // Evolution times in units of 1/energy.
  std::vector<double> times() const {
    if (time_unit == "t") return time_grid.values;
    std::vector<double> out;
    for (double v : time_grid.values) out.push_back(v / std::abs(params.x));
    return out;
  }
};

namespace detail {

inline GridSpec parse_grid(const json& j, const std::string& what) {
  GridSpec g;
  g.source = j;
  if (j.is_array()) {
    for (const auto& v : j) {
      if (!v.is_number()) throw ConfigError(what + " entries must be numbers");
      g.values.push_back(v.get<double>());
    }
  } else if (j.is_object()) {
    for (const char* k : {"start", "stop", "count"}) {
      if (!j.contains(k)) throw ConfigError(what + " needs '" + k + "'");
    }
    const double a = j.at("start").get<double>();
    const double b = j.at("stop").get<double>();
    const int n = j.at("count").get<int>();
    if (n < 1) throw ConfigError(what + ".count must be >= 1");
    for (int i = 0; i < n; ++i) g.values.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
  } else {
    throw ConfigError(what + " must be an array or {start, stop, count}");
  }
  if (g.values.empty()) throw ConfigError(what + " is empty");
  return g;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace detail

// Canonical coupling keys are x, g_par2, g_perp2. Other names (for example
// g_h2, g_v2) are accepted only together with an explicit coupling_map.
inline ScenarioConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ScenarioConfig c;
  c.scenario = detail::get_or<std::string>(j, "scenario", "");
  if (std::find(scenario_names().begin(), scenario_names().end(), c.scenario) == scenario_names().end()) {
    throw ConfigError("unknown scenario '" + c.scenario + "'");
  }
  if (!j.contains("params") || !j.at("params").is_object()) throw ConfigError("missing 'params' section");
  const json& p = j.at("params");
  c.params_source = p;
  c.coupling_map = j.value("coupling_map", json::object());
  for (const auto& [key, value] : p.items()) {
    std::string name = key;
    if (c.coupling_map.contains(key)) name = c.coupling_map.at(key).get<std::string>();
    if (name == "sector") {
      c.params.sector = sector_from_string(value.get<std::string>());
    } else if (name == "n_plaquettes") {
      c.params.n_plaquettes = value.get<int>();
    } else if (name == "x" || name == "g_par2" || name == "g_perp2") {
      if (!value.is_number()) throw ConfigError("params." + key + " must be a number");
      (name == "x" ? c.params.x : name == "g_par2" ? c.params.g_par2 : c.params.g_perp2) = value.get<double>();
    } else {
      throw ConfigError("unknown parameter '" + key + "'" +
                        (c.coupling_map.empty() ? " (non-canonical names need a coupling_map)" : ""));
    }
  }
  try {
    c.params.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }

  const json plan = j.value("plan", json::object());
  c.n_steps = detail::get_or<int>(plan, "n_steps", 2);
  if (c.n_steps < 1) throw ConfigError("plan.n_steps must be >= 1");
  if (plan.contains("pair_form")) {
    const auto f = plan.at("pair_form").get<std::string>();
    if (f == "original") {
      c.pair_form = PairForm::Original;
    } else if (f == "simplified") {
      if (c.params.sector == Sector::Half) throw ConfigError("pair_form 'simplified' needs sector one");
      c.pair_form = PairForm::Simplified;
    } else {
      throw ConfigError("plan.pair_form must be 'original' or 'simplified'");
    }
  }

  if (j.contains("initial_state")) {
    const json& s = j.at("initial_state");
    if (s.is_string()) {
      c.initial_preset = s.get<std::string>();
    } else if (s.is_object() && s.contains("terms")) {
      for (const auto& t : s.at("terms")) {
        c.initial_terms.push_back(
            {t.at("state").get<std::string>(), complex(t.value("re", 0.0), t.value("im", 0.0))});
      }
      if (c.initial_terms.empty()) throw ConfigError("initial_state.terms is empty");
    } else {
      throw ConfigError("initial_state must be a preset name or {terms: [...]}");
    }
  }

  if (j.contains("time_grid")) c.time_grid = detail::parse_grid(j.at("time_grid"), "time_grid");
  c.time_unit = detail::get_or<std::string>(j, "time_unit", "t");
  if (c.time_unit != "t" && c.time_unit != "xt") throw ConfigError("time_unit must be 't' or 'xt'");
  if (c.time_unit == "xt" && c.params.x == 0.0) throw ConfigError("time_unit 'xt' needs x != 0");
  c.mode = detail::get_or<std::string>(j, "mode", "exact");
  if (c.mode != "exact" && c.mode != "trotter") throw ConfigError("mode must be 'exact' or 'trotter'");
  if (j.contains("scan_grid")) c.scan_grid = detail::parse_grid(j.at("scan_grid"), "scan_grid");
  for (double r : c.scan_grid.values) {
    if (!(r > 0.0)) throw ConfigError("scan_grid ratios must be > 0");
  }
  c.shots = detail::get_or<long long>(j, "shots", 0);
  if (c.shots < 0) throw ConfigError("shots must be >= 0");
  c.seed = detail::get_or<std::uint64_t>(j, "seed", 1);
  c.noise_p = detail::get_or<double>(j, "noise_p", 0.0);
  if (c.noise_p < 0.0 || c.noise_p > 1.0) throw ConfigError("noise_p must lie in [0, 1]");
  c.output_dir = detail::get_or<std::string>(j, "output_dir", "out");
  if (j.contains("aggregate")) {
    for (const auto& pr : j.at("aggregate")) {
      if (!pr.is_array() || pr.size() != 2) throw ConfigError("aggregate entries must be [label, label]");
      c.aggregate.emplace_back(pr[0].get<std::string>(), pr[1].get<std::string>());
    }
  }
  if (j.contains("compiler")) {
    const json& o = j.at("compiler");
    c.compiler_source = o;
    c.lowering.physicality = physicality_from_string(detail::get_or<std::string>(o, "physicality", "bulk"));
    c.lowering.elide = detail::get_or<bool>(o, "elide", true);
    c.lowering.merge = detail::get_or<bool>(o, "merge", true);
    c.lowering.absorb_local = detail::get_or<bool>(o, "absorb_local", true);
    c.lowering.drop_constant = detail::get_or<bool>(o, "drop_constant", true);
    c.lowering.max_angle = detail::get_or<double>(o, "max_angle", std::numbers::pi / 2.0);
    if (!(c.lowering.max_angle > 0.0)) throw ConfigError("compiler.max_angle must be > 0");
  }
  c.lowering.form = c.pair_form;

  // Scenario-specific requirements.
  const bool needs_times = c.scenario != "gatecount";
  if (needs_times && c.time_grid.values.empty()) throw ConfigError("scenario '" + c.scenario + "' needs a time_grid");
  if (c.scenario == "resonance-scan" && c.scan_grid.values.empty()) throw ConfigError("resonance-scan needs a scan_grid");
  if ((c.scenario == "fluctuations" || c.scenario == "effective-compare") && c.params.sector != Sector::Half) {
    throw ConfigError("scenario '" + c.scenario + "' needs sector half");
  }
  if ((c.scenario == "breaking" || c.scenario == "resonance-scan") && c.params.sector != Sector::One) {
    throw ConfigError("scenario '" + c.scenario + "' needs sector one");
  }
  return c;
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

// Re-emits the config in canonical form (the metadata sidecar body).
inline json config_to_json(const ScenarioConfig& c) {
  json j;
  j["scenario"] = c.scenario;
  j["params"] = c.params_source;
  if (!c.coupling_map.empty()) j["coupling_map"] = c.coupling_map;
  j["plan"] = {{"n_steps", c.n_steps}};
  if (c.pair_form) j["plan"]["pair_form"] = *c.pair_form == PairForm::Original ? "original" : "simplified";
  if (!c.initial_preset.empty()) {
    j["initial_state"] = c.initial_preset;
  } else if (!c.initial_terms.empty()) {
    json terms = json::array();
    for (const auto& t : c.initial_terms) terms.push_back({{"state", t.label}, {"re", t.weight.real()}, {"im", t.weight.imag()}});
    j["initial_state"] = {{"terms", terms}};
  }
  if (!c.time_grid.values.empty()) j["time_grid"] = c.time_grid.source;
  j["time_unit"] = c.time_unit;
  j["mode"] = c.mode;
  if (!c.scan_grid.values.empty()) j["scan_grid"] = c.scan_grid.source;
  j["shots"] = c.shots;
  j["seed"] = c.seed;
  j["noise_p"] = c.noise_p;
  j["output_dir"] = c.output_dir;
  if (!c.aggregate.empty()) {
    json a = json::array();
    for (const auto& [x, y] : c.aggregate) a.push_back({x, y});
    j["aggregate"] = a;
  }
  if (!c.compiler_source.empty()) j["compiler"] = c.compiler_source;
  return j;
}

// ---------------------------------------------------------------------------
// Initial states

inline StateVector resolve_initial_state(const ScenarioConfig& c, const ModelParams& params) {
  const auto reg = params.reg();
  if (!c.initial_terms.empty()) {
    std::vector<std::pair<BasisState, complex>> terms;
    for (const auto& t : c.initial_terms) terms.emplace_back(BasisState::from_label(t.label), t.weight);
    try {
      return StateVector::superposition(reg, terms);
    } catch (const InvalidState& e) {
      throw ConfigError(e.what());
    }
  }
  const std::string& p = c.initial_preset;
  if (p.empty()) throw ConfigError("initial_state is required for scenario '" + c.scenario + "'");
  const auto strings = identify_string_states(params);
  if (p == "S_HALF" || p == "S_ONE") {
    if ((p == "S_HALF") != (params.sector == Sector::Half)) throw ConfigError("preset " + p + " does not match the sector");
    return StateVector::basis(reg, strings.straight);
  }
  if (p == "B") {
    if (!strings.broken) throw ConfigError("preset B needs sector one");
    return StateVector::basis(reg, *strings.broken);
  }
  if (p == "PLUS" || p == "MINUS") {
    const double s = p == "PLUS" ? 1.0 : -1.0;
    if (params.sector == Sector::Half) {
      if (params.n_plaquettes != 3) throw ConfigError("PLUS/MINUS in sector half are defined for three plaquettes");
      const auto map = derive_effective_mapping(params);
      return map.full_state(reg, s > 0 ? effective_plus() : effective_minus());
    }
    const auto& [lo, hi] = *strings.dressed;
    return StateVector::superposition(reg, {{lo, 1.0}, {hi, s}});
  }
  throw ConfigError("unknown initial_state preset '" + p + "'");
}

// ---------------------------------------------------------------------------
// Output helpers

struct RunResult {
  std::vector<std::string> files;  // paths relative to output_dir
  json summary = json::object();
};

inline void write_text(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << body;
}

inline std::string csv_string(const TimeSeries& ts) {
  std::ostringstream os;
  write_csv(os, ts);
  return os.str();
}

inline void emit_series(const std::filesystem::path& dir, const std::string& name, const TimeSeries& ts, RunResult& r) {
  write_text(dir / name, csv_string(ts));
  r.files.push_back(name);
}

// ---------------------------------------------------------------------------
// Scenarios

inline RunResult run_fluctuations(const ScenarioConfig& c, const std::filesystem::path& dir) {
  RunResult r;
  const auto params = c.params;
  const auto psi0 = resolve_initial_state(c, params);
  const auto times = c.times();
  const auto map = derive_effective_mapping(params);
  const auto exact = evolve_exact(params, psi0, times, c.pair_form.value_or(PairForm::Original));
  const auto trot = evolve_trotter_grid(params, psi0, times, c.n_steps, c.pair_form.value_or(PairForm::Original));
  TimeSeries out;
  out.reg = exact.reg;
  out.times = times;
  for (const auto& s : map.states) out.add_column("exact_" + s.label(), exact.population_of(s));
  for (const auto& s : map.states) out.add_column("trotter_" + s.label(), trot.population_of(s));
  const bool preset_pm = c.initial_preset == "PLUS" || c.initial_preset == "MINUS";
  if (preset_pm) {
    std::array<std::vector<double>, 6> cols;
    for (double t : times) {
      const auto a = c.initial_preset == "PLUS" ? analytic_populations_plus(t, params.x)
                                                : std::array<double, 6>{0, 0, 0.5, 0.5, 0, 0};
      for (std::size_t k = 0; k < 6; ++k) cols[k].push_back(a[k]);
    }
    for (std::size_t k = 0; k < 6; ++k) out.add_column("analytic_" + map.states[k].label(), cols[k]);
  }
  emit_series(dir, "fluctuations.csv", out, r);
  double dev = 0.0;
  for (const auto& s : map.states) {
    const auto e = exact.population_of(s);
    const auto t = trot.population_of(s);
    for (std::size_t i = 0; i < e.size(); ++i) dev = std::max(dev, std::abs(e[i] - t[i]));
  }
  r.summary["max_trotter_vs_exact"] = dev;
  json mapping = json::array();
  for (std::size_t k = 0; k < 6; ++k) mapping.push_back({{"label", k}, {"state", map.states[k].label()}, {"sign", map.signs[k]}});
  r.summary["effective_mapping"] = mapping;
  return r;
}

inline RunResult run_breaking(const ScenarioConfig& c, const std::filesystem::path& dir) {
  RunResult r;
  const auto params = c.params;
  const auto strings = identify_string_states(params);
  const auto psi0 = resolve_initial_state(c, params);
  const auto times = c.times();
  const auto form = c.pair_form.value_or(default_pair_form(params.sector));
  const auto exact = evolve_exact(params, psi0, times, form);
  const auto trot = evolve_trotter_grid(params, psi0, times, c.n_steps, form);
  TimeSeries out;
  out.reg = exact.reg;
  out.times = times;
  out.add_column("exact_B", broken_string_population(exact, *strings.broken));
  out.add_column("trotter_B", broken_string_population(trot, *strings.broken));
  emit_series(dir, "breaking.csv", out, r);
  TimeSeries pops = exact;
  add_population_columns(pops);
  if (!c.aggregate.empty()) pops = aggregate_symmetric(pops, c.aggregate);
  emit_series(dir, "populations_exact.csv", pops, r);
  const auto& pb = out.observables.at("exact_B");
  r.summary["max_exact_B"] = *std::max_element(pb.begin(), pb.end());
  const auto& tb = out.observables.at("trotter_B");
  r.summary["max_trotter_B"] = *std::max_element(tb.begin(), tb.end());
  r.summary["states"] = {{"S", strings.straight.label()},
                         {"B", strings.broken->label()},
                         {"dressed", {strings.dressed->first.label(), strings.dressed->second.label()}}};
  return r;
}

inline std::string ratio_label(double r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << r;
  return os.str();
}

inline RunResult run_resonance_scan(const ScenarioConfig& c, const std::filesystem::path& dir, int jobs) {
  RunResult r;
  const auto times = c.times();
  const auto& ratios = c.scan_grid.values;
  std::vector<std::vector<double>> pb(ratios.size());
  std::optional<BasisState> broken;
  {
    const auto strings = identify_string_states(c.params);
    broken = strings.broken;
  }
  parallel_for(ratios.size(), jobs > 0 ? jobs : default_jobs(ratios.size()), [&](std::size_t i) {
    ModelParams p = c.params;
    p.g_perp2 = p.g_par2 / ratios[i];
    const auto psi0 = resolve_initial_state(c, p);
    const auto form = c.pair_form.value_or(default_pair_form(p.sector));
    if (c.mode == "trotter") {
      pb[i] = broken_string_population(evolve_trotter_grid(p, psi0, times, c.n_steps, form), *broken);
    } else {
      ExactPropagator prop(p, form);
      pb[i] = prop.population_series(psi0, p.reg().encode(*broken), times);
    }
  });
  std::filesystem::create_directories(dir / "scan");
  std::vector<double> raw;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    TimeSeries ts;
    ts.times = times;
    ts.add_column("B", pb[i]);
    emit_series(dir, "scan/ratio_" + ratio_label(ratios[i]) + ".csv", ts, r);
    raw.push_back(trapezoid(times, pb[i]));
  }
  const auto profile = ratios.size() == 1 ? std::vector<double>{1.0} : normalize_profile(raw);
  std::ostringstream os;
  os << "ratio,integrated,profile\n";
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    os << format_double(ratios[i]) << ',' << format_double(raw[i]) << ',' << format_double(profile[i]) << '\n';
  }
  write_text(dir / "profile.csv", os.str());
  r.files.push_back("profile.csv");
  const auto peak = std::max_element(profile.begin(), profile.end()) - profile.begin();
  r.summary["peak_ratio"] = ratios[static_cast<std::size_t>(peak)];
  return r;
}

inline RunResult run_gatecount(const ScenarioConfig& c, const std::filesystem::path& dir) {
  RunResult r;
  const auto params = c.params;
  const auto strings = identify_string_states(params);
  const auto subspace = physical_subspace(params, {strings.straight});
  const double t = c.time_grid.values.empty() ? 1.0 : c.times().back();
  const TrotterPlan plan{t, c.n_steps};
  auto rep = gate_count_report(params, plan, subspace, c.lowering);
  const auto seq = compile_trotter_circuit(params, plan, subspace, c.lowering);
  const auto cmp = compare_on_physical(seq, params, plan, subspace, c.lowering.pair_form(params.sector));
  rep.details["t_total"] = t;
  rep.details["max_deviation_vs_trotter"] = cmp.max_deviation;
  rep.details["leakage"] = cmp.leakage;
  // Counts under the other lowering settings, for comparison.
  json alt = json::array();
  for (auto phys : {Physicality::Bond, Physicality::Bulk, Physicality::None}) {
    for (bool merge : {true, false}) {
      LoweringOptions o = c.lowering;
      o.physicality = phys;
      o.merge = merge;
      alt.push_back({{"physicality", to_string(phys)},
                     {"merge", merge},
                     {"native_entangling", compile_trotter_circuit(params, plan, subspace, o).entangling_count()}});
    }
  }
  rep.details["alternatives"] = alt;
  write_text(dir / "gatecount.json", rep.to_json().dump(2) + "\n");
  r.files.push_back("gatecount.json");
  std::ostringstream circ, mats;
  write_gate_sequence(circ, seq);
  write_matrix_table(mats, seq);
  write_text(dir / "circuit.txt", circ.str());
  write_text(dir / "matrices.txt", mats.str());
  r.files.push_back("circuit.txt");
  r.files.push_back("matrices.txt");
  if (c.time_grid.values.size() > 1) {
    const auto table = entangling_count_vs_time(params, c.times(), c.n_steps, c.lowering);
    std::ostringstream os;
    os << "t,entangling\n";
    for (const auto& pt : table) os << format_double(pt.t) << ',' << pt.entangling << '\n';
    write_text(dir / "count_vs_time.csv", os.str());
    r.files.push_back("count_vs_time.csv");
  }
  r.summary["native_entangling"] = rep.native_entangling;
  r.summary["reference_native"] = kReferenceNativeCount;
  r.summary["qubit_cnot_per_step"] = rep.qubit_cnot_per_step;
  r.summary["qubit_cnot_total"] = rep.qubit_cnot_total;
  r.summary["overhead_factor"] = rep.overhead_factor;
  r.summary["max_deviation_vs_trotter"] = cmp.max_deviation;
  return r;
}

inline RunResult run_effective_compare(const ScenarioConfig& c, const std::filesystem::path& dir) {
  RunResult r;
  const auto cmp = compare_to_full(c.params, c.times());
  emit_series(dir, "effective.csv", cmp.series, r);
  r.summary["max_deviation"] = cmp.max_deviation;
  r.summary["minus_state_lambda"] = minus_state_check(c.params.x).lambda;
  return r;
}

inline RunResult run_full_populations(const ScenarioConfig& c, const std::filesystem::path& dir) {
  RunResult r;
  const auto params = c.params;
  const auto psi0 = resolve_initial_state(c, params);
  const auto times = c.times();
  const auto form = c.pair_form.value_or(default_pair_form(params.sector));
  auto exact = evolve_exact(params, psi0, times, form);
  auto trot = evolve_trotter_grid(params, psi0, times, c.n_steps, form);
  add_population_columns(exact);
  trot.columns.clear();
  trot.observables.clear();
  for (const auto& col : exact.columns) trot.add_column(col, trot.population_of(BasisState::from_label(col)));
  if (!c.aggregate.empty()) {
    exact = aggregate_symmetric(exact, c.aggregate);
    trot = aggregate_symmetric(trot, c.aggregate);
  }
  emit_series(dir, "populations_exact.csv", exact, r);
  emit_series(dir, "populations_trotter.csv", trot, r);

  const auto strings = identify_string_states(params);
  const auto subspace = physical_subspace(params, {strings.straight});
  if (c.shots > 0 || c.noise_p > 0.0) {
    // Per time point: compiled circuit, optional depolarizing noise, sampled
    // shots and post-selection onto the physical subspace.
    std::ostringstream os;
    os << "t,entangling,physical_probability";
    if (c.shots > 0) os << ",physical_fraction";
    os << '\n';
    for (std::size_t i = 0; i < times.size(); ++i) {
      const TrotterPlan plan{times[i], c.n_steps};
      const auto seq = compile_trotter_circuit(params, plan, subspace, c.lowering);
      const auto probs = c.noise_p > 0.0 ? noisy_probabilities(seq, psi0, c.noise_p)
                                         : probability_vector(simulate(seq, psi0).amplitudes());
      double phys = 0.0;
      for (auto k : subspace.global_set) phys += probs[k];
      os << format_double(times[i]) << ',' << seq.entangling_count() << ',' << format_double(phys);
      if (c.shots > 0) {
        const auto counts = sample_from_probabilities(psi0.reg(), probs, c.shots, c.seed + i);
        os << ',' << format_double(physicality_fraction(counts, subspace).fraction);
      }
      os << '\n';
    }
    write_text(dir / "physicality.csv", os.str());
    r.files.push_back("physicality.csv");
  }
  return r;
}

inline RunResult run_scenario(const ScenarioConfig& c, int jobs = 0, std::optional<std::string> output_override = {}) {
  const std::filesystem::path dir = output_override.value_or(c.output_dir);
  std::filesystem::create_directories(dir);
  RunResult r;
  if (c.scenario == "fluctuations") {
    r = run_fluctuations(c, dir);
  } else if (c.scenario == "breaking") {
    r = run_breaking(c, dir);
  } else if (c.scenario == "resonance-scan") {
    r = run_resonance_scan(c, dir, jobs);
  } else if (c.scenario == "gatecount") {
    r = run_gatecount(c, dir);
  } else if (c.scenario == "effective-compare") {
    r = run_effective_compare(c, dir);
  } else {
    r = run_full_populations(c, dir);
  }
  json meta = config_to_json(c);
  meta["provenance"] = {{"resolved_params", params_to_json(c.params)},
                        {"trotter",
                         {{"n_steps", c.n_steps}, {"term_order", kTermOrder}, {"bond_order", kBondOrder}}},
                        {"lowering", c.lowering.to_json(c.params.sector)},
                        {"seed", c.seed},
                        {"files", r.files},
                        {"summary", r.summary}};
  write_text(dir / "metadata.json", meta.dump(2) + "\n");
  r.files.push_back("metadata.json");
  return r;
}

}  // namespace bubblechain
