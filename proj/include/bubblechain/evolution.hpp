#pragma once

// Exact and second-order Trotterized real-time evolution plus the observables
// built on top of population vectors.

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "bubblechain/errors.hpp"
#include "bubblechain/linalg.hpp"
#include "bubblechain/model.hpp"
#include "bubblechain/qudit.hpp"

namespace bubblechain {

inline constexpr double kNormTolerance = 1e-10;

struct TrotterPlan {
  double t_total = 0.0;
  int n_steps = 2;

  double dt() const { return t_total / n_steps; }

  void validate() const {
    if (n_steps < 1) throw InvalidPlan("n_steps must be >= 1, got " + std::to_string(n_steps));
    if (!std::isfinite(t_total)) throw InvalidPlan("t_total must be finite");
  }
};

inline const char* kTermOrder = "U(dt/2) E_local(dt/2) E_pair(dt) E_local(dt/2) U(dt/2)";
inline const char* kBondOrder = "left-to-right";

struct TimeSeries {
  MixedRadixRegister reg;
  std::vector<double> times;
  std::vector<std::vector<double>> probs;  // full population vector per time point
  std::vector<std::string> columns;        // ordered observable names
  std::map<std::string, std::vector<double>> observables;
  nlohmann::ordered_json metadata = nlohmann::ordered_json::object();

  void add_column(const std::string& name, std::vector<double> values) {
    if (values.size() != times.size()) throw ShapeError("column '" + name + "' has wrong length");
    if (!observables.count(name)) columns.push_back(name);
    observables[name] = std::move(values);
  }

  bool has_column(const std::string& name) const { return observables.count(name) != 0; }

  std::vector<double> population_of(const BasisState& s) const {
    const auto k = reg.encode(s);
    std::vector<double> out;
    out.reserve(probs.size());
    for (const auto& p : probs) out.push_back(p[k]);
    return out;
  }
};

inline nlohmann::ordered_json params_to_json(const ModelParams& p) {
  return {{"x", p.x},
          {"g_par2", p.g_par2},
          {"g_perp2", p.g_perp2},
          {"n_plaquettes", p.n_plaquettes},
          {"sector", to_string(p.sector)}};
}

// One column per basis state whose population exceeds `floor` at some time,
// in flat-index order.
inline void add_population_columns(TimeSeries& ts, double floor = 1e-12, const std::string& prefix = "") {
  for (std::size_t k = 0; k < ts.reg.size(); ++k) {
    bool seen = false;
    for (const auto& p : ts.probs) seen = seen || p[k] > floor;
    if (!seen) continue;
    std::vector<double> col;
    col.reserve(ts.probs.size());
    for (const auto& p : ts.probs) col.push_back(p[k]);
    ts.add_column(prefix + ts.reg.decode(k).label(), std::move(col));
  }
}

inline void require_normalized(const StateVector& psi) {
  if (std::abs(psi.norm() - 1.0) > kNormTolerance) {
    throw InvalidState("initial state has norm " + std::to_string(psi.norm()));
  }
}

inline std::vector<double> probability_vector(const Vector& v) {
  std::vector<double> p(static_cast<std::size_t>(v.size()));
  for (Eigen::Index k = 0; k < v.size(); ++k) p[static_cast<std::size_t>(k)] = std::norm(v(k));
  return p;
}

// ---------------------------------------------------------------------------
// Exact propagation

class ExactPropagator {
 public:
  ExactPropagator(const ModelParams& params, PairForm form) : params_(params), reg_(params.reg()) {
    const Matrix h = assemble_hamiltonian(params, form);
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    if (es.info() != Eigen::Success) throw Error("eigendecomposition failed");
    energies_ = es.eigenvalues();
    vectors_ = es.eigenvectors();
  }

  explicit ExactPropagator(const ModelParams& params) : ExactPropagator(params, default_pair_form(params.sector)) {}

  const Eigen::VectorXd& energies() const { return energies_; }
  const Matrix& eigenvectors() const { return vectors_; }
  const MixedRadixRegister& reg() const { return reg_; }

  // Coefficients of psi in the eigenbasis.
  Vector to_eigenbasis(const StateVector& psi) const { return vectors_.adjoint() * psi.amplitudes(); }

  Vector evolve_coefficients(const Vector& c, double t) const {
    Vector phased(c.size());
    for (Eigen::Index k = 0; k < c.size(); ++k) phased(k) = std::polar(1.0, -energies_(k) * t) * c(k);
    return vectors_ * phased;
  }

  StateVector evolve(const StateVector& psi, double t) const {
    return StateVector(reg_, evolve_coefficients(to_eigenbasis(psi), t));
  }

  // P_index(t) without forming the full state: O(D) per time point.
  std::vector<double> population_series(const StateVector& psi, std::size_t index,
                                        const std::vector<double>& times) const {
    const Vector c = to_eigenbasis(psi);
    const auto row = static_cast<Eigen::Index>(index);
    Vector w(c.size());
    for (Eigen::Index k = 0; k < c.size(); ++k) w(k) = vectors_(row, k) * c(k);
    std::vector<double> out;
    out.reserve(times.size());
    for (double t : times) {
      complex a = 0.0;
      for (Eigen::Index k = 0; k < w.size(); ++k) a += std::polar(1.0, -energies_(k) * t) * w(k);
      out.push_back(std::norm(a));
    }
    return out;
  }

 private:
  ModelParams params_;
  MixedRadixRegister reg_;
  Eigen::VectorXd energies_;
  Matrix vectors_;
};

inline TimeSeries evolve_exact(const ModelParams& params, const StateVector& psi0, const std::vector<double>& times,
                               PairForm form) {
  params.validate();
  require_normalized(psi0);
  ExactPropagator prop(params, form);
  if (!(psi0.reg() == prop.reg())) throw ShapeError("initial state register does not match the model");
  TimeSeries ts;
  ts.reg = prop.reg();
  ts.times = times;
  const Vector c = prop.to_eigenbasis(psi0);
  for (double t : times) ts.probs.push_back(probability_vector(prop.evolve_coefficients(c, t)));
  ts.metadata["mode"] = "exact";
  ts.metadata["params"] = params_to_json(params);
  ts.metadata["pair_form"] = form == PairForm::Original ? "original" : "simplified";
  return ts;
}

inline TimeSeries evolve_exact(const ModelParams& params, const StateVector& psi0, const std::vector<double>& times) {
  return evolve_exact(params, psi0, times, default_pair_form(params.sector));
}

// ---------------------------------------------------------------------------
// Trotter evolution

// Precomputed local factors of one symmetric step at a fixed dt.
class TrotterStepper {
 public:
  TrotterStepper(const ModelParams& params, double dt, PairForm form) : dt_(dt) {
    const auto terms = build_terms(params, form);
    // H contains -x U, so the plaquette factor is exp(-i (-x U) dt/2).
    plaquette_half_ = expm_hermitian(-params.x * terms.plaquette, dt / 2.0);
    for (const auto& e : terms.electric_local) local_half_.push_back(diagonal_phase(e, dt / 2.0));
    pair_full_ = expm_hermitian(terms.electric_pair.matrix, dt);
    n_sites_ = params.n_plaquettes;
  }

  TrotterStepper(const ModelParams& params, double dt) : TrotterStepper(params, dt, default_pair_form(params.sector)) {}

  void step(StateVector& psi) const {
    for (int n = 0; n < n_sites_; ++n) apply_local_inplace(psi, n, plaquette_half_);
    for (int n = 0; n < n_sites_; ++n) apply_local_inplace(psi, n, local_half_[static_cast<std::size_t>(n)]);
    for (int n = 0; n + 1 < n_sites_; ++n) apply_two_site_inplace(psi, n, n + 1, pair_full_);
    for (int n = 0; n < n_sites_; ++n) apply_local_inplace(psi, n, local_half_[static_cast<std::size_t>(n)]);
    for (int n = 0; n < n_sites_; ++n) apply_local_inplace(psi, n, plaquette_half_);
  }

  double dt() const { return dt_; }
  const Matrix& plaquette_half() const { return plaquette_half_; }
  const std::vector<Matrix>& local_half() const { return local_half_; }
  const Matrix& pair_full() const { return pair_full_; }

 private:
  double dt_;
  int n_sites_ = 0;
  Matrix plaquette_half_;
  std::vector<Matrix> local_half_;
  Matrix pair_full_;
};

inline StateVector trotter_state(const ModelParams& params, const StateVector& psi0, const TrotterPlan& plan,
                                 PairForm form) {
  plan.validate();
  TrotterStepper stepper(params, plan.dt(), form);
  StateVector psi = psi0;
  for (int k = 0; k < plan.n_steps; ++k) stepper.step(psi);
  return psi;
}

inline StateVector trotter_state(const ModelParams& params, const StateVector& psi0, const TrotterPlan& plan) {
  return trotter_state(params, psi0, plan, default_pair_form(params.sector));
}

inline void annotate_plan(TimeSeries& ts, const TrotterPlan& plan) {
  ts.metadata["plan"] = {{"t_total", plan.t_total},
                         {"n_steps", plan.n_steps},
                         {"term_order", kTermOrder},
                         {"bond_order", kBondOrder}};
}

// The state after each of the m steps (times k * dt, k = 0..m).
inline TimeSeries evolve_trotter(const ModelParams& params, const StateVector& psi0, const TrotterPlan& plan,
                                 PairForm form) {
  params.validate();
  plan.validate();
  require_normalized(psi0);
  TrotterStepper stepper(params, plan.dt(), form);
  TimeSeries ts;
  ts.reg = psi0.reg();
  StateVector psi = psi0;
  ts.times.push_back(0.0);
  ts.probs.push_back(probabilities(psi));
  for (int k = 1; k <= plan.n_steps; ++k) {
    stepper.step(psi);
    ts.times.push_back(k * plan.dt());
    ts.probs.push_back(probabilities(psi));
  }
  ts.metadata["mode"] = "trotter";
  ts.metadata["params"] = params_to_json(params);
  ts.metadata["pair_form"] = form == PairForm::Original ? "original" : "simplified";
  annotate_plan(ts, plan);
  return ts;
}

inline TimeSeries evolve_trotter(const ModelParams& params, const StateVector& psi0, const TrotterPlan& plan) {
  return evolve_trotter(params, psi0, plan, default_pair_form(params.sector));
}

// Each time point t is reached by its own m-step circuit with dt = t / m, as in
// an experiment that re-runs the whole sequence per sampled time.
inline TimeSeries evolve_trotter_grid(const ModelParams& params, const StateVector& psi0,
                                      const std::vector<double>& times, int n_steps, PairForm form) {
  params.validate();
  require_normalized(psi0);
  TimeSeries ts;
  ts.reg = psi0.reg();
  ts.times = times;
  for (double t : times) {
    ts.probs.push_back(probabilities(trotter_state(params, psi0, TrotterPlan{t, n_steps}, form)));
  }
  ts.metadata["mode"] = "trotter-grid";
  ts.metadata["params"] = params_to_json(params);
  ts.metadata["pair_form"] = form == PairForm::Original ? "original" : "simplified";
  ts.metadata["plan"] = {{"n_steps", n_steps}, {"term_order", kTermOrder}, {"bond_order", kBondOrder}};
  return ts;
}

inline TimeSeries evolve_trotter_grid(const ModelParams& params, const StateVector& psi0,
                                      const std::vector<double>& times, int n_steps) {
  return evolve_trotter_grid(params, psi0, times, n_steps, default_pair_form(params.sector));
}

// ---------------------------------------------------------------------------
// Observables

inline std::vector<double> broken_string_population(const TimeSeries& series, const BasisState& broken) {
  return series.population_of(broken);
}

inline double trapezoid(const std::vector<double>& t, const std::vector<double>& y) {
  double acc = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i) acc += 0.5 * (t[i] - t[i - 1]) * (y[i] + y[i - 1]);
  return acc;
}

// Trapezoidal integral of P_target(t) per scan point, normalized to unit sum.
inline std::vector<double> time_integrated_population(const std::vector<TimeSeries>& scan, const BasisState& target) {
  if (scan.empty()) return {};
  for (const auto& s : scan) {
    if (s.times != scan.front().times) throw GridError("scan points do not share a time grid");
  }
  std::vector<double> raw;
  for (const auto& s : scan) raw.push_back(trapezoid(s.times, s.population_of(target)));
  double total = 0.0;
  for (double v : raw) total += v;
  if (scan.size() == 1) return {1.0};
  if (total <= 0.0) throw GridError("target population integrates to zero at every scan point");
  for (double& v : raw) v /= total;
  return raw;
}

// Same normalization for integrals computed elsewhere.
inline std::vector<double> normalize_profile(std::vector<double> raw) {
  double total = 0.0;
  for (double v : raw) total += v;
  if (total <= 0.0) throw GridError("profile integrates to zero");
  for (double& v : raw) v /= total;
  return raw;
}

using Counts = std::map<BasisState, long long>;

inline Counts sample_from_probabilities(const MixedRadixRegister& reg, const std::vector<double>& p, long long shots,
                                        std::uint64_t seed) {
  if (shots < 1) throw InvalidArgument("shots must be >= 1");
  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> dist(p.begin(), p.end());
  std::vector<long long> tally(p.size(), 0);
  for (long long s = 0; s < shots; ++s) ++tally[dist(rng)];
  Counts out;
  for (std::size_t k = 0; k < tally.size(); ++k) {
    if (tally[k]) out.emplace(reg.decode(k), tally[k]);
  }
  return out;
}

inline Counts sample_measurements(const StateVector& state, long long shots, std::uint64_t seed) {
  return sample_from_probabilities(state.reg(), probabilities(state), shots, seed);
}

struct PostSelection {
  double fraction = 0.0;
  long long physical_shots = 0;
  long long total_shots = 0;
  std::map<BasisState, double> distribution;  // renormalized physical counts
};

inline PostSelection physicality_fraction(const Counts& counts, const PhysicalSubspace& subspace) {
  PostSelection out;
  for (const auto& [s, n] : counts) {
    out.total_shots += n;
    if (subspace.contains(s)) out.physical_shots += n;
  }
  if (out.physical_shots == 0) throw EmptyPostSelection("no shot landed in the physical subspace");
  out.fraction = static_cast<double>(out.physical_shots) / static_cast<double>(out.total_shots);
  for (const auto& [s, n] : counts) {
    if (subspace.contains(s)) out.distribution[s] = static_cast<double>(n) / static_cast<double>(out.physical_shots);
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV and column aggregation

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_csv(std::ostream& os, const TimeSeries& ts) {
  os << 't';
  for (const auto& c : ts.columns) os << ',' << c;
  os << '\n';
  for (std::size_t i = 0; i < ts.times.size(); ++i) {
    os << format_double(ts.times[i]);
    for (const auto& c : ts.columns) os << ',' << format_double(ts.observables.at(c)[i]);
    os << '\n';
  }
}

// Replaces each listed pair of columns by one summed column "a+b" placed at
// the position of the first member.
inline TimeSeries aggregate_symmetric(const TimeSeries& series,
                                      const std::vector<std::pair<std::string, std::string>>& pairs) {
  TimeSeries out = series;
  for (const auto& [a, b] : pairs) {
    if (!out.has_column(a)) throw ConfigError("unknown column '" + a + "'");
    if (!out.has_column(b)) throw ConfigError("unknown column '" + b + "'");
    if (a == b) throw ConfigError("cannot merge column '" + a + "' with itself");
    std::vector<double> sum = out.observables.at(a);
    const auto& other = out.observables.at(b);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += other[i];
    const std::string name = a + "+" + b;
    auto pos = std::find(out.columns.begin(), out.columns.end(), a);
    *pos = name;
    out.columns.erase(std::find(out.columns.begin(), out.columns.end(), b));
    out.observables.erase(a);
    out.observables.erase(b);
    out.observables[name] = std::move(sum);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Concurrency helper for independent scan points

inline void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(n, jobs > 0 ? jobs : 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

inline int default_jobs(std::size_t points) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  return static_cast<int>(std::min<std::size_t>(points, hw));
}

}  // namespace bubblechain
