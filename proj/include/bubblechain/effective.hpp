#pragma once

// Six-state hopping model for the first excited manifold of the half-integer
// sector, its closed-form solution, and the map back onto the full chain.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "bubblechain/errors.hpp"
#include "bubblechain/evolution.hpp"
#include "bubblechain/linalg.hpp"
#include "bubblechain/model.hpp"

namespace bubblechain {

inline constexpr int kEffectiveSize = 6;

inline Eigen::Matrix<double, 6, 6> effective_adjacency() {
  Eigen::Matrix<double, 6, 6> a;
  a << 0, 1, 0, 0, 0, 0,  //
      1, 0, 1, 1, 0, 0,   //
      0, 1, 0, 0, 1, 0,   //
      0, 1, 0, 0, 1, 0,   //
      0, 0, 1, 1, 0, 1,   //
      0, 0, 0, 0, 1, 0;
  return a;
}

inline Matrix build_heff(double x) { return (-x / std::sqrt(2.0) * effective_adjacency()).cast<complex>(); }

inline double effective_frequency(double x) { return std::sqrt(2.5) * x; }

// Closed-form populations of states 0..5 starting from (|2> + |3>)/sqrt(2).
// Written independently of build_heff.
inline std::array<double, 6> analytic_populations_plus(double t, double x) {
  const double w = std::sqrt(5.0 / 2.0) * x * t;
  const double s = std::sin(w);
  const double c = std::cos(w);
  const double p14 = 0.4 * s * s;
  const double p23 = (1.0 + 4.0 * c) * (1.0 + 4.0 * c) / 50.0;
  const double p05 = 2.0 * (c - 1.0) * (c - 1.0) / 25.0;
  return {p05, p14, p23, p23, p14, p05};
}

inline Vector effective_plus() {
  Vector v = Vector::Zero(6);
  v(2) = v(3) = 1.0 / std::sqrt(2.0);
  return v;
}

inline Vector effective_minus() {
  Vector v = Vector::Zero(6);
  v(2) = 1.0 / std::sqrt(2.0);
  v(3) = -1.0 / std::sqrt(2.0);
  return v;
}

inline std::array<double, 6> numeric_populations(const Vector& psi0, double t, double x) {
  const Vector psi = expm_hermitian(build_heff(x), t) * psi0;
  std::array<double, 6> out{};
  for (int k = 0; k < 6; ++k) out[static_cast<std::size_t>(k)] = std::norm(psi(k));
  return out;
}

struct EigenCheck {
  double residual = 0.0;
  double lambda = 0.0;
};

// || H|v> - lambda|v> || with lambda the Rayleigh quotient (the optimal choice).
inline EigenCheck eigen_residual(const Matrix& h, const Vector& v) {
  const complex lam = v.dot(h * v) / v.squaredNorm();
  return {(h * v - lam * v).norm(), lam.real()};
}

inline EigenCheck minus_state_check(double x) { return eigen_residual(build_heff(x), effective_minus()); }

// ---------------------------------------------------------------------------
// Map from effective labels to full-chain configurations

struct EffectiveMapping {
  std::array<BasisState, 6> states;  // effective label -> configuration
  std::array<int, 6> signs{};        // |k>_eff = signs[k] |states[k]>
  double manifold_gap = 0.0;         // E_1 - E_S at the probed couplings

  StateVector full_state(const MixedRadixRegister& reg, const Vector& eff) const {
    Vector v = Vector::Zero(static_cast<Eigen::Index>(reg.size()));
    for (int k = 0; k < 6; ++k) {
      v(static_cast<Eigen::Index>(reg.encode(states[static_cast<std::size_t>(k)]))) +=
          static_cast<double>(signs[static_cast<std::size_t>(k)]) * eff(k);
    }
    return StateVector(reg, v);
  }
};

// The manifold is the lowest level above the straight string whose excitation
// energy depends on g_perp^2 alone (checked at two generic couplings). The
// assignment of labels is the permutation and sign pattern under which the
// projected plaquette hopping equals H_eff; of the valid assignments the one
// with the lexicographically smallest configuration list is kept.
inline EffectiveMapping derive_effective_mapping(const ModelParams& params) {
  if (params.sector != Sector::Half || params.n_plaquettes != 3) {
    throw MappingUnavailable("the effective model is defined for the half-integer sector with three plaquettes");
  }
  const auto strings = identify_string_states(params);
  const auto reg = params.reg();
  const auto probes = detail::probe_couplings();
  std::array<ModelParams, 2> at;
  for (int i = 0; i < 2; ++i) {
    at[static_cast<std::size_t>(i)] = params;
    at[static_cast<std::size_t>(i)].g_par2 = probes[static_cast<std::size_t>(i)].first;
    at[static_cast<std::size_t>(i)].g_perp2 = probes[static_cast<std::size_t>(i)].second;
  }
  // Excitation energy per unit g_perp^2, keyed by configuration; only states
  // whose ratio agrees at both probes qualify.
  std::vector<std::pair<double, BasisState>> levels;
  for (std::size_t k = 0; k < reg.size(); ++k) {
    const auto s = reg.decode(k);
    std::array<double, 2> ratio{};
    for (int i = 0; i < 2; ++i) {
      const auto& p = at[static_cast<std::size_t>(i)];
      ratio[static_cast<std::size_t>(i)] =
          (diagonal_config_energy(s, p) - diagonal_config_energy(strings.straight, p)) / p.g_perp2;
    }
    if (std::abs(ratio[0] - ratio[1]) < 1e-9 && ratio[0] > 1e-9) levels.emplace_back(ratio[0], s);
  }
  if (levels.empty()) throw MappingUnavailable("no perpendicular-only excitation above the straight string");
  const double gap = std::min_element(levels.begin(), levels.end())->first;
  std::vector<BasisState> manifold;
  for (const auto& [r, s] : levels) {
    if (std::abs(r - gap) < 1e-9) manifold.push_back(s);
  }
  std::sort(manifold.begin(), manifold.end());
  if (manifold.size() != 6) {
    throw MappingUnavailable("first excited manifold has " + std::to_string(manifold.size()) + " states, expected 6");
  }

  // Hopping among the manifold states: -sum_n U_n at unit coupling.
  ModelParams unit = params;
  unit.x = 1.0;
  Matrix h1 = assemble_hamiltonian(unit, PairForm::Original);
  ModelParams zero = params;
  zero.x = 0.0;
  h1 -= assemble_hamiltonian(zero, PairForm::Original);
  Eigen::Matrix<double, 6, 6> hop;
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      hop(i, j) = h1(static_cast<Eigen::Index>(reg.encode(manifold[static_cast<std::size_t>(i)])),
                     static_cast<Eigen::Index>(reg.encode(manifold[static_cast<std::size_t>(j)])))
                      .real();
    }
  }
  const Eigen::Matrix<double, 6, 6> target = -1.0 / std::sqrt(2.0) * effective_adjacency();

  std::array<int, 6> perm{};
  std::iota(perm.begin(), perm.end(), 0);
  std::optional<EffectiveMapping> best;
  do {
    // perm[k] = manifold index carrying effective label k. Fix signs by
    // propagation along the adjacency graph starting from label 0.
    std::array<int, 6> sign{};
    sign[0] = 1;
    bool ok = true;
    for (int sweep = 0; sweep < 6 && ok; ++sweep) {
      for (int i = 0; i < 6 && ok; ++i) {
        for (int j = 0; j < 6 && ok; ++j) {
          const double m = hop(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
          const double t = target(i, j);
          if ((std::abs(t) < 1e-12) != (std::abs(m) < 1e-12)) {
            ok = false;
          } else if (std::abs(t) > 1e-12 && std::abs(std::abs(m) - std::abs(t)) > 1e-9) {
            ok = false;
          } else if (std::abs(t) > 1e-12 && sign[static_cast<std::size_t>(i)] != 0 && sign[static_cast<std::size_t>(j)] == 0) {
            sign[static_cast<std::size_t>(j)] = sign[static_cast<std::size_t>(i)] * ((m > 0) == (t > 0) ? 1 : -1);
          }
        }
      }
    }
    if (!ok) continue;
    for (int i = 0; i < 6 && ok; ++i) {
      ok = sign[static_cast<std::size_t>(i)] != 0;
      for (int j = 0; j < 6 && ok; ++j) {
        const double m = hop(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
        ok = std::abs(sign[static_cast<std::size_t>(i)] * sign[static_cast<std::size_t>(j)] * m - target(i, j)) < 1e-9;
      }
    }
    if (!ok) continue;
    EffectiveMapping cand;
    for (int k = 0; k < 6; ++k) cand.states[static_cast<std::size_t>(k)] = manifold[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])];
    cand.signs = sign;
    cand.manifold_gap = gap * params.g_perp2;
    if (!best || cand.states < best->states) best = cand;
  } while (std::next_permutation(perm.begin(), perm.end()));
  if (!best) throw MappingUnavailable("projected hopping does not match H_eff under any relabeling");
  return *best;
}

struct EffectiveComparison {
  double max_deviation = 0.0;
  TimeSeries series;  // full-model and analytic populations of the six mapped states
};

// Full exact evolution from the mapped |+>, compared against the closed form.
inline EffectiveComparison compare_to_full(const ModelParams& params, const std::vector<double>& times) {
  const auto map = derive_effective_mapping(params);
  const auto reg = params.reg();
  const StateVector psi0 = map.full_state(reg, effective_plus());
  EffectiveComparison out;
  out.series = evolve_exact(params, psi0, times);
  std::array<std::vector<double>, 6> full, analytic;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const auto a = analytic_populations_plus(times[i], params.x);
    for (std::size_t k = 0; k < 6; ++k) {
      const double p = out.series.probs[i][reg.encode(map.states[k])];
      full[k].push_back(p);
      analytic[k].push_back(a[k]);
      out.max_deviation = std::max(out.max_deviation, std::abs(p - a[k]));
    }
  }
  for (std::size_t k = 0; k < 6; ++k) out.series.add_column("exact_" + map.states[k].label(), full[k]);
  for (std::size_t k = 0; k < 6; ++k) out.series.add_column("analytic_" + map.states[k].label(), analytic[k]);
  out.series.metadata["effective_mapping"] = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < 6; ++k) {
    out.series.metadata["effective_mapping"].push_back({{"label", k}, {"state", map.states[k].label()}, {"sign", map.signs[k]}});
  }
  return out;
}

}  // namespace bubblechain
