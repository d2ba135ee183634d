#pragma once

// Truncated SU(2)_2 gauge theory on a plaquette ladder, written in the
// bubble-chain basis: one qudit per plaquette, dimension 4 for half-integer
// boundary flux and 8 for integer flux.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "bubblechain/errors.hpp"
#include "bubblechain/linalg.hpp"
#include "bubblechain/qudit.hpp"

namespace bubblechain {

enum class Sector { Half, One };

inline int local_dimension(Sector s) { return s == Sector::Half ? 4 : 8; }

inline std::string to_string(Sector s) { return s == Sector::Half ? "half" : "one"; }

inline Sector sector_from_string(const std::string& s) {
  if (s == "half" || s == "HALF" || s == "1/2") return Sector::Half;
  if (s == "one" || s == "ONE" || s == "1") return Sector::One;
  throw ConfigError("unknown sector '" + s + "' (expected half or one)");
}

// Which way of writing the nearest-neighbour electric term to use. The
// simplified form exists only for the integer sector and differs from the
// original by a constant on the physical pair set.
enum class PairForm { Original, Simplified };

inline PairForm default_pair_form(Sector s) { return s == Sector::One ? PairForm::Simplified : PairForm::Original; }

struct ModelParams {
  double x = 0.0;        // plaquette coupling; the sign is a gauge choice for populations
  double g_par2 = 1.0;   // longitudinal electric coupling
  double g_perp2 = 1.0;  // perpendicular electric coupling
  int n_plaquettes = 3;
  Sector sector = Sector::Half;

  int dim() const { return local_dimension(sector); }

  MixedRadixRegister reg() const { return MixedRadixRegister::uniform(dim(), n_plaquettes); }

  void validate() const {
    if (n_plaquettes < 2) throw InvalidArgument("n_plaquettes must be >= 2");
    if (!(g_par2 > 0.0) || !(g_perp2 > 0.0)) throw InvalidArgument("electric couplings must be > 0");
    if (!std::isfinite(x)) throw InvalidArgument("x must be finite");
  }
};

namespace detail {

// A coefficient num/den multiplying |ab><ab|.
struct ProjectorEntry {
  int a, b, num, den;
};

// A coefficient num/den multiplying |ab><cd| + |cd><ab|.
struct FlipEntry {
  int a, b, c, d, num, den;
};

inline constexpr std::array<double, 4> kHalfBulk{0.75, 0.75, 2.75, 2.75};
inline constexpr std::array<double, 4> kHalfBoundary{0.75, 0.0, 0.75, 2.0};
inline constexpr std::array<double, 8> kOneBulk{0.0, 1.5, 4.0, 1.5, 1.5, 2.0, 1.5, 2.0};
inline constexpr std::array<double, 8> kOneBoundary{0.0, 0.75, 2.0, 0.75, 0.75, 0.0, 0.75, 2.0};

inline const std::vector<ProjectorEntry>& half_pair_projectors() {
  static const std::vector<ProjectorEntry> t = {
      {0, 1, 3, 4}, {1, 0, 3, 4}, {0, 3, 3, 4}, {3, 0, 3, 4}, {1, 2, 3, 4}, {2, 1, 3, 4},
      {2, 3, 3, 4}, {3, 2, 3, 4}, {0, 2, 2, 1}, {2, 0, 2, 1}, {1, 3, 2, 1}, {3, 1, 2, 1},
  };
  return t;
}

inline const std::vector<ProjectorEntry>& one_pair_projectors_original() {
  static const std::vector<ProjectorEntry> t = {
      {0, 1, 3, 4}, {0, 3, 3, 4}, {2, 1, 3, 4}, {2, 3, 3, 4}, {1, 0, 3, 4}, {1, 2, 3, 4},
      {4, 0, 3, 4}, {4, 2, 3, 4}, {6, 5, 3, 4}, {6, 7, 3, 4}, {3, 5, 3, 4}, {3, 7, 3, 4},
      {5, 4, 3, 4}, {5, 6, 3, 4}, {7, 4, 3, 4}, {7, 6, 3, 4}, {0, 2, 2, 1}, {2, 0, 2, 1},
      {5, 7, 2, 1}, {7, 5, 2, 1}, {1, 1, 1, 1}, {1, 3, 1, 1}, {4, 1, 1, 1}, {4, 3, 1, 1},
      {3, 4, 1, 1}, {3, 6, 1, 1}, {6, 4, 1, 1}, {6, 6, 1, 1},
  };
  return t;
}

inline const std::vector<ProjectorEntry>& one_pair_projectors_simplified() {
  static const std::vector<ProjectorEntry> t = {
      {0, 0, -3, 4}, {2, 2, -3, 4}, {5, 5, -3, 4}, {7, 7, -3, 4}, {0, 2, 5, 4}, {2, 0, 5, 4},
      {5, 7, 5, 4},  {7, 5, 5, 4},  {1, 1, 1, 4},  {3, 4, 1, 4},  {1, 3, 1, 4}, {3, 6, 1, 4},
      {4, 1, 1, 4},  {6, 4, 1, 4},  {4, 3, 1, 4},  {6, 6, 1, 4},
  };
  return t;
}

inline const std::vector<FlipEntry>& one_pair_flips() {
  static const std::vector<FlipEntry> t = {
      {1, 1, 3, 4, 1, 1}, {1, 3, 3, 6, 1, 1}, {4, 1, 6, 4, 1, 1}, {4, 3, 6, 6, 1, 1}};
  return t;
}

}  // namespace detail

inline Matrix build_plaquette_op(Sector sector) {
  if (sector == Sector::Half) {
    const double h = 1.0 / std::sqrt(2.0);
    Matrix u(4, 4);
    u << 0, -h, 0, h,  //
        -h, 0, h, 0,   //
        0, h, 0, -h,   //
        h, 0, -h, 0;
    return u;
  }
  Matrix u = Matrix::Zero(8, 8);
  u(1, 0) = u(1, 2) = 1.0;
  u(6, 5) = u(6, 7) = -1.0;
  return u + u.adjoint().eval();
}

// Real diagonal of E^2_n for one bubble; boundary bubbles (first and last)
// carry the extra perpendicular-flux contribution.
inline Eigen::VectorXd build_local_electric(Sector sector, const ModelParams& params, int site) {
  if (site < 0 || site >= params.n_plaquettes) {
    throw IndexError("site " + std::to_string(site) + " outside [0, " +
                     std::to_string(params.n_plaquettes) + ")");
  }
  const bool boundary = site == 0 || site == params.n_plaquettes - 1;
  const int d = local_dimension(sector);
  Eigen::VectorXd diag(d);
  for (int k = 0; k < d; ++k) {
    const double bulk = sector == Sector::Half ? detail::kHalfBulk[k] : detail::kOneBulk[k];
    const double edge = sector == Sector::Half ? detail::kHalfBoundary[k] : detail::kOneBoundary[k];
    diag(k) = params.g_par2 / 2.0 * bulk + (boundary ? params.g_perp2 / 2.0 * edge : 0.0);
  }
  return diag;
}

struct PairTerm {
  Matrix matrix;        // (d*d) x (d*d), row index = left digit * d + right digit
  double offset = 0.0;  // original = matrix + offset * I on the physical pair set
};

inline PairTerm build_pair_electric(Sector sector, const ModelParams& params, PairForm form) {
  const int d = local_dimension(sector);
  const double scale = params.g_perp2 / 2.0;
  PairTerm out;
  out.matrix = Matrix::Zero(d * d, d * d);
  auto at = [d](int a, int b) { return a * d + b; };
  if (sector == Sector::Half) {
    if (form == PairForm::Simplified) {
      throw UnsupportedOption("the offset-reduced pair term is only defined for the integer sector");
    }
    for (const auto& e : detail::half_pair_projectors()) {
      out.matrix(at(e.a, e.b), at(e.a, e.b)) = scale * e.num / e.den;
    }
    return out;
  }
  const auto& projectors = form == PairForm::Original ? detail::one_pair_projectors_original()
                                                      : detail::one_pair_projectors_simplified();
  for (const auto& e : projectors) out.matrix(at(e.a, e.b), at(e.a, e.b)) = scale * e.num / e.den;
  for (const auto& f : detail::one_pair_flips()) {
    const double v = scale * f.num / f.den;
    out.matrix(at(f.a, f.b), at(f.c, f.d)) = v;
    out.matrix(at(f.c, f.d), at(f.a, f.b)) = v;
  }
  if (form == PairForm::Simplified) out.offset = scale * 0.75;
  return out;
}

struct HamiltonianTerms {
  Sector sector = Sector::Half;
  int n_sites = 0;
  PairForm form = PairForm::Original;
  Matrix plaquette;                          // U_n, identical on every site
  std::vector<Eigen::VectorXd> electric_local;  // E^2_n per site
  PairTerm electric_pair;                    // E^2_{n,n+1}, identical on every bond
  double x = 0.0;
  double offset = 0.0;  // total constant removed: pair offset times number of bonds

  int n_bonds() const { return n_sites - 1; }
};

inline HamiltonianTerms build_terms(const ModelParams& params, PairForm form) {
  HamiltonianTerms t;
  t.sector = params.sector;
  t.n_sites = params.n_plaquettes;
  t.form = form;
  t.x = params.x;
  t.plaquette = build_plaquette_op(params.sector);
  for (int n = 0; n < params.n_plaquettes; ++n) {
    t.electric_local.push_back(build_local_electric(params.sector, params, n));
  }
  t.electric_pair = build_pair_electric(params.sector, params, form);
  t.offset = t.electric_pair.offset * t.n_bonds();
  return t;
}

inline HamiltonianTerms build_terms(const ModelParams& params) {
  return build_terms(params, default_pair_form(params.sector));
}

// Dense H = sum_n E^2_n + sum_n E^2_{n,n+1} - x sum_n U_n.
inline Matrix assemble_hamiltonian(const ModelParams& params, PairForm form) {
  params.validate();
  const auto reg = params.reg();
  const auto terms = build_terms(params, form);
  const int d = params.dim();
  const auto dim = static_cast<Eigen::Index>(reg.size());
  Matrix h = Matrix::Zero(dim, dim);
  for (std::size_t k = 0; k < reg.size(); ++k) {
    const auto col = static_cast<Eigen::Index>(k);
    for (int n = 0; n < params.n_plaquettes; ++n) {
      const int dk = reg.digit(k, n);
      const std::size_t stride = reg.stride(n);
      h(col, col) += terms.electric_local[static_cast<std::size_t>(n)](dk);
      if (params.x != 0.0) {
        for (int r = 0; r < d; ++r) {
          const complex u = terms.plaquette(r, dk);
          if (u == 0.0) continue;
          const auto row = static_cast<Eigen::Index>(k + (r - dk) * static_cast<std::ptrdiff_t>(stride));
          h(row, col) += -params.x * u;
        }
      }
    }
    for (int n = 0; n + 1 < params.n_plaquettes; ++n) {
      const int da = reg.digit(k, n);
      const int db = reg.digit(k, n + 1);
      const int c = da * d + db;
      for (int r = 0; r < d * d; ++r) {
        const complex v = terms.electric_pair.matrix(r, c);
        if (v == 0.0) continue;
        const int ra = r / d;
        const int rb = r % d;
        const auto row = static_cast<Eigen::Index>(
            k + (ra - da) * static_cast<std::ptrdiff_t>(reg.stride(n)) +
            (rb - db) * static_cast<std::ptrdiff_t>(reg.stride(n + 1)));
        h(row, col) += v;
      }
    }
  }
  return h;
}

inline Matrix assemble_hamiltonian(const ModelParams& params) {
  return assemble_hamiltonian(params, default_pair_form(params.sector));
}

// x = 0 energy of a configuration: local plus pair diagonal entries (original
// pair form, so no offset is removed).
inline double diagonal_config_energy(const BasisState& state, const ModelParams& params,
                                     PairForm form = PairForm::Original) {
  const int d = params.dim();
  if (static_cast<int>(state.size()) != params.n_plaquettes) {
    throw InvalidBasisState("state has " + std::to_string(state.size()) + " digits, chain has " +
                            std::to_string(params.n_plaquettes));
  }
  for (int v : state.digits) {
    if (v < 0 || v >= d) throw InvalidBasisState("digit " + std::to_string(v) + " outside sector");
  }
  const auto pair = build_pair_electric(params.sector, params, form);
  double e = 0.0;
  for (int n = 0; n < params.n_plaquettes; ++n) {
    e += build_local_electric(params.sector, params, n)(state[static_cast<std::size_t>(n)]);
  }
  for (int n = 0; n + 1 < params.n_plaquettes; ++n) {
    const int idx = state[static_cast<std::size_t>(n)] * d + state[static_cast<std::size_t>(n) + 1];
    e += pair.matrix(idx, idx).real();
  }
  return e;
}

inline double resonance_ratio(int n_plaquettes) {
  if (n_plaquettes < 2) throw NoResonance("a string needs at least two plaquettes");
  return 2.0 * n_plaquettes / 3.0 - 1.0;
}

// Inverse of resonance_ratio: the (possibly fractional) string length that is
// resonant at g_perp^2 / g_par^2 = ratio.
inline double plaquettes_for_ratio(double ratio) { return 1.5 * (ratio + 1.0); }

// ---------------------------------------------------------------------------
// Connectivity and the gauge-physical subspace

// Flat indices reachable from `seeds` by repeated application of the term
// matrices (plaquette, local electric, pair electric). Supports are taken at
// unit couplings, so the result does not depend on the coupling values.
inline std::vector<std::size_t> krylov_closure(Sector sector, int n_sites,
                                               const std::vector<std::size_t>& seeds) {
  ModelParams unit{1.0, 1.0, 1.0, n_sites, sector};
  const auto reg = unit.reg();
  const int d = unit.dim();
  const Matrix plaq = build_plaquette_op(sector);
  const Matrix pair = build_pair_electric(sector, unit, PairForm::Original).matrix;
  constexpr double kSupport = 1e-12;
  std::vector<char> seen(reg.size(), 0);
  std::deque<std::size_t> frontier;
  for (auto s : seeds) {
    if (s >= reg.size()) throw InvalidBasisState("seed index out of range");
    if (!seen[s]) {
      seen[s] = 1;
      frontier.push_back(s);
    }
  }
  while (!frontier.empty()) {
    const std::size_t k = frontier.front();
    frontier.pop_front();
    auto visit = [&](std::size_t j) {
      if (!seen[j]) {
        seen[j] = 1;
        frontier.push_back(j);
      }
    };
    for (int n = 0; n < n_sites; ++n) {
      const int dk = reg.digit(k, n);
      for (int r = 0; r < d; ++r) {
        if (std::abs(plaq(r, dk)) > kSupport) visit(k + (r - dk) * static_cast<std::ptrdiff_t>(reg.stride(n)));
      }
    }
    for (int n = 0; n + 1 < n_sites; ++n) {
      const int da = reg.digit(k, n);
      const int db = reg.digit(k, n + 1);
      for (int r = 0; r < d * d; ++r) {
        if (std::abs(pair(r, da * d + db)) <= kSupport) continue;
        visit(k + (r / d - da) * static_cast<std::ptrdiff_t>(reg.stride(n)) +
              (r % d - db) * static_cast<std::ptrdiff_t>(reg.stride(n + 1)));
      }
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < seen.size(); ++k) {
    if (seen[k]) out.push_back(k);
  }
  return out;
}

using DigitPair = std::pair<int, int>;

struct PhysicalSubspace {
  Sector sector = Sector::Half;
  MixedRadixRegister reg;
  std::vector<std::size_t> global_set;      // sorted flat indices
  std::vector<char> mask;                   // mask[k] != 0 iff k in global_set
  std::vector<std::set<DigitPair>> bond_pairs;  // per bond, digit pairs seen there
  std::set<DigitPair> pair_set;             // union over bonds

  bool contains(std::size_t index) const { return index < mask.size() && mask[index] != 0; }
  bool contains(const BasisState& s) const { return contains(reg.encode(s)); }
  std::size_t size() const { return global_set.size(); }

  // Orthogonal projector onto span(global_set), as a dense matrix.
  Matrix projector() const {
    const auto dim = static_cast<Eigen::Index>(reg.size());
    Matrix p = Matrix::Zero(dim, dim);
    for (auto k : global_set) p(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = 1.0;
    return p;
  }
};

inline PhysicalSubspace physical_subspace(const ModelParams& params, const std::vector<BasisState>& seeds) {
  if (seeds.empty()) throw InvalidArgument("physical_subspace needs at least one seed state");
  PhysicalSubspace ps;
  ps.sector = params.sector;
  ps.reg = params.reg();
  std::vector<std::size_t> seed_idx;
  for (const auto& s : seeds) seed_idx.push_back(ps.reg.encode(s));
  ps.global_set = krylov_closure(params.sector, params.n_plaquettes, seed_idx);
  ps.mask.assign(ps.reg.size(), 0);
  ps.bond_pairs.resize(static_cast<std::size_t>(params.n_plaquettes - 1));
  for (auto k : ps.global_set) {
    ps.mask[k] = 1;
    for (int n = 0; n + 1 < params.n_plaquettes; ++n) {
      const DigitPair p{ps.reg.digit(k, n), ps.reg.digit(k, n + 1)};
      ps.bond_pairs[static_cast<std::size_t>(n)].insert(p);
      ps.pair_set.insert(p);
    }
  }
  return ps;
}

// ---------------------------------------------------------------------------
// Spatial reflection

// Reflection about the ladder centre: reverse the site order, then relabel
// each digit. The relabeling is found by search over digit permutations, as
// the one that leaves every term matrix invariant.
struct Reflection {
  std::vector<int> relabel;

  BasisState apply(const BasisState& s) const {
    std::vector<int> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) out[i] = relabel.at(static_cast<std::size_t>(s[s.size() - 1 - i]));
    return BasisState(std::move(out));
  }

  // Permutation matrix R with R|s> = |apply(s)>.
  Matrix matrix(const MixedRadixRegister& reg) const {
    const auto dim = static_cast<Eigen::Index>(reg.size());
    Matrix r = Matrix::Zero(dim, dim);
    for (std::size_t k = 0; k < reg.size(); ++k) {
      r(static_cast<Eigen::Index>(reg.encode(apply(reg.decode(k)))), static_cast<Eigen::Index>(k)) = 1.0;
    }
    return r;
  }

  bool is_identity_relabel() const {
    for (std::size_t i = 0; i < relabel.size(); ++i) {
      if (relabel[i] != static_cast<int>(i)) return false;
    }
    return true;
  }
};

inline Reflection derive_reflection(Sector sector) {
  const int d = local_dimension(sector);
  // Generic couplings so that accidental coefficient coincidences cannot
  // admit a spurious relabeling.
  const ModelParams probe{1.0, 1.3183, 0.7429, 3, sector};
  const Matrix plaq = build_plaquette_op(sector);
  const Eigen::VectorXd bulk = build_local_electric(sector, probe, 1);
  const Eigen::VectorXd edge = build_local_electric(sector, probe, 0);
  const Matrix pair = build_pair_electric(sector, probe, PairForm::Original).matrix;
  std::vector<int> perm(static_cast<std::size_t>(d));
  std::iota(perm.begin(), perm.end(), 0);
  std::optional<std::vector<int>> best;
  int best_moved = d + 1;
  do {
    bool ok = true;
    for (int a = 0; a < d && ok; ++a) {
      const int pa = perm[static_cast<std::size_t>(a)];
      ok = bulk(pa) == bulk(a) && edge(pa) == edge(a);
      for (int b = 0; b < d && ok; ++b) ok = plaq(pa, perm[static_cast<std::size_t>(b)]) == plaq(a, b);
    }
    for (int r = 0; r < d * d && ok; ++r) {
      const int ra = r / d, rb = r % d;
      const int rr = perm[static_cast<std::size_t>(rb)] * d + perm[static_cast<std::size_t>(ra)];
      for (int c = 0; c < d * d && ok; ++c) {
        const int ca = c / d, cb = c % d;
        const int cc = perm[static_cast<std::size_t>(cb)] * d + perm[static_cast<std::size_t>(ca)];
        ok = pair(rr, cc) == pair(r, c);
      }
    }
    if (!ok) continue;
    int moved = 0;
    for (int a = 0; a < d; ++a) moved += perm[static_cast<std::size_t>(a)] != a;
    if (moved < best_moved) {
      best = perm;
      best_moved = moved;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  if (!best) throw IdentificationError("no digit relabeling makes the chain reflection symmetric");
  return Reflection{*best};
}

// ---------------------------------------------------------------------------
// Named string configurations

struct StringStates {
  Sector sector = Sector::Half;
  BasisState straight;                  // unbroken string |S>
  std::optional<BasisState> broken;     // |B>, integer sector only
  // Mirror pair of glueball-dressed strings used for the |+-> superpositions
  // in the integer sector; first < second lexicographically.
  std::optional<std::pair<BasisState, BasisState>> dressed;
  std::vector<BasisState> path_states;  // states on shortest S -> B hop paths
};

namespace detail {

inline std::array<std::pair<double, double>, 2> probe_couplings() {
  // Two generic (g_par2, g_perp2) pairs; fixed seed keeps identification reproducible.
  std::mt19937_64 rng(0x5eed5u);
  std::uniform_real_distribution<double> u(0.55, 1.95);
  std::array<std::pair<double, double>, 2> out;
  for (auto& p : out) p = {u(rng), u(rng)};
  return out;
}

inline std::vector<int> hop_distances(Sector sector, int n_sites, std::size_t from) {
  ModelParams unit{1.0, 1.0, 1.0, n_sites, sector};
  const auto reg = unit.reg();
  const int d = unit.dim();
  const Matrix plaq = build_plaquette_op(sector);
  const Matrix pair = build_pair_electric(sector, unit, PairForm::Original).matrix;
  std::vector<int> dist(reg.size(), -1);
  std::deque<std::size_t> q{from};
  dist[from] = 0;
  while (!q.empty()) {
    const auto k = q.front();
    q.pop_front();
    auto visit = [&](std::size_t j) {
      if (dist[j] < 0) {
        dist[j] = dist[k] + 1;
        q.push_back(j);
      }
    };
    for (int n = 0; n < n_sites; ++n) {
      const int dk = reg.digit(k, n);
      for (int r = 0; r < d; ++r) {
        if (r != dk && std::abs(plaq(r, dk)) > 1e-12) visit(k + (r - dk) * static_cast<std::ptrdiff_t>(reg.stride(n)));
      }
    }
    for (int n = 0; n + 1 < n_sites; ++n) {
      const int da = reg.digit(k, n), db = reg.digit(k, n + 1);
      for (int r = 0; r < d * d; ++r) {
        if (r == da * d + db || std::abs(pair(r, da * d + db)) <= 1e-12) continue;
        visit(k + (r / d - da) * static_cast<std::ptrdiff_t>(reg.stride(n)) +
              (r % d - db) * static_cast<std::ptrdiff_t>(reg.stride(n + 1)));
      }
    }
  }
  return dist;
}

}  // namespace detail

inline StringStates identify_string_states(const ModelParams& params) {
  if (params.n_plaquettes < 2) throw InvalidArgument("n_plaquettes must be >= 2");
  const auto reg = params.reg();
  const int n = params.n_plaquettes;
  const auto probes = detail::probe_couplings();
  constexpr double tol = 1e-9;

  auto energy_at = [&](const BasisState& s, std::pair<double, double> g) {
    ModelParams p = params;
    p.g_par2 = g.first;
    p.g_perp2 = g.second;
    return diagonal_config_energy(s, p);
  };
  // Filter candidates against the first probe, then the second if ambiguous.
  auto match = [&](const std::vector<BasisState>& pool, auto&& expected) {
    std::vector<BasisState> hits;
    for (const auto& s : pool) {
      if (std::abs(energy_at(s, probes[0]) - expected(probes[0])) < tol) hits.push_back(s);
    }
    if (hits.size() > 1) {
      std::vector<BasisState> refined;
      for (const auto& s : hits) {
        if (std::abs(energy_at(s, probes[1]) - expected(probes[1])) < tol) refined.push_back(s);
      }
      hits = std::move(refined);
    }
    return hits;
  };

  std::vector<BasisState> uniform_bulk;
  std::vector<BasisState> all;
  for (std::size_t k = 0; k < reg.size(); ++k) {
    auto s = reg.decode(k);
    bool uniform = true;
    for (int i = 2; i + 1 < n; ++i) uniform = uniform && s[static_cast<std::size_t>(i)] == s[1];
    if (n <= 2) uniform = s[0] == s[1];
    if (uniform) uniform_bulk.push_back(s);
    all.push_back(std::move(s));
  }

  StringStates out;
  out.sector = params.sector;
  const double tension = params.sector == Sector::Half ? 3.0 / 8.0 : 1.0;
  auto straight = match(uniform_bulk, [&](auto g) { return tension * g.first * n; });
  if (straight.size() != 1) {
    throw IdentificationError("expected one straight-string configuration, found " +
                              std::to_string(straight.size()));
  }
  out.straight = straight.front();
  if (params.sector == Sector::Half) return out;

  // The broken string must lie in the same gauge sector as |S>.
  const auto component = krylov_closure(params.sector, n, {reg.encode(out.straight)});
  std::vector<BasisState> reachable;
  for (auto k : component) reachable.push_back(reg.decode(k));
  auto broken = match(reachable, [&](auto g) { return 1.5 * (g.first + g.second); });
  if (broken.size() != 1) {
    throw IdentificationError("expected one broken-string configuration, found " +
                              std::to_string(broken.size()));
  }
  out.broken = broken.front();

  const auto ks = reg.encode(out.straight);
  const auto kb = reg.encode(*out.broken);
  const auto from_s = detail::hop_distances(params.sector, n, ks);
  const auto from_b = detail::hop_distances(params.sector, n, kb);
  const int length = from_s[kb];
  const Reflection refl = derive_reflection(params.sector);
  struct Candidate {
    double energy;
    int dist_from_s;
    BasisState lo, hi;
  };
  std::vector<Candidate> cands;
  for (std::size_t k = 0; k < reg.size(); ++k) {
    if (from_s[k] < 0 || from_b[k] < 0 || from_s[k] + from_b[k] != length || k == ks || k == kb) continue;
    auto s = reg.decode(k);
    out.path_states.push_back(s);
    auto m = refl.apply(s);
    if (m == s || m < s) continue;  // self-mirror, or pair already recorded from its partner
    cands.push_back({diagonal_config_energy(s, params), from_s[k], s, m});
  }
  if (cands.empty()) throw IdentificationError("no mirror pair of intermediate configurations");
  std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (std::abs(a.energy - b.energy) > 1e-12) return a.energy < b.energy;
    if (a.dist_from_s != b.dist_from_s) return a.dist_from_s > b.dist_from_s;
    return a.lo < b.lo;
  });
  out.dressed = std::make_pair(cands.front().lo, cands.front().hi);
  return out;
}

// Neighbour pairs of the integer- or half-integer-sector chain away from the
// boundaries: the pair set of the middle bond of a four-plaquette chain.
inline std::set<DigitPair> bulk_pair_set(Sector sector) {
  ModelParams p{1.0, 1.0, 1.0, 4, sector};
  const auto s = identify_string_states(p);
  const auto ps = physical_subspace(p, {s.straight});
  return ps.bond_pairs[1];
}

}  // namespace bubblechain
