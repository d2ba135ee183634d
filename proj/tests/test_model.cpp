#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "bubblechain/linalg.hpp"
#include "bubblechain/model.hpp"

using namespace bubblechain;

namespace {

Matrix golden(const std::string& name) {
  std::ifstream in(std::string(GOLDEN_DIR) + "/" + name + ".txt");
  EXPECT_TRUE(in.good()) << name;
  return read_matrix_dump(in).matrix;
}

Matrix diag(const Eigen::VectorXd& v) { return v.cast<complex>().asDiagonal(); }

ModelParams twos(Sector s, int n = 3) { return ModelParams{1.0, 2.0, 2.0, n, s}; }

double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

TEST(Plaquette, HalfEntries) {
  const Matrix u = build_plaquette_op(Sector::Half);
  const double h = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(u(0, 1).real(), -h, 1e-15);
  EXPECT_NEAR(u(0, 3).real(), h, 1e-15);
  EXPECT_EQ(u(0, 0), complex(0.0));
}

TEST(Plaquette, OneEntries) {
  const Matrix u = build_plaquette_op(Sector::One);
  EXPECT_EQ(u(1, 0), complex(1.0));
  EXPECT_EQ(u(6, 5), complex(-1.0));
  EXPECT_EQ(u(0, 1), complex(1.0));
  EXPECT_EQ(u(3, 3), complex(0.0));
}

TEST(Plaquette, ExactlyHermitian) {
  for (auto s : {Sector::Half, Sector::One}) {
    const Matrix u = build_plaquette_op(s);
    EXPECT_EQ(u, u.adjoint().eval());
  }
}

TEST(Golden, TermMatrices) {
  EXPECT_LT(max_abs(build_plaquette_op(Sector::Half) - golden("plaquette_half")), 1e-15);
  EXPECT_LT(max_abs(build_plaquette_op(Sector::One) - golden("plaquette_one")), 1e-15);
  for (auto [s, tag] : {std::pair{Sector::Half, "half"}, std::pair{Sector::One, "one"}}) {
    const auto p = twos(s);
    EXPECT_LT(max_abs(diag(build_local_electric(s, p, 1)) - golden(std::string("local_") + tag + "_bulk")), 1e-15);
    EXPECT_LT(max_abs(diag(build_local_electric(s, p, 0)) - golden(std::string("local_") + tag + "_boundary")), 1e-15);
  }
  EXPECT_LT(max_abs(build_pair_electric(Sector::Half, twos(Sector::Half), PairForm::Original).matrix - golden("pair_half")),
            1e-15);
  EXPECT_LT(max_abs(build_pair_electric(Sector::One, twos(Sector::One), PairForm::Original).matrix -
                    golden("pair_one_original")),
            1e-15);
  EXPECT_LT(max_abs(build_pair_electric(Sector::One, twos(Sector::One), PairForm::Simplified).matrix -
                    golden("pair_one_simplified")),
            1e-15);
}

TEST(LocalElectric, Examples) {
  ModelParams p{0.0, 2.0, 2.0, 3, Sector::Half};
  auto bulk = build_local_electric(Sector::Half, p, 1);
  Eigen::VectorXd want(4);
  want << 0.75, 0.75, 2.75, 2.75;
  EXPECT_LT((bulk - want).cwiseAbs().maxCoeff(), 1e-15);

  p.sector = Sector::One;
  auto edge = build_local_electric(Sector::One, p, 0);
  Eigen::VectorXd a(8), b(8);
  a << 0, 1.5, 4, 1.5, 1.5, 2, 1.5, 2;
  b << 0, 0.75, 2, 0.75, 0.75, 0, 0.75, 2;
  EXPECT_LT((edge - (a + b)).cwiseAbs().maxCoeff(), 1e-15);
  // Both ends carry the same boundary term.
  EXPECT_EQ(edge, build_local_electric(Sector::One, p, 2));
}

TEST(LocalElectric, ZeroCouplingsAndRange) {
  ModelParams p{0.0, 0.0, 0.0, 3, Sector::One};
  EXPECT_EQ(build_local_electric(Sector::One, p, 0).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(build_local_electric(Sector::Half, p, 2).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(build_local_electric(Sector::One, p, 3), IndexError);
  EXPECT_THROW(build_local_electric(Sector::One, p, -1), IndexError);
}

TEST(PairElectric, OneOriginalEntries) {
  ModelParams p{0.0, 1.0, 1.3, 3, Sector::One};
  const auto t = build_pair_electric(Sector::One, p, PairForm::Original);
  const double s = p.g_perp2 / 2.0;
  EXPECT_NEAR(t.matrix(0 * 8 + 2, 0 * 8 + 2).real(), s * 2.0, 1e-15);
  EXPECT_NEAR(t.matrix(1 * 8 + 1, 3 * 8 + 4).real(), s * 1.0, 1e-15);
  EXPECT_EQ(t.offset, 0.0);
}

TEST(PairElectric, OneSimplifiedEntries) {
  ModelParams p{0.0, 1.0, 1.3, 3, Sector::One};
  const auto t = build_pair_electric(Sector::One, p, PairForm::Simplified);
  const double s = p.g_perp2 / 2.0;
  EXPECT_NEAR(t.matrix(0, 0).real(), -s * 0.75, 1e-15);
  EXPECT_NEAR(t.matrix(2, 2).real(), s * 1.25, 1e-15);
  EXPECT_NEAR(t.offset, s * 0.75, 1e-15);
}

TEST(PairElectric, OffsetOnPhysicalPairs) {
  ModelParams p{0.0, 1.0, 1.7, 3, Sector::One};
  const auto orig = build_pair_electric(Sector::One, p, PairForm::Original);
  const auto simp = build_pair_electric(Sector::One, p, PairForm::Simplified);
  const auto pairs = bulk_pair_set(Sector::One);
  ASSERT_EQ(pairs.size(), 32u);
  double worst = 0.0;
  for (auto [a, b] : pairs) {
    for (auto [c, d] : pairs) {
      const int r = a * 8 + b, col = c * 8 + d;
      const complex want = simp.matrix(r, col) + (r == col ? simp.offset : 0.0);
      worst = std::max(worst, std::abs(orig.matrix(r, col) - want));
    }
  }
  EXPECT_LT(worst, 1e-14);
}

TEST(PairElectric, HalfSimplifiedUnsupported) {
  EXPECT_THROW(build_pair_electric(Sector::Half, twos(Sector::Half), PairForm::Simplified), UnsupportedOption);
}

TEST(Hamiltonian, HermitianBothSectors) {
  for (auto s : {Sector::Half, Sector::One}) {
    ModelParams p{0.83, 1.37, 0.61, 3, s};
    EXPECT_LT(hermiticity_defect(assemble_hamiltonian(p)), 1e-12);
    EXPECT_LT(hermiticity_defect(assemble_hamiltonian(p, PairForm::Original)), 1e-12);
  }
}

TEST(Hamiltonian, HalfDiagonalAtZeroX) {
  ModelParams p{0.0, 1.3, 0.7, 3, Sector::Half};
  Matrix h = assemble_hamiltonian(p);
  h.diagonal().setZero();
  EXPECT_EQ(max_abs(h), 0.0);
}

// In the integer sector the pair term carries flips, so x = 0 leaves only
// those off-diagonal entries.
TEST(Hamiltonian, OneOffDiagonalAtZeroXIsPairFlipsOnly) {
  ModelParams p{0.0, 1.3, 0.7, 3, Sector::One};
  Matrix h = assemble_hamiltonian(p, PairForm::Original);
  const auto reg = p.reg();
  const auto pair = build_pair_electric(Sector::One, p, PairForm::Original).matrix;
  for (std::size_t r = 0; r < reg.size(); ++r) {
    for (std::size_t c = 0; c < reg.size(); ++c) {
      if (r == c) continue;
      const auto v = h(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      if (v == 0.0) continue;
      const auto sr = reg.decode(r), sc = reg.decode(c);
      int bond = -1;
      for (int n = 0; n < 2; ++n) {
        bool rest = true;
        for (int k = 0; k < 3; ++k)
          if (k != n && k != n + 1) rest = rest && sr[static_cast<std::size_t>(k)] == sc[static_cast<std::size_t>(k)];
        if (rest) bond = n;
      }
      ASSERT_GE(bond, 0);
      const auto b = static_cast<std::size_t>(bond);
      EXPECT_EQ(v, pair(sr[b] * 8 + sr[b + 1], sc[b] * 8 + sc[b + 1]));
    }
  }
}

TEST(Hamiltonian, OneDimensionAndRealSpectrum) {
  ModelParams p{0.7, 1.0, 1.0, 3, Sector::One};
  const Matrix h = assemble_hamiltonian(p);
  EXPECT_EQ(h.rows(), 512);
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  EXPECT_EQ(es.info(), Eigen::Success);
  EXPECT_EQ(es.eigenvalues().size(), 512);
}

TEST(Hamiltonian, DimensionGuard) {
  ModelParams p{0.7, 1.0, 1.0, 7, Sector::One};
  EXPECT_THROW(assemble_hamiltonian(p), TooLarge);
}

TEST(Hamiltonian, StraightStringTension) {
  for (int n : {3, 4}) {
    ModelParams p{0.0, 1.37, 0.61, n, Sector::One};
    const auto s = identify_string_states(p).straight;
    const Matrix h = assemble_hamiltonian(p, PairForm::Original);
    const auto k = static_cast<Eigen::Index>(p.reg().encode(s));
    EXPECT_NEAR(h(k, k).real(), p.g_par2 * n, 1e-12);
  }
}

TEST(DiagonalEnergy, Examples) {
  ModelParams half{0.0, 1.0, 0.9, 3, Sector::Half};
  EXPECT_NEAR(diagonal_config_energy(BasisState::from_label("111"), half), 9.0 / 8.0, 1e-15);

  ModelParams one{0.0, 1.21, 0.77, 3, Sector::One};
  const auto st = identify_string_states(one);
  EXPECT_NEAR(diagonal_config_energy(st.straight, one), one.g_par2 * 3, 1e-12);
  ASSERT_TRUE(st.broken.has_value());
  EXPECT_NEAR(diagonal_config_energy(*st.broken, one), 1.5 * (one.g_par2 + one.g_perp2), 1e-12);

  ModelParams zero{0.0, 0.0, 0.0, 3, Sector::One};
  EXPECT_EQ(diagonal_config_energy(st.straight, zero), 0.0);
}

TEST(DiagonalEnergy, LinearInCouplings) {
  std::mt19937_64 rng(11);
  for (auto s : {Sector::Half, Sector::One}) {
    ModelParams p{0.0, 0.9, 1.4, 3, s};
    ModelParams q = p;
    q.g_par2 *= 2.0;
    q.g_perp2 *= 2.0;
    const auto reg = p.reg();
    for (std::size_t k = 0; k < reg.size(); ++k) {
      const auto st = reg.decode(k);
      EXPECT_EQ(diagonal_config_energy(st, q), 2.0 * diagonal_config_energy(st, p));
    }
  }
}

TEST(Strings, HalfStraightIsAllOnes) {
  for (int n : {3, 4, 5}) {
    ModelParams p{0.0, 1.0, 1.0, n, Sector::Half};
    EXPECT_EQ(identify_string_states(p).straight, BasisState(std::vector<int>(static_cast<std::size_t>(n), 1)));
  }
}

// The dressed pair is the lowest-lying mirror pair at the given couplings, so
// it is coupling dependent; these are the string-breaking couplings.
TEST(Strings, OneThreePlaquettes) {
  ModelParams p{1.0, 2.0, 0.8, 3, Sector::One};
  const auto st = identify_string_states(p);
  EXPECT_EQ(st.straight.label(), "555");
  ASSERT_TRUE(st.broken);
  EXPECT_EQ(st.broken->label(), "403");
  ASSERT_TRUE(st.dressed);
  EXPECT_EQ(st.dressed->first.label(), "436");
  EXPECT_EQ(st.dressed->second.label(), "643");
}

TEST(Strings, ResonanceMakesEnergiesEqual) {
  for (int n : {3, 4, 5}) {
    ModelParams p{0.0, 0.8, 0.8 * resonance_ratio(n), n, Sector::One};
    const auto st = identify_string_states(p);
    EXPECT_NEAR(diagonal_config_energy(st.straight, p), diagonal_config_energy(*st.broken, p), 1e-12);
  }
}

TEST(Resonance, Ratio) {
  EXPECT_DOUBLE_EQ(resonance_ratio(3), 1.0);
  EXPECT_DOUBLE_EQ(resonance_ratio(6), 3.0);
  for (int n = 2; n < 12; ++n) EXPECT_NEAR(plaquettes_for_ratio(resonance_ratio(n)), n, 1e-12);
  EXPECT_THROW(resonance_ratio(1), NoResonance);
}

TEST(Params, Validation) {
  EXPECT_THROW((ModelParams{0.0, 1.0, 1.0, 1, Sector::One}.validate()), InvalidArgument);
  EXPECT_THROW((ModelParams{0.0, 0.0, 1.0, 3, Sector::One}.validate()), InvalidArgument);
  EXPECT_THROW((ModelParams{0.0, 1.0, -1.0, 3, Sector::One}.validate()), InvalidArgument);
  EXPECT_THROW(sector_from_string("two"), ConfigError);
  EXPECT_EQ(sector_from_string("half"), Sector::Half);
}

TEST(Physical, OnePairSetSizes) {
  EXPECT_EQ(bulk_pair_set(Sector::One).size(), 32u);
  ModelParams p{0.5, 1.0, 1.0, 3, Sector::One};
  const auto st = identify_string_states(p);
  const auto ps = physical_subspace(p, {st.straight});
  EXPECT_EQ(ps.size(), 36u);
  const auto bulk = bulk_pair_set(Sector::One);
  for (const auto& bond : ps.bond_pairs) {
    for (const auto& pr : bond) EXPECT_TRUE(bulk.count(pr)) << pr.first << pr.second;
  }
  EXPECT_TRUE(ps.contains(*st.broken));
  EXPECT_TRUE(ps.contains(st.dressed->first));
}

TEST(Physical, HalfSpansEverything) {
  ModelParams p{0.5, 1.0, 1.0, 3, Sector::Half};
  const auto ps = physical_subspace(p, {BasisState::from_label("111")});
  EXPECT_EQ(ps.size(), 64u);
}

TEST(Physical, EmptySeeds) {
  ModelParams p{0.5, 1.0, 1.0, 3, Sector::One};
  EXPECT_THROW(physical_subspace(p, {}), InvalidArgument);
}

TEST(Physical, NoLeakageAndCommutesWithProjector) {
  ModelParams p{0.73, 1.2, 0.9, 3, Sector::One};
  const auto st = identify_string_states(p);
  const auto ps = physical_subspace(p, {st.straight});
  const Matrix h = assemble_hamiltonian(p);
  const Matrix proj = ps.projector();
  EXPECT_LT(max_abs(h * proj - proj * h), 1e-12);
  std::mt19937_64 rng(12);
  std::normal_distribution<double> nd;
  const Matrix comp = Matrix::Identity(h.rows(), h.cols()) - proj;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Vector v = Vector::Zero(h.rows());
    for (auto k : ps.global_set) v(static_cast<Eigen::Index>(k)) = complex(nd(rng), nd(rng));
    v.normalize();
    worst = std::max(worst, (comp * (h * v)).norm());
  }
  EXPECT_LT(worst, 1e-12);
}

TEST(Physical, SimplifiedShiftsByOffset) {
  ModelParams p{0.73, 1.2, 0.9, 3, Sector::One};
  const auto st = identify_string_states(p);
  const auto ps = physical_subspace(p, {st.straight});
  const Matrix a = assemble_hamiltonian(p, PairForm::Original);
  const Matrix b = assemble_hamiltonian(p, PairForm::Simplified);
  const double offset = build_terms(p, PairForm::Simplified).offset;
  const auto n = static_cast<Eigen::Index>(ps.size());
  Matrix ra(n, n), rb(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto gi = static_cast<Eigen::Index>(ps.global_set[static_cast<std::size_t>(i)]);
      const auto gj = static_cast<Eigen::Index>(ps.global_set[static_cast<std::size_t>(j)]);
      ra(i, j) = a(gi, gj);
      rb(i, j) = b(gi, gj);
    }
  EXPECT_LT(max_abs(ra - rb - offset * Matrix::Identity(n, n)), 1e-12);
  Eigen::SelfAdjointEigenSolver<Matrix> ea(ra), eb(rb);
  EXPECT_LT((ea.eigenvalues() - eb.eigenvalues() - Eigen::VectorXd::Constant(n, offset)).cwiseAbs().maxCoeff(), 1e-10);
  // Eigenvectors agree up to phase (spectrum is nondegenerate at generic couplings).
  for (Eigen::Index k = 0; k < n; ++k) {
    EXPECT_NEAR(std::abs(ea.eigenvectors().col(k).dot(eb.eigenvectors().col(k))), 1.0, 1e-10);
  }
}

TEST(Reflection, CommutesWithHamiltonian) {
  for (auto s : {Sector::Half, Sector::One}) {
    const auto r = derive_reflection(s);
    ModelParams p{0.83, 1.37, 0.61, 3, s};
    const Matrix h = assemble_hamiltonian(p);
    const Matrix rm = r.matrix(p.reg());
    EXPECT_LT(max_abs(h * rm - rm * h), 1e-12);
  }
  EXPECT_TRUE(derive_reflection(Sector::Half).is_identity_relabel());
  EXPECT_EQ(derive_reflection(Sector::One).relabel, (std::vector<int>{0, 1, 2, 4, 3, 5, 6, 7}));
}

TEST(Reflection, ExchangesDressedPair) {
  ModelParams p{0.5, 1.0, 1.0, 3, Sector::One};
  const auto st = identify_string_states(p);
  const auto r = derive_reflection(Sector::One);
  EXPECT_EQ(r.apply(st.dressed->first), st.dressed->second);
  EXPECT_EQ(r.apply(st.straight), st.straight);
}
