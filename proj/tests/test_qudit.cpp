#include <gtest/gtest.h>

#include <random>

#include "bubblechain/linalg.hpp"
#include "bubblechain/model.hpp"
#include "bubblechain/qudit.hpp"

using namespace bubblechain;

namespace {

Matrix random_unitary(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Matrix a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = complex(n(rng), n(rng));
  Eigen::HouseholderQR<Matrix> qr(a);
  return qr.householderQ();
}

Matrix random_matrix(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Matrix a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = complex(n(rng), n(rng));
  return a;
}

StateVector random_state(const MixedRadixRegister& reg, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Vector v(static_cast<Eigen::Index>(reg.size()));
  for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = complex(n(rng), n(rng));
  v.normalize();
  return StateVector(reg, v);
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Dense operator for op on `site` of a uniform chain, built by Kronecker
// products with site 0 leftmost.
Matrix embed_local(const Matrix& op, int site, int d, int n) {
  Matrix out = Matrix::Identity(1, 1);
  for (int s = 0; s < n; ++s) out = kron(out, s == site ? op : Matrix::Identity(d, d).eval());
  return out;
}

}  // namespace

TEST(Encode, Examples) {
  auto r8 = MixedRadixRegister::uniform(8, 3);
  EXPECT_EQ(r8.encode(BasisState({0, 0, 0})), 0u);
  EXPECT_EQ(r8.encode(BasisState({4, 1, 3})), 267u);
  auto r4 = MixedRadixRegister::uniform(4, 3);
  EXPECT_EQ(r4.encode(BasisState({1, 1, 1})), 21u);
}

TEST(Encode, BruteForceBijection) {
  for (int d : {4, 8}) {
    auto reg = MixedRadixRegister::uniform(d, 3);
    std::size_t k = 0;
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        for (int c = 0; c < d; ++c, ++k) {
          EXPECT_EQ(reg.encode(BasisState({a, b, c})), k);
          EXPECT_EQ(reg.decode(k), BasisState({a, b, c}));
        }
    EXPECT_EQ(k, reg.size());
  }
}

TEST(Encode, MixedDims) {
  MixedRadixRegister reg({4, 8, 4});
  EXPECT_EQ(reg.size(), 128u);
  for (std::size_t k = 0; k < reg.size(); ++k) EXPECT_EQ(reg.encode(reg.decode(k)), k);
  EXPECT_EQ(reg.encode(BasisState({3, 7, 3})), 127u);
}

TEST(Encode, Errors) {
  auto reg = MixedRadixRegister::uniform(4, 3);
  EXPECT_THROW(reg.encode(BasisState({4, 0, 0})), InvalidBasisState);
  EXPECT_THROW(reg.encode(BasisState({0, -1, 0})), InvalidBasisState);
  EXPECT_THROW(reg.encode(BasisState({0, 0})), InvalidBasisState);
  EXPECT_THROW(MixedRadixRegister({4, 1}), ShapeError);
  EXPECT_THROW(BasisState::from_label("4a1"), InvalidBasisState);
}

TEST(Encode, DimensionGuard) {
  EXPECT_NO_THROW(MixedRadixRegister::uniform(2, 20));
  EXPECT_THROW(MixedRadixRegister::uniform(2, 21), TooLarge);
  EXPECT_THROW(MixedRadixRegister::uniform(8, 7), TooLarge);
}

TEST(Labels, RoundTrip) {
  EXPECT_EQ(BasisState::from_label("413").label(), "413");
  EXPECT_EQ(BasisState::from_label("413").digits, (std::vector<int>{4, 1, 3}));
}

TEST(ApplyLocal, IdentityIsBitwiseNoop) {
  std::mt19937_64 rng(1);
  auto reg = MixedRadixRegister::uniform(8, 3);
  auto psi = random_state(reg, rng);
  auto out = apply_local(psi, 1, Matrix::Identity(8, 8));
  for (Eigen::Index k = 0; k < psi.amplitudes().size(); ++k) {
    EXPECT_EQ(out.amplitudes()(k), psi.amplitudes()(k));
  }
}

TEST(ApplyLocal, PlaquetteOnZero) {
  auto reg = MixedRadixRegister::uniform(4, 1);
  auto out = apply_local(StateVector::basis(reg, BasisState({0})), 0, build_plaquette_op(Sector::Half));
  const double h = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(std::abs(out.amplitudes()(0)), 0.0, 1e-15);
  EXPECT_NEAR(out.amplitudes()(1).real(), -h, 1e-15);
  EXPECT_NEAR(std::abs(out.amplitudes()(2)), 0.0, 1e-15);
  EXPECT_NEAR(out.amplitudes()(3).real(), h, 1e-15);
}

TEST(ApplyLocal, MatchesKroneckerOracle) {
  std::mt19937_64 rng(2);
  auto reg = MixedRadixRegister::uniform(8, 3);
  for (int site = 0; site < 3; ++site) {
    auto psi = random_state(reg, rng);
    Matrix u = random_unitary(8, rng);
    Vector expect = embed_local(u, site, 8, 3) * psi.amplitudes();
    auto out = apply_local(psi, site, u);
    EXPECT_LT((out.amplitudes() - expect).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ApplyLocal, ShapeErrors) {
  auto reg = MixedRadixRegister::uniform(4, 3);
  auto psi = StateVector::basis(reg, BasisState({0, 0, 0}));
  EXPECT_THROW(apply_local(psi, 0, Matrix::Identity(8, 8)), ShapeError);
  EXPECT_THROW(apply_local(psi, 3, Matrix::Identity(4, 4)), ShapeError);
  EXPECT_THROW(StateVector(reg, Vector::Zero(10)), ShapeError);
}

TEST(ApplyLocal, PreservesNormAndCommutesOnDisjointSites) {
  std::mt19937_64 rng(3);
  auto reg = MixedRadixRegister::uniform(8, 3);
  for (int trial = 0; trial < 10; ++trial) {
    auto psi = random_state(reg, rng);
    Matrix u = random_unitary(8, rng), v = random_unitary(8, rng);
    EXPECT_NEAR(apply_local(psi, 0, u).norm(), psi.norm(), 1e-12);
    auto uv = apply_local(apply_local(psi, 0, u), 2, v);
    auto vu = apply_local(apply_local(psi, 2, v), 0, u);
    EXPECT_LT((uv.amplitudes() - vu.amplitudes()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ApplyTwoSite, IdentityAndZeroTime) {
  std::mt19937_64 rng(4);
  auto reg = MixedRadixRegister::uniform(8, 3);
  auto psi = random_state(reg, rng);
  auto out = apply_two_site(psi, 0, 1, Matrix::Identity(64, 64));
  EXPECT_LT((out.amplitudes() - psi.amplitudes()).cwiseAbs().maxCoeff(), 1e-15);
  ModelParams p{1.0, 2.0, 0.8, 3, Sector::One};
  Matrix u0 = expm_hermitian(build_pair_electric(Sector::One, p, PairForm::Original).matrix, 0.0);
  out = apply_two_site(psi, 1, 2, u0);
  EXPECT_LT((out.amplitudes() - psi.amplitudes()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(ApplyTwoSite, MatchesKroneckerOracle) {
  std::mt19937_64 rng(5);
  auto reg = MixedRadixRegister::uniform(8, 3);
  auto psi = random_state(reg, rng);
  Matrix u = random_matrix(64, rng);
  Vector expect = kron(u, Matrix::Identity(8, 8)) * psi.amplitudes();
  auto out = apply_two_site(psi, 0, 1, u);
  EXPECT_LT((out.amplitudes() - expect).cwiseAbs().maxCoeff(), 1e-12);
  // Sites (1, 2).
  expect = kron(Matrix::Identity(8, 8), u) * psi.amplitudes();
  out = apply_two_site(psi, 1, 2, u);
  EXPECT_LT((out.amplitudes() - expect).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ApplyTwoSite, ReversedAndNonAdjacentSites) {
  std::mt19937_64 rng(6);
  auto reg = MixedRadixRegister::uniform(4, 3);
  auto psi = random_state(reg, rng);
  Matrix a = random_unitary(4, rng), b = random_unitary(4, rng);
  // Row index is digitA * dB + digitB, so (2, 0) with a (x) b puts a on site 2.
  auto out = apply_two_site(psi, 2, 0, kron(a, b));
  auto ref = apply_local(apply_local(psi, 2, a), 0, b);
  EXPECT_LT((out.amplitudes() - ref.amplitudes()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ApplyTwoSite, ProductEqualsSequentialLocals) {
  std::mt19937_64 rng(7);
  auto reg = MixedRadixRegister::uniform(8, 3);
  for (int trial = 0; trial < 5; ++trial) {
    auto psi = random_state(reg, rng);
    Matrix a = random_unitary(8, rng), b = random_unitary(8, rng);
    auto out = apply_two_site(psi, 1, 2, kron(a, b));
    auto ref = apply_local(apply_local(psi, 1, a), 2, b);
    EXPECT_LT((out.amplitudes() - ref.amplitudes()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ApplyTwoSite, Errors) {
  auto reg = MixedRadixRegister::uniform(4, 3);
  auto psi = StateVector::basis(reg, BasisState({0, 0, 0}));
  EXPECT_THROW(apply_two_site(psi, 1, 1, Matrix::Identity(16, 16)), InvalidSitePair);
  EXPECT_THROW(apply_two_site(psi, 0, 3, Matrix::Identity(16, 16)), InvalidSitePair);
  EXPECT_THROW(apply_two_site(psi, 0, 1, Matrix::Identity(8, 8)), ShapeError);
}

TEST(Populations, Examples) {
  auto reg = MixedRadixRegister::uniform(8, 3);
  auto pops = populations(StateVector::basis(reg, BasisState::from_label("413")));
  ASSERT_EQ(pops.size(), 1u);
  EXPECT_EQ(pops.begin()->first.label(), "413");
  EXPECT_EQ(pops.begin()->second, 1.0);

  auto one = MixedRadixRegister::uniform(6, 1);
  auto plus = StateVector::superposition(one, {{BasisState({2}), 1.0}, {BasisState({3}), 1.0}});
  auto p = populations(plus);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_NEAR(p.at(BasisState({2})), 0.5, 1e-15);
  EXPECT_NEAR(p.at(BasisState({3})), 0.5, 1e-15);

  std::mt19937_64 rng(8);
  auto psi = random_state(reg, rng);
  double total = 0.0;
  for (const auto& [s, v] : populations(psi)) total += v;
  EXPECT_NEAR(total, 1.0, 1e-10);
}

TEST(Superposition, ZeroNormRejected) {
  auto reg = MixedRadixRegister::uniform(4, 1);
  EXPECT_THROW(StateVector::superposition(reg, {{BasisState({1}), 1.0}, {BasisState({1}), -1.0}}), InvalidState);
}

TEST(MatrixDump, RoundTrip) {
  std::mt19937_64 rng(9);
  Matrix m = random_matrix(5, rng);
  std::stringstream ss;
  write_matrix_dump(ss, "m", m);
  auto back = read_matrix_dump(ss);
  EXPECT_EQ(back.name, "m");
  EXPECT_EQ(back.matrix, m);
}
