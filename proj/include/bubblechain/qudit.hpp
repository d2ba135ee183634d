#pragma once

// Mixed-radix qudit registers and dense state-vector kernels.
//
// Site 0 is the most significant digit, so the flat index of |d0 d1 ... d_{N-1}>
// is d0*s0 + d1*s1 + ... with s_i the product of the dimensions to the right
// of site i. Printed kets such as |413> read left to right in that order.

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <cstdlib>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bubblechain/errors.hpp"

namespace bubblechain {

using complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr std::size_t kDefaultMaxDimension = std::size_t{1} << 20;

// Upper bound on the total Hilbert-space dimension. BUBBLECHAIN_MAX_DIM
// overrides the default when set to a positive integer.
inline std::size_t max_dimension() {
  if (const char* env = std::getenv("BUBBLECHAIN_MAX_DIM")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return kDefaultMaxDimension;
}

// A configuration of digits, one per site. Ordered lexicographically with site
// 0 first, which coincides with flat-index order for a fixed register.
struct BasisState {
  std::vector<int> digits;

  BasisState() = default;
  explicit BasisState(std::vector<int> d) : digits(std::move(d)) {}

  // Parses a digit string such as "413". Only single-digit levels are
  // representable, which covers local dimensions up to 10.
  static BasisState from_label(const std::string& label) {
    std::vector<int> d;
    d.reserve(label.size());
    for (char c : label) {
      if (c < '0' || c > '9') {
        throw InvalidBasisState("label '" + label + "' is not a digit string");
      }
      d.push_back(c - '0');
    }
    return BasisState(std::move(d));
  }

  std::string label() const {
    std::string s;
    s.reserve(digits.size());
    for (int d : digits) s.push_back(static_cast<char>('0' + d));
    return s;
  }

  std::size_t size() const { return digits.size(); }
  int operator[](std::size_t i) const { return digits[i]; }

  friend auto operator<=>(const BasisState&, const BasisState&) = default;
};

class MixedRadixRegister {
 public:
  MixedRadixRegister() = default;

  explicit MixedRadixRegister(std::vector<int> dims) : dims_(std::move(dims)) {
    if (dims_.empty()) throw ShapeError("register needs at least one site");
    const std::size_t limit = max_dimension();
    strides_.assign(dims_.size(), 1);
    std::size_t total = 1;
    for (std::size_t i = dims_.size(); i-- > 0;) {
      if (dims_[i] < 2) {
        throw ShapeError("site " + std::to_string(i) + " has dimension " +
                         std::to_string(dims_[i]) + " (< 2)");
      }
      strides_[i] = total;
      if (total > limit / static_cast<std::size_t>(dims_[i])) {
        throw TooLarge("total dimension exceeds the guard of " +
                       std::to_string(limit));
      }
      total *= static_cast<std::size_t>(dims_[i]);
    }
    size_ = total;
  }

  static MixedRadixRegister uniform(int dim, int n_sites) {
    if (n_sites < 1) throw ShapeError("register needs at least one site");
    return MixedRadixRegister(std::vector<int>(static_cast<std::size_t>(n_sites), dim));
  }

  int n_sites() const { return static_cast<int>(dims_.size()); }
  int dim(int site) const { return dims_.at(static_cast<std::size_t>(site)); }
  std::size_t stride(int site) const { return strides_.at(static_cast<std::size_t>(site)); }
  std::size_t size() const { return size_; }
  const std::vector<int>& dims() const { return dims_; }

  std::size_t encode(std::span<const int> digits) const {
    if (digits.size() != dims_.size()) {
      throw InvalidBasisState("expected " + std::to_string(dims_.size()) +
                              " digits, got " + std::to_string(digits.size()));
    }
    std::size_t k = 0;
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      if (digits[i] < 0 || digits[i] >= dims_[i]) {
        throw InvalidBasisState("digit " + std::to_string(digits[i]) + " at site " +
                                std::to_string(i) + " outside [0, " +
                                std::to_string(dims_[i]) + ")");
      }
      k += static_cast<std::size_t>(digits[i]) * strides_[i];
    }
    return k;
  }

  std::size_t encode(const BasisState& s) const { return encode(std::span<const int>(s.digits)); }

  BasisState decode(std::size_t index) const {
    if (index >= size_) throw InvalidBasisState("index " + std::to_string(index) + " out of range");
    std::vector<int> d(dims_.size());
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      d[i] = static_cast<int>((index / strides_[i]) % static_cast<std::size_t>(dims_[i]));
    }
    return BasisState(std::move(d));
  }

  int digit(std::size_t index, int site) const {
    const auto s = static_cast<std::size_t>(site);
    return static_cast<int>((index / strides_[s]) % static_cast<std::size_t>(dims_[s]));
  }

  friend bool operator==(const MixedRadixRegister& a, const MixedRadixRegister& b) {
    return a.dims_ == b.dims_;
  }

 private:
  std::vector<int> dims_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

class StateVector {
 public:
  StateVector() = default;

  StateVector(MixedRadixRegister reg, Vector amplitudes)
      : reg_(std::move(reg)), amps_(std::move(amplitudes)) {
    if (static_cast<std::size_t>(amps_.size()) != reg_.size()) {
      throw ShapeError("amplitude vector has length " + std::to_string(amps_.size()) +
                       ", register needs " + std::to_string(reg_.size()));
    }
  }

  static StateVector basis(const MixedRadixRegister& reg, const BasisState& s) {
    Vector v = Vector::Zero(static_cast<Eigen::Index>(reg.size()));
    v(static_cast<Eigen::Index>(reg.encode(s))) = 1.0;
    return StateVector(reg, std::move(v));
  }

  // Normalized superposition sum_k w_k |s_k>. Duplicate states accumulate.
  static StateVector superposition(const MixedRadixRegister& reg,
                                   const std::vector<std::pair<BasisState, complex>>& terms) {
    Vector v = Vector::Zero(static_cast<Eigen::Index>(reg.size()));
    for (const auto& [s, w] : terms) v(static_cast<Eigen::Index>(reg.encode(s))) += w;
    const double n = v.norm();
    if (n == 0.0) throw InvalidState("superposition has zero norm");
    v /= n;
    return StateVector(reg, std::move(v));
  }

  const MixedRadixRegister& reg() const { return reg_; }
  const Vector& amplitudes() const { return amps_; }
  Vector& amplitudes() { return amps_; }
  std::size_t size() const { return reg_.size(); }
  double norm() const { return amps_.norm(); }

  complex amplitude(const BasisState& s) const {
    return amps_(static_cast<Eigen::Index>(reg_.encode(s)));
  }

 private:
  MixedRadixRegister reg_;
  Vector amps_;
};

// In-place |psi> <- (I x ... x U_site x ... x I)|psi>. U need not be unitary.
inline void apply_local_inplace(StateVector& state, int site, const Matrix& op) {
  const auto& reg = state.reg();
  if (site < 0 || site >= reg.n_sites()) {
    throw ShapeError("site " + std::to_string(site) + " outside register");
  }
  const int d = reg.dim(site);
  if (op.rows() != d || op.cols() != d) {
    throw ShapeError("local operator is " + std::to_string(op.rows()) + "x" +
                     std::to_string(op.cols()) + ", site dimension is " + std::to_string(d));
  }
  const std::size_t stride = reg.stride(site);
  const std::size_t block = stride * static_cast<std::size_t>(d);
  Vector& a = state.amplitudes();
  Vector in(d);
  for (std::size_t hi = 0; hi < reg.size(); hi += block) {
    for (std::size_t lo = 0; lo < stride; ++lo) {
      const std::size_t base = hi + lo;
      for (int k = 0; k < d; ++k) in(k) = a(static_cast<Eigen::Index>(base + k * stride));
      for (int r = 0; r < d; ++r) {
        complex acc = 0.0;
        for (int c = 0; c < d; ++c) acc += op(r, c) * in(c);
        a(static_cast<Eigen::Index>(base + r * stride)) = acc;
      }
    }
  }
}

inline StateVector apply_local(StateVector state, int site, const Matrix& op) {
  apply_local_inplace(state, site, op);
  return state;
}

// In-place two-site application. Operator rows/cols are indexed by
// digitA * dB + digitB regardless of which site is further left.
inline void apply_two_site_inplace(StateVector& state, int site_a, int site_b, const Matrix& op) {
  const auto& reg = state.reg();
  if (site_a == site_b) throw InvalidSitePair("sites must differ, both are " + std::to_string(site_a));
  if (site_a < 0 || site_a >= reg.n_sites() || site_b < 0 || site_b >= reg.n_sites()) {
    throw InvalidSitePair("site pair (" + std::to_string(site_a) + "," + std::to_string(site_b) +
                          ") outside register");
  }
  const int da = reg.dim(site_a);
  const int db = reg.dim(site_b);
  const int dd = da * db;
  if (op.rows() != dd || op.cols() != dd) {
    throw ShapeError("two-site operator is " + std::to_string(op.rows()) + "x" +
                     std::to_string(op.cols()) + ", expected " + std::to_string(dd));
  }
  const std::size_t sa = reg.stride(site_a);
  const std::size_t sb = reg.stride(site_b);
  std::vector<std::size_t> offsets(static_cast<std::size_t>(dd));
  for (int i = 0; i < da; ++i) {
    for (int j = 0; j < db; ++j) offsets[static_cast<std::size_t>(i * db + j)] = i * sa + j * sb;
  }
  Vector& a = state.amplitudes();
  Vector in(dd);
  for (std::size_t k = 0; k < reg.size(); ++k) {
    if (reg.digit(k, site_a) != 0 || reg.digit(k, site_b) != 0) continue;
    for (int q = 0; q < dd; ++q) in(q) = a(static_cast<Eigen::Index>(k + offsets[q]));
    for (int r = 0; r < dd; ++r) {
      complex acc = 0.0;
      for (int c = 0; c < dd; ++c) {
        const complex m = op(r, c);
        if (m != 0.0) acc += m * in(c);
      }
      a(static_cast<Eigen::Index>(k + offsets[r])) = acc;
    }
  }
}

inline StateVector apply_two_site(StateVector state, int site_a, int site_b, const Matrix& op) {
  apply_two_site_inplace(state, site_a, site_b, op);
  return state;
}

inline std::vector<double> probabilities(const StateVector& state) {
  std::vector<double> p(state.size());
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = std::norm(state.amplitudes()(static_cast<Eigen::Index>(k)));
  return p;
}

// |amplitude|^2 per basis state, omitting exact zeros.
inline std::map<BasisState, double> populations(const StateVector& state) {
  std::map<BasisState, double> out;
  const auto p = probabilities(state);
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] > 0.0) out.emplace(state.reg().decode(k), p[k]);
  }
  return out;
}

}  // namespace bubblechain
