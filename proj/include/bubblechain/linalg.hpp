#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "bubblechain/errors.hpp"
#include "bubblechain/qudit.hpp"

namespace bubblechain {

inline double hermiticity_defect(const Matrix& m) { return (m - m.adjoint()).cwiseAbs().maxCoeff(); }

// exp(-i t A) for Hermitian A via its eigendecomposition.
inline Matrix expm_hermitian(const Matrix& a, double t) {
  if (a.rows() != a.cols()) throw ShapeError("expm_hermitian needs a square matrix");
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  if (es.info() != Eigen::Success) throw Error("eigendecomposition failed");
  const Eigen::VectorXd& w = es.eigenvalues();
  Vector phases(w.size());
  for (Eigen::Index k = 0; k < w.size(); ++k) phases(k) = std::polar(1.0, -w(k) * t);
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

inline Matrix diagonal_phase(const Eigen::VectorXd& diag, double t) {
  Matrix m = Matrix::Zero(diag.size(), diag.size());
  for (Eigen::Index k = 0; k < diag.size(); ++k) m(k, k) = std::polar(1.0, -diag(k) * t);
  return m;
}

// Plain-text matrix dump: a header line "# <name> <rows> <cols>" followed by
// one line per row of space-separated "re,im" pairs.
inline void write_matrix_dump(std::ostream& os, const std::string& name, const Matrix& m) {
  os << "# " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  char buf[64];
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g", m(r, c).real(), m(r, c).imag());
      if (c) os << ' ';
      os << buf;
    }
    os << '\n';
  }
}

struct NamedMatrix {
  std::string name;
  Matrix matrix;
};

// Reads one matrix written by write_matrix_dump. Blank lines are skipped.
inline NamedMatrix read_matrix_dump(std::istream& is) {
  std::string line;
  while (std::getline(is, line) && line.find_first_not_of(" \t\r") == std::string::npos) {
  }
  if (line.empty() || line[0] != '#') throw ShapeError("matrix dump: missing header line");
  std::istringstream hdr(line.substr(1));
  NamedMatrix out;
  Eigen::Index rows = 0, cols = 0;
  if (!(hdr >> out.name >> rows >> cols) || rows <= 0 || cols <= 0) {
    throw ShapeError("matrix dump: malformed header '" + line + "'");
  }
  out.matrix = Matrix::Zero(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (!std::getline(is, line)) throw ShapeError("matrix dump: truncated at row " + std::to_string(r));
    std::istringstream row(line);
    std::string tok;
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!(row >> tok)) throw ShapeError("matrix dump: short row " + std::to_string(r));
      const auto comma = tok.find(',');
      if (comma == std::string::npos) throw ShapeError("matrix dump: entry '" + tok + "' lacks re,im");
      out.matrix(r, c) = complex(std::stod(tok.substr(0, comma)), std::stod(tok.substr(comma + 1)));
    }
  }
  return out;
}

}  // namespace bubblechain
