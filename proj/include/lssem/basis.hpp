#pragma once

#include "lssem/gll.hpp"

namespace lssem {

/// Nodal values of a degree-W tensor-product polynomial on the GLL grid of a
/// reference square. values(i,j): i indexes the first local coordinate s,
/// j the second local coordinate t.
struct ElementFunction {
  int element_id = -1;
  MatrixXd values;

  int degree() const { return static_cast<int>(values.rows()) - 1; }
};

/// Per-singular-point scalar unknowns: h is the innermost-strip constant,
/// a the value pinned by Dirichlet data at the point (0 when homogeneous).
struct VertexConstants {
  VectorXd h;
  VectorXd a;
};

struct PointEval {
  double value;
  double ds;
  double dt;
};

/// Barycentric evaluation of the interpolant and its local derivatives at
/// (s,t) in [-1,1]^2. Exact for polynomials of the stored degree.
inline PointEval eval_and_grad(const ElementFunction& fn, double s, double t) {
  const GLLGrid& g = gll_grid(fn.degree());
  VectorXd ls = interpolation_matrix(g.nodes, g.bary, VectorXd::Constant(1, s)).row(0);
  VectorXd lt = interpolation_matrix(g.nodes, g.bary, VectorXd::Constant(1, t)).row(0);
  PointEval out;
  out.value = ls.dot(fn.values * lt);
  out.ds = ls.dot((g.diff * fn.values) * lt);
  out.dt = ls.dot((fn.values * g.diff.transpose()) * lt);
  return out;
}

enum class Side { SLow, SHigh, TLow, THigh };

/// Value, tangential-derivative, and normal-derivative traces along one side,
/// at the side's GLL nodes, in local reference coordinates (caller applies the
/// element map's scale factors). Tangential = derivative along the side's own
/// coordinate, normal = derivative in the crossing coordinate.
struct SideTrace {
  VectorXd u;
  VectorXd du_tan;
  VectorXd du_norm;
};

inline SideTrace trace(const ElementFunction& fn, Side side) {
  const GLLGrid& g = gll_grid(fn.degree());
  const int W = fn.degree();
  const MatrixXd& U = fn.values;
  SideTrace tr;
  switch (side) {
    case Side::SLow:
      tr.u = U.row(0);
      tr.du_norm = (g.diff * U).row(0);
      break;
    case Side::SHigh:
      tr.u = U.row(W);
      tr.du_norm = (g.diff * U).row(W);
      break;
    case Side::TLow:
      tr.u = U.col(0);
      tr.du_norm = (U * g.diff.transpose()).col(0);
      break;
    case Side::THigh:
      tr.u = U.col(W);
      tr.du_norm = (U * g.diff.transpose()).col(W);
      break;
  }
  tr.du_tan = g.diff * tr.u;
  return tr;
}

/// Monomial coefficients c with p(x) = sum c_j x^j from nodal values on the
/// grid (Vandermonde solve; a conversion utility, not the solver path).
inline VectorXd to_monomial(const VectorXd& nodal, const GLLGrid& g) {
  const int n = static_cast<int>(nodal.size());
  MatrixXd V(n, n);
  for (int i = 0; i < n; ++i) {
    double xp = 1.0;
    for (int j = 0; j < n; ++j) {
      V(i, j) = xp;
      xp *= g.nodes[i];
    }
  }
  return V.colPivHouseholderQr().solve(nodal);
}

inline VectorXd from_monomial(const VectorXd& coeff, const GLLGrid& g) {
  const int n = static_cast<int>(coeff.size());
  VectorXd nodal = VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    double xp = 1.0;
    for (int j = 0; j < n; ++j) {
      nodal[i] += coeff[j] * xp;
      xp *= g.nodes[i];
    }
  }
  return nodal;
}

/// Tensor monomial coefficients g_{r,s} of Eq-style form sum g_{r,s} s^r t^s.
inline MatrixXd to_monomial_2d(const MatrixXd& values, const GLLGrid& g) {
  const int n = static_cast<int>(values.rows());
  MatrixXd C(n, n);
  for (int j = 0; j < n; ++j) C.col(j) = to_monomial(values.col(j), g);
  for (int i = 0; i < n; ++i) C.row(i) = to_monomial(C.row(i).transpose(), g).transpose();
  return C;
}

inline MatrixXd from_monomial_2d(const MatrixXd& coeff, const GLLGrid& g) {
  const int n = static_cast<int>(coeff.rows());
  MatrixXd U(n, n);
  for (int i = 0; i < n; ++i) U.row(i) = from_monomial(coeff.row(i).transpose(), g).transpose();
  for (int j = 0; j < n; ++j) U.col(j) = from_monomial(U.col(j), g);
  return U;
}

}  // namespace lssem
