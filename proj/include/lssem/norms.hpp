#pragma once

#include "lssem/gll.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace lssem {

/// Quadrature and sampling matrices for edge functionals at trace degree W.
/// Traces live on the reference interval [-1, 1] as GLL nodal values; Gauss
/// points of order W+1 integrate every integrand below exactly.
///
/// For s = 1/2 the seminorm integrand (u(x) - u(y))^2 / (x - y)^2 equals
/// R(x, y)^2 with R the first divided difference of u, a polynomial, so the
/// whole norm is a finite sum of squares of linear samples of u:
///   l2_rows:   value samples scaled by sqrt(Gauss weight)
///   semi_rows: divided-difference samples over the tensor Gauss grid,
///              diagonal entries replaced by the derivative
struct EdgeQuadrature {
  int degree = 0;
  GaussRule gauss;
  Eigen::MatrixXd to_gauss;   // GLL nodal values -> values at Gauss points
  Eigen::MatrixXd dto_gauss;  // GLL nodal values -> d/ds at Gauss points
  Eigen::MatrixXd l2_rows;    // (W+1) x (W+1)
  Eigen::MatrixXd semi_rows;  // (W+1)^2 x (W+1)
};

inline const EdgeQuadrature& edge_quadrature(int W) {
  static std::mutex mu;
  static std::map<int, EdgeQuadrature> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(W);
  if (it != cache.end()) return it->second;

  const GLLGrid& g = gll_grid(W);
  EdgeQuadrature eq;
  eq.degree = W;
  eq.gauss = gauss_rule(W + 1);
  const int n = W + 1;
  const Eigen::VectorXd& gp = eq.gauss.nodes;
  eq.to_gauss = interpolation_matrix(g.nodes, g.bary, eq.gauss.nodes);
  eq.dto_gauss = eq.to_gauss * g.diff;
  eq.l2_rows.resize(n, n);
  for (int i = 0; i < n; ++i) eq.l2_rows.row(i) = std::sqrt(eq.gauss.weights[i]) * eq.to_gauss.row(i);
  eq.semi_rows.resize(n * n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double wij = std::sqrt(eq.gauss.weights[i] * eq.gauss.weights[j]);
      if (i == j)
        eq.semi_rows.row(i * n + j) = wij * eq.dto_gauss.row(i);
      else
        eq.semi_rows.row(i * n + j) =
            wij / (gp[i] - gp[j]) * (eq.to_gauss.row(i) - eq.to_gauss.row(j));
    }
  return cache.emplace(W, std::move(eq)).first->second;
}

namespace detail {
inline const EdgeQuadrature& quad_for(const Eigen::VectorXd& u) {
  if (u.size() < 2) throw std::invalid_argument("edge trace needs at least two nodal values");
  return edge_quadrature(static_cast<int>(u.size()) - 1);
}
}  // namespace detail

/// Exact squared L2 norm of a degree-W trace over an interval of the given
/// length.
inline double l2_sq(const Eigen::VectorXd& u, double length) {
  const EdgeQuadrature& eq = detail::quad_for(u);
  return 0.5 * length * (eq.l2_rows * u).squaredNorm();
}

/// Exact squared 1/2-seminorm. The double integral is invariant under affine
/// reparametrization, so it is evaluated on the reference square; the
/// interval is accepted for signature symmetry with l2_sq.
inline double half_seminorm_sq(const Eigen::VectorXd& u, double /*length*/ = 1.0) {
  const EdgeQuadrature& eq = detail::quad_for(u);
  return (eq.semi_rows * u).squaredNorm();
}

/// Full squared 1/2-norm: L2 part plus seminorm part.
inline double half_norm_sq(const Eigen::VectorXd& u, double length) {
  return l2_sq(u, length) + half_seminorm_sq(u, length);
}

/// Squared 3/2-jump across an edge: L2 norm of the value jump plus the full
/// 1/2-norm of the tangential-derivative jump. Tangential derivatives are
/// nodal values of du/d(arclength in working coordinates) along the edge.
inline double jump_three_half_sq(const Eigen::VectorXd& u_left, const Eigen::VectorXd& dtan_left,
                                 const Eigen::VectorXd& u_right,
                                 const Eigen::VectorXd& dtan_right, double length) {
  return l2_sq(u_left - u_right, length) + half_norm_sq(dtan_left - dtan_right, length);
}

/// Squared 1/2-norm of the coefficient-weighted normal-flux jump.
inline double interface_flux_jump_sq(double p_left, double p_right,
                                     const Eigen::VectorXd& flux_left,
                                     const Eigen::VectorXd& flux_right, double length) {
  return half_norm_sq(p_left * flux_left - p_right * flux_right, length);
}

}  // namespace lssem
