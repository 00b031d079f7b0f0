#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace lssem {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Legendre polynomial P_n and derivative P_n' at x, by the three-term
/// recurrence.
inline std::pair<double, double> legendre(int n, double x) {
  if (n == 0) return {1.0, 0.0};
  double pm1 = 1.0, p = x;
  for (int k = 2; k <= n; ++k) {
    double pk = ((2 * k - 1) * x * p - (k - 1) * pm1) / k;
    pm1 = p;
    p = pk;
  }
  double dp = n * (x * p - pm1) / (x * x - 1.0);
  return {p, dp};
}

/// Barycentric weights for a node set: b_i = 1 / prod_{j!=i} (x_i - x_j),
/// rescaled so the largest magnitude is 1.
inline VectorXd barycentric_weights(const VectorXd& x) {
  const int n = static_cast<int>(x.size());
  VectorXd b = VectorXd::Ones(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (j != i) b[i] /= (x[i] - x[j]);
  b /= b.cwiseAbs().maxCoeff();
  return b;
}

/// Differentiation matrix D with D(i,j) = l_j'(x_i) from barycentric weights.
inline MatrixXd differentiation_matrix(const VectorXd& x, const VectorXd& b) {
  const int n = static_cast<int>(x.size());
  MatrixXd D = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double diag = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      D(i, j) = (b[j] / b[i]) / (x[i] - x[j]);
      diag -= D(i, j);
    }
    D(i, i) = diag;
  }
  return D;
}

/// Gauss-Legendre-Lobatto rule of degree W: W+1 nodes in [-1,1] including the
/// endpoints, weights, differentiation matrix, barycentric weights.
struct GLLGrid {
  int degree = 0;
  VectorXd nodes;
  VectorXd weights;
  VectorXd bary;
  MatrixXd diff;
  MatrixXd diff2;  // diff * diff, second-derivative evaluation at the nodes
};

inline GLLGrid make_gll_grid(int W) {
  if (W < 1) throw std::invalid_argument("gll_grid: unsupported degree (W >= 1 required)");
  const int n = W + 1;
  GLLGrid g;
  g.degree = W;
  g.nodes.resize(n);
  g.weights.resize(n);
  g.nodes[0] = -1.0;
  g.nodes[W] = 1.0;
  // interior nodes: roots of P_W', Newton from Chebyshev-Lobatto guesses
  for (int i = 1; i < W; ++i) {
    double x = -std::cos(M_PI * i / W);
    for (int it = 0; it < 100; ++it) {
      auto [p, dp] = legendre(W, x);
      // f = P_W'(x); f' = P_W''(x) from the Legendre ODE:
      // (1-x^2) P'' - 2x P' + W(W+1) P = 0
      double f = dp;
      double fp = (2.0 * x * dp - W * (W + 1) * p) / (1.0 - x * x);
      double dx = f / fp;
      x -= dx;
      if (std::abs(dx) < 1e-14) break;
    }
    g.nodes[i] = x;
  }
  // enforce symmetry about 0
  for (int i = 0; i < n / 2; ++i) {
    double s = 0.5 * (g.nodes[i] - g.nodes[n - 1 - i]);
    g.nodes[i] = s;
    g.nodes[n - 1 - i] = -s;
  }
  for (int i = 0; i < n; ++i) {
    auto [p, dp] = legendre(W, g.nodes[i]);
    (void)dp;
    g.weights[i] = 2.0 / (W * (W + 1) * p * p);
  }
  g.bary = barycentric_weights(g.nodes);
  g.diff = differentiation_matrix(g.nodes, g.bary);
  g.diff2 = g.diff * g.diff;
  return g;
}

/// Gauss-Legendre rule with n nodes (exact through degree 2n-1).
struct GaussRule {
  VectorXd nodes;
  VectorXd weights;
};

inline GaussRule make_gauss_rule(int n) {
  if (n < 1) throw std::invalid_argument("gauss_rule: need at least one node");
  GaussRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = -std::cos(M_PI * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      auto [p, dp] = legendre(n, x);
      double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-14) break;
    }
    auto [p, dp] = legendre(n, x);
    (void)p;
    r.nodes[i] = x;
    r.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  for (int i = 0; i < n / 2; ++i) {
    double s = 0.5 * (r.nodes[i] - r.nodes[n - 1 - i]);
    r.nodes[i] = s;
    r.nodes[n - 1 - i] = -s;
    double w = 0.5 * (r.weights[i] + r.weights[n - 1 - i]);
    r.weights[i] = w;
    r.weights[n - 1 - i] = w;
  }
  return r;
}

/// Interpolation matrix B with B(k,i) = l_i(y_k) for the Lagrange basis on
/// nodes x (barycentric form; rows at coinciding points become unit rows).
inline MatrixXd interpolation_matrix(const VectorXd& x, const VectorXd& b,
                                     const VectorXd& y) {
  const int n = static_cast<int>(x.size());
  const int m = static_cast<int>(y.size());
  MatrixXd B =
      MatrixXd::Zero(m, n);
  for (int k = 0; k < m; ++k) {
    int hit = -1;
    for (int i = 0; i < n; ++i)
      if (y[k] == x[i]) {
        hit = i;
        break;
      }
    if (hit >= 0) {
      B(k, hit) = 1.0;
      continue;
    }
    double denom = 0.0;
    for (int i = 0; i < n; ++i) denom += b[i] / (y[k] - x[i]);
    for (int i = 0; i < n; ++i) B(k, i) = (b[i] / (y[k] - x[i])) / denom;
  }
  return B;
}

/// Shared immutable caches; grids are built once per degree.
inline const GLLGrid& gll_grid(int W) {
  static std::mutex mu;
  static std::map<int, GLLGrid> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(W);
  if (it == cache.end()) it = cache.emplace(W, make_gll_grid(W)).first;
  return it->second;
}

inline const GaussRule& gauss_rule(int n) {
  static std::mutex mu;
  static std::map<int, GaussRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, make_gauss_rule(n)).first;
  return it->second;
}

}  // namespace lssem
