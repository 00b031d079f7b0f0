#pragma once

#include "lssem/gll.hpp"
#include "lssem/problem.hpp"

#include <algorithm>
#include <limits>
#include <utility>

namespace lssem {

/// Leading singular behaviour u = r^lambda0 W(theta) around a singular point,
/// with W(theta) = C_i cos(lambda0 theta) + D_i sin(lambda0 theta) per sector.
struct SingularSolution {
  double lambda0 = 0.0;
  std::vector<std::pair<double, double>> sector_coeffs;
  SectorPartition partition;
};

/// Homogeneous system for the angular problem at a trial exponent: unknowns
/// (C_i, D_i) per sector, rows from the closure conditions at the span ends
/// and value/flux matching at every interior breakpoint. Derivative rows are
/// divided by lambda so the determinant stays a trigonometric polynomial.
inline MatrixXd sturm_liouville_matrix(double lambda, const SectorPartition& part) {
  const int S = part.sector_count();
  const int n = 2 * S;
  MatrixXd M = MatrixXd::Zero(n, n);
  const auto& bp = part.breakpoints;
  const auto& p = part.coefficients;
  auto val = [&](int row, int sector, double theta, double scale) {
    M(row, 2 * sector) += scale * std::cos(lambda * theta);
    M(row, 2 * sector + 1) += scale * std::sin(lambda * theta);
  };
  auto slope = [&](int row, int sector, double theta, double scale) {
    // W'(theta)/lambda = -C sin + D cos
    M(row, 2 * sector) += -scale * std::sin(lambda * theta);
    M(row, 2 * sector + 1) += scale * std::cos(lambda * theta);
  };
  int row = 0;
  if (part.closure == SectorClosure::DirichletNeumannEnds) {
    val(row++, 0, bp.front(), 1.0);
  } else {
    val(row, 0, bp.front(), 1.0);
    val(row++, S - 1, bp.back(), -1.0);
    slope(row, 0, bp.front(), p.front());
    slope(row++, S - 1, bp.back(), -p.back());
  }
  for (int m = 1; m < S; ++m) {
    val(row, m - 1, bp[m], 1.0);
    val(row++, m, bp[m], -1.0);
    slope(row, m - 1, bp[m], p[m - 1]);
    slope(row++, m, bp[m], -p[m]);
  }
  if (part.closure == SectorClosure::DirichletNeumannEnds)
    slope(row++, S - 1, bp.back(), 1.0);
  return M;
}

/// Determinant of the angular system; vanishes exactly at the eigenvalues.
inline double eigen_residual(double lambda, const SectorPartition& part) {
  if (!(lambda > 0.0)) throw std::invalid_argument("eigen_residual: lambda must be positive");
  return sturm_liouville_matrix(lambda, part).determinant();
}

/// Smallest root of the determinant in (tol, hi], by sign-change scan with
/// the given step followed by bisection down to tol.
inline double smallest_eigenvalue(const SectorPartition& part, double scan_step = 1e-3,
                                  double tol = 1e-12, double hi = 2.0) {
  if (!(scan_step > 0.0) || !(tol > 0.0))
    throw std::invalid_argument("smallest_eigenvalue: scan_step and tol must be positive");
  double a = std::max(tol, scan_step);
  double fa = eigen_residual(a, part);
  if (fa == 0.0) return a;
  double b = a;
  bool bracketed = false;
  while (b < hi) {
    b = std::min(b + scan_step, hi);
    double fb = eigen_residual(b, part);
    if (fb == 0.0) return b;
    if ((fa < 0.0) != (fb < 0.0)) {
      bracketed = true;
      break;
    }
    a = b;
    fa = fb;
  }
  if (!bracketed)
    throw std::runtime_error("smallest_eigenvalue: no eigenvalue in range");
  while (b - a > tol) {
    double mid = 0.5 * (a + b);
    double fm = eigen_residual(mid, part);
    if (fm == 0.0) return mid;
    if ((fa < 0.0) != (fm < 0.0))
      b = mid;
    else {
      a = mid;
      fa = fm;
    }
  }
  return 0.5 * (a + b);
}

/// Nontrivial null vector of the angular system at an eigenvalue, normalized
/// like the worked examples: the cosine coefficient of the last sector is
/// pinned to 1 for end-closed partitions, the sine coefficient for periodic
/// ones. Falls back to the smallest-singular-value direction if that
/// component degenerates.
inline std::vector<std::pair<double, double>> sector_coefficients(
    double lambda0, const SectorPartition& part) {
  const int S = part.sector_count();
  const int n = 2 * S;
  MatrixXd M = sturm_liouville_matrix(lambda0, part);
  Eigen::JacobiSVD<MatrixXd> svd(M, Eigen::ComputeFullV);
  const VectorXd& sv = svd.singularValues();
  if (sv[n - 1] > 1e-6 * sv[0])
    throw std::domain_error("sector_coefficients: not an eigenvalue");
  const int norm_col =
      part.closure == SectorClosure::DirichletNeumannEnds ? 2 * (S - 1) : 2 * S - 1;
  VectorXd x;
  // pin the normalization unknown and solve the rest in least squares
  MatrixXd Mred(n, n - 1);
  Mred.leftCols(norm_col) = M.leftCols(norm_col);
  Mred.rightCols(n - 1 - norm_col) = M.rightCols(n - 1 - norm_col);
  VectorXd rhs = -M.col(norm_col);
  VectorXd xred = Mred.colPivHouseholderQr().solve(rhs);
  double relres = (Mred * xred - rhs).cwiseAbs().maxCoeff() /
                  std::max(1.0, xred.cwiseAbs().maxCoeff());
  if (relres < 1e-8) {
    x.resize(n);
    x.head(norm_col) = xred.head(norm_col);
    x[norm_col] = 1.0;
    x.tail(n - 1 - norm_col) = xred.tail(n - 1 - norm_col);
  } else {
    x = svd.matrixV().col(n - 1);
    if (std::abs(x[norm_col]) > 1e-8 * x.cwiseAbs().maxCoeff())
      x /= x[norm_col];
    else
      x /= x.cwiseAbs().maxCoeff();
  }
  std::vector<std::pair<double, double>> coeffs(S);
  for (int i = 0; i < S; ++i) coeffs[i] = {x[2 * i], x[2 * i + 1]};
  return coeffs;
}

inline SingularSolution solve_singularity(const SectorPartition& part,
                                          double scan_step = 1e-3, double tol = 1e-12) {
  SingularSolution sol;
  sol.partition = part;
  sol.lambda0 = smallest_eigenvalue(part, scan_step, tol);
  sol.sector_coeffs = sector_coefficients(sol.lambda0, part);
  return sol;
}

inline int sector_index(const SectorPartition& part, double theta) {
  const auto& bp = part.breakpoints;
  if (part.closure == SectorClosure::PeriodicWithCoefficientJump) {
    while (theta < bp.front()) theta += 2.0 * kPi;
    while (theta > bp.back()) theta -= 2.0 * kPi;
  }
  if (theta < bp.front() - 1e-12 || theta > bp.back() + 1e-12)
    throw std::domain_error("angle outside the partition span");
  int i = static_cast<int>(std::upper_bound(bp.begin(), bp.end(), theta) - bp.begin()) - 1;
  return std::clamp(i, 0, part.sector_count() - 1);
}

/// W(theta) in the sector containing theta.
inline double angular_value(const SingularSolution& sol, double theta) {
  int i = sector_index(sol.partition, theta);
  auto [C, D] = sol.sector_coeffs[i];
  return C * std::cos(sol.lambda0 * theta) + D * std::sin(sol.lambda0 * theta);
}

inline double angular_derivative(const SingularSolution& sol, double theta) {
  int i = sector_index(sol.partition, theta);
  auto [C, D] = sol.sector_coeffs[i];
  return sol.lambda0 * (-C * std::sin(sol.lambda0 * theta) + D * std::cos(sol.lambda0 * theta));
}

inline double angular_second_derivative(const SingularSolution& sol, double theta) {
  int i = sector_index(sol.partition, theta);
  auto [C, D] = sol.sector_coeffs[i];
  double l2 = sol.lambda0 * sol.lambda0;
  return -l2 * (C * std::cos(sol.lambda0 * theta) + D * std::sin(sol.lambda0 * theta));
}

struct SingularEval {
  double value = 0.0;
  double du_dr = 0.0;            // radial gradient component
  double du_dtheta_over_r = 0.0; // angular gradient component (1/r) dW/dtheta
  bool grad_unbounded = false;
};

/// u = r^lambda0 W(theta) with polar gradient components; at r = 0 the value
/// is 0 and the gradient is flagged unbounded when lambda0 < 1.
inline SingularEval evaluate_singular(const SingularSolution& sol, double r, double theta) {
  if (r < 0.0) throw std::domain_error("evaluate_singular: negative radius");
  SingularEval out;
  const double lam = sol.lambda0;
  if (r == 0.0) {
    out.value = 0.0;
    if (lam < 1.0) {
      out.grad_unbounded = true;
      out.du_dr = std::numeric_limits<double>::infinity();
      out.du_dtheta_over_r = std::numeric_limits<double>::infinity();
    } else if (lam == 1.0) {
      out.du_dr = angular_value(sol, theta);
      out.du_dtheta_over_r = angular_derivative(sol, theta);
    }
    return out;
  }
  double W = angular_value(sol, theta);
  double dW = angular_derivative(sol, theta);
  double rl = std::pow(r, lam);
  out.value = rl * W;
  out.du_dr = lam * rl / r * W;
  out.du_dtheta_over_r = rl / r * dW;
  return out;
}

/// The two benchmark partitions.
inline SectorPartition quarter_disc_partition(double p) {
  SectorPartition part;
  part.breakpoints = {0.0, kPi / 4.0, kPi / 2.0};
  part.coefficients = {1.0, p};
  part.closure = SectorClosure::DirichletNeumannEnds;
  return part;
}

inline SectorPartition full_disc_partition(double p) {
  SectorPartition part;
  part.breakpoints = {0.0, kPi / 2.0, 2.0 * kPi};
  part.coefficients = {1.0, p};
  part.closure = SectorClosure::PeriodicWithCoefficientJump;
  return part;
}

}  // namespace lssem
