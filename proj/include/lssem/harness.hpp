#pragma once

// Benchmark pipeline: build one of the example interface problems, mesh it,
// solve the least-squares normal equations, apply the conforming trace
// correction, and measure the relative H^1 error against the exact singular
// solution.  A sweep driver repeats runs over a degree range and fits the
// log-linear convergence trend.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lssem/examples.hpp"
#include "lssem/solver.hpp"

namespace lssem {

// ---------------------------------------------------------------------------
// run configuration and report
// ---------------------------------------------------------------------------

/// Geometric ratio used when a config leaves mu unset: the quarter-disc
/// benchmark grades at 0.15, the full-disc one at e^{-pi}.
inline double default_ratio(int example) { return example == 2 ? std::exp(-kPi) : 0.15; }

/// Parses the ratio literals accepted by the tools: plain reals plus the
/// shorthands e-pi, e-1.5pi, e-2pi.
inline double parse_ratio(const std::string& text) {
  if (text == "e-pi") return std::exp(-kPi);
  if (text == "e-1.5pi") return std::exp(-1.5 * kPi);
  if (text == "e-2pi") return std::exp(-2.0 * kPi);
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0')
    throw std::invalid_argument("parse_ratio: unrecognized ratio literal '" + text + "'");
  return value;
}

struct RunConfig {
  int example = 1;          ///< 1 = quarter disc, 2 = full disc
  double p = 1.0;           ///< coefficient contrast across the interface
  double mu = 0.0;          ///< geometric ratio; 0 picks the example default
  int W = 2;                ///< polynomial degree
  int N = -1;               ///< graded layers; -1 means N = W
  double alpha = 0.0;       ///< weight exponent; 0 means lambda0 / 2
  double tol = 1e-10;       ///< solver tolerance (relative residual)
  int max_iterations = -1;  ///< -1 means the solver default
  std::string output_path;  ///< used by the command-line tools, not by run()
};

struct RunReport {
  double relative_error_percent = 0.0;
  int iterations = 0;
  double functional = 0.0;  ///< least-squares functional at the solution
  double lambda0 = 0.0;
  double seconds = 0.0;
  bool converged = false;
};

inline int resolved_layers(const RunConfig& c) { return c.N < 0 ? c.W : c.N; }
inline double resolved_ratio(const RunConfig& c) {
  return c.mu == 0.0 ? default_ratio(c.example) : c.mu;
}

inline void validate_config(const RunConfig& c) {
  if (c.example != 1 && c.example != 2)
    throw std::invalid_argument("example must be 1 or 2");
  if (!(c.p > 0.0)) throw std::invalid_argument("coefficient p must be positive");
  const double mu = resolved_ratio(c);
  if (!(mu > 0.0 && mu < 1.0)) throw std::invalid_argument("ratio mu must lie in (0, 1)");
  if (c.W < 2) throw std::invalid_argument("degree W must be at least 2");
  if (resolved_layers(c) < 2) throw std::invalid_argument("layer count N must be at least 2");
  if (!(c.tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (c.alpha < 0.0) throw std::invalid_argument("alpha must be positive (or 0 for the default)");
}

namespace detail {

template <class F>
auto staged(const char* stage, F&& f) {
  try {
    return f();
  } catch (const std::exception& err) {
    throw std::runtime_error(std::string(stage) + ": " + err.what());
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// conforming correction
// ---------------------------------------------------------------------------

/// Pointwise trace averaging: matched GLL nodes along every shared
/// inter-element or interface edge are merged transitively (so corners pool
/// every incident element) and each group is replaced by its mean.  The
/// result is continuous across all finite shared edges; vertex constants are
/// not involved.
inline std::vector<ElementFunction> make_conforming(const Mesh& mesh,
                                                    std::vector<ElementFunction> fns) {
  int W = -1;
  for (const auto& el : mesh.elements)
    if (el.polynomial()) {
      W = fns.at(el.id).degree();
      break;
    }
  if (W < 1) return fns;
  const int n = W + 1;
  const int S = n * n;

  std::vector<int> parent(mesh.elements.size() * S);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&parent](int i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  };
  auto unite = [&](int a, int b) { parent[find(a)] = find(b); };
  auto slot = [&](int element, int a, int b) { return element * S + a + b * n; };
  auto side_slot = [&](int element, Side side, int k) {
    switch (side) {
      case Side::SLow: return slot(element, 0, k);
      case Side::SHigh: return slot(element, W, k);
      case Side::TLow: return slot(element, k, 0);
      case Side::THigh: return slot(element, k, W);
    }
    throw std::logic_error("make_conforming: unhandled side");
  };

  for (const auto& e : mesh.edges) {
    if (!e.finite() || e.sides.size() != 2) continue;
    if (e.cls != EdgeClass::InterElement && e.cls != EdgeClass::Interface) continue;
    const MeshEdgeSide& a = e.sides[0];
    const MeshEdgeSide& b = e.sides[1];
    if (!mesh.elements[a.element].polynomial() || !mesh.elements[b.element].polynomial()) continue;
    for (int k = 0; k <= W; ++k)
      unite(side_slot(a.element, a.side, k), side_slot(b.element, b.side, k));
  }

  std::vector<double> sum(parent.size(), 0.0);
  std::vector<int> count(parent.size(), 0);
  for (const auto& el : mesh.elements) {
    if (!el.polynomial()) continue;
    const MatrixXd& v = fns.at(el.id).values;
    for (int b = 0; b < n; ++b)
      for (int a = 0; a < n; ++a) {
        const int root = find(slot(el.id, a, b));
        sum[root] += v(a, b);
        count[root] += 1;
      }
  }
  for (const auto& el : mesh.elements) {
    if (!el.polynomial()) continue;
    MatrixXd& v = fns[el.id].values;
    for (int b = 0; b < n; ++b)
      for (int a = 0; a < n; ++a) {
        const int root = find(slot(el.id, a, b));
        v(a, b) = sum[root] / count[root];
      }
  }
  return fns;
}

// ---------------------------------------------------------------------------
// relative H^1 error against the exact singular solution
// ---------------------------------------------------------------------------

namespace detail {

/// Per-direction Gauss rule and GLL-to-Gauss interpolation matrix used to
/// integrate element errors; W + 10 points integrate the smooth integrands
/// to rounding.
struct ErrorQuadrature {
  GaussRule rule;
  MatrixXd interp;
};

inline ErrorQuadrature error_quadrature(int W) {
  const GLLGrid& g = gll_grid(W);
  ErrorQuadrature q;
  q.rule = make_gauss_rule(W + 10);
  q.interp = interpolation_matrix(g.nodes, g.bary, q.rule.nodes);
  return q;
}

/// Angular integrals of the exact profile over [t0, t1]:
/// (int W^2, int W, int lambda^2 W^2 + W'^2).
struct AngularMoments {
  double w2 = 0.0;
  double w1 = 0.0;
  double energy = 0.0;
};

inline AngularMoments angular_moments(const SingularSolution& sol, double t0, double t1,
                                      const GaussRule& rule) {
  AngularMoments m;
  const double half = 0.5 * (t1 - t0);
  const double mid = 0.5 * (t0 + t1);
  for (int i = 0; i < rule.nodes.size(); ++i) {
    const double theta = mid + half * rule.nodes[i];
    const double w = angular_value(sol, theta);
    const double dw = angular_derivative(sol, theta);
    const double gw = half * rule.weights[i];
    m.w2 += gw * w * w;
    m.w1 += gw * w;
    m.energy += gw * (sol.lambda0 * sol.lambda0 * w * w + dw * dw);
  }
  return m;
}

}  // namespace detail

/// Relative broken H^1 error of the corrected solution against the exact
/// singular solution, in percent.  Graded-layer integrals run in (tau,
/// theta) where the H^1 integrand is e_tau^2 + e_theta^2 + e^2 e^{2 tau};
/// interior integrals run in (r, theta); the innermost strips contribute the
/// exact integral of |u - h_k|^2 + |grad u|^2 over their tiny sectors,
/// evaluated analytically from the r^lambda form.  The denominator is the
/// same norm of the exact solution over the whole domain.
inline double h1_relative_error(const Mesh& mesh, const std::vector<ElementFunction>& fns,
                                const VectorXd& constants, const SingularSolution* exact) {
  if (exact == nullptr) throw std::invalid_argument("h1_relative_error: exact solution missing");
  const double lambda = exact->lambda0;
  const GaussRule angular = make_gauss_rule(32);

  double numerator = 0.0;
  double denominator = 0.0;
  detail::ErrorQuadrature quad;
  int quad_degree = -1;

  for (const auto& el : mesh.elements) {
    if (el.region == ElementRegion::SingularStrip) {
      // strips tile the angular domain exactly once: accumulate both the
      // strip's error contribution and the full-domain denominator here
      const detail::AngularMoments m =
          detail::angular_moments(*exact, el.t0, el.t1, angular);
      const double R = mesh.outer_radius;
      denominator += std::pow(R, 2.0 * lambda) / (2.0 * lambda) * m.energy +
                     std::pow(R, 2.0 * lambda + 2.0) / (2.0 * lambda + 2.0) * m.w2;
      const double h = constants[el.vertex];
      const double sigma = el.r_outer();
      numerator += std::pow(sigma, 2.0 * lambda) / (2.0 * lambda) * m.energy;
      numerator += std::pow(sigma, 2.0 * lambda + 2.0) / (2.0 * lambda + 2.0) * m.w2 -
                   2.0 * h * std::pow(sigma, lambda + 2.0) / (lambda + 2.0) * m.w1 +
                   h * h * 0.5 * sigma * sigma * (el.t1 - el.t0);
      continue;
    }

    const ElementFunction& fn = fns.at(el.id);
    if (fn.degree() != quad_degree) {
      quad_degree = fn.degree();
      quad = detail::error_quadrature(quad_degree);
    }
    const GLLGrid& g = gll_grid(quad_degree);
    const MatrixXd& E = quad.interp;
    const MatrixXd vals = E * fn.values * E.transpose();
    const MatrixXd ds = E * (g.diff * fn.values) * E.transpose();
    const MatrixXd dt = E * (fn.values * g.diff.transpose()) * E.transpose();

    const double half_s = 0.5 * (el.s1 - el.s0), mid_s = 0.5 * (el.s0 + el.s1);
    const double half_t = 0.5 * (el.t1 - el.t0), mid_t = 0.5 * (el.t0 + el.t1);
    const int m = static_cast<int>(quad.rule.nodes.size());
    for (int a = 0; a < m; ++a) {
      const double s = mid_s + half_s * quad.rule.nodes[a];
      for (int b = 0; b < m; ++b) {
        const double theta = mid_t + half_t * quad.rule.nodes[b];
        const double w = angular_value(*exact, theta);
        const double dw = angular_derivative(*exact, theta);
        const double gw =
            quad.rule.weights[a] * quad.rule.weights[b] * half_s * half_t;
        const double ap = vals(a, b);
        const double ap_s = ds(a, b) / half_s;
        const double ap_t = dt(a, b) / half_t;
        if (el.region == ElementRegion::SingularLayer) {
          const double radial = std::exp(lambda * s);  // s = tau
          const double e = ap - radial * w;
          const double e_s = ap_s - lambda * radial * w;
          const double e_t = ap_t - radial * dw;
          numerator += gw * (e_s * e_s + e_t * e_t + e * e * std::exp(2.0 * s));
        } else {
          const double radial = std::pow(s, lambda);  // s = r
          const double e = ap - radial * w;
          const double e_s = ap_s - lambda * radial / s * w;
          const double e_t = ap_t - radial * dw;
          numerator += gw * s * (e_s * e_s + e_t * e_t / (s * s) + e * e);
        }
      }
    }
  }
  return 100.0 * std::sqrt(numerator / denominator);
}

// ---------------------------------------------------------------------------
// full pipeline
// ---------------------------------------------------------------------------

/// Runs the whole pipeline for one configuration: singular exponent, mesh,
/// normal-equation solve, conforming correction, relative H^1 error.
/// Deterministic given the config; errors carry the failing stage's name.
inline RunReport run(const RunConfig& config, const PcgmProgress& progress = {}) {
  const auto start = std::chrono::steady_clock::now();
  detail::staged("config", [&] { validate_config(config); });

  ExampleProblem problem = detail::staged(
      "singularity", [&] { return benchmark_problem(config.example, config.p); });

  Mesh mesh = detail::staged("mesh", [&] {
    return build_mesh(problem.spec, benchmark_mesh_params(config.example, resolved_layers(config),
                                                          resolved_ratio(config)));
  });

  const double alpha =
      config.alpha > 0.0 ? config.alpha : 0.5 * problem.lambda0();
  ResidualMap map = detail::staged("assemble", [&] {
    return assemble_residual_map(mesh, problem.spec, config.W, alpha);
  });

  PcgmResult solved = detail::staged("solve", [&] {
    return solve_normal_equations(map, config.tol, config.max_iterations, progress);
  });

  std::vector<ElementFunction> corrected = detail::staged("correct", [&] {
    return make_conforming(mesh, unpack_elements(map, solved.solution));
  });

  RunReport report;
  report.relative_error_percent = detail::staged("error", [&] {
    return h1_relative_error(mesh, corrected, unpack_constants(map, solved.solution),
                             problem.spec.exact);
  });
  report.iterations = solved.iterations;
  report.converged = solved.converged;
  report.functional = total_functional(map, solved.solution);
  report.lambda0 = problem.lambda0();
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

// ---------------------------------------------------------------------------
// convergence study
// ---------------------------------------------------------------------------

struct StudyRow {
  int W = 0;
  double error_percent = 0.0;
  int iterations = 0;
  double functional = 0.0;
  double seconds = 0.0;
};

struct StudyResult {
  std::vector<StudyRow> rows;
  double slope = 0.0;      ///< least-squares slope of log10(error%) vs W
  double r_squared = 0.0;  ///< coefficient of determination of that fit
  bool complete = false;   ///< false when a run aborted the sweep
  std::string failure;     ///< stage-tagged message of the aborting run
};

/// Sweeps W over [w_min, w_max] (layers track W unless the config pins N),
/// collecting one row per degree and fitting log10(error) against W.  A
/// failing run stops the sweep; the partial rows are returned with the
/// failure recorded.
inline StudyResult convergence_study(RunConfig config, int w_min, int w_max) {
  if (w_max - w_min + 1 < 4)
    throw std::invalid_argument("convergence_study: need a degree range of at least four");
  StudyResult out;
  out.complete = true;
  for (int W = w_min; W <= w_max; ++W) {
    config.W = W;
    try {
      RunReport report = run(config);
      out.rows.push_back({W, report.relative_error_percent, report.iterations, report.functional,
                          report.seconds});
    } catch (const std::exception& err) {
      out.complete = false;
      out.failure = err.what();
      break;
    }
  }
  if (out.rows.size() >= 2) {
    const int k = static_cast<int>(out.rows.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const StudyRow& row : out.rows) {
      const double y = std::log10(row.error_percent);
      sx += row.W;
      sy += y;
      sxx += static_cast<double>(row.W) * row.W;
      sxy += row.W * y;
    }
    const double denom = k * sxx - sx * sx;
    out.slope = (k * sxy - sx * sy) / denom;
    const double intercept = (sy - out.slope * sx) / k;
    double ss_res = 0.0, ss_tot = 0.0;
    for (const StudyRow& row : out.rows) {
      const double y = std::log10(row.error_percent);
      const double fit = out.slope * row.W + intercept;
      ss_res += (y - fit) * (y - fit);
      ss_tot += (y - sy / k) * (y - sy / k);
    }
    out.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  }
  return out;
}

}  // namespace lssem
