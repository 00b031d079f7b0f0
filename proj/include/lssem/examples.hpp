#pragma once

#include "lssem/mesh.hpp"
#include "lssem/problem.hpp"
#include "lssem/singularity.hpp"

#include <memory>
#include <stdexcept>
#include <vector>

namespace lssem {

/// A benchmark problem bundles the spec with the angular eigenpair it was
/// manufactured from; spec.exact points at the shared solution object.
struct ExampleProblem {
  ProblemSpec spec;
  std::shared_ptr<SingularSolution> singular;

  double lambda0() const { return singular->lambda0; }
};

/// Quarter disc, interface along theta = pi/4, coefficients {1, p}; zero
/// Dirichlet on theta = 0, zero Neumann on theta = pi/2, exact trace on the
/// rim. The manufactured solution is r^lambda0 W(theta) with f = 0.
inline ExampleProblem quarter_disc_problem(double p) {
  ExampleProblem ex;
  ex.singular = std::make_shared<SingularSolution>(solve_singularity(quarter_disc_partition(p)));
  auto sol = ex.singular;

  SingularPoint sp;
  sp.partition = sol->partition;
  ex.spec.singular_points = {sp};
  ex.spec.outer_radius = 1.0;
  ex.spec.source = [](double, double) { return 0.0; };
  ex.spec.exact = sol.get();

  BoundarySegment ray0;
  ray0.geometry = RayEdge{0.0};
  ray0.kind = BoundaryKind::Dirichlet;
  ray0.data = [](double) { return 0.0; };
  BoundarySegment ray1;
  ray1.geometry = RayEdge{0.5 * kPi};
  ray1.kind = BoundaryKind::Neumann;
  ray1.data = [](double) { return 0.0; };
  BoundarySegment rim;
  rim.geometry = ArcEdge{1.0, 0.0, 0.5 * kPi};
  rim.kind = BoundaryKind::Dirichlet;
  rim.data = [sol](double theta) { return angular_value(*sol, theta); };
  ex.spec.boundary = {ray0, ray1, rim};
  return ex;
}

/// Full disc with interfaces at theta = 0 (seam) and theta = pi/2,
/// coefficients {1, p}; exact trace on the rim, f = 0.
inline ExampleProblem full_disc_problem(double p) {
  ExampleProblem ex;
  ex.singular = std::make_shared<SingularSolution>(solve_singularity(full_disc_partition(p)));
  auto sol = ex.singular;

  SingularPoint sp;
  sp.partition = sol->partition;
  ex.spec.singular_points = {sp};
  ex.spec.outer_radius = 1.0;
  ex.spec.source = [](double, double) { return 0.0; };
  ex.spec.exact = sol.get();

  BoundarySegment rim;
  rim.geometry = ArcEdge{1.0, 0.0, 2.0 * kPi};
  rim.kind = BoundaryKind::Dirichlet;
  rim.data = [sol](double theta) { return angular_value(*sol, theta); };
  ex.spec.boundary = {rim};
  return ex;
}

inline ExampleProblem benchmark_problem(int example, double p) {
  if (example == 1) return quarter_disc_problem(p);
  if (example == 2) return full_disc_problem(p);
  throw std::invalid_argument("benchmark_problem: example must be 1 or 2");
}

/// Default angular breaks: the interface rays, plus the extra half-turn
/// splits that keep every full-disc element a quarter turn wide.
inline std::vector<double> benchmark_angular_breaks(int example) {
  if (example == 1) return {0.0, 0.25 * kPi, 0.5 * kPi};
  if (example == 2) return {0.0, 0.5 * kPi, kPi, 1.5 * kPi, 2.0 * kPi};
  throw std::invalid_argument("benchmark_angular_breaks: example must be 1 or 2");
}

inline MeshParams benchmark_mesh_params(int example, int layers, double mu,
                                        int interior_layers = 1, double rho = 0.5) {
  MeshParams mp;
  mp.rho = rho;
  mp.ratio = mu;
  mp.layers = layers;
  mp.angular_breaks = benchmark_angular_breaks(example);
  mp.interior_layers = interior_layers;
  return mp;
}

/// Nodal samples of r^lambda W(theta) on every polynomial element (graded
/// layers sample e^{lambda tau} W; strips get empty matrices).
inline std::vector<ElementFunction> sample_singular_solution(const Mesh& mesh,
                                                             const SingularSolution& sol, int W) {
  const GLLGrid& g = gll_grid(W);
  const int n = W + 1;
  std::vector<ElementFunction> fns(mesh.elements.size());
  for (const auto& el : mesh.elements) {
    fns[el.id].element_id = el.id;
    if (!el.polynomial()) continue;
    MatrixXd v(n, n);
    for (int a = 0; a < n; ++a) {
      double s = 0.5 * (el.s0 + el.s1) + 0.5 * (el.s1 - el.s0) * g.nodes[a];
      double radial = el.region == ElementRegion::SingularLayer
                          ? std::exp(sol.lambda0 * s)
                          : std::pow(s, sol.lambda0);
      for (int b = 0; b < n; ++b) {
        double theta = 0.5 * (el.t0 + el.t1) + 0.5 * (el.t1 - el.t0) * g.nodes[b];
        v(a, b) = radial * angular_value(sol, theta);
      }
    }
    fns[el.id].values = std::move(v);
  }
  return fns;
}

}  // namespace lssem
