#include "lssem/examples.hpp"
#include "lssem/functional.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace lssem;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// nodal samples of a working-coordinate function fn(s, theta) on one element
ElementFunction sample_on(const Mesh& mesh, int element, int W,
                          const std::function<double(double, double)>& fn) {
  const GLLGrid& g = gll_grid(W);
  const MeshElement& el = mesh.elements[element];
  ElementFunction out;
  out.element_id = element;
  out.values.resize(W + 1, W + 1);
  for (int a = 0; a <= W; ++a)
    for (int b = 0; b <= W; ++b) {
      double s = 0.5 * (el.s0 + el.s1) + 0.5 * (el.s1 - el.s0) * g.nodes[a];
      double t = 0.5 * (el.t0 + el.t1) + 0.5 * (el.t1 - el.t0) * g.nodes[b];
      out.values(a, b) = fn(s, t);
    }
  return out;
}

std::vector<ElementFunction> sample_all(const Mesh& mesh, int W,
                                        const std::function<double(double, double)>& fn) {
  std::vector<ElementFunction> fns(mesh.elements.size());
  for (const auto& el : mesh.elements) {
    fns[el.id].element_id = el.id;
    if (el.polynomial()) fns[el.id] = sample_on(mesh, el.id, W, fn);
  }
  return fns;
}

// quarter-disc benchmark with all boundary data zeroed (fully homogeneous)
ExampleProblem homogeneous_quarter(double p) {
  ExampleProblem ex = quarter_disc_problem(p);
  for (auto& seg : ex.spec.boundary) seg.data = [](double) { return 0.0; };
  return ex;
}

const MeshEdge& edge_by_id(const Mesh& mesh, int id) { return mesh.edges.at(id); }

}  // namespace

TEST(PdeSingular, ConstantAnnihilated) {
  ExampleProblem ex = quarter_disc_problem(10.0);
  Mesh mesh = build_mesh(ex.spec, benchmark_mesh_params(1, 2, 0.15));
  ElementFunction fn = sample_on(mesh, 2, 5, [](double, double) { return 1.0; });
  VectorXd r = transformed_pde_residual(mesh, ex.spec, fn, 0.3);
  EXPECT_LE(r.cwiseAbs().maxCoeff(), 1e-13);
}

TEST(PdeSingular, HarmonicPolynomialsAnnihilated) {
  ExampleProblem ex = quarter_disc_problem(10.0);
  Mesh mesh = build_mesh(ex.spec, benchmark_mesh_params(1, 2, 0.15));
  const int W = 6;
  auto harmonics = {
      std::function<double(double, double)>([](double s, double t) { return s * t; }),
      std::function<double(double, double)>([](double s, double t) { return s * s - t * t; }),
      std::function<double(double, double)>(
          [](double s, double t) { return s * s * s - 3.0 * s * t * t; })};
  for (const auto& h : harmonics)
    for (int element : {2, 3, 4, 5}) {
      ElementFunction fn = sample_on(mesh, element, W, h);
      VectorXd r = transformed_pde_residual(mesh, ex.spec, fn, 0.3);
      EXPECT_LE(r.cwiseAbs().maxCoeff(), 1e-10) << "element " << element;
    }
}

TEST(PdeSingular, TauSquaredClosedForm) {
  // residual of tau^2 with p = 1, f = 0 is the constant -2, so the block's
  // squared norm is 4 * weight * box area
  ExampleProblem ex = quarter_disc_problem(10.0);
  Mesh mesh = build_mesh(ex.spec, benchmark_mesh_params(1, 2, 0.15));
  const int element = 2;  // sector [0, pi/4] has coefficient 1
  ASSERT_DOUBLE_EQ(mesh.elements[element].coefficient, 1.0);
  const double alpha = 0.27;
  ElementFunction fn = sample_on(mesh, element, 4, [](double s, double) { return s * s; });
  VectorXd r = transformed_pde_residual(mesh, ex.spec, fn, alpha);
  const MeshElement& el = mesh.elements[element];
  double area = (el.s1 - el.s0) * (el.t1 - el.t0);
  double expected = 4.0 * layer_weight(mesh, el.layer, alpha) * area;
  EXPECT_NEAR(r.squaredNorm(), expected, 1e-11 * expected);
}

TEST(PdeInterior, RadiusSquaredWithMatchingSource) {
  // u = x^2 + y^2 = r^2 and f = -4 cancel exactly
  ExampleProblem ex = quarter_disc_problem(1.0);
  ex.spec.source = [](double, double) { return -4.0; };
  Mesh mesh = build_mesh(ex.spec, benchmark_mesh_params(1, 2, 0.15));
  int interior = -1;
  for (const auto& el : mesh.elements)
    if (el.region == ElementRegion::Interior) interior = el.id;
  ElementFunction fn = sample_on(mesh, interior, 5, [](double r, double) { return r * r; });
  VectorXd res = interior_pde_residual(mesh, ex.spec, fn);
  EXPECT_LE(res.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PdeInterior, GlobalLinearSmallResidual) {
  // 3x + 2y - 1 is not polynomial in the (r, theta) box, so the residual is
  // pure interpolation error; it must be tiny at moderate degree
  ExampleProblem ex = quarter_disc_problem(1.0);
  Mesh mesh = build_mesh(ex.spec, benchmark_mesh_params(1, 2, 0.15));
  int interior = -1;
  for (const auto& el : mesh.elements)
    if (el.region == ElementRegion::Interior && el.angular == 0) interior = el.id;
  ElementFunction fn = sample_on(mesh, interior, 10, [](double r, double t) {
    return 3.0 * r * std::cos(t) + 2.0 * r * std::sin(t) - 1.0;
  });
  VectorXd res = interior_pde_residual(mesh, ex.spec, fn);
  EXPECT_LE(res.cwiseAbs().maxCoeff(), 1e-8);
}

TEST(PdeInterior, ExactSolutionResidualDecaysWithDegree) {
  ExampleProblem ex = quarter_disc_problem(5.0);
  Mesh mesh = build_mesh(ex.spec, benchmark_mesh_params(1, 2, 0.15));
  int interior = -1;
  for (const auto& el : mesh.elements)
    if (el.region == ElementRegion::Interior && el.angular == 0) interior = el.id;
  const SingularSolution& sol = *ex.singular;
  double prev = -1.0;
  for (int W : {3, 5, 7, 9}) {
    ElementFunction fn = sample_on(mesh, interior, W, [&](double r, double t) {
      return std::pow(r, sol.lambda0) * angular_value(sol, t);
    });
    double v = interior_pde_residual(mesh, ex.spec, fn).squaredNorm();
    if (prev >= 0.0) EXPECT_LT(v, prev) << "W=" << W;
    prev = v;
  }
  EXPECT_LE(prev, 1e-10);
}

TEST(Jump, ConstantFieldFullyConforming) {
  ExampleProblem ex = quarter_disc_problem(10.0);
  Mesh mesh = build_mesh(ex.spec, benchmark_mesh_params(1, 3, 0.15));
  const int W = 4;
  const double c = 2.75;
  auto fns = sample_all(mesh, W, [&](double, double) { return c; });
  VertexConstants constants;
  constants.h = VectorXd::Constant(1, c);
  for (const auto& [edge, r] : jump_residuals(mesh, ex.spec, W, 0.3, fns, constants))
    EXPECT_LE(r.cwiseAbs().maxCoeff(), 1e-12) << "edge " << edge;
}

TEST(Jump, SmoothGlobalFieldNearlyConforming) {
  // u = r^2 with vertex limit 0: exact in the interior boxes, interpolated
  // as e^{2 tau} in the graded layers
  ExampleProblem ex = quarter_disc_problem(1.0);
  Mesh mesh = build_mesh(ex.spec, benchmark_mesh_params(1, 6, 0.15));
  const int W = 10;
  std::vector<ElementFunction> fns(mesh.elements.size());
  for (const auto& el : mesh.elements) {
    fns[el.id].element_id = el.id;
    if (!el.polynomial()) continue;
    bool graded = el.region == ElementRegion::SingularLayer;
    fns[el.id] = sample_on(mesh, el.id, W, [graded](double s, double) {
      double r = graded ? std::exp(s) : s;
      return r * r;
    });
  }
  VertexConstants constants;
  constants.h = VectorXd::Zero(1);
  for (const auto& [edge, r] : jump_residuals(mesh, ex.spec, W, 0.3, fns, constants))
    EXPECT_LE(r.squaredNorm(), 1e-9) << "edge " << edge;
}

TEST(Jump, ConstantJumpClosedForm) {
  ExampleProblem ex = quarter_disc_problem(10.0);
  Mesh mesh = build_mesh(ex.spec, benchmark_mesh_params(1, 2, 0.15));
  const int W = 3;
  const double c = -1.4, alpha = 0.31;
  // arc between the two graded layers in sector 0: elements 2 (inner) and 4
  int target = -1;
  for (const auto& e : mesh.edges)
    if (e.axis == EdgeAxis::Arc && e.sides.size() == 2 && e.sides[0].element == 2 &&
        e.sides[1].element == 4)
      target = e.id;
  ASSERT_GE(target, 0);
  std::vector<ElementFunction> fns(mesh.elements.size());
  for (const auto& el : mesh.elements) {
    fns[el.id].element_id = el.id;
    if (el.polynomial())
      fns[el.id] = sample_on(mesh, el.id, W,
                             [&](double, double) { return el.id == 2 ? c : 0.0; });
  }
  VertexConstants constants;
  constants.h = VectorXd::Zero(1);
  const MeshEdge& e = edge_by_id(mesh, target);
  double expected = edge_weight(e, alpha) * c * c * e.measure;
  for (const auto& [edge, r] : jump_residuals(mesh, ex.spec, W, alpha, fns, constants))
    if (edge == target) EXPECT_NEAR(r.squaredNorm(), expected, 1e-12 * expected);
}

TEST(Jump, ExactSolutionInterfaceBlocksVanish) {
  ExampleProblem ex = quarter_disc_problem(5.0);
  Mesh mesh = build_mesh(ex.spec, benchmark_mesh_params(1, 3, 0.15));
  const int W = 8;
  auto fns = sample_singular_solution(mesh, *ex.singular, W);
  VertexConstants constants;
  constants.h = VectorXd::Zero(1);
  int interfaces = 0;
  for (const auto& [edge, r] : jump_residuals(mesh, ex.spec, W, 0.3, fns, constants)) {
    if (edge_by_id(mesh, edge).cls != EdgeClass::Interface) continue;
    ++interfaces;
    EXPECT_LE(r.squaredNorm(), 1e-9) << "edge " << edge;
  }
  EXPECT_GE(interfaces, 4);
}

TEST(Boundary, HomogeneousProblemZeroResiduals) {
  ExampleProblem ex = homogeneous_quarter(10.0);
  Mesh mesh = build_mesh(ex.spec, benchmark_mesh_params(1, 2, 0.15));
  const int W = 3;
  auto fns = sample_all(mesh, W, [](double, double) { return 0.0; });
  VertexConstants constants;
  constants.h = VectorXd::Zero(1);
  for (const auto& [id, r] : boundary_residuals(mesh, ex.spec, W, 0.3, fns, constants))
    EXPECT_LE(r.cwiseAbs().maxCoeff(), 1e-14) << "block " << id;
}

TEST(Boundary, ExactSolutionNeumannBlocksVanish) {
  ExampleProblem ex = quarter_disc_problem(5.0);
  Mesh mesh = build_mesh(ex.spec, benchmark_mesh_params(1, 3, 0.15));
  const int W = 8;
  auto fns = sample_singular_solution(mesh, *ex.singular, W);
  VertexConstants constants;
  constants.h = VectorXd::Zero(1);
  int neumann = 0;
  for (const auto& [id, r] : boundary_residuals(mesh, ex.spec, W, 0.3, fns, constants)) {
    if (id < 0 || edge_by_id(mesh, id).cls != EdgeClass::NeumannBoundary) continue;
    ++neumann;
    EXPECT_LE(r.squaredNorm(), 1e-9) << "edge " << id;
  }
  EXPECT_GE(neumann, 3);
}

TEST(Boundary, VertexPenaltyClosedForm) {
  ExampleProblem ex = quarter_disc_problem(10.0);
  Mesh mesh = build_mesh(ex.spec, benchmark_mesh_params(1, 2, 0.15));
  const int W = 3;
  auto fns = sample_all(mesh, W, [](double, double) { return 0.0; });
  VertexConstants constants;
  constants.h = VectorXd::Constant(1, 3.0);
  bool found = false;
  for (const auto& [id, r] : boundary_residuals(mesh, ex.spec, W, 0.3, fns, constants))
    if (id < 0) {
      found = true;
      EXPECT_NEAR(r.squaredNorm(), 9.0, 1e-12);
    }
  EXPECT_TRUE(found);
}

TEST(Weights, LayerLadderExactRatios) {
  ExampleProblem ex = quarter_disc_problem(10.0);
  const double q = 0.15, alpha = 0.29;
  Mesh mesh = build_mesh(ex.spec, benchmark_mesh_params(1, 5, q));
  for (int j = 2; j <= 5; ++j) {
    double ratio = layer_weight(mesh, j, alpha) / layer_weight(mesh, j + 1, alpha);
    EXPECT_NEAR(ratio, std::pow(q, -2.0 * alpha), 1e-13 * ratio) << "j=" << j;
  }
  // absolute form: (rho q^{N+1-j})^{-2 alpha}
  for (int j = 2; j <= 6; ++j)
    EXPECT_NEAR(layer_weight(mesh, j, alpha), std::pow(0.5 * std::pow(q, 6 - j), -2.0 * alpha),
                1e-12 * layer_weight(mesh, j, alpha))
        << "j=" << j;
}

TEST(Functional, ZeroUnknownsHomogeneousProblem) {
  ExampleProblem ex = homogeneous_quarter(10.0);
  Mesh mesh = build_mesh(ex.spec, benchmark_mesh_params(1, 2, 0.15));
  ResidualMap map = assemble_residual_map(mesh, ex.spec, 3, 0.3);
  EXPECT_DOUBLE_EQ(total_functional(map, VectorXd::Zero(map.unknowns())), 0.0);
}

TEST(Functional, QuadraticPolarizationIdentity) {
  ExampleProblem ex = quarter_disc_problem(10.0);
  Mesh mesh = build_mesh(ex.spec, benchmark_mesh_params(1, 2, 0.15));
  ResidualMap map = assemble_residual_map(mesh, ex.spec, 3, 0.3);
  std::mt19937 rng(17);
  std::normal_distribution<double> dist;
  for (int trial = 0; trial < 5; ++trial) {
    VectorXd u(map.unknowns()), v(map.unknowns());
    for (int i = 0; i < u.size(); ++i) {
      u[i] = dist(rng);
      v[i] = dist(rng);
    }
    double lhs = total_functional(map, u + v) - total_functional(map, u) -
                 total_functional(map, v) + total_functional(map, VectorXd::Zero(map.unknowns()));
    double rhs = 2.0 * apply_jacobian(map, u).dot(apply_jacobian(map, v));
    EXPECT_NEAR(lhs, rhs, 1e-9 * (1.0 + std::abs(rhs)));
  }
}

TEST(Functional, GradientMatchesCentralDifferences) {
  ExampleProblem ex = quarter_disc_problem(10.0);
  Mesh mesh = build_mesh(ex.spec, benchmark_mesh_params(1, 2, 0.15));
  ResidualMap map = assemble_residual_map(mesh, ex.spec, 3, 0.3);
  std::mt19937 rng(23);
  // small amplitude keeps F itself small, so the quadratic's central
  // difference is not drowned by cancellation at step 1e-6
  std::normal_distribution<double> dist(0.0, 1e-3);
  VectorXd u(map.unknowns());
  for (int i = 0; i < u.size(); ++i) u[i] = dist(rng);
  VectorXd grad = functional_gradient(map, u);
  const double eps = 1e-6;
  std::uniform_int_distribution<int> pick(0, static_cast<int>(u.size()) - 1);
  for (int trial = 0; trial < 12; ++trial) {
    int k = pick(rng);
    VectorXd up = u, dn = u;
    up[k] += eps;
    dn[k] -= eps;
    double fd = (total_functional(map, up) - total_functional(map, dn)) / (2.0 * eps);
    EXPECT_NEAR(grad[k], fd, 1e-6 * std::max(1.0, std::abs(fd))) << "coordinate " << k;
  }
  // the vertex constant is the last unknown; check it explicitly
  int k = static_cast<int>(u.size()) - 1;
  VectorXd up = u, dn = u;
  up[k] += eps;
  dn[k] -= eps;
  double fd = (total_functional(map, up) - total_functional(map, dn)) / (2.0 * eps);
  EXPECT_NEAR(grad[k], fd, 1e-6 * std::max(1.0, std::abs(fd)));
}

TEST(Functional, ExactSamplesResidualDecaysUnderJointRefinement) {
  // with h pinned at the exact vertex limit, the residual of exact samples
  // is dominated by the strip modeling error, which decays like sigma_2 to
  // the power lambda as layers are added; the per-degree parts decay
  // spectrally in W
  ExampleProblem ex = quarter_disc_problem(5.0);
  double prev = -1.0;
  for (int W : {2, 3, 4, 5, 6}) {
    Mesh mesh = build_mesh(ex.spec, benchmark_mesh_params(1, W, 0.15));
    ResidualMap map = assemble_residual_map(mesh, ex.spec, W, ex.lambda0() / 2.0);
    auto fns = sample_singular_solution(mesh, *ex.singular, W);
    VectorXd u = pack_unknowns(map, fns, VectorXd::Zero(1));
    double v = total_functional(map, u);
    if (prev >= 0.0) EXPECT_LT(v, 0.6 * prev) << "W=N=" << W;
    prev = v;
  }
  EXPECT_LE(prev, 1e-2);
}

TEST(Functional, ExactSamplesSpectralPartsDecayInDegree) {
  // on a fixed mesh the PDE and interface blocks are pure interpolation
  // error and collapse spectrally with the degree
  ExampleProblem ex = quarter_disc_problem(5.0);
  Mesh mesh = build_mesh(ex.spec, benchmark_mesh_params(1, 3, 0.15));
  auto kind_total = [&](int W, BlockKind kind) {
    ResidualMap map = assemble_residual_map(mesh, ex.spec, W, ex.lambda0() / 2.0);
    auto fns = sample_singular_solution(mesh, *ex.singular, W);
    VectorXd r = map_residual(map, pack_unknowns(map, fns, VectorXd::Zero(1)));
    double total = 0.0;
    int at = 0;
    for (const auto& b : map.blocks) {
      if (b.kind == kind) total += r.segment(at, b.rows).squaredNorm();
      at += b.rows;
    }
    return total;
  };
  EXPECT_LT(kind_total(7, BlockKind::PdeSingular), 1e-10);
  EXPECT_LT(kind_total(7, BlockKind::PdeSingular), 1e-6 * kind_total(3, BlockKind::PdeSingular));
  EXPECT_LT(kind_total(7, BlockKind::InterfaceJump), 1e-14);
  EXPECT_LT(kind_total(7, BlockKind::NeumannResidual), 1e-14);
}

TEST(Functional, PackUnpackRoundTrip) {
  ExampleProblem ex = quarter_disc_problem(10.0);
  Mesh mesh = build_mesh(ex.spec, benchmark_mesh_params(1, 2, 0.15));
  ResidualMap map = assemble_residual_map(mesh, ex.spec, 4, 0.3);
  std::mt19937 rng(3);
  std::normal_distribution<double> dist;
  VectorXd u(map.unknowns());
  for (int i = 0; i < u.size(); ++i) u[i] = dist(rng);
  auto fns = unpack_elements(map, u);
  VectorXd h = unpack_constants(map, u);
  VectorXd back = pack_unknowns(map, fns, h);
  EXPECT_DOUBLE_EQ((back - u).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Functional, BlockShapesIndependentOfUnknowns) {
  ExampleProblem ex = quarter_disc_problem(10.0);
  Mesh mesh = build_mesh(ex.spec, benchmark_mesh_params(1, 2, 0.15));
  ResidualMap map = assemble_residual_map(mesh, ex.spec, 3, 0.3);
  int pde_singular = 0, pde_interior = 0, penalties = 0;
  for (const auto& b : map.blocks) {
    if (b.kind == BlockKind::PdeSingular) ++pde_singular;
    if (b.kind == BlockKind::PdeInterior) ++pde_interior;
    if (b.kind == BlockKind::VertexPenalty) ++penalties;
  }
  EXPECT_EQ(pde_singular, 4);
  EXPECT_EQ(pde_interior, 2);
  EXPECT_EQ(penalties, 1);
  EXPECT_EQ(map.unknowns(), 6 * 16 + 1);
  VectorXd r = map_residual(map, VectorXd::Zero(map.unknowns()));
  EXPECT_EQ(r.size(), map.total_rows);
}