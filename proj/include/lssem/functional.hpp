#pragma once

#include "lssem/basis.hpp"
#include "lssem/mesh.hpp"
#include "lssem/norms.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace lssem {

/// Weight of the PDE residual on graded layer j: (rho q^{N+1-j})^{-2 alpha},
/// the layer's outer radius raised to -2 alpha.
inline double layer_weight(const Mesh& mesh, int layer, double alpha) {
  return std::pow(mesh.ext_radii[layer], -2.0 * alpha);
}

/// Weight of every finite edge functional: inf-distance to the singular
/// point raised to -2 alpha.
inline double edge_weight(const MeshEdge& e, double alpha) {
  return std::pow(e.dist, -2.0 * alpha);
}

enum class BlockKind {
  PdeSingular,
  PdeInterior,
  InterElementJump,
  InterfaceJump,
  DirichletResidual,
  NeumannResidual,
  VertexPenalty
};

/// One weighted residual block: residual = sum_t mat_t * vec(U_t) +
/// h_col * h[h_vertex] - data. Squared norms of blocks sum to the
/// least-squares functional.
struct BlockTerm {
  int element = -1;  // mesh element id owning the nodal slice
  MatrixXd mat;      // rows x (W+1)^2
};

struct ResidualBlock {
  BlockKind kind = BlockKind::PdeInterior;
  int ref = -1;  // element id, edge id, or vertex index by kind
  std::vector<BlockTerm> terms;
  VectorXd h_col;  // empty when the block does not touch a vertex constant
  int h_vertex = -1;
  VectorXd data;
  int rows = 0;
};

// ---------------------------------------------------------------------------
// trace maps: linear maps from vectorized element values to edge samples
// ---------------------------------------------------------------------------

/// Reference-coordinate extraction of one element side: values, derivative
/// along the side parameter, derivative across it (all d/d(reference)).
struct SideMaps {
  MatrixXd val, dpar, dnorm;  // each (W+1) x (W+1)^2
};

inline SideMaps side_maps(int W, Side side) {
  const GLLGrid& g = gll_grid(W);
  const int n = W + 1;
  SideMaps m;
  m.val = MatrixXd::Zero(n, n * n);
  m.dpar = MatrixXd::Zero(n, n * n);
  m.dnorm = MatrixXd::Zero(n, n * n);
  auto idx = [n](int a, int b) { return a + b * n; };
  if (side == Side::SLow || side == Side::SHigh) {
    const int a0 = (side == Side::SLow) ? 0 : W;
    for (int b = 0; b < n; ++b) {
      m.val(b, idx(a0, b)) = 1.0;
      for (int c = 0; c < n; ++c) {
        m.dpar(b, idx(a0, c)) = g.diff(b, c);   // d/dt along the side
        m.dnorm(b, idx(c, b)) = g.diff(a0, c);  // d/ds across it
      }
    }
  } else {
    const int b0 = (side == Side::TLow) ? 0 : W;
    for (int a = 0; a < n; ++a) {
      m.val(a, idx(a, b0)) = 1.0;
      for (int c = 0; c < n; ++c) {
        m.dpar(a, idx(c, b0)) = g.diff(a, c);   // d/ds along the side
        m.dnorm(a, idx(a, c)) = g.diff(b0, c);  // d/dt across it
      }
    }
  }
  return m;
}

/// Maps from vectorized element values to traces in the edge's working
/// coordinates: value, tangential derivative per unit of edge parameter, and
/// normal derivative in the edge's fixed cross direction (+theta for radial
/// edges, +s for arcs; the same direction on both sides so jumps are
/// sign-consistent).
struct TraceMaps {
  MatrixXd val, tan, nor;
};

inline TraceMaps trace_maps(const Mesh& mesh, const MeshEdge& e, const MeshEdgeSide& s, int W) {
  const MeshElement& el = mesh.elements[s.element];
  if (!el.polynomial()) throw std::logic_error("trace_maps: strip elements carry no trace");
  SideMaps sm = side_maps(W, s.side);
  const double ds = 2.0 / (el.s1 - el.s0);
  const double dt = 2.0 / (el.t1 - el.t0);
  TraceMaps tm;
  tm.val = sm.val;
  if (e.axis == EdgeAxis::Radial) {
    // edge parameter: tau (singular) or r (interior); cross direction: theta
    tm.tan = ds * sm.dpar;
    if (e.in_singular_system) {
      tm.nor = dt * sm.dnorm;  // du/dtheta
    } else {
      // physical normal derivative per arclength: (1/r) du/dtheta
      const GLLGrid& g = gll_grid(W);
      tm.nor = dt * sm.dnorm;
      for (int i = 0; i <= W; ++i) {
        double r = 0.5 * (el.s0 + el.s1) + 0.5 * (el.s1 - el.s0) * g.nodes[i];
        tm.nor.row(i) /= r;
      }
    }
  } else {
    // arc edge: parameter theta (singular system) or arclength (interior)
    if (e.in_singular_system) {
      tm.tan = dt * sm.dpar;  // du/dtheta
      if (el.region == ElementRegion::Interior) {
        // the ring at rho couples log-coordinates to the interior box:
        // du/dtau = r du/dr with r = locus on the edge
        tm.nor = e.locus * ds * sm.dnorm;
      } else {
        tm.nor = ds * sm.dnorm;  // du/dtau
      }
    } else {
      tm.tan = (1.0 / e.locus) * dt * sm.dpar;  // (1/R) du/dtheta
      tm.nor = ds * sm.dnorm;                    // du/dr
    }
  }
  return tm;
}

// ---------------------------------------------------------------------------
// norm sampling rows
// ---------------------------------------------------------------------------

/// Rows whose squared norm is the L2 norm over an interval of given length.
inline MatrixXd l2_norm_rows(int W, double length) {
  return std::sqrt(0.5 * length) * edge_quadrature(W).l2_rows;
}

/// Rows whose squared norm is the full 1/2-norm (L2 + seminorm).
inline MatrixXd half_norm_rows(int W, double length) {
  const EdgeQuadrature& eq = edge_quadrature(W);
  MatrixXd out(eq.l2_rows.rows() + eq.semi_rows.rows(), eq.l2_rows.cols());
  out.topRows(eq.l2_rows.rows()) = std::sqrt(0.5 * length) * eq.l2_rows;
  out.bottomRows(eq.semi_rows.rows()) = eq.semi_rows;
  return out;
}

// ---------------------------------------------------------------------------
// block builders
// ---------------------------------------------------------------------------

namespace detail {

inline std::function<double(double, double)> source_or_zero(const ProblemSpec& spec) {
  if (spec.source) return spec.source;
  return [](double, double) { return 0.0; };
}

// GLL nodes of the edge parameter over [q0, q1]
inline VectorXd edge_nodes(const MeshEdge& e, int W) {
  const GLLGrid& g = gll_grid(W);
  VectorXd q(W + 1);
  for (int i = 0; i <= W; ++i) q[i] = 0.5 * (e.q0 + e.q1) + 0.5 * (e.q1 - e.q0) * g.nodes[i];
  return q;
}

// boundary data sampled at the edge's GLL parameter nodes, in the working
// coordinate of the edge (tau, r, or theta)
inline VectorXd boundary_samples(const ProblemSpec& spec, const MeshEdge& e, int W) {
  const BoundarySegment& seg = spec.boundary.at(e.boundary_segment);
  VectorXd q = edge_nodes(e, W);
  VectorXd out(W + 1);
  for (int i = 0; i <= W; ++i) {
    double par = q[i];
    if (e.axis == EdgeAxis::Radial && e.in_singular_system) par = std::exp(par);  // tau -> r
    double v = seg.data ? seg.data(par) : 0.0;
    if (!std::isfinite(v)) throw std::runtime_error("boundary data not finite at a sample point");
    out[i] = v;
  }
  return out;
}

}  // namespace detail

/// PDE residual block on a graded layer: sqrt(layer weight) times
/// -p (u_tautau + u_thetatheta) - e^{2 tau} f at the tensor GLL points,
/// scaled so the squared norm is the weighted L2 residual over the box.
inline ResidualBlock build_pde_singular_block(const Mesh& mesh, const ProblemSpec& spec,
                                              int element, int W, double alpha) {
  const MeshElement& el = mesh.elements[element];
  if (el.region != ElementRegion::SingularLayer)
    throw std::logic_error("build_pde_singular_block: element is not a graded layer");
  const GLLGrid& g = gll_grid(W);
  const int n = W + 1;
  const double hs = 0.5 * (el.s1 - el.s0), ht = 0.5 * (el.t1 - el.t0);
  const double w_layer = layer_weight(mesh, el.layer, alpha);
  const double p = el.coefficient;
  const SingularPoint& sp = spec.singular_points.front();
  auto f = detail::source_or_zero(spec);

  ResidualBlock blk;
  blk.kind = BlockKind::PdeSingular;
  blk.ref = element;
  blk.rows = n * n;
  blk.data.resize(n * n);
  MatrixXd mat = MatrixXd::Zero(n * n, n * n);
  const double cs = 1.0 / (hs * hs), ct = 1.0 / (ht * ht);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const int row = a + b * n;
      const double scale = std::sqrt(g.weights[a] * g.weights[b] * hs * ht * w_layer);
      for (int c = 0; c < n; ++c) {
        mat(row, c + b * n) += -p * cs * g.diff2(a, c) * scale;  // u_tautau
        mat(row, a + c * n) += -p * ct * g.diff2(b, c) * scale;  // u_thetatheta
      }
      const double tau = 0.5 * (el.s0 + el.s1) + hs * g.nodes[a];
      const double theta = 0.5 * (el.t0 + el.t1) + ht * g.nodes[b];
      const double r = std::exp(tau);
      blk.data[row] =
          scale * std::exp(2.0 * tau) * f(sp.x + r * std::cos(theta), sp.y + r * std::sin(theta));
    }
  blk.terms.push_back({element, std::move(mat)});
  return blk;
}

/// PDE residual block on an interior element: -p (u_rr + u_r / r +
/// u_thetatheta / r^2) - f, weighted by the polar area element.
inline ResidualBlock build_pde_interior_block(const Mesh& mesh, const ProblemSpec& spec,
                                              int element, int W) {
  const MeshElement& el = mesh.elements[element];
  if (el.region != ElementRegion::Interior)
    throw std::logic_error("build_pde_interior_block: element is not interior");
  const GLLGrid& g = gll_grid(W);
  const int n = W + 1;
  const double hs = 0.5 * (el.s1 - el.s0), ht = 0.5 * (el.t1 - el.t0);
  if (!(hs > 0.0) || !(ht > 0.0))
    throw std::runtime_error("build_pde_interior_block: degenerate element map");
  const double p = el.coefficient;
  const SingularPoint& sp = spec.singular_points.front();
  auto f = detail::source_or_zero(spec);

  ResidualBlock blk;
  blk.kind = BlockKind::PdeInterior;
  blk.ref = element;
  blk.rows = n * n;
  blk.data.resize(n * n);
  MatrixXd mat = MatrixXd::Zero(n * n, n * n);
  for (int a = 0; a < n; ++a) {
    const double r = 0.5 * (el.s0 + el.s1) + hs * g.nodes[a];
    for (int b = 0; b < n; ++b) {
      const int row = a + b * n;
      const double scale = std::sqrt(g.weights[a] * g.weights[b] * hs * ht * r);
      for (int c = 0; c < n; ++c) {
        mat(row, c + b * n) +=
            -p * scale * (g.diff2(a, c) / (hs * hs) + g.diff(a, c) / (r * hs));
        mat(row, a + c * n) += -p * scale * g.diff2(b, c) / (ht * ht * r * r);
      }
      const double theta = 0.5 * (el.t0 + el.t1) + ht * g.nodes[b];
      blk.data[row] = scale * f(sp.x + r * std::cos(theta), sp.y + r * std::sin(theta));
    }
  }
  blk.terms.push_back({element, std::move(mat)});
  return blk;
}

/// Jump/boundary block for one finite-measure edge.
inline ResidualBlock build_edge_block(const Mesh& mesh, const ProblemSpec& spec,
                                      const MeshEdge& e, int W, double alpha) {
  if (!e.finite()) throw std::logic_error("build_edge_block: infinite-measure edge");
  const int n = W + 1;
  const double sw = std::sqrt(edge_weight(e, alpha));
  const double L = e.measure;
  const MatrixXd L2 = l2_norm_rows(W, L);
  const MatrixXd HN = half_norm_rows(W, L);
  const int nl = static_cast<int>(L2.rows());
  const int nh = static_cast<int>(HN.rows());
  const VectorXd ones = VectorXd::Ones(n);

  ResidualBlock blk;
  blk.ref = e.id;

  switch (e.cls) {
    case EdgeClass::InterElement:
    case EdgeClass::Interface: {
      const bool iface = e.cls == EdgeClass::Interface;
      blk.kind = iface ? BlockKind::InterfaceJump : BlockKind::InterElementJump;
      TraceMaps A = trace_maps(mesh, e, e.sides[0], W);
      TraceMaps B = trace_maps(mesh, e, e.sides[1], W);
      const double pa = iface ? e.p_left : 1.0;
      const double pb = iface ? e.p_right : 1.0;
      blk.rows = nl + 2 * nh;
      MatrixXd ma(blk.rows, n * n), mb(blk.rows, n * n);
      ma.topRows(nl) = sw * L2 * A.val;
      mb.topRows(nl) = -sw * L2 * B.val;
      ma.middleRows(nl, nh) = sw * HN * A.tan;
      mb.middleRows(nl, nh) = -sw * HN * B.tan;
      ma.bottomRows(nh) = sw * pa * HN * A.nor;
      mb.bottomRows(nh) = -sw * pb * HN * B.nor;
      blk.terms.push_back({e.sides[0].element, std::move(ma)});
      blk.terms.push_back({e.sides[1].element, std::move(mb)});
      blk.data = VectorXd::Zero(blk.rows);
      return blk;
    }
    case EdgeClass::ArcToConstant: {
      blk.kind = BlockKind::InterElementJump;
      TraceMaps A = trace_maps(mesh, e, e.sides[0], W);
      const int vertex = mesh.elements[e.sides[1].element].vertex;
      blk.rows = nl + nh;
      MatrixXd ma(blk.rows, n * n);
      ma.topRows(nl) = sw * L2 * A.val;
      ma.bottomRows(nh) = sw * HN * A.tan;
      blk.terms.push_back({e.sides[0].element, std::move(ma)});
      blk.h_col = VectorXd::Zero(blk.rows);
      blk.h_col.head(nl) = -sw * (L2 * ones);
      blk.h_vertex = vertex;
      blk.data = VectorXd::Zero(blk.rows);
      return blk;
    }
    case EdgeClass::DirichletBoundary: {
      blk.kind = BlockKind::DirichletResidual;
      TraceMaps A = trace_maps(mesh, e, e.sides[0], W);
      const MeshElement& el = mesh.elements[e.sides[0].element];
      VectorXd l = detail::boundary_samples(spec, e, W);
      // the tangential data derivative differentiates the GLL interpolant,
      // in the same working parameter as the trace map
      const GLLGrid& g = gll_grid(W);
      double par_scale = 2.0 / (e.q1 - e.q0);
      if (e.axis == EdgeAxis::Arc && !e.in_singular_system) par_scale /= e.locus;
      VectorXd l_tan = par_scale * (g.diff * l);
      blk.rows = nl + nh;
      MatrixXd ma(blk.rows, n * n);
      ma.topRows(nl) = sw * L2 * A.val;
      ma.bottomRows(nh) = sw * HN * A.tan;
      blk.data.resize(blk.rows);
      if (e.in_singular_system) {
        // (u - h) - (l - a): the vertex constant and the data's corner limit
        const int vertex = el.vertex;
        double a_k = 0.0;
        const BoundarySegment& seg = spec.boundary.at(e.boundary_segment);
        if (seg.data) a_k = seg.data(0.0);
        blk.h_col = VectorXd::Zero(blk.rows);
        blk.h_col.head(nl) = -sw * (L2 * ones);
        blk.h_vertex = vertex;
        blk.data.head(nl) = sw * (L2 * (l.array() - a_k).matrix());
      } else {
        blk.data.head(nl) = sw * (L2 * l);
      }
      blk.data.tail(nh) = sw * (HN * l_tan);
      blk.terms.push_back({e.sides[0].element, std::move(ma)});
      return blk;
    }
    case EdgeClass::NeumannBoundary: {
      blk.kind = BlockKind::NeumannResidual;
      TraceMaps A = trace_maps(mesh, e, e.sides[0], W);
      const Side side = e.sides[0].side;
      const double sign = (side == Side::SHigh || side == Side::THigh) ? 1.0 : -1.0;
      VectorXd gdat = detail::boundary_samples(spec, e, W);
      VectorXd rhs(n);
      if (e.in_singular_system) {
        // physical flux datum g maps to e^{tau} g in log coordinates
        VectorXd q = detail::edge_nodes(e, W);
        for (int i = 0; i < n; ++i) rhs[i] = std::exp(q[i]) * gdat[i];
      } else {
        rhs = gdat;
      }
      blk.rows = nh;
      MatrixXd ma = sw * sign * (HN * A.nor);
      blk.data = sw * (HN * rhs);
      blk.terms.push_back({e.sides[0].element, std::move(ma)});
      return blk;
    }
  }
  throw std::logic_error("build_edge_block: unhandled edge class");
}

// ---------------------------------------------------------------------------
// assembled residual map
// ---------------------------------------------------------------------------

/// The full least-squares residual map. Unknown layout: one (W+1)^2 nodal
/// slice per polynomial element in unknown_slot order, then the vertex
/// constants.
struct ResidualMap {
  const Mesh* mesh = nullptr;
  int degree = 0;
  double alpha = 0.0;
  int num_h = 1;
  std::vector<ResidualBlock> blocks;
  int total_rows = 0;

  int slice() const { return (degree + 1) * (degree + 1); }
  int unknowns() const { return mesh->num_polynomial * slice() + num_h; }
  int slot_offset(int element) const { return mesh->elements[element].unknown_slot * slice(); }
  int h_offset(int vertex) const { return mesh->num_polynomial * slice() + vertex; }
};

inline ResidualMap assemble_residual_map(const Mesh& mesh, const ProblemSpec& spec, int W,
                                         double alpha) {
  if (W < 2) throw std::invalid_argument("assemble_residual_map: degree must be at least 2");
  if (!(alpha > 0.0)) throw std::invalid_argument("assemble_residual_map: alpha must be positive");
  ResidualMap map;
  map.mesh = &mesh;
  map.degree = W;
  map.alpha = alpha;
  map.num_h = static_cast<int>(spec.singular_points.size());
  // deterministic block order: PDE by element, edges by id, then penalties
  for (const auto& el : mesh.elements) {
    if (el.region == ElementRegion::SingularLayer)
      map.blocks.push_back(build_pde_singular_block(mesh, spec, el.id, W, alpha));
    else if (el.region == ElementRegion::Interior)
      map.blocks.push_back(build_pde_interior_block(mesh, spec, el.id, W));
  }
  for (const auto& e : mesh.edges)
    if (e.finite()) map.blocks.push_back(build_edge_block(mesh, spec, e, W, alpha));
  // vertex penalty (h_k - a_k)^2 when the vertex touches Dirichlet rays
  for (size_t k = 0; k < spec.singular_points.size(); ++k) {
    bool penalized = false;
    double a_k = 0.0;
    for (const auto& seg : spec.boundary)
      if (std::holds_alternative<RayEdge>(seg.geometry) && seg.kind == BoundaryKind::Dirichlet) {
        penalized = true;
        if (seg.data) a_k = seg.data(0.0);
        break;
      }
    if (!penalized) continue;
    ResidualBlock blk;
    blk.kind = BlockKind::VertexPenalty;
    blk.ref = static_cast<int>(k);
    blk.rows = 1;
    blk.h_col = VectorXd::Ones(1);
    blk.h_vertex = static_cast<int>(k);
    blk.data = VectorXd::Constant(1, a_k);
    map.blocks.push_back(std::move(blk));
  }
  map.total_rows = 0;
  for (const auto& b : map.blocks) map.total_rows += b.rows;
  return map;
}

/// Concatenated weighted residual samples at the given unknowns.
inline VectorXd map_residual(const ResidualMap& map, const VectorXd& u) {
  if (u.size() != map.unknowns())
    throw std::invalid_argument("map_residual: unknown vector has wrong dimension");
  VectorXd out(map.total_rows);
  int at = 0;
  const int S = map.slice();
  for (const auto& b : map.blocks) {
    VectorXd r = -b.data;
    for (const auto& t : b.terms) r.noalias() += t.mat * u.segment(map.slot_offset(t.element), S);
    if (b.h_vertex >= 0) r.noalias() += b.h_col * u[map.h_offset(b.h_vertex)];
    out.segment(at, b.rows) = r;
    at += b.rows;
  }
  return out;
}

/// J u with the data dropped (the linear part of the residual).
inline VectorXd apply_jacobian(const ResidualMap& map, const VectorXd& u) {
  VectorXd out(map.total_rows);
  int at = 0;
  const int S = map.slice();
  for (const auto& b : map.blocks) {
    VectorXd r = VectorXd::Zero(b.rows);
    for (const auto& t : b.terms) r.noalias() += t.mat * u.segment(map.slot_offset(t.element), S);
    if (b.h_vertex >= 0) r.noalias() += b.h_col * u[map.h_offset(b.h_vertex)];
    out.segment(at, b.rows) = r;
    at += b.rows;
  }
  return out;
}

/// J^T r, accumulated block by block in a fixed order.
inline VectorXd apply_jacobian_transpose(const ResidualMap& map, const VectorXd& r) {
  if (r.size() != map.total_rows)
    throw std::invalid_argument("apply_jacobian_transpose: residual has wrong dimension");
  VectorXd out = VectorXd::Zero(map.unknowns());
  int at = 0;
  const int S = map.slice();
  for (const auto& b : map.blocks) {
    const auto seg = r.segment(at, b.rows);
    for (const auto& t : b.terms)
      out.segment(map.slot_offset(t.element), S).noalias() += t.mat.transpose() * seg;
    if (b.h_vertex >= 0) out[map.h_offset(b.h_vertex)] += b.h_col.dot(seg);
    at += b.rows;
  }
  return out;
}

/// Value of the least-squares functional at the unknowns.
inline double total_functional(const ResidualMap& map, const VectorXd& u) {
  return map_residual(map, u).squaredNorm();
}

/// Packs per-element nodal values and vertex constants into the unknown
/// layout. Strip entries in fns are ignored.
inline VectorXd pack_unknowns(const ResidualMap& map, const std::vector<ElementFunction>& fns,
                              const VectorXd& h) {
  VectorXd u = VectorXd::Zero(map.unknowns());
  const int S = map.slice();
  for (const auto& el : map.mesh->elements) {
    if (!el.polynomial()) continue;
    const ElementFunction& fn = fns.at(el.id);
    if (fn.values.size() != S) throw std::invalid_argument("pack_unknowns: wrong nodal shape");
    u.segment(map.slot_offset(el.id), S) = fn.values.reshaped();
  }
  u.tail(map.num_h) = h;
  return u;
}

/// Splits an unknown vector into per-element functions (strips get empty
/// value matrices) and the vertex constants.
inline std::vector<ElementFunction> unpack_elements(const ResidualMap& map, const VectorXd& u) {
  const int n = map.degree + 1;
  std::vector<ElementFunction> fns(map.mesh->elements.size());
  for (const auto& el : map.mesh->elements) {
    fns[el.id].element_id = el.id;
    if (!el.polynomial()) continue;
    fns[el.id].values =
        Eigen::Map<const MatrixXd>(u.data() + map.slot_offset(el.id), n, n);
  }
  return fns;
}

inline VectorXd unpack_constants(const ResidualMap& map, const VectorXd& u) {
  return u.tail(map.num_h);
}

/// Analytic gradient 2 J^T (J u - c).
inline VectorXd functional_gradient(const ResidualMap& map, const VectorXd& u) {
  return 2.0 * apply_jacobian_transpose(map, map_residual(map, u));
}

// ---------------------------------------------------------------------------
// standalone per-element / per-edge residual views (built on the same
// matrices, so tests exercise exactly the production path)
// ---------------------------------------------------------------------------

inline VectorXd transformed_pde_residual(const Mesh& mesh, const ProblemSpec& spec,
                                         const ElementFunction& fn, double alpha) {
  ResidualBlock blk =
      build_pde_singular_block(mesh, spec, fn.element_id, fn.degree(), alpha);
  return blk.terms[0].mat * fn.values.reshaped() - blk.data;
}

inline VectorXd interior_pde_residual(const Mesh& mesh, const ProblemSpec& spec,
                                      const ElementFunction& fn) {
  ResidualBlock blk = build_pde_interior_block(mesh, spec, fn.element_id, fn.degree());
  return blk.terms[0].mat * fn.values.reshaped() - blk.data;
}

/// Residual samples of every jump-type edge (inter-element, interface,
/// arc-to-constant), as (edge id, samples) in edge order.
inline std::vector<std::pair<int, VectorXd>> jump_residuals(
    const Mesh& mesh, const ProblemSpec& spec, int W, double alpha,
    const std::vector<ElementFunction>& fns, const VertexConstants& constants) {
  std::vector<std::pair<int, VectorXd>> out;
  for (const auto& e : mesh.edges) {
    if (!e.finite()) continue;
    if (e.cls != EdgeClass::InterElement && e.cls != EdgeClass::Interface &&
        e.cls != EdgeClass::ArcToConstant)
      continue;
    ResidualBlock blk = build_edge_block(mesh, spec, e, W, alpha);
    VectorXd r = -blk.data;
    for (const auto& t : blk.terms) r.noalias() += t.mat * fns.at(t.element).values.reshaped();
    if (blk.h_vertex >= 0) r.noalias() += blk.h_col * constants.h[blk.h_vertex];
    out.emplace_back(e.id, std::move(r));
  }
  return out;
}

/// Residual samples of every boundary edge plus the vertex penalties; the
/// penalties are appended with ref = -(vertex+1) to keep ids disjoint.
inline std::vector<std::pair<int, VectorXd>> boundary_residuals(
    const Mesh& mesh, const ProblemSpec& spec, int W, double alpha,
    const std::vector<ElementFunction>& fns, const VertexConstants& constants) {
  std::vector<std::pair<int, VectorXd>> out;
  for (const auto& e : mesh.edges) {
    if (!e.finite()) continue;
    if (e.cls != EdgeClass::DirichletBoundary && e.cls != EdgeClass::NeumannBoundary) continue;
    ResidualBlock blk = build_edge_block(mesh, spec, e, W, alpha);
    VectorXd r = -blk.data;
    for (const auto& t : blk.terms) r.noalias() += t.mat * fns.at(t.element).values.reshaped();
    if (blk.h_vertex >= 0) r.noalias() += blk.h_col * constants.h[blk.h_vertex];
    out.emplace_back(e.id, std::move(r));
  }
  for (size_t k = 0; k < spec.singular_points.size(); ++k) {
    bool penalized = false;
    double a_k = 0.0;
    for (const auto& seg : spec.boundary)
      if (std::holds_alternative<RayEdge>(seg.geometry) && seg.kind == BoundaryKind::Dirichlet) {
        penalized = true;
        if (seg.data) a_k = seg.data(0.0);
        break;
      }
    if (!penalized) continue;
    VectorXd r = VectorXd::Constant(1, constants.h[k] - a_k);
    out.emplace_back(-static_cast<int>(k) - 1, std::move(r));
  }
  return out;
}

}  // namespace lssem
