#pragma once

#include "lssem/basis.hpp"
#include "lssem/problem.hpp"
#include "lssem/singularity.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace lssem {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Graded radii toward the singular point: sigma_1 = 0 and
/// sigma_j = rho * q^(N+1-j) for 2 <= j <= N+1 (returned 0-based).
inline std::vector<double> radii(double rho, double q, int N) {
  if (!(rho > 0.0)) throw std::invalid_argument("radii: rho must be positive");
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("radii: ratio must lie in (0,1)");
  if (N < 2) throw std::invalid_argument("radii: need at least two layers");
  std::vector<double> out(N + 1);
  out[0] = 0.0;
  for (int i = 1; i <= N; ++i) out[i] = rho * std::pow(q, N - i);
  return out;
}

struct MeshParams {
  double rho = 0.5;
  double ratio = 0.15;
  int layers = 2;  // N
  std::vector<double> angular_breaks;
  int interior_layers = 1;
};

inline MeshParams mesh_params_from(const GeometricMeshConfig& cfg) {
  MeshParams p;
  p.rho = cfg.rho;
  p.ratio = cfg.ratio;
  p.layers = cfg.layers;
  p.angular_breaks = cfg.angular_breaks;
  p.interior_layers = cfg.interior_layers;
  return p;
}

enum class ElementRegion { SingularStrip, SingularLayer, Interior };

/// A mesh element is an axis-aligned box in its working coordinates:
/// (tau, theta) with tau = ln r for the graded region, (r, theta) for the
/// interior annulus. The innermost strip has s0 = -inf and carries only the
/// per-vertex constant.
struct MeshElement {
  int id = -1;
  ElementRegion region = ElementRegion::Interior;
  int vertex = 0;
  int layer = 0;    // 1 = strip, 2..N+1 graded layers, N+2.. interior bands
  int angular = 0;  // index into angular_breaks sectors
  double s0 = 0.0, s1 = 0.0;  // tau or r range
  double t0 = 0.0, t1 = 0.0;  // theta range
  double coefficient = 1.0;
  int unknown_slot = -1;  // dense index among polynomial elements, -1 for strips

  bool polynomial() const { return region != ElementRegion::SingularStrip; }
  double r_inner() const { return region == ElementRegion::Interior ? s0 : std::exp(s0); }
  double r_outer() const { return region == ElementRegion::Interior ? s1 : std::exp(s1); }
};

enum class EdgeClass {
  InterElement,
  Interface,
  DirichletBoundary,
  NeumannBoundary,
  ArcToConstant
};

struct MeshEdgeSide {
  int element = -1;
  Side side = Side::SLow;
};

enum class EdgeAxis { Radial, Arc };

struct MeshEdge {
  int id = -1;
  EdgeClass cls = EdgeClass::InterElement;
  EdgeAxis axis = EdgeAxis::Radial;
  std::vector<MeshEdgeSide> sides;  // one entry for boundary edges, two otherwise
  double p_left = 0.0, p_right = 0.0;
  double measure = 0.0;  // length in working coordinates; inf on strip radial edges
  double dist = 0.0;     // inf distance from the singular point
  bool in_singular_system = true;
  double q0 = 0.0, q1 = 0.0;  // parameter range (tau, r, or theta)
  double locus = 0.0;         // angle of radial edges, radius of arcs
  int boundary_segment = -1;

  bool finite() const { return std::isfinite(measure); }
};

struct Mesh {
  std::vector<MeshElement> elements;
  std::vector<MeshEdge> edges;
  MeshParams params;
  std::vector<double> ext_radii;       // [0, rho q^N, ..., rho], length N+2
  std::vector<double> interior_radii;  // [rho, ..., outer_radius]
  bool periodic = false;
  double outer_radius = 1.0;
  int num_polynomial = 0;

  int angular_sectors() const { return static_cast<int>(params.angular_breaks.size()) - 1; }
  const MeshElement& strip(int a) const { return elements[a]; }
};

namespace detail {

inline bool near(double a, double b, double tol = 1e-12) { return std::abs(a - b) <= tol; }

inline int match_ray_segment(const ProblemSpec& spec, double angle) {
  for (size_t s = 0; s < spec.boundary.size(); ++s)
    if (const RayEdge* ray = std::get_if<RayEdge>(&spec.boundary[s].geometry))
      if (near(ray->angle, angle, 1e-9)) return static_cast<int>(s);
  return -1;
}

inline int match_arc_segment(const ProblemSpec& spec, double radius, double th0, double th1) {
  for (size_t s = 0; s < spec.boundary.size(); ++s)
    if (const ArcEdge* arc = std::get_if<ArcEdge>(&spec.boundary[s].geometry))
      if (near(arc->radius, radius, 1e-9) && arc->theta0 <= th0 + 1e-9 &&
          arc->theta1 >= th1 - 1e-9)
        return static_cast<int>(s);
  return -1;
}

}  // namespace detail

/// Rebuilds the classified edge graph of a built mesh: radial edges between
/// angular neighbours (Interface where the coefficient jumps, boundary kind
/// from the matching segment on the sector ends), arcs between radial
/// neighbours, the ArcToConstant ring around each strip, and the outer rim.
inline void classify_edges(Mesh& mesh, const ProblemSpec& spec) {
  mesh.edges.clear();
  const int A = mesh.angular_sectors();
  const int N = mesh.params.layers;
  const int J = mesh.params.interior_layers;
  const auto& psi = mesh.params.angular_breaks;
  const SectorPartition& part = spec.singular_points.front().partition;

  // element ids by construction order: strips, graded layers, interior bands
  auto strip_id = [&](int a) { return a; };
  auto layer_id = [&](int j, int a) { return A + (j - 2) * A + a; };  // j in [2, N+1]
  auto band_id = [&](int b, int a) { return A + N * A + b * A + a; };

  auto add = [&](MeshEdge e) {
    e.id = static_cast<int>(mesh.edges.size());
    mesh.edges.push_back(std::move(e));
  };

  auto is_interface_angle = [&](double angle) {
    for (size_t m = 1; m + 1 < part.breakpoints.size(); ++m)
      if (detail::near(part.breakpoints[m], angle, 1e-12)) return true;
    if (mesh.periodic) {
      // the seam is an interface when the closure carries a coefficient jump
      double span0 = part.breakpoints.front();
      if (detail::near(angle, span0, 1e-12) &&
          part.coefficients.front() != part.coefficients.back())
        return true;
    }
    return false;
  };

  // radial lines
  for (int i = 0; i <= A; ++i) {
    if (mesh.periodic && i == A) continue;  // seam handled at i = 0
    const bool seam = mesh.periodic && i == 0;
    const bool boundary = !mesh.periodic && (i == 0 || i == A);
    const double angle = psi[i];
    int segment = -1;
    if (boundary) {
      segment = detail::match_ray_segment(spec, angle);
      if (segment < 0)
        throw std::runtime_error("classify_edges: no boundary segment matches the ray at angle " +
                                 std::to_string(angle));
    }
    const int left_sector = seam ? A - 1 : i - 1;   // element on the theta- side
    const int right_sector = i;                     // element on the theta+ side
    auto emit_zone = [&](int id_left, int id_right, double s0, double s1, bool singular,
                         double dist, double measure) {
      MeshEdge e;
      e.axis = EdgeAxis::Radial;
      e.locus = angle;
      e.in_singular_system = singular;
      e.q0 = s0;
      e.q1 = s1;
      e.measure = measure;
      e.dist = dist;
      if (boundary) {
        int el = (i == 0) ? id_right : id_left;
        Side sd = (i == 0) ? Side::TLow : Side::THigh;
        e.sides = {{el, sd}};
        e.cls = spec.boundary[segment].kind == BoundaryKind::Dirichlet
                    ? EdgeClass::DirichletBoundary
                    : EdgeClass::NeumannBoundary;
        e.boundary_segment = segment;
        e.p_left = e.p_right = mesh.elements[el].coefficient;
      } else {
        e.sides = {{id_left, Side::THigh}, {id_right, Side::TLow}};
        e.p_left = mesh.elements[id_left].coefficient;
        e.p_right = mesh.elements[id_right].coefficient;
        e.cls = (is_interface_angle(angle) && e.p_left != e.p_right) ? EdgeClass::Interface
                                                                     : EdgeClass::InterElement;
      }
      add(std::move(e));
    };
    // strip zone: infinite measure, never enters the jump sums
    emit_zone(strip_id(left_sector < 0 ? 0 : left_sector), strip_id(right_sector % A), -kInf,
              std::log(mesh.ext_radii[1]), true, 0.0, kInf);
    for (int j = 2; j <= N + 1; ++j) {
      double tau0 = std::log(mesh.ext_radii[j - 1]);
      double tau1 = std::log(mesh.ext_radii[j]);
      emit_zone(layer_id(j, left_sector < 0 ? 0 : left_sector), layer_id(j, right_sector % A),
                tau0, tau1, true, mesh.ext_radii[j - 1], tau1 - tau0);
    }
    for (int b = 0; b < J; ++b) {
      double r0 = mesh.interior_radii[b];
      double r1 = mesh.interior_radii[b + 1];
      emit_zone(band_id(b, left_sector < 0 ? 0 : left_sector), band_id(b, right_sector % A), r0,
                r1, false, r0, r1 - r0);
    }
  }

  // arcs
  for (int a = 0; a < A; ++a) {
    const double th0 = psi[a], th1 = psi[a + 1];
    // strip ring: polynomial trace against the vertex constant
    {
      MeshEdge e;
      e.axis = EdgeAxis::Arc;
      e.cls = EdgeClass::ArcToConstant;
      e.locus = mesh.ext_radii[1];
      e.in_singular_system = true;
      e.q0 = th0;
      e.q1 = th1;
      e.measure = th1 - th0;
      e.dist = mesh.ext_radii[1];
      e.sides = {{layer_id(2, a), Side::SLow}, {strip_id(a), Side::SHigh}};
      e.p_left = e.p_right = mesh.elements[layer_id(2, a)].coefficient;
      add(std::move(e));
    }
    // between graded layers, and the graded-to-interior ring at rho
    for (int j = 2; j <= N + 1; ++j) {
      MeshEdge e;
      e.axis = EdgeAxis::Arc;
      e.cls = EdgeClass::InterElement;
      e.locus = mesh.ext_radii[j];
      e.in_singular_system = true;
      e.q0 = th0;
      e.q1 = th1;
      e.measure = th1 - th0;
      e.dist = mesh.ext_radii[j];
      int inner = layer_id(j, a);
      int outer = (j < N + 1) ? layer_id(j + 1, a) : band_id(0, a);
      e.sides = {{inner, Side::SHigh}, {outer, Side::SLow}};
      e.p_left = mesh.elements[inner].coefficient;
      e.p_right = mesh.elements[outer].coefficient;
      add(std::move(e));
    }
    // between interior bands
    for (int b = 1; b < J; ++b) {
      MeshEdge e;
      e.axis = EdgeAxis::Arc;
      e.cls = EdgeClass::InterElement;
      e.locus = mesh.interior_radii[b];
      e.in_singular_system = false;
      e.q0 = th0;
      e.q1 = th1;
      e.measure = mesh.interior_radii[b] * (th1 - th0);
      e.dist = mesh.interior_radii[b];
      e.sides = {{band_id(b - 1, a), Side::SHigh}, {band_id(b, a), Side::SLow}};
      e.p_left = mesh.elements[band_id(b - 1, a)].coefficient;
      e.p_right = mesh.elements[band_id(b, a)].coefficient;
      add(std::move(e));
    }
    // outer rim
    {
      int segment = detail::match_arc_segment(spec, mesh.outer_radius, th0, th1);
      if (segment < 0)
        throw std::runtime_error("classify_edges: no boundary segment covers the rim over [" +
                                 std::to_string(th0) + ", " + std::to_string(th1) + "]");
      MeshEdge e;
      e.axis = EdgeAxis::Arc;
      e.locus = mesh.outer_radius;
      e.in_singular_system = false;
      e.q0 = th0;
      e.q1 = th1;
      e.measure = mesh.outer_radius * (th1 - th0);
      e.dist = mesh.outer_radius;
      e.sides = {{band_id(J - 1, a), Side::SHigh}};
      e.cls = spec.boundary[segment].kind == BoundaryKind::Dirichlet
                  ? EdgeClass::DirichletBoundary
                  : EdgeClass::NeumannBoundary;
      e.boundary_segment = segment;
      e.p_left = e.p_right = mesh.elements[band_id(J - 1, a)].coefficient;
      add(std::move(e));
    }
  }
}

/// Builds the hybrid mesh: per angular sector one semi-infinite strip, N
/// geometric layers mapped to equal (tau, theta) boxes, and interior_layers
/// uniform radial bands between rho and the rim.
inline Mesh build_mesh(const ProblemSpec& spec, const MeshParams& params) {
  auto violations = validate_problem(spec);
  if (!violations.empty())
    throw std::invalid_argument("build_mesh: invalid problem: " + violations.front());
  if (spec.singular_points.size() != 1)
    throw std::runtime_error("build_mesh: exactly one singular point is supported");
  const SectorPartition& part = spec.singular_points.front().partition;
  if (params.interior_layers < 1)
    throw std::invalid_argument("build_mesh: need at least one interior band");
  if (!(params.rho > 0.0 && params.rho < spec.outer_radius))
    throw std::invalid_argument("build_mesh: rho must lie inside the domain");
  const auto& psi = params.angular_breaks;
  if (psi.size() < 2) throw std::invalid_argument("build_mesh: angular breaks missing");
  for (size_t i = 1; i < psi.size(); ++i)
    if (psi[i] <= psi[i - 1])
      throw std::invalid_argument("build_mesh: angular breaks not increasing");
  if (!detail::near(psi.front(), part.breakpoints.front(), 1e-12) ||
      !detail::near(psi.back(), part.breakpoints.back(), 1e-12))
    throw std::invalid_argument("build_mesh: angular breaks must cover the sector span");
  for (size_t m = 1; m + 1 < part.breakpoints.size(); ++m) {
    bool found = false;
    for (double a : psi)
      if (detail::near(a, part.breakpoints[m], 1e-12)) found = true;
    if (!found)
      throw std::runtime_error("build_mesh: interface angle " +
                               std::to_string(part.breakpoints[m]) +
                               " missing from angular breaks");
  }

  Mesh mesh;
  mesh.params = params;
  mesh.periodic = part.closure == SectorClosure::PeriodicWithCoefficientJump;
  mesh.outer_radius = spec.outer_radius;
  // one extra graded subdivision so the strip ends at rho * q^N while N
  // polynomial layers fill (rho * q^N, rho]
  mesh.ext_radii = radii(params.rho, params.ratio, params.layers + 1);
  const int J = params.interior_layers;
  mesh.interior_radii.resize(J + 1);
  for (int b = 0; b <= J; ++b)
    mesh.interior_radii[b] = params.rho + (spec.outer_radius - params.rho) * b / J;

  const int A = static_cast<int>(psi.size()) - 1;
  const int N = params.layers;
  auto sector_coefficient = [&](int a) {
    double mid = 0.5 * (psi[a] + psi[a + 1]);
    int s = sector_index(part, mid);
    return part.coefficients[s];
  };
  auto push = [&](MeshElement el) {
    el.id = static_cast<int>(mesh.elements.size());
    mesh.elements.push_back(el);
  };
  for (int a = 0; a < A; ++a) {
    MeshElement el;
    el.region = ElementRegion::SingularStrip;
    el.layer = 1;
    el.angular = a;
    el.s0 = -kInf;
    el.s1 = std::log(mesh.ext_radii[1]);
    el.t0 = psi[a];
    el.t1 = psi[a + 1];
    el.coefficient = sector_coefficient(a);
    push(el);
  }
  for (int j = 2; j <= N + 1; ++j)
    for (int a = 0; a < A; ++a) {
      MeshElement el;
      el.region = ElementRegion::SingularLayer;
      el.layer = j;
      el.angular = a;
      el.s0 = std::log(mesh.ext_radii[j - 1]);
      el.s1 = std::log(mesh.ext_radii[j]);
      el.t0 = psi[a];
      el.t1 = psi[a + 1];
      el.coefficient = sector_coefficient(a);
      push(el);
    }
  for (int b = 0; b < J; ++b)
    for (int a = 0; a < A; ++a) {
      MeshElement el;
      el.region = ElementRegion::Interior;
      el.layer = N + 2 + b;
      el.angular = a;
      el.s0 = mesh.interior_radii[b];
      el.s1 = mesh.interior_radii[b + 1];
      el.t0 = psi[a];
      el.t1 = psi[a + 1];
      el.coefficient = sector_coefficient(a);
      push(el);
    }
  int slot = 0;
  for (auto& el : mesh.elements)
    if (el.polynomial()) el.unknown_slot = slot++;
  mesh.num_polynomial = slot;

  classify_edges(mesh, spec);
  return mesh;
}

/// Exact Cartesian element areas (sector-ring formula) for sanity checks.
inline double element_area(const MeshElement& el) {
  double r0 = el.r_inner(), r1 = el.r_outer();
  return 0.5 * (el.t1 - el.t0) * (r1 * r1 - r0 * r0);
}

/// Structured text dump of element boxes and classified edges.
inline std::string dump_mesh(const Mesh& mesh) {
  std::ostringstream os;
  os << "elements " << mesh.elements.size() << " (polynomial " << mesh.num_polynomial << ")\n";
  for (const auto& el : mesh.elements) {
    const char* kind = el.region == ElementRegion::SingularStrip  ? "strip"
                       : el.region == ElementRegion::SingularLayer ? "graded"
                                                                    : "interior";
    os << "  element " << el.id << " " << kind << " layer=" << el.layer
       << " angular=" << el.angular << " s=[" << el.s0 << "," << el.s1 << "]"
       << " theta=[" << el.t0 << "," << el.t1 << "]"
       << " p=" << el.coefficient << "\n";
  }
  os << "edges " << mesh.edges.size() << "\n";
  for (const auto& e : mesh.edges) {
    const char* cls = e.cls == EdgeClass::InterElement        ? "inter-element"
                      : e.cls == EdgeClass::Interface          ? "interface"
                      : e.cls == EdgeClass::DirichletBoundary ? "dirichlet"
                      : e.cls == EdgeClass::NeumannBoundary   ? "neumann"
                                                              : "arc-to-constant";
    os << "  edge " << e.id << " " << (e.axis == EdgeAxis::Radial ? "radial" : "arc") << " "
       << cls << " locus=" << e.locus << " range=[" << e.q0 << "," << e.q1 << "]"
       << " measure=" << e.measure << " dist=" << e.dist << " sides=";
    for (const auto& s : e.sides) os << s.element << "/" << static_cast<int>(s.side) << " ";
    os << "\n";
  }
  return os.str();
}

}  // namespace lssem
