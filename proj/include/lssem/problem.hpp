#pragma once

#include <cmath>
#include <functional>
#include <istream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace lssem {

inline constexpr double kPi = 3.14159265358979323846;

enum class SectorClosure {
  DirichletNeumannEnds,        // trace pinned at the first angle, slope at the last
  PeriodicWithCoefficientJump  // full turn; value and flux matched across the seam
};

/// Angular description around one singular point: strictly increasing
/// breakpoint angles, one positive coefficient per sector between them.
struct SectorPartition {
  std::vector<double> breakpoints;
  SectorClosure closure = SectorClosure::DirichletNeumannEnds;
  std::vector<double> coefficients;

  int sector_count() const { return static_cast<int>(coefficients.size()); }
  double span() const { return breakpoints.back() - breakpoints.front(); }
};

enum class BoundaryKind { Dirichlet, Neumann };

/// Straight boundary edge along a ray from the singular point.
struct RayEdge {
  double angle;
};

/// Circular boundary arc centered at the singular point.
struct ArcEdge {
  double radius;
  double theta0;
  double theta1;
};

/// One piece of the outer boundary. data is a function of arclength measured
/// from the segment start (r on rays, radius*(theta-theta0) on arcs); for
/// Dirichlet it is the trace value, for Neumann the outward normal derivative.
struct BoundarySegment {
  std::variant<RayEdge, ArcEdge> geometry;
  BoundaryKind kind = BoundaryKind::Dirichlet;
  std::function<double(double)> data;
};

struct SingularSolution;  // defined in singularity.hpp

/// Interface problem on a sector/disc of outer radius `outer_radius` around a
/// single singular point at the origin (the data model allows several points;
/// only single-point configurations are exercised).
struct SingularPoint {
  double x = 0.0;
  double y = 0.0;
  SectorPartition partition;
};

struct ProblemSpec {
  std::vector<SingularPoint> singular_points;
  std::vector<BoundarySegment> boundary;
  double outer_radius = 1.0;
  std::function<double(double, double)> source;  // f(x1, x2)
  const SingularSolution* exact = nullptr;
};

/// Every invariant violation as readable text; empty means well-formed.
inline std::vector<std::string> validate_problem(const ProblemSpec& spec) {
  std::vector<std::string> out;
  auto fail = [&](const std::string& where, const std::string& what) {
    out.push_back(where + ": " + what);
  };
  if (spec.singular_points.empty()) fail("spec", "no singular points");
  for (size_t k = 0; k < spec.singular_points.size(); ++k) {
    const SectorPartition& part = spec.singular_points[k].partition;
    std::string where = "singular point " + std::to_string(k);
    if (part.breakpoints.size() < 2) {
      fail(where, "needs at least two breakpoint angles");
      continue;
    }
    for (size_t i = 1; i < part.breakpoints.size(); ++i)
      if (part.breakpoints[i] <= part.breakpoints[i - 1]) {
        fail(where, "breakpoints not increasing");
        break;
      }
    double span = part.breakpoints.back() - part.breakpoints.front();
    if (span > 2.0 * kPi + 1e-12) fail(where, "angular span exceeds full turn");
    bool periodic = part.closure == SectorClosure::PeriodicWithCoefficientJump;
    if (periodic && std::abs(span - 2.0 * kPi) > 1e-9)
      fail(where, "periodic closure requires a full-turn span");
    if (!periodic && std::abs(span - 2.0 * kPi) < 1e-12)
      fail(where, "full-turn span requires periodic closure");
    if (part.coefficients.size() + 1 != part.breakpoints.size())
      fail(where, "coefficient count must equal sector count");
    for (size_t i = 0; i < part.coefficients.size(); ++i)
      if (!(part.coefficients[i] > 0.0))
        fail(where + ", sector " + std::to_string(i), "nonpositive coefficient");
  }
  // Interface rays of a single-point sector domain end on the outer boundary
  // by construction; reject only rays leaving the covered span. Skipped when
  // the ordering check above already failed, to avoid cascading reports.
  for (size_t k = 0; k < spec.singular_points.size(); ++k) {
    const auto& bp = spec.singular_points[k].partition.breakpoints;
    if (bp.size() < 2) continue;
    bool ordered = true;
    for (size_t i = 1; i < bp.size(); ++i)
      if (bp[i] <= bp[i - 1]) ordered = false;
    if (!ordered) continue;
    for (size_t i = 1; i + 1 < bp.size(); ++i)
      if (bp[i] <= bp.front() || bp[i] >= bp.back())
        fail("singular point " + std::to_string(k),
             "interface ray outside the sector span");
  }
  if (!(spec.outer_radius > 0.0)) fail("spec", "outer radius must be positive");
  return out;
}

/// Coefficient of the sector containing the point (angles measured from the
/// first singular point). Points on an interface ray are rejected.
inline double coefficient_at(const ProblemSpec& spec, double x, double y) {
  if (spec.singular_points.empty())
    throw std::invalid_argument("coefficient_at: no singular points");
  const SingularPoint& sp = spec.singular_points.front();
  const SectorPartition& part = sp.partition;
  double theta = std::atan2(y - sp.y, x - sp.x);
  double lo = part.breakpoints.front();
  // map the angle into [lo, lo + 2*pi)
  while (theta < lo) theta += 2.0 * kPi;
  while (theta >= lo + 2.0 * kPi) theta -= 2.0 * kPi;
  for (size_t i = 1; i + 1 < part.breakpoints.size(); ++i)
    if (std::abs(theta - part.breakpoints[i]) < 1e-12)
      throw std::domain_error("coefficient_at: ambiguous coefficient on an interface ray");
  for (size_t i = 0; i + 1 < part.breakpoints.size(); ++i)
    if (theta >= part.breakpoints[i] - 1e-15 && theta < part.breakpoints[i + 1])
      return part.coefficients[i];
  throw std::domain_error("coefficient_at: angle outside the sector span");
}

/// Geometric mesh controls (consumed by the mesh module).
struct GeometricMeshConfig {
  double rho = 0.5;
  double ratio = 0.15;
  int layers = 2;
  std::vector<double> angular_breaks;
  int interior_layers = 1;
};

/// Plain-text key-value problem configuration.
///
/// Schema (one `key = values` pair per line, '#' starts a comment):
///   breakpoints_pi   = 0 0.25 0.5      sector breakpoints in units of pi
///   coefficients     = 1 5             one positive coefficient per sector
///   closure          = ends | periodic
///   rho              = 0.5             sector radius of the graded region
///   ratio            = 0.15            geometric ratio q in (0,1)
///   layers           = 4               graded layers N >= 2
///   angular_breaks_pi= 0 0.25 0.5      mesh lines; must include interfaces
///   interior_layers  = 1               radial bands between rho and the rim
struct ProblemConfig {
  SectorPartition partition;
  GeometricMeshConfig mesh;
};

inline ProblemConfig load_problem_config(std::istream& in) {
  ProblemConfig cfg;
  std::string line;
  int lineno = 0;
  auto bad = [&](const std::string& what) {
    throw std::runtime_error("config line " + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      std::istringstream probe(line);
      std::string word;
      if (probe >> word) bad("expected `key = value`");
      continue;
    }
    std::istringstream keys(line.substr(0, eq));
    std::string key;
    keys >> key;
    std::istringstream vals(line.substr(eq + 1));
    auto reals = [&]() {
      std::vector<double> v;
      double x;
      while (vals >> x) v.push_back(x);
      if (v.empty()) bad("no values for " + key);
      return v;
    };
    if (key == "breakpoints_pi") {
      cfg.partition.breakpoints.clear();
      for (double v : reals()) cfg.partition.breakpoints.push_back(v * kPi);
    } else if (key == "coefficients") {
      cfg.partition.coefficients = reals();
    } else if (key == "closure") {
      std::string v;
      vals >> v;
      if (v == "ends")
        cfg.partition.closure = SectorClosure::DirichletNeumannEnds;
      else if (v == "periodic")
        cfg.partition.closure = SectorClosure::PeriodicWithCoefficientJump;
      else
        bad("unknown closure `" + v + "` (want ends|periodic)");
    } else if (key == "rho") {
      cfg.mesh.rho = reals()[0];
    } else if (key == "ratio") {
      cfg.mesh.ratio = reals()[0];
    } else if (key == "layers") {
      cfg.mesh.layers = static_cast<int>(reals()[0]);
    } else if (key == "angular_breaks_pi") {
      cfg.mesh.angular_breaks.clear();
      for (double v : reals()) cfg.mesh.angular_breaks.push_back(v * kPi);
    } else if (key == "interior_layers") {
      cfg.mesh.interior_layers = static_cast<int>(reals()[0]);
    } else {
      bad("unknown key `" + key + "`");
    }
  }
  if (cfg.partition.breakpoints.empty()) throw std::runtime_error("config: breakpoints_pi missing");
  if (cfg.partition.coefficients.empty()) throw std::runtime_error("config: coefficients missing");
  if (cfg.mesh.angular_breaks.empty()) cfg.mesh.angular_breaks = cfg.partition.breakpoints;
  return cfg;
}

}  // namespace lssem
