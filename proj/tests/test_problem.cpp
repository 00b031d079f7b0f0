#include "lssem/problem.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace lssem;

namespace {

ProblemSpec quarter_disc_spec(double p) {
  ProblemSpec spec;
  SingularPoint sp;
  sp.partition.breakpoints = {0.0, kPi / 4.0, kPi / 2.0};
  sp.partition.coefficients = {1.0, p};
  sp.partition.closure = SectorClosure::DirichletNeumannEnds;
  spec.singular_points.push_back(sp);
  spec.boundary.push_back({RayEdge{0.0}, BoundaryKind::Dirichlet, [](double) { return 0.0; }});
  spec.boundary.push_back({RayEdge{kPi / 2.0}, BoundaryKind::Neumann, [](double) { return 0.0; }});
  spec.boundary.push_back(
      {ArcEdge{1.0, 0.0, kPi / 2.0}, BoundaryKind::Dirichlet, [](double) { return 0.0; }});
  spec.source = [](double, double) { return 0.0; };
  return spec;
}

ProblemSpec full_disc_spec(double p) {
  ProblemSpec spec;
  SingularPoint sp;
  sp.partition.breakpoints = {0.0, kPi / 2.0, 2.0 * kPi};
  sp.partition.coefficients = {1.0, p};
  sp.partition.closure = SectorClosure::PeriodicWithCoefficientJump;
  spec.singular_points.push_back(sp);
  spec.boundary.push_back(
      {ArcEdge{1.0, 0.0, 2.0 * kPi}, BoundaryKind::Dirichlet, [](double) { return 0.0; }});
  spec.source = [](double, double) { return 0.0; };
  return spec;
}

}  // namespace

TEST(ValidateProblem, AcceptsQuarterDiscConfiguration) {
  EXPECT_TRUE(validate_problem(quarter_disc_spec(5.0)).empty());
}

TEST(ValidateProblem, AcceptsFullDiscConfiguration) {
  EXPECT_TRUE(validate_problem(full_disc_spec(500.0)).empty());
}

TEST(ValidateProblem, FlagsNonpositiveCoefficient) {
  ProblemSpec spec = quarter_disc_spec(5.0);
  spec.singular_points[0].partition.coefficients[1] = -1.0;
  auto v = validate_problem(spec);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NE(v[0].find("nonpositive coefficient"), std::string::npos);
  EXPECT_NE(v[0].find("sector 1"), std::string::npos);
}

TEST(ValidateProblem, FlagsUnorderedBreakpoints) {
  ProblemSpec spec = quarter_disc_spec(5.0);
  spec.singular_points[0].partition.breakpoints = {0.0, kPi / 2.0, kPi / 4.0};
  auto v = validate_problem(spec);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NE(v[0].find("breakpoints not increasing"), std::string::npos);
}

TEST(ValidateProblem, FlagsPeriodicSpanMismatch) {
  ProblemSpec spec = full_disc_spec(5.0);
  spec.singular_points[0].partition.breakpoints = {0.0, kPi / 2.0, kPi};
  auto v = validate_problem(spec);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NE(v[0].find("full-turn"), std::string::npos);
}

TEST(CoefficientAt, PicksContainingSector) {
  ProblemSpec spec = quarter_disc_spec(5.0);
  double r = 0.5;
  EXPECT_DOUBLE_EQ(coefficient_at(spec, r * std::cos(kPi / 8), r * std::sin(kPi / 8)), 1.0);
  EXPECT_DOUBLE_EQ(coefficient_at(spec, r * std::cos(3 * kPi / 8), r * std::sin(3 * kPi / 8)), 5.0);
}

TEST(CoefficientAt, RejectsInterfaceRay) {
  ProblemSpec spec = quarter_disc_spec(5.0);
  double r = 0.5;
  EXPECT_THROW(coefficient_at(spec, r * std::cos(kPi / 4), r * std::sin(kPi / 4)),
               std::domain_error);
}

TEST(CoefficientAt, ConstantAlongNonInterfaceRay) {
  ProblemSpec spec = quarter_disc_spec(7.0);
  for (double r : {0.05, 0.3, 0.7, 0.99})
    EXPECT_DOUBLE_EQ(coefficient_at(spec, r * std::cos(1.0), r * std::sin(1.0)), 7.0);
}

TEST(CoefficientAt, WrapsNegativeAnglesForPeriodicPartition) {
  ProblemSpec spec = full_disc_spec(9.0);
  EXPECT_DOUBLE_EQ(coefficient_at(spec, 0.5, -0.5), 9.0);   // theta = -pi/4 -> 7pi/4
  EXPECT_DOUBLE_EQ(coefficient_at(spec, 0.5, 0.5), 1.0);    // theta = pi/4
}

TEST(Config, ParsesFullSchema) {
  std::istringstream in(
      "# benchmark configuration\n"
      "breakpoints_pi = 0 0.25 0.5\n"
      "coefficients = 1 5\n"
      "closure = ends\n"
      "rho = 0.5\n"
      "ratio = 0.15\n"
      "layers = 4\n"
      "angular_breaks_pi = 0 0.25 0.5\n"
      "interior_layers = 2\n");
  ProblemConfig cfg = load_problem_config(in);
  ASSERT_EQ(cfg.partition.breakpoints.size(), 3u);
  EXPECT_NEAR(cfg.partition.breakpoints[1], kPi / 4.0, 1e-15);
  EXPECT_EQ(cfg.partition.closure, SectorClosure::DirichletNeumannEnds);
  ASSERT_EQ(cfg.partition.coefficients.size(), 2u);
  EXPECT_DOUBLE_EQ(cfg.partition.coefficients[1], 5.0);
  EXPECT_DOUBLE_EQ(cfg.mesh.rho, 0.5);
  EXPECT_DOUBLE_EQ(cfg.mesh.ratio, 0.15);
  EXPECT_EQ(cfg.mesh.layers, 4);
  EXPECT_EQ(cfg.mesh.interior_layers, 2);
  ASSERT_EQ(cfg.mesh.angular_breaks.size(), 3u);
}

TEST(Config, AngularBreaksDefaultToBreakpoints) {
  std::istringstream in(
      "breakpoints_pi = 0 0.5 2\n"
      "coefficients = 1 500\n"
      "closure = periodic\n");
  ProblemConfig cfg = load_problem_config(in);
  EXPECT_EQ(cfg.partition.closure, SectorClosure::PeriodicWithCoefficientJump);
  ASSERT_EQ(cfg.mesh.angular_breaks.size(), 3u);
  EXPECT_NEAR(cfg.mesh.angular_breaks[2], 2.0 * kPi, 1e-15);
}

TEST(Config, RejectsUnknownKeyWithLineNumber) {
  std::istringstream in("breakpoints_pi = 0 1\nwavelength = 3\n");
  try {
    load_problem_config(in);
    FAIL() << "expected an error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("wavelength"), std::string::npos);
  }
}

TEST(Config, RequiresBreakpoints) {
  std::istringstream in("coefficients = 1 5\n");
  EXPECT_THROW(load_problem_config(in), std::runtime_error);
}
