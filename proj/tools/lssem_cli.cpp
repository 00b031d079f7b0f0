// Command-line front end for the benchmark pipeline: single solves,
// degree sweeps with log-linear fits, and singular-exponent tables.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lssem/harness.hpp"

namespace {

struct SweepLine {
  int W = 0;
  double error_percent = 0.0;
  int iterations = 0;
  double functional = 0.0;
  double seconds = 0.0;
};

void write_csv(const std::string& path, const std::vector<SweepLine>& lines) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("output: cannot open '" + path + "'");
  out << "W,error_percent,iterations,functional,seconds\n";
  for (const auto& l : lines) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%d,%.10g,%d,%.10g,%.3f\n", l.W, l.error_percent,
                  l.iterations, l.functional, l.seconds);
    out << buf;
  }
}

void write_plot(const std::string& path, const std::vector<SweepLine>& lines) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("output: cannot open '" + path + "'");
  for (const auto& l : lines) {
    char buf[80];
    std::snprintf(buf, sizeof buf, "%d %.10g\n", l.W, std::log10(l.error_percent));
    out << buf;
  }
}

void print_table(const std::vector<SweepLine>& lines) {
  std::printf("%4s  %14s  %10s  %14s  %9s\n", "W", "error %", "iterations", "functional",
              "seconds");
  for (const auto& l : lines)
    std::printf("%4d  %14.7g  %10d  %14.6g  %9.3f\n", l.W, l.error_percent, l.iterations,
                l.functional, l.seconds);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Least-squares spectral element benchmarks for disc interface problems"};
  app.require_subcommand(1);

  int example = 1;
  double p = 1.0;
  std::string mu_text;
  int W = 2, N = -1, max_iter = -1;
  double alpha = 0.0, tol = 1e-10;
  std::string out_path, plot_path;
  bool progress = false;

  auto add_problem_flags = [&](CLI::App* cmd) {
    cmd->add_option("--example", example, "benchmark problem: 1 quarter disc, 2 full disc")
        ->check(CLI::Range(1, 2));
    cmd->add_option("--p", p, "coefficient contrast across the interface")->required();
    cmd->add_option("--mu", mu_text, "geometric ratio (real or e-pi, e-1.5pi, e-2pi)");
    cmd->add_option("--alpha", alpha, "edge-weight exponent (default: lambda0 / 2)");
    cmd->add_option("--tol", tol, "solver relative-residual tolerance");
    cmd->add_option("--max-iter", max_iter, "solver iteration cap (default 50 (W+1)^2)");
  };

  CLI::App* solve = app.add_subcommand("solve", "run one configuration");
  add_problem_flags(solve);
  solve->add_option("--W", W, "polynomial degree")->required();
  solve->add_option("--N", N, "graded layers (default: N = W)");
  solve->add_option("--out", out_path, "CSV output path")->required();
  solve->add_flag("--progress", progress, "stream solver iterations to stderr");

  int w_min = 2, w_max = 8;
  CLI::App* sweep = app.add_subcommand("sweep", "convergence study over a degree range");
  add_problem_flags(sweep);
  sweep->add_option("--W-min", w_min, "first degree")->required();
  sweep->add_option("--W-max", w_max, "last degree")->required();
  sweep->add_option("--N", N, "graded layers (default: N = W per run)");
  sweep->add_option("--out", out_path, "CSV output path");
  sweep->add_option("--plot", plot_path, "plot data path: W and log10(error) pairs");

  std::vector<double> eigen_ps;
  CLI::App* eigen = app.add_subcommand("eigen", "smallest singular exponent lambda0");
  eigen->add_option("--example", example, "benchmark problem: 1 quarter disc, 2 full disc")
      ->check(CLI::Range(1, 2));
  eigen->add_option("--p", eigen_ps, "coefficient value (repeatable)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (eigen->parsed()) {
      std::printf("%10s  %18s\n", "p", "lambda0");
      for (double pv : eigen_ps) {
        lssem::SingularSolution sol;
        try {
          sol = lssem::solve_singularity(example == 1 ? lssem::quarter_disc_partition(pv)
                                                      : lssem::full_disc_partition(pv));
        } catch (const std::exception& err) {
          throw std::runtime_error(std::string("singularity: ") + err.what());
        }
        std::printf("%10g  %18.15f\n", pv, sol.lambda0);
      }
      return 0;
    }

    lssem::RunConfig config;
    config.example = example;
    config.p = p;
    config.mu = mu_text.empty() ? 0.0 : lssem::parse_ratio(mu_text);
    config.N = N;
    config.alpha = alpha;
    config.tol = tol;
    config.max_iterations = max_iter;
    config.output_path = out_path;

    if (solve->parsed()) {
      config.W = W;
      lssem::PcgmProgress stream;
      if (progress)
        stream = [](int it, double rel) { std::fprintf(stderr, "iter=%d residual=%.6e\n", it, rel); };
      lssem::RunReport report = lssem::run(config, stream);
      std::vector<SweepLine> lines{{config.W, report.relative_error_percent, report.iterations,
                                    report.functional, report.seconds}};
      print_table(lines);
      write_csv(out_path, lines);
      if (!report.converged) {
        std::fprintf(stderr, "solve: iteration cap reached before tolerance\n");
        return 2;
      }
      return 0;
    }

    // sweep
    lssem::StudyResult study = lssem::convergence_study(config, w_min, w_max);
    std::vector<SweepLine> lines;
    for (const auto& row : study.rows)
      lines.push_back({row.W, row.error_percent, row.iterations, row.functional, row.seconds});
    print_table(lines);
    std::printf("slope = %.6f   R^2 = %.6f\n", study.slope, study.r_squared);
    if (!out_path.empty()) write_csv(out_path, lines);
    if (!plot_path.empty()) write_plot(plot_path, lines);
    if (!study.complete) {
      std::fprintf(stderr, "sweep: aborted after %zu rows: %s\n", study.rows.size(),
                   study.failure.c_str());
      return 3;
    }
    return 0;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 1;
  }
}
