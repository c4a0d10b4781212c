// drschurs: robust pole assignment for descriptor systems by PD feedback.
//
//   drschurs assign problem.dpp [--order inf-first|fin-first] [--tol 1e-10] [--report text|json]
//   drschurs verify problem.dpp solution.txt
//   drschurs bench --n 6 --rankE 3 --m 2 --trials 50 --seed 1 [--csv out.csv]

#include <CLI11.hpp>

#include <iostream>

#include "drschur/cli.hpp"

int main(int argc, char** argv) {
  using namespace drschur;
  CLI::App app{"Robust pole assignment for descriptor systems via PD state feedback"};
  app.require_subcommand(1);

  cli::AssignArgs assign;
  std::string assign_order = "inf-first";
  std::string report = "text";
  auto* a = app.add_subcommand("assign", "Solve one problem file and print a report");
  a->add_option("problem", assign.path, "Problem file")->required();
  a->add_option("--tol", assign.tol, "Relative residual tolerance for the verdict")->capture_default_str();
  a->add_option("--order", assign_order, "Placement order")
      ->check(CLI::IsMember({"inf-first", "fin-first"}))
      ->capture_default_str();
  a->add_option("--report", report, "Report format")->check(CLI::IsMember({"text", "json"}))->capture_default_str();

  cli::VerifyArgs verify;
  auto* v = app.add_subcommand("verify", "Check a stored feedback against a problem");
  v->add_option("problem", verify.problem_path, "Problem file")->required();
  v->add_option("solution", verify.solution_path, "Solution file (n m, F rows, G rows)")->required();

  cli::BenchArgs bench;
  std::string bench_order = "inf-first";
  long long n = 6, rankE = 3, m = 2;
  auto* b = app.add_subcommand("bench", "Random benchmark sweep over the feasible r range");
  b->add_option("--n", n, "State dimension")->capture_default_str();
  b->add_option("--rankE", rankE, "Rank of E")->capture_default_str();
  b->add_option("--m", m, "Number of inputs")->capture_default_str();
  b->add_option("--trials", bench.config.trials, "Trials per r")->capture_default_str();
  b->add_option("--seed", bench.config.seed, "Base seed")->capture_default_str();
  b->add_option("--order", bench_order, "Placement order")
      ->check(CLI::IsMember({"inf-first", "fin-first"}))
      ->capture_default_str();
  b->add_option("--threads", bench.config.threads, "Worker threads (0: all cores)")->capture_default_str();
  b->add_option("--csv", bench.csv_path, "Output CSV (default: standard output)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kInputError;
  }

  if (*a) {
    assign.order = cli::parse_order(assign_order);
    assign.format = report == "json" ? cli::ReportFormat::Json : cli::ReportFormat::Text;
    return cli::cmd_assign(assign, std::cout, std::cerr);
  }
  if (*v) return cli::cmd_verify(verify, std::cout, std::cerr);
  bench.config.n = n;
  bench.config.rankE = rankE;
  bench.config.m = m;
  bench.config.order = cli::parse_order(bench_order);
  return cli::cmd_bench(bench, std::cout, std::cerr);
}
