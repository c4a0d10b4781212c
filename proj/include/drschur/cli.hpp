#pragma once

// Command implementations behind the drschurs executable. They take parsed
// arguments and output streams so they can be exercised in-process.
//
// Exit codes: 0 success, 1 parse or validation failure, 2 assignment
// failure, 3 verification failure.

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "drschur/assign.hpp"
#include "drschur/bench.hpp"
#include "drschur/errors.hpp"
#include "drschur/feedback_io.hpp"
#include "drschur/metrics.hpp"
#include "drschur/problem.hpp"

namespace drschur::cli {

enum ExitCode : int { kOk = 0, kInputError = 1, kAssignError = 2, kVerifyError = 3 };

enum class ReportFormat { Text, Json };

struct AssignArgs {
  std::string path;
  double tol = 1e-10;
  Order order = Order::InfFirst;
  ReportFormat format = ReportFormat::Text;
};

struct VerifyArgs {
  std::string problem_path;
  std::string solution_path;
};

struct BenchArgs {
  BenchConfig config;
  std::string csv_path;  // empty: standard output
};

inline Order parse_order(const std::string& s) {
  if (s == "inf-first" || s == "InfFirst") return Order::InfFirst;
  if (s == "fin-first" || s == "FinFirst") return Order::FinFirst;
  throw InvalidInput("unknown order '" + s + "' (expected inf-first or fin-first)");
}

namespace cli_detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(0, "cannot open '" + path + "'");
  return io_detail::slurp(in);
}

inline std::string num(double v) { return format_g17(v); }

inline nlohmann::json json_num(double v) {
  if (std::isfinite(v)) return v;
  return num(v);  // inf/nan as strings
}

inline nlohmann::json json_matrix(const MatrixXd& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index i = 0; i < M.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace cli_detail

inline void write_report_text(std::ostream& os, const Report& rep, const std::vector<std::string>& warnings = {}) {
  using cli_detail::num;
  os << "precs=" << num(rep.precs) << '\n';
  if (!std::isnan(rep.precs_schur)) os << "precs_schur=" << num(rep.precs_schur) << '\n';
  os << "deltaF2=" << num(rep.deltaF2) << '\n';
  os << "normF=" << num(rep.normF) << '\n';
  os << "normG=" << num(rep.normG) << '\n';
  os << "kappaXGF=" << num(rep.kappaXGF) << '\n';
  os << "kappaX=" << (rep.kappaX ? num(*rep.kappaX) : std::string("unavailable")) << '\n';
  os << "residualA=" << num(rep.residualA) << '\n';
  os << "residualE=" << num(rep.residualE) << '\n';
  os << "orthogonality=" << num(rep.orthogonality) << '\n';
  os << "infinite_count=" << rep.infinite_count << '\n';
  os << "finite_count=" << rep.finite_count << '\n';
  os << "rank_EBG=" << rep.rank_EBG << '\n';
  os << "regular=" << (rep.regular ? "true" : "false") << '\n';
  os << "index_ok=" << (rep.index_ok ? "true" : "false") << '\n';
  os << "verdict=" << (rep.pass ? "pass" : "fail") << '\n';
  for (const auto& f : rep.failures) os << "failure=" << f << '\n';
  for (const auto& w : warnings) os << "warning=" << w << '\n';
}

inline nlohmann::json report_json(const Report& rep, const std::vector<std::string>& warnings = {}) {
  using cli_detail::json_num;
  nlohmann::json j;
  j["precs"] = json_num(rep.precs);
  j["precs_schur"] = json_num(rep.precs_schur);
  j["deltaF2"] = json_num(rep.deltaF2);
  j["normF"] = json_num(rep.normF);
  j["normG"] = json_num(rep.normG);
  j["kappaXGF"] = json_num(rep.kappaXGF);
  j["kappaX"] = rep.kappaX ? json_num(*rep.kappaX) : nlohmann::json("unavailable");
  j["residualA"] = json_num(rep.residualA);
  j["residualE"] = json_num(rep.residualE);
  j["orthogonality"] = json_num(rep.orthogonality);
  j["infinite_count"] = rep.infinite_count;
  j["finite_count"] = rep.finite_count;
  j["rank_EBG"] = rep.rank_EBG;
  j["regular"] = rep.regular;
  j["index_ok"] = rep.index_ok;
  j["verdict"] = rep.pass ? "pass" : "fail";
  j["failures"] = rep.failures;
  j["warnings"] = warnings;
  return j;
}

inline int cmd_assign(const AssignArgs& args, std::ostream& out, std::ostream& err) {
  Problem p;
  ValidationReport val;
  try {
    p = parse_problem(cli_detail::read_file(args.path));
    val = validate_problem(p);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  for (const auto& w : val.warnings) err << "warning: " << w << '\n';
  if (!val.ok) {
    for (const auto& f : val.failures) err << "error: " << f << '\n';
    return kInputError;
  }

  Solution sol;
  try {
    AssignOptions opts;
    opts.order = args.order;
    sol = run_pipeline(p, opts);
  } catch (const Error& e) {
    err << "assignment failed: " << e.what() << '\n';
    return kAssignError;
  }

  VerifyOptions vopts;
  vopts.residual_tol = args.tol;
  const Report rep = verify_solution(p, sol, vopts);
  if (args.format == ReportFormat::Json) {
    nlohmann::json j = report_json(rep, val.warnings);
    j["F"] = cli_detail::json_matrix(sol.F);
    j["G"] = cli_detail::json_matrix(sol.G);
    out << j.dump(2) << '\n';
  } else {
    write_report_text(out, rep, val.warnings);
    write_feedback(out, sol.F, sol.G);
  }
  if (!rep.pass) {
    for (const auto& f : rep.failures) err << "verification failed: " << f << '\n';
    return kVerifyError;
  }
  return kOk;
}

inline int cmd_verify(const VerifyArgs& args, std::ostream& out, std::ostream& err) {
  Problem p;
  Feedback fb;
  try {
    p = parse_problem(cli_detail::read_file(args.problem_path));
    fb = parse_feedback(cli_detail::read_file(args.solution_path));
    if (fb.F.rows() != p.m() || fb.F.cols() != p.n())
      throw InvalidInput("solution is " + std::to_string(fb.F.rows()) + " x " + std::to_string(fb.F.cols()) +
                         ", problem needs " + std::to_string(p.m()) + " x " + std::to_string(p.n()));
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  const Report rep = verify_feedback(p, fb.F, fb.G);
  write_report_text(out, rep);
  if (!rep.pass) {
    for (const auto& f : rep.failures) err << "verification failed: " << f << '\n';
    return kVerifyError;
  }
  return kOk;
}

inline int cmd_bench(const BenchArgs& args, std::ostream& out, std::ostream& err) {
  std::vector<BenchRow> rows;
  try {
    rows = run_bench(args.config);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  if (args.csv_path.empty()) {
    write_csv(out, rows);
    return out ? kOk : kInputError;
  }
  std::ofstream f(args.csv_path, std::ios::binary);
  if (!f) {
    err << "error: cannot write '" << args.csv_path << "'\n";
    return kInputError;
  }
  write_csv(f, rows);
  f.flush();
  if (!f) {
    err << "error: write to '" << args.csv_path << "' failed\n";
    return kInputError;
  }
  return kOk;
}

}  // namespace drschur::cli
