#include <gtest/gtest.h>

#include <json.hpp>

#include <filesystem>
#include <sstream>

#include "drschur/cli.hpp"
#include "test_util.hpp"

using namespace drschur;

namespace {

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "drschur_cli_tests";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string sample_problem_path() {
  BenchConfig cfg;
  cfg.n = 6;
  cfg.rankE = 3;
  cfg.m = 2;
  const auto path = (temp_dir() / "sample.dpp").string();
  testutil::write_text(path, serialize_problem(generate_random_instance(cfg, 4, 0)));
  return path;
}

}  // namespace

TEST(FeedbackIo, RoundTripAndReportSkipping) {
  std::mt19937_64 rng(40);
  const MatrixXd F = testutil::gaussian(2, 4, rng), G = testutil::gaussian(2, 4, rng);
  std::ostringstream os;
  os << "precs=-15\nverdict=pass\n";
  write_feedback(os, F, G);
  const Feedback fb = parse_feedback(os.str());
  EXPECT_EQ(fb.F, F);
  EXPECT_EQ(fb.G, G);
}

TEST(FeedbackIo, Errors) {
  EXPECT_THROW(parse_feedback("2\n"), ParseError);
  EXPECT_THROW(parse_feedback("2 1\n1 2\n3\n"), ParseError);
  EXPECT_THROW(parse_feedback("2 1\n1 2\n3 4\n5\n"), ParseError);
}

TEST(Cli, AssignTextThenVerify) {
  cli::AssignArgs args;
  args.path = sample_problem_path();
  std::ostringstream out, err;
  ASSERT_EQ(cli::cmd_assign(args, out, err), cli::kOk) << err.str();
  const std::string text = out.str();
  EXPECT_NE(text.find("verdict=pass"), std::string::npos);
  EXPECT_NE(text.find("index_ok=true"), std::string::npos);

  const auto sol = (temp_dir() / "sample.sol").string();
  testutil::write_text(sol, text);
  cli::VerifyArgs v{args.path, sol};
  std::ostringstream vout, verr;
  EXPECT_EQ(cli::cmd_verify(v, vout, verr), cli::kOk) << verr.str();
  EXPECT_NE(vout.str().find("verdict=pass"), std::string::npos);
}

TEST(Cli, AssignJson) {
  cli::AssignArgs args;
  args.path = sample_problem_path();
  args.format = cli::ReportFormat::Json;
  std::ostringstream out, err;
  ASSERT_EQ(cli::cmd_assign(args, out, err), cli::kOk);
  const auto j = nlohmann::json::parse(out.str());
  EXPECT_EQ(j["verdict"], "pass");
  EXPECT_EQ(j["F"].size(), 2u);
  EXPECT_EQ(j["G"][0].size(), 6u);
  EXPECT_LE(j["precs"].get<double>(), -6.0);
}

TEST(Cli, ExitCodes) {
  std::ostringstream out, err;
  cli::AssignArgs missing;
  missing.path = (temp_dir() / "does_not_exist.dpp").string();
  EXPECT_EQ(cli::cmd_assign(missing, out, err), cli::kInputError);

  // Controllable at infinity fails: E = A = I, B = e1 is not controllable.
  const auto bad = (temp_dir() / "uncontrollable.dpp").string();
  testutil::write_text(bad, "2 1 2\n1 0\n0 1\n1 0\n0 1\n1\n0\n-1 0 1 0\n-2 0 1 0\n");
  cli::AssignArgs args;
  args.path = bad;
  EXPECT_EQ(cli::cmd_assign(args, out, err), cli::kInputError);

  // A deliberately wrong stored feedback fails verification.
  const auto good = sample_problem_path();
  const auto zero = (temp_dir() / "zero.sol").string();
  std::ostringstream z;
  write_feedback(z, MatrixXd::Zero(2, 6), MatrixXd::Zero(2, 6));
  testutil::write_text(zero, z.str());
  EXPECT_EQ(cli::cmd_verify({good, zero}, out, err), cli::kVerifyError);

  // Wrong dimensions are an input error.
  const auto small = (temp_dir() / "small.sol").string();
  std::ostringstream s;
  write_feedback(s, MatrixXd::Zero(1, 6), MatrixXd::Zero(1, 6));
  testutil::write_text(small, s.str());
  EXPECT_EQ(cli::cmd_verify({good, small}, out, err), cli::kInputError);

  BenchConfig cfg;
  cfg.n = 4;
  cfg.rankE = 4;
  EXPECT_EQ(cli::cmd_bench({cfg, ""}, out, err), cli::kInputError);
}

TEST(Cli, ParseOrder) {
  EXPECT_EQ(cli::parse_order("inf-first"), Order::InfFirst);
  EXPECT_EQ(cli::parse_order("fin-first"), Order::FinFirst);
  EXPECT_THROW(cli::parse_order("sideways"), InvalidInput);
}

TEST(Bench, DeterministicCsvAcrossThreadCounts) {
  BenchConfig cfg;
  cfg.n = 5;
  cfg.rankE = 2;
  cfg.m = 2;
  cfg.trials = 4;
  cfg.seed = 9;
  cfg.threads = 1;
  std::ostringstream a, b, c, err;
  ASSERT_EQ(cli::cmd_bench({cfg, ""}, a, err), cli::kOk);
  ASSERT_EQ(cli::cmd_bench({cfg, ""}, b, err), cli::kOk);
  cfg.threads = 3;
  ASSERT_EQ(cli::cmd_bench({cfg, ""}, c, err), cli::kOk);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str(), c.str());
  const std::string csv = a.str();
  EXPECT_EQ(csv.rfind(kCsvHeader, 0), 0u);
  // One row per feasible r (q = 4, r = 2..4).
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  cfg.seed = 10;
  std::ostringstream d;
  ASSERT_EQ(cli::cmd_bench({cfg, ""}, d, err), cli::kOk);
  EXPECT_NE(a.str(), d.str());
}

TEST(Bench, InstancesHaveRequestedStructure) {
  BenchConfig cfg;
  cfg.n = 7;
  cfg.rankE = 4;
  cfg.m = 2;
  for (Index r : feasible_r_values(cfg)) {
    const Problem p = generate_random_instance(cfg, r, 0);
    EXPECT_EQ(p.r, r);
    EXPECT_EQ(linalg::numerical_rank(p.E).rank, 4);
    EXPECT_EQ(static_cast<Index>(finite_eigenvalues(p.poles).size()), r);
    EXPECT_EQ(p.infinite_count(), 7 - r);
    EXPECT_TRUE(validate_problem(p).ok);
  }
}
