#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "qdisc/cli.hpp"
#include "support.hpp"

using namespace qdisc;
using json = nlohmann::json;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("qdisc_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) {
    const auto path = (dir_ / name).string();
    std::ofstream(path) << text;
    return path;
  }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "qdisc");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    out_.str("");
    err_.str("");
    return cli::run(static_cast<int>(argv.size()), argv.data(), out_, err_);
  }

  json output() const { return json::parse(out_.str()); }

  std::string trine_path() {
    return write("trine.json", to_json_text(qdisc::testing::trine_problem()));
  }
  std::string trine_povm_path() {
    return write("trine_povm.json", cli::to_json(qdisc::testing::trine_povm()).dump());
  }
  static std::string to_json_text(const Problem& p) { return cli::to_json(p).dump(); }

  std::filesystem::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

}  // namespace

TEST_F(CliTest, SolveTrine) {
  ASSERT_EQ(run({"solve", trine_path()}), cli::kSuccess) << err_.str();
  const json j = output();
  EXPECT_NEAR(j["p_corr"].get<double>(), 2.0 / 3.0, 1e-14);
  EXPECT_EQ(j["classification"], "generalized3");
  EXPECT_TRUE(j["certificate"]["passed"].get<bool>());
}

TEST_F(CliTest, SolveWithOracleCheck) {
  ASSERT_EQ(run({"solve", trine_path(), "--oracle-check"}), cli::kSuccess) << err_.str();
  EXPECT_LE(output()["oracle"]["p_corr"].get<double>(), 2.0 / 3.0 + 1e-9);
}

TEST_F(CliTest, VerifyPassAndFail) {
  EXPECT_EQ(run({"verify", trine_path(), trine_povm_path()}), cli::kSuccess);
  EXPECT_TRUE(output()["passed"].get<bool>());

  Povm swapped = qdisc::testing::trine_povm();
  std::swap(swapped[0], swapped[1]);
  const auto bad = write("swapped.json", cli::to_json(swapped).dump());
  EXPECT_EQ(run({"verify", trine_path(), bad}), cli::kVerificationFailed);
  EXPECT_FALSE(output()["passed"].get<bool>());
}

TEST_F(CliTest, PriorsMustSumToOne) {
  const auto path = write("bad.json",
                          R"({"states": [[0,0,0.5],[0.5,0,0]], "priors": [0.5, 0.4]})");
  EXPECT_EQ(run({"solve", path}), cli::kInvalidInput);
  EXPECT_NE(err_.str().find("bad.json:"), std::string::npos);
  ASSERT_EQ(run({"--subproblem", "solve", path}), cli::kSuccess) << err_.str();
  EXPECT_NEAR(output()["p_corr"].get<double>(), 0.45 + std::sqrt(0.1025), 1e-12);
}

TEST_F(CliTest, MalformedJsonIsLineAnchored) {
  const auto path = write("broken.json", "{\n  \"states\": [[0,0,0.5]],\n  \"priors\": [1,]\n}\n");
  EXPECT_EQ(run({"solve", path}), cli::kInvalidInput);
  EXPECT_NE(err_.str().find("broken.json:3:"), std::string::npos) << err_.str();

  try {
    cli::parse_problem("{\n\"states\": [[0,0,0.5]],\n\"priors\": [1],\n\"tolerance\": \"x\"\n}",
                       "inline");
    FAIL() << "no error thrown";
  } catch (const cli::InputError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
}

TEST_F(CliTest, SolvedPovmReloadsAndVerifies) {
  CounterRng rng = CounterRng::stream(51, 0);
  const auto problem = write("p.json", to_json_text(qdisc::testing::random_problem(rng, 4)));
  ASSERT_EQ(run({"solve", problem}), cli::kSuccess);
  const json solved = output();
  const auto povm = write("s.json", solved.dump());
  EXPECT_EQ(run({"verify", problem, povm}), cli::kSuccess) << err_.str();
  EXPECT_EQ(output()["p_corr"].get<double>(), solved["p_corr"].get<double>());
}

TEST_F(CliTest, KetsInput) {
  const auto path = write("kets.json",
                          R"({"kets": [[1, 0], [[0.7071067811865476,0],[0.7071067811865476,0]]],
                              "priors": [0.5, 0.5]})");
  ASSERT_EQ(run({"solve", path}), cli::kSuccess) << err_.str();
  EXPECT_NEAR(output()["p_corr"].get<double>(), 0.5 + 0.5 / std::sqrt(2.0), 1e-12);
}

TEST_F(CliTest, InverseOutputLoadsAsProblem) {
  ASSERT_EQ(run({"inverse", trine_povm_path(), "--r=0.05,-0.02,0.1"}), cli::kSuccess)
      << err_.str();
  const json inv = output();
  const auto problem = write("inv.json", inv.dump());
  ASSERT_EQ(run({"solve", problem}), cli::kSuccess) << err_.str();
  EXPECT_NEAR(output()["p_corr"].get<double>(), inv["a_value"].get<double>(), 1e-10);
  EXPECT_EQ(run({"verify", problem, trine_povm_path()}), cli::kSuccess);
}

TEST_F(CliTest, InverseErrorsAreInvalidInput) {
  const auto povm = write("anti.json", R"({"elements": [{"omega": 1, "gamma": [0,0,0.5]},
                                                        {"omega": 1, "gamma": [0,0,-0.5]}]})");
  EXPECT_EQ(run({"inverse", povm, "--r=0,0,-0.6"}), cli::kInvalidInput);
  EXPECT_NE(err_.str().find("NonPositivePrior"), std::string::npos) << err_.str();
}

TEST_F(CliTest, SimulateAndOracle) {
  ASSERT_EQ(run({"simulate", trine_path(), trine_povm_path(), "--trials", "20000", "--seed",
                 "9"}),
            cli::kSuccess);
  const json sim = output();
  EXPECT_EQ(sim["trials"].get<int>(), 20000);
  EXPECT_LE(std::abs(sim["empirical_rate"].get<double>() - 2.0 / 3.0),
            4.0 * sim["std_error"].get<double>());

  ASSERT_EQ(run({"oracle", trine_path(), "--restarts", "4", "--seed", "3"}), cli::kSuccess);
  EXPECT_NEAR(output()["p_corr"].get<double>(), 2.0 / 3.0, 1e-4);
}

TEST_F(CliTest, ClassifyAndPretty) {
  ASSERT_EQ(run({"classify", trine_path()}), cli::kSuccess);
  EXPECT_EQ(output()["classification"], "generalized3");
  ASSERT_EQ(run({"--output", "pretty", "classify", trine_path()}), cli::kSuccess);
  EXPECT_NE(out_.str().find("generalized3"), std::string::npos);
  EXPECT_THROW(json::parse(out_.str()), json::parse_error);
}

TEST_F(CliTest, MissingFileAndBadArguments) {
  EXPECT_EQ(run({"solve", (dir_ / "absent.json").string()}), cli::kInvalidInput);
  EXPECT_EQ(run({"frobnicate"}), cli::kInvalidInput);
  EXPECT_EQ(run({"--output", "xml", "classify", trine_path()}), cli::kInvalidInput);
}

TEST_F(CliTest, DoublesRoundTripLosslessly) {
  CounterRng rng = CounterRng::stream(52, 0);
  const Problem p = qdisc::testing::random_problem(rng, 5);
  const Problem back = cli::parse_problem(to_json_text(p), "mem");
  for (std::size_t j = 0; j < p.size(); ++j) {
    EXPECT_EQ(back.state(j), p.state(j));
    EXPECT_EQ(back.prior(j), p.prior(j));
  }
}
