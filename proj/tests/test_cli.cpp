#include <gtest/gtest.h>

#include <cstdlib>
#include <sys/wait.h>

#include <fstream>
#include <sstream>

#include "tabprompt/cli.hpp"
#include "test_util.hpp"

using namespace tabprompt;
using tabprompt::testing::lines;
using tabprompt::testing::slurp;
using tabprompt::testing::TempDir;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "tabprompt");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string vehicle_config() { return tabprompt::testing::data_file("vehicle_claims.json"); }
std::string vehicle_fixture() { return tabprompt::testing::fixture("vehicle_claims_17col.csv"); }

std::string write_keyword_config(const TempDir& dir, std::size_t rows = 300) {
  auto data = dir.write("claims.csv", tabprompt::testing::keyword_dataset_csv(rows, 5));
  auto j = tabprompt::testing::keyword_config_json(data, (dir / "out").string());
  return dir.write("config.json", j.dump(2));
}

}  // namespace

TEST(CliRank, WritesReport) {
  TempDir dir;
  auto report = (dir / "report.json").string();
  auto r = run_cli({"rank", "--data", vehicle_fixture(), "--config", vehicle_config(), "--k", "4", "--out", report});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = nlohmann::json::parse(slurp(report));
  EXPECT_EQ(j["top_k"].size(), 4u);
  EXPECT_EQ(j["ranking"].size(), 17u);
}

TEST(CliRank, StdoutAndInference) {
  auto r = run_cli({"rank", "--data", tabprompt::testing::fixture("claims4.csv"), "--label-col", "Label", "--positive",
                    "1", "--k", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out)["top_k"].size(), 2u);
}

TEST(CliRank, Errors) {
  EXPECT_EQ(run_cli({"rank", "--data", "/nonexistent.csv", "--label-col", "Label", "--positive", "1"}).code, 2);
  auto zero = run_cli({"rank", "--data", vehicle_fixture(), "--config", vehicle_config(), "--k", "0"});
  EXPECT_EQ(zero.code, 2);
  EXPECT_NE(zero.err.find("--k"), std::string::npos);
  EXPECT_EQ(run_cli({"rank", "--data", vehicle_fixture()}).code, 2);  // no schema source
  EXPECT_EQ(run_cli({"rank", "--k", "abc", "--data", vehicle_fixture()}).code, 2);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
  EXPECT_EQ(run_cli({}).code, 2);
}

TEST(CliHelp, ExitsZero) {
  auto r = run_cli({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("serialize"), std::string::npos);
}

TEST(CliSerialize, LatexEightShots) {
  TempDir dir;
  auto r = run_cli({"serialize", "--data", vehicle_fixture(), "--config", vehicle_config(), "--family", "latex",
                    "--shots", "8", "--seed", "1", "--eval-size", "10", "--out", (dir / "c").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto train = lines(dir / "c" / "train.jsonl");
  ASSERT_EQ(train.size(), 8u);
  for (const auto& l : train) EXPECT_EQ(nlohmann::json::parse(l)["input"].get<std::string>().rfind("\\hline ", 0), 0u);
  EXPECT_EQ(lines(dir / "c" / "eval.jsonl").size(), 10u);
}

TEST(CliSerialize, ImportanceNeedsReport) {
  TempDir dir;
  auto r = run_cli({"serialize", "--data", vehicle_fixture(), "--config", vehicle_config(), "--family",
                    "importance_prefix", "--shots", "4", "--out", (dir / "c").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--report"), std::string::npos);

  auto report = (dir / "report.json").string();
  ASSERT_EQ(run_cli({"rank", "--data", vehicle_fixture(), "--config", vehicle_config(), "--out", report}).code, 0);
  r = run_cli({"serialize", "--data", vehicle_fixture(), "--config", vehicle_config(), "--family",
               "importance_suffix", "--report", report, "--shots", "4", "--eval-size", "6", "--out",
               (dir / "c").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto first = nlohmann::json::parse(lines(dir / "c" / "eval.jsonl").front());
  EXPECT_NE(first["input"].get<std::string>().find("The 4 most important features"), std::string::npos);
}

TEST(CliSerialize, ZeroShotsGivesEmptyTrainFile) {
  TempDir dir;
  auto r = run_cli({"serialize", "--data", vehicle_fixture(), "--config", vehicle_config(), "--family",
                    "text_template", "--shots", "0", "--eval-size", "12", "--out", (dir / "c").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir / "c" / "train.jsonl"), "");
  EXPECT_EQ(lines(dir / "c" / "eval.jsonl").size(), 12u);
}

TEST(CliSerialize, Errors) {
  TempDir dir;
  auto base = std::vector<std::string>{"serialize", "--data", vehicle_fixture(), "--config", vehicle_config(),
                                       "--out", (dir / "c").string()};
  auto with = [&](std::vector<std::string> extra) {
    auto args = base;
    args.insert(args.end(), extra.begin(), extra.end());
    return run_cli(args).code;
  };
  EXPECT_EQ(with({"--family", "markdown"}), 2);
  EXPECT_EQ(with({"--family", "latex", "--shots", "512"}), 2);
  EXPECT_EQ(with({"--family", "latex", "--token-budget", "1"}), 2);
  EXPECT_EQ(run_cli({"serialize", "--family", "latex"}).code, 2);  // --out missing
}

TEST(CliEval, DeterministicAcrossRuns) {
  TempDir dir;
  auto config = write_keyword_config(dir);
  auto a = run_cli({"eval", "--config", config, "--out", (dir / "a").string()});
  auto b = run_cli({"eval", "--config", config, "--out", (dir / "b").string()});
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(slurp(dir / "a" / "results.csv"), slurp(dir / "b" / "results.csv"));
  EXPECT_EQ(slurp(dir / "a" / "results.json"), slurp(dir / "b" / "results.json"));
  EXPECT_FALSE(std::filesystem::exists(dir / "a" / "failures.json"));
  auto rows = lines(dir / "a" / "results.csv");
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0], "Serialization Method,0,4,16\r");
  EXPECT_EQ(rows[1], "Text Template,1.000,1.000,1.000\r");
}

TEST(CliEval, FlagsOverrideConfig) {
  TempDir dir;
  auto config = write_keyword_config(dir);
  auto r = run_cli({"eval", "--config", config, "--out", (dir / "o").string(), "--shots", "0,8", "--seeds", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines(dir / "o" / "results.csv")[0], "Serialization Method,0,8\r");
  EXPECT_EQ(nlohmann::json::parse(slurp(dir / "o" / "results.json"))["seeds"], nlohmann::json::array({3}));
}

TEST(CliEval, MissingCredentialExitsTwoBeforeWork) {
  TempDir dir;
  auto data = dir.write("claims.csv", tabprompt::testing::keyword_dataset_csv(100, 5));
  auto j = tabprompt::testing::keyword_config_json(data, (dir / "out").string());
  j["predictor"] = {{"kind", "remote"}, {"endpoint_url", "http://127.0.0.1:9/score"},
                    {"auth_env_var", "TABPROMPT_CLI_TEST_ABSENT"}};
  ::unsetenv("TABPROMPT_CLI_TEST_ABSENT");
  auto r = run_cli({"eval", "--config", dir.write("remote.json", j.dump())});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("TABPROMPT_CLI_TEST_ABSENT"), std::string::npos);
  EXPECT_FALSE(std::filesystem::exists(dir / "out"));
}

TEST(CliEval, PartialFailureExitsOneWithFailureFile) {
  TempDir dir;
  auto data = dir.write("claims.csv", tabprompt::testing::keyword_dataset_csv(300, 5));
  auto j = tabprompt::testing::keyword_config_json(data, (dir / "out").string());
  j["families"] = nlohmann::json::array({"text_template", {{"family", "latex"}, {"token_budget", 1}}});
  auto r = run_cli({"eval", "--config", dir.write("c.json", j.dump())});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("failures.json"), std::string::npos);
  auto failures = nlohmann::json::parse(slurp(dir / "out" / "failures.json"));
  EXPECT_EQ(failures.size(), 6u);
  auto rows = lines(dir / "out" / "results.csv");
  EXPECT_EQ(rows[2], "LaTeX,,,\r");
}

TEST(CliEval, BadConfig) {
  TempDir dir;
  EXPECT_EQ(run_cli({"eval", "--config", dir.write("bad.json", "{not json")}).code, 2);
  EXPECT_EQ(run_cli({"eval", "--config", (dir / "absent.json").string()}).code, 2);
  EXPECT_EQ(run_cli({"eval"}).code, 2);
}

TEST(CliBinary, RunsAsProcess) {
  const std::string cmd = std::string(TABPROMPT_CLI) + " rank --data /nonexistent.csv --label-col L --positive 1 2>/dev/null";
  int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 2);
}
