// Copyright 2026 The meanking Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "meanking_cli.hpp"

namespace meanking::cli {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code = 0;
  std::string out;
  std::string err;

  Json json() const { return Json::parse(out); }
};

Result cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Result r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("meanking_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(CliTest, GenerateThenCheck) {
  const auto gen = cli({"bases", "gen", "--dim", "3", "--out", path("b3.json")});
  ASSERT_EQ(gen.code, kExitOk) << gen.err;
  EXPECT_EQ(gen.json()["bases"], 4);
  const auto check = cli({"bases", "check", "--in", path("b3.json")});
  EXPECT_EQ(check.code, kExitOk) << check.out;
  EXPECT_TRUE(check.json()["passed"].get<bool>());
  EXPECT_EQ(check.json()["span_rank"], 9);
  const auto direct = cli({"bases", "gen", "--dim", "2"});
  EXPECT_EQ(direct.json()["bases"].size(), 3u);
}

TEST_F(CliTest, UnsupportedDimension) {
  const auto r = cli({"bases", "gen", "--dim", "4"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("unsupported dimension"), std::string::npos);
  EXPECT_TRUE(r.out.empty());
}

TEST_F(CliTest, CorruptedBasisFileFailsValidation) {
  ASSERT_EQ(cli({"bases", "gen", "--dim", "2", "--out", path("b.json")}).code, kExitOk);
  Json j = Json::parse(read_file(path("b.json")));
  j["bases"][1][0] = Json::parse("[[0.9, 0.0], [0.1, 0.0]]");
  write_file(path("bad.json"), j.dump());
  const auto r = cli({"bases", "check", "--in", path("bad.json")});
  EXPECT_EQ(r.code, kExitFailure);
  EXPECT_FALSE(r.json()["orthonormal"].get<bool>());
}

TEST_F(CliTest, UnreadableOrMalformedInput) {
  EXPECT_EQ(cli({"bases", "check", "--in", path("missing.json")}).code, kExitUsage);
  write_file(path("junk.json"), "{\"dim\": 2,");
  EXPECT_EQ(cli({"bases", "check", "--in", path("junk.json")}).code, kExitUsage);
  write_file(path("shape.json"), "{\"dim\": 2}");
  const auto r = cli({"bases", "check", "--in", path("shape.json")});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_EQ(Json::parse(r.err)["error"], "format");
}

TEST_F(CliTest, StrategyBuild) {
  for (auto [d, entries] : std::vector<std::pair<std::string, std::size_t>>{{"2", 8}, {"3", 81}}) {
    const auto r = cli({"strategy", "build", "--dim", d, "--out", path("s.json")});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_EQ(r.json()["entries"], entries);
    EXPECT_GT(r.json()["min_weight"].get<double>(), 0.0);
    const Json s = Json::parse(read_file(path("s.json")));
    ASSERT_EQ(s["safe_vectors"].size(), entries);
    for (const auto& e : s["safe_vectors"]) EXPECT_GT(e["p"].get<double>(), 0.0);
  }
}

TEST_F(CliTest, DegenerateBasisFileReportsResidual) {
  ASSERT_EQ(cli({"bases", "gen", "--dim", "2", "--out", path("b.json")}).code, kExitOk);
  Json j = Json::parse(read_file(path("b.json")));
  j["bases"][2] = j["bases"][1];
  write_file(path("degenerate.json"), j.dump());
  const auto r = cli({"strategy", "build", "--bases", path("degenerate.json")});
  EXPECT_EQ(r.code, kExitFailure);
  const Json e = Json::parse(r.err);
  EXPECT_TRUE(e.contains("residual"));
  EXPECT_GT(e["residual"].get<double>(), 1e-8);
}

TEST_F(CliTest, HonestRunAccepts) {
  ASSERT_EQ(cli({"strategy", "build", "--dim", "2", "--out", path("s.json")}).code, kExitOk);
  const auto r = cli({"run", "--strategy", path("s.json"), "--rounds", "10000", "--seed", "5", "--out",
                      path("t.jsonl")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const Json s = r.json();
  EXPECT_EQ(s["agreement_rate"], 1.0);
  EXPECT_EQ(s["test_failures"], 0);
  EXPECT_TRUE(s["accepted"].get<bool>());
  EXPECT_TRUE(s["keys_match"].get<bool>());
  EXPECT_EQ(s["key_length"], 9000);
  const std::string t = read_file(path("t.jsonl"));
  EXPECT_EQ(std::count(t.begin(), t.end(), '\n'), 10001);
}

TEST_F(CliTest, InterceptResendAborts) {
  const auto r = cli({"run", "--dim", "2", "--rounds", "2000", "--test-fraction", "1", "--attack",
                      "intercept-resend:b=1", "--seed", "3"});
  EXPECT_EQ(r.code, kExitAborted);
  const Json s = r.json();
  EXPECT_FALSE(s["accepted"].get<bool>());
  EXPECT_NEAR(s["test_error_rate"].get<double>(), 1.0 / 6.0, 0.04);
  EXPECT_EQ(s["attack"]["params"]["b"], 1.0);
}

TEST_F(CliTest, AttackSpecErrors) {
  EXPECT_EQ(cli({"run", "--dim", "2", "--attack", "teleport"}).code, kExitUsage);
  EXPECT_EQ(cli({"run", "--dim", "2", "--attack", "intercept-resend:b=0"}).code, kExitUsage);
  EXPECT_EQ(cli({"run", "--dim", "2", "--attack", "intercept-resend:b=4"}).code, kExitUsage);
  EXPECT_EQ(cli({"run", "--dim", "2", "--attack", "probe"}).code, kExitUsage);
  EXPECT_EQ(cli({"run", "--dim", "2", "--attack", "probe:phi=1"}).code, kExitUsage);
  EXPECT_EQ(cli({"run", "--dim", "2", "--attack", "source-replace:eps=x"}).code, kExitUsage);
  EXPECT_EQ(cli({"run", "--dim", "2", "--test-fraction", "2"}).code, kExitUsage);
  EXPECT_EQ(cli({"run", "--rounds", "10"}).code, kExitUsage);
}

TEST_F(CliTest, AttackFile) {
  write_file(path("a.json"), io::attack_to_json(intercept_resend(gen_mub(2), 1, 0, 1.0)).dump());
  const auto r = cli({"security", "attack-eval", "--dim", "2", "--attack-file", path("a.json")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NEAR(r.json()["detection_probability"].get<double>(), 1.0 / 6.0, 1e-10);
  Json broken = io::attack_to_json(identity_attack(2));
  broken["kraus"][0][1][1] = Json::parse("[0.5, 0.0]");
  write_file(path("broken.json"), broken.dump());
  EXPECT_EQ(cli({"security", "attack-eval", "--dim", "2", "--attack-file", path("broken.json")}).code, kExitFailure);
  EXPECT_EQ(cli({"run", "--dim", "2", "--attack-file", path("broken.json")}).code, kExitFailure);
  EXPECT_EQ(cli({"security", "attack-eval", "--dim", "3", "--attack-file", path("a.json")}).code, kExitUsage);
}

TEST_F(CliTest, LemmaReport) {
  const auto r = cli({"security", "lemma", "--dim", "2", "--n", "2"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.json()["solution_dim"], 1);
  EXPECT_EQ(r.json()["n"], 2);
  EXPECT_EQ(cli({"security", "lemma", "--dim", "3", "--n", "2"}).code, kExitUsage);
}

TEST_F(CliTest, AttackEvaluation) {
  const auto none = cli({"security", "attack-eval", "--attack", "none"});
  ASSERT_EQ(none.code, kExitOk) << none.err;
  EXPECT_LT(none.json()["detection_probability"].get<double>(), 1e-12);
  EXPECT_LT(none.json()["leakage"].get<double>(), 1e-12);
  const auto ir = cli({"security", "attack-eval", "--attack", "intercept-resend:b=1", "--dim", "2", "--curve", "4"});
  ASSERT_EQ(ir.code, kExitOk) << ir.err;
  const Json j = ir.json();
  const auto expected =
      evaluate_attack(ProductStrategy(build_strategy(gen_mub(2)), 1), intercept_resend(gen_mub(2), 1, 0, 1.0));
  EXPECT_NEAR(j["detection_probability"].get<double>(), expected.detection_probability, 1e-12);
  EXPECT_NEAR(j["leakage"].get<double>(), expected.leakage, 1e-12);
  EXPECT_GT(j["detection_probability"].get<double>(), 0.0);
  EXPECT_GT(j["leakage"].get<double>(), 0.0);
  ASSERT_EQ(j["curve"].size(), 5u);
  EXPECT_NEAR(j["curve"][0]["detection_probability"].get<double>(), 0.0, 1e-12);
  EXPECT_NEAR(j["curve"][2]["detection_probability"].get<double>(), 0.5 * expected.detection_probability, 1e-12);
  EXPECT_EQ(cli({"security", "attack-eval", "--attack", "none", "--curve", "3"}).code, kExitUsage);
}

TEST_F(CliTest, IdenticalSeedsGiveIdenticalBytes) {
  const std::vector<std::vector<std::string>> commands = {
      {"bases", "gen", "--dim", "3"},
      {"strategy", "build", "--dim", "3"},
      {"security", "lemma", "--dim", "3"},
      {"security", "attack-eval", "--dim", "2", "--attack", "probe:theta=0.5", "--curve", "3"},
      {"run", "--dim", "3", "--rounds", "500", "--attack", "intercept-resend:b=2,p=0.5", "--seed", "9"},
  };
  for (const auto& args : commands) {
    const auto a = cli(args);
    const auto b = cli(args);
    EXPECT_EQ(a.code, b.code);
    EXPECT_EQ(a.out, b.out) << args[0];
  }
  ASSERT_EQ(cli({"run", "--dim", "2", "--rounds", "300", "--seed", "4", "--out", path("a.jsonl")}).code, kExitOk);
  ASSERT_EQ(cli({"run", "--dim", "2", "--rounds", "300", "--seed", "4", "--out", path("b.jsonl")}).code, kExitOk);
  EXPECT_EQ(sha256_hex(read_file(path("a.jsonl"))), sha256_hex(read_file(path("b.jsonl"))));
  ASSERT_EQ(cli({"run", "--dim", "2", "--rounds", "300", "--seed", "5", "--out", path("c.jsonl")}).code, kExitOk);
  EXPECT_NE(read_file(path("a.jsonl")), read_file(path("c.jsonl")));
}

TEST_F(CliTest, ManifestReplay) {
  ASSERT_EQ(cli({"strategy", "build", "--dim", "2", "--out", path("s.json")}).code, kExitOk);
  const auto r = cli({"run", "--strategy", path("s.json"), "--rounds", "400", "--seed", "17", "--out",
                      path("t.jsonl"), "--manifest", path("m.json")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const Json m = Json::parse(read_file(path("m.json")));
  EXPECT_EQ(m["command"], "run");
  EXPECT_EQ(m["seed"], 17);
  EXPECT_EQ(m["exit_code"], 0);
  EXPECT_EQ(m["config"]["rounds"], "400");
  EXPECT_EQ(m["inputs"][0]["sha256"], sha256_hex(read_file(path("s.json"))));
  EXPECT_EQ(m["outputs"][0]["sha256"], sha256_hex(read_file(path("t.jsonl"))));
  EXPECT_EQ(m["stdout_sha256"], sha256_hex(r.out));

  const auto replay = cli({"replay", "--manifest", path("m.json")});
  EXPECT_EQ(replay.code, kExitOk) << replay.out;
  EXPECT_TRUE(replay.json()["reproduced"].get<bool>());

  // A modified input is reported instead of silently rerun.
  Json s = Json::parse(read_file(path("s.json")));
  s["safe_vectors"][0]["residual"] = 1.0;
  write_file(path("s.json"), dump(s));
  const auto changed = cli({"replay", "--manifest", path("m.json")});
  EXPECT_EQ(changed.code, kExitFailure);
  EXPECT_FALSE(changed.json()["reproduced"].get<bool>());
}

TEST_F(CliTest, ManifestForAbortedRun) {
  const auto r = cli({"run", "--dim", "2", "--rounds", "300", "--test-fraction", "1", "--attack",
                      "intercept-resend", "--manifest", path("m.json")});
  EXPECT_EQ(r.code, kExitAborted);
  EXPECT_EQ(Json::parse(read_file(path("m.json")))["exit_code"], kExitAborted);
  EXPECT_EQ(cli({"replay", "--manifest", path("m.json")}).code, kExitOk);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(cli({}).code, kExitUsage);
  EXPECT_EQ(cli({"bases"}).code, kExitUsage);
  EXPECT_EQ(cli({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(cli({"bases", "gen"}).code, kExitUsage);
  EXPECT_EQ(cli({"run", "--rounds", "many", "--dim", "2"}).code, kExitUsage);
  const auto help = cli({"--help"});
  EXPECT_EQ(help.code, kExitOk);
  EXPECT_NE(help.out.find("security"), std::string::npos);
  EXPECT_EQ(cli({"--version"}).code, kExitOk);
}

TEST_F(CliTest, ToleranceFromEnvironment) {
  ::setenv("MEANKING_TOL", "1e-6", 1);
  const auto ok = cli({"bases", "check", "--dim", "2"});
  EXPECT_EQ(ok.json()["tol"], 1e-6);
  ::setenv("MEANKING_TOL", "tiny", 1);
  EXPECT_EQ(cli({"bases", "check", "--dim", "2"}).code, kExitUsage);
  ::unsetenv("MEANKING_TOL");
  EXPECT_EQ(cli({"bases", "check", "--dim", "2"}).json()["tol"], kDefaultTol);
}

TEST(AttackSpec, Parsing) {
  const auto a = parse_attack_spec("intercept-resend:b=2,p=0.25");
  EXPECT_EQ(a.name, "intercept-resend");
  EXPECT_EQ(a.get("b"), 2.0);
  EXPECT_EQ(a.get("p"), 0.25);
  const auto defaults = parse_attack_spec("intercept-resend");
  EXPECT_EQ(defaults.get("b"), 1.0);
  EXPECT_EQ(defaults.get("p"), 1.0);
  EXPECT_EQ(parse_attack_spec("none").params.size(), 0u);
  EXPECT_THROW(parse_attack_spec("probe:theta"), UsageError);
  EXPECT_FALSE(make_attack(parse_attack_spec("none"), gen_mub(2), 1).has_value());
  EXPECT_EQ(make_attack(parse_attack_spec("probe:theta=0.5"), gen_mub(3), 1)->d, 3u);
}

TEST(Digest, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

}  // namespace
}  // namespace meanking::cli
