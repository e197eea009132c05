// Copyright 2026 The Nahr Authors
// SPDX-License-Identifier: Apache-2.0

#include "nahr/pipeline.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>
#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "fixture.hpp"

namespace nahr {
namespace {

namespace fs = std::filesystem;

class PipelineTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / ("nahr_pipeline_test_" + std::to_string(::getpid()));
    fs::remove_all(root_);
    testing::FixtureSpec spec;
    spec.target_bytes = 1 << 20;
    spec.seed = 3;
    truth_ = new testing::FixtureTruth(testing::write_fixture(root_ / "in", spec, root_ / "out"));
  }
  static void TearDownTestSuite() {
    delete truth_;
    truth_ = nullptr;
    fs::remove_all(root_);
  }

  static PipelineConfig config(const std::string& out, unsigned workers = 1) {
    auto c = load_pipeline_config(truth_->config);
    c.output_dir = root_ / out;
    c.workers = workers;
    c.shard_bytes = 128 << 10;
    c.tokenizer.training.target_size = 600;
    return c;
  }

  static inline fs::path root_;
  static inline testing::FixtureTruth* truth_ = nullptr;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

TEST_F(PipelineTest, RunsEndToEndWithConservation) {
  const auto m = run_pipeline(config("a"));
  EXPECT_TRUE(m.complete());
  EXPECT_TRUE(check_conservation(m).empty());
  for (const auto& v : check_conservation(m)) ADD_FAILURE() << v;
  const auto& ingest = m.stage(Stage::ingest).counts;
  EXPECT_EQ(ingest.at("records"), truth_->records);
  EXPECT_EQ(ingest.at("rejected"), truth_->invalid);
  EXPECT_EQ(m.stage(Stage::filter).counts.at("dropped"), truth_->noise);
  EXPECT_EQ(m.stage(Stage::dedup).counts.at("exact_dropped"), truth_->exact);
  EXPECT_EQ(m.stage(Stage::dedup).counts.at("near_dropped"), truth_->near);
  EXPECT_GT(m.stage(Stage::filter).outputs.size(), 1u);
  ASSERT_TRUE(m.corpus_stats.has_value());
  ASSERT_TRUE(m.tokenizer_fingerprint.has_value());
  EXPECT_EQ(load_manifest(root_ / "a"), m);
  EXPECT_TRUE(fs::exists(root_ / "a" / kConfigFile));
  for (auto s : kStages) EXPECT_TRUE(verify_stage_outputs(root_ / "a", m.stage(s)));
}

TEST_F(PipelineTest, DeterministicAcrossRunsAndWorkers) {
  const auto a = without_timings(run_pipeline(config("d1", 1)));
  const auto b = without_timings(run_pipeline(config("d2", 3)));
  const auto c = without_timings(run_pipeline(config("d1", 1)));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
  for (const auto& out : a.stage(Stage::corrupt).outputs) {
    EXPECT_EQ(slurp(root_ / "d1" / out.path), slurp(root_ / "d2" / out.path)) << out.path;
  }
}

TEST_F(PipelineTest, SeedChangesOutputs) {
  auto c = config("s1");
  c.seed += 1;
  c.noise.seed += 1;
  c.dedup.seed += 1;
  const auto a = run_pipeline(config("s0"));
  const auto b = run_pipeline(c);
  EXPECT_NE(a.config_hash, b.config_hash);
  EXPECT_NE(a.stage(Stage::corrupt).outputs, b.stage(Stage::corrupt).outputs);
}

TEST_F(PipelineTest, ResumeIsANoOpWhenComplete) {
  const auto m = run_pipeline(config("r"));
  EXPECT_EQ(resume(root_ / "r"), m);
  EXPECT_EQ(resume(root_ / "r", config("r")), m);
}

TEST_F(PipelineTest, ResumeRefusesEditedConfig) {
  run_pipeline(config("e"));
  auto edited = config("e");
  edited.filter.min_chars += 1;
  EXPECT_THROW(resume(root_ / "e", edited), ValidationError);
  auto workers = config("e", 4);
  EXPECT_NO_THROW(resume(root_ / "e", workers));
}

TEST_F(PipelineTest, ResumeRerunsFromFirstDamagedStage) {
  const auto full = without_timings(run_pipeline(config("x")));
  const auto& out = full.stage(Stage::tokenizer).outputs.front();
  std::ofstream(root_ / "x" / out.path, std::ios::app) << "tampered";
  const auto again = without_timings(resume(root_ / "x"));
  EXPECT_EQ(again, full);
}

TEST_F(PipelineTest, StopAfterLeavesLaterStagesPending) {
  RunOptions opt;
  opt.stop_after = Stage::filter;
  const auto m = run_pipeline(config("p"), opt);
  EXPECT_FALSE(m.complete());
  EXPECT_EQ(m.stage(Stage::filter).status, StageStatus::complete);
  EXPECT_EQ(m.stage(Stage::dedup).status, StageStatus::pending);
  const auto finished = resume(root_ / "p");
  EXPECT_TRUE(finished.complete());
  EXPECT_EQ(without_timings(finished), without_timings(run_pipeline(config("p2"))));
}

TEST_F(PipelineTest, KilledRunResumesToIdenticalOutputs) {
  const auto reference = without_timings(run_pipeline(config("k_ref")));
  const auto cfg = config("k");
  const pid_t pid = ::fork();
  ASSERT_GE(pid, 0);
  if (pid == 0) {
    RunOptions opt;
    opt.progress = [](Stage s, std::uint64_t n) {
      if (s == Stage::dedup && n >= 1) ::_exit(0);
    };
    try {
      run_pipeline(cfg, opt);
    } catch (...) {
    }
    ::_exit(3);
  }
  int status = 0;
  ::waitpid(pid, &status, 0);
  ASSERT_TRUE(WIFEXITED(status));
  ASSERT_EQ(WEXITSTATUS(status), 0);
  const auto interrupted = load_manifest(root_ / "k");
  EXPECT_EQ(interrupted.stage(Stage::filter).status, StageStatus::complete);
  EXPECT_NE(interrupted.stage(Stage::dedup).status, StageStatus::complete);
  const auto resumed = resume(root_ / "k");
  EXPECT_EQ(without_timings(resumed), reference);
  EXPECT_FALSE(fs::exists(root_ / "k" / ".dedup.tmp"));
}

TEST_F(PipelineTest, ConfigValidation) {
  auto c = config("v");
  c.sources.clear();
  EXPECT_THROW(run_pipeline(c), ValidationError);
  c = config("v");
  c.sources.front().path = root_ / "missing.wet";
  EXPECT_THROW(run_pipeline(c), ValidationError);
  EXPECT_THROW(pipeline_config_from_json(R"({"sources": [], "bogus": 1})"), ValidationError);
  EXPECT_THROW(pipeline_config_from_json(R"({"sources": [{"path": "a", "format": "xml"}]})"), ValidationError);
  EXPECT_THROW(pipeline_config_from_json("{"), ValidationError);
}

TEST_F(PipelineTest, ConfigJsonRoundTripAndSeedInheritance) {
  const auto c = pipeline_config_from_json(R"({"sources": [{"path": "/x"}], "seed": 9, "noise": {"seed": 4}})");
  EXPECT_EQ(c.dedup.seed, 9u);
  EXPECT_EQ(c.noise.seed, 4u);
  auto d = pipeline_config_from_json(to_json(c));
  EXPECT_EQ(d.hash(), c.hash());
  d.workers = 8;
  d.output_dir = "/elsewhere";
  EXPECT_EQ(d.hash(), c.hash());
}

TEST(Report, JsonRoundTripsTheManifest) {
  RunManifest m;
  m.tool_version = "t";
  m.config_hash = "h";
  for (auto s : kStages) {
    StageRecord r;
    r.stage = s;
    r.status = StageStatus::complete;
    r.counts["n"] = 1;
    r.seconds = 0.125;
    m.stages.push_back(r);
  }
  const std::vector<SourceStats> rows = {{Source::cc, 8'700'000'000'000ULL, 439'000'000'000ULL},
                                         {Source::news, 21'000'000'000ULL, 14'000'000'000ULL},
                                         {Source::elkheir, 16'000'000'000ULL, 13'000'000'000ULL},
                                         {Source::other, 63'000'000'000ULL, 63'000'000'000ULL}};
  m.corpus_stats = make_corpus_stats(rows);
  const auto rep = emit_report(m);
  const auto j = nlohmann::json::parse(rep.json);
  EXPECT_EQ(manifest_from_json(j["manifest"].dump()), m);
  EXPECT_EQ(j["timings"]["dedup"], 0.125);
  const auto& table = j["corpus_table"];
  ASSERT_EQ(table.size(), 5u);
  EXPECT_EQ(table[2]["filtering_pct"], 19);
  EXPECT_EQ(table[3]["filtering_pct"], 0);
  EXPECT_EQ(table[4]["source"], "Total");
  EXPECT_EQ(table[4]["original"], "8.8TB");
  EXPECT_NE(rep.text.find("8.7TB"), std::string::npos);
}

TEST(Report, TotalRowOfTheReferenceCorpus) {
  const std::vector<SourceStats> rows = {{Source::cc, 8'800'000'000'000ULL, 529'000'000'000ULL}};
  EXPECT_EQ(rounded_pct(make_corpus_stats(rows).total.filtering_pct()), 94);
}

TEST(Manifest, RejectsMalformedJson) {
  EXPECT_THROW(manifest_from_json("{}"), Error);
  EXPECT_THROW(manifest_from_json("not json"), Error);
}

}  // namespace
}  // namespace nahr
