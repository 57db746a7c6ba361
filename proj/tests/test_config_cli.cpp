#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "edad/config.hpp"
#include "edad/pipeline.hpp"

namespace fs = std::filesystem;

namespace edad {
namespace {

TEST(Config, DefaultsMatchPublishedHyperparameters) {
  const RunConfig c;
  EXPECT_EQ(c.d_model, 256u);
  EXPECT_EQ(c.layers, 3u);
  EXPECT_EQ(c.heads, 8u);
  EXPECT_EQ(c.window, 100u);
  EXPECT_EQ(c.lr, 5e-4);
  EXPECT_EQ(c.anomaly_ratio, 0.01);
  EXPECT_EQ(c.buffer_width(), 50u);
  EXPECT_EQ(c.ratios(), (std::vector<double>{0.01, 0.02, 0.04, 0.06, 0.08, 0.1, 0.2}));
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, UnknownKeysAndBadValuesAreRejected) {
  RunConfig c;
  EXPECT_THROW(set_config_value(c, "learning_rate", "1"), ConfigError);
  EXPECT_THROW(set_config_value(c, "d_model", "abc"), ConfigError);
  EXPECT_THROW(set_config_value(c, "d_model", "-3"), ConfigError);
  EXPECT_THROW(set_config_value(c, "critic", "quadratic"), ConfigError);
  EXPECT_THROW(set_config_value(c, "point_adjust", "maybe"), ConfigError);
  std::istringstream text("window = 50\nbogus = 1\n");
  EXPECT_THROW(apply_config_text(c, text), ConfigError);
}

TEST(Config, ValidateCatchesInconsistentSettings) {
  RunConfig c;
  c.heads = 7;
  EXPECT_THROW(c.validate(), ConfigError);
  c = RunConfig{};
  c.d_model = 9;  // divisible by the head count but odd
  c.heads = 3;
  EXPECT_THROW(c.validate(), ConfigError);
  c = RunConfig{};
  c.anomaly_ratio = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, SnapshotRoundTrips) {
  RunConfig c;
  set_config_value(c, "d_model", "64");
  set_config_value(c, "estimator", "jsd");
  set_config_value(c, "critic", "bilinear");
  set_config_value(c, "lr", "0.000123");
  set_config_value(c, "out", "some dir");
  set_config_value(c, "standard_infonce", "true");
  std::stringstream buf;
  write_config(buf, c);
  RunConfig back;
  apply_config_text(back, buf);
  for (const auto& key : config_keys()) EXPECT_EQ(get_config_value(back, key), get_config_value(c, key)) << key;
}

TEST(Config, CommentsAndBlankLinesAreIgnored) {
  RunConfig c;
  std::istringstream text("# comment\n\n  seed = 12   # trailing\nwindow=40\n");
  apply_config_text(c, text);
  EXPECT_EQ(c.seed, 12u);
  EXPECT_EQ(c.window, 40u);
}

RunConfig tiny_run(const std::string& out) {
  RunConfig c;
  c.length = 1200;
  c.window = 20;
  c.d_model = 4;
  c.heads = 2;
  c.layers = 1;
  c.max_epochs = 1;
  c.stride = 10;
  c.score_stride = 10;
  c.baseline_epochs = 1;
  c.out = out;
  return c;
}

TEST(Pipeline, FixtureSplitContaminatesTrainAndInjectsTest) {
  RunConfig c = tiny_run("unused");
  c.contamination = 0.05;
  c.inject_ratio = 0.02;
  const Dataset d = prepare_dataset(c);
  ASSERT_EQ(d.train.size(), 1u);
  EXPECT_EQ(d.train[0].length(), 840u);
  EXPECT_EQ(d.test[0].length(), 360u);
  EXPECT_EQ(std::count(d.train_labels->begin(), d.train_labels->end(), 1), 42);
  EXPECT_EQ(std::count(d.test_labels->begin(), d.test_labels->end(), 1), 8);
  double mean = 0;
  for (real v : d.train[0].channel(0)) mean += v;
  EXPECT_NEAR(mean / 840, 0, 1e-9);
}

TEST(Pipeline, CsvInputIsUsedAsGiven) {
  const fs::path dir = fs::temp_directory_path() / "edad_pipeline_csv";
  fs::create_directories(dir);
  const auto series = inject_anomalies(synthetic_sine(400, 20, 0.1, 1), {AnomalyKind::global, 0.02, 3, 2, 10});
  write_csv(dir / "s.csv", series);
  RunConfig c = tiny_run((dir / "out").string());
  c.input_csv = (dir / "s.csv").string();
  c.split = 0.5;
  const Dataset d = prepare_dataset(c);
  EXPECT_EQ(d.test[0].length(), 200u);
  EXPECT_EQ(std::vector<std::uint8_t>(series.labels->begin() + 200, series.labels->end()), *d.test_labels);
  fs::remove_all(dir);
}

TEST(Pipeline, RunCellProducesBothArms) {
  const CellResult r = run_cell(tiny_run("unused"), true);
  ASSERT_TRUE(r.edad.report);
  ASSERT_TRUE(r.baseline && r.baseline->report);
  EXPECT_EQ(r.edad.scores.scores.size(), 360u);
  EXPECT_EQ(r.edad.predictions.size(), 360u);
  EXPECT_EQ(std::count(r.edad.predictions.begin(), r.edad.predictions.end(), 1), 4);
}

// CLI smoke tests run the real binary.
class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("edad_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args) const {
    const std::string cmd = std::string(EDAD_CLI_PATH) + " " + args + " > " + (dir_ / "stdout.txt").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return status == 0 ? 0 : 1;
  }
  static std::string tiny() {
    return "--length 1200 --window 20 --d-model 4 --heads 2 --layers 1 --max-epochs 1 --baseline-epochs 1 --threads 1";
  }
  std::string read(const std::string& name) const {
    std::ifstream in(dir_ / name, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  }
  std::string out(const std::string& sub = "") const { return " --out " + (dir_ / sub).string(); }

  fs::path dir_;
};

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

TEST_F(Cli, InjectWritesLabeledSeries) {
  ASSERT_EQ(run("inject --kind global --ratio 0.02 --seed 7 --length 1000" + out()), 0) << read("stdout.txt");
  std::ifstream in(dir_ / "series.csv");
  const TimeSeries ts = parse_csv(in, "series");
  EXPECT_EQ(ts.length(), 1000u);
  EXPECT_EQ(std::count(ts.labels->begin(), ts.labels->end(), 1), 20);
  EXPECT_TRUE(fs::exists(dir_ / "inject_config.txt"));
}

TEST_F(Cli, EveryKindLabelsExactlyTheChangedPoints) {
  RunConfig c;
  c.length = 1000;
  c.seed = 3;
  const TimeSeries clean = synthetic_fixture(c);
  for (const char* kind : {"global", "contextual", "shapelet", "seasonal", "trend"}) {
    ASSERT_EQ(run(std::string("inject --length 1000 --seed 3 --ratio 0.05 --kind ") + kind + out(kind)), 0) << kind;
    std::ifstream in(dir_ / kind / "series.csv");
    const TimeSeries ts = parse_csv(in, kind);
    std::size_t changed = 0;
    for (std::size_t i = 0; i < 1000; ++i) {
      const bool differs = ts.values[i] != clean.values[i];
      changed += differs;
      EXPECT_EQ(differs, (*ts.labels)[i] == 1) << kind << " at " << i;
    }
    if (std::string(kind) == "global" || std::string(kind) == "contextual") EXPECT_EQ(changed, 50u) << kind;
    EXPECT_GT(changed, 0u) << kind;
  }
}

TEST_F(Cli, TrainIsDeterministicAndScoreEvalFollow) {
  ASSERT_EQ(run("train --seed 1 " + tiny() + out("a")), 0) << read("stdout.txt");
  ASSERT_EQ(run("train --seed 1 " + tiny() + out("b")), 0) << read("stdout.txt");
  EXPECT_EQ(read("a/checkpoint.bin"), read("b/checkpoint.bin"));
  EXPECT_FALSE(read("a/checkpoint.bin").empty());
  ASSERT_EQ(run("score --seed 1 " + tiny() + out("a")), 0) << read("stdout.txt");
  EXPECT_EQ(count_lines(read("a/scores.csv")), 361u);
  ASSERT_EQ(run("eval --seed 1 " + tiny() + out("a")), 0) << read("stdout.txt");
  EXPECT_NE(read("a/report.txt").find("auc_roc = "), std::string::npos);
  EXPECT_EQ(count_lines(read("a/report.csv")), 2u);
  EXPECT_NE(read("a/train_config.txt").find("d_model = 4"), std::string::npos);
}

TEST_F(Cli, SnapshotReproducesTraining) {
  ASSERT_EQ(run("train --seed 5 " + tiny() + out("a")), 0) << read("stdout.txt");
  ASSERT_EQ(run("train --config " + (dir_ / "a/train_config.txt").string() + out("b")), 0) << read("stdout.txt");
  EXPECT_EQ(read("a/checkpoint.bin"), read("b/checkpoint.bin"));
}

TEST_F(Cli, ZeroLambda3KeepsRegColumnOutOfTotal) {
  ASSERT_EQ(run("train --lambda3 0 " + tiny() + out()), 0) << read("stdout.txt");
  std::istringstream log(read("train_log.csv"));
  std::string header, row;
  std::getline(log, header);
  std::getline(log, row);
  EXPECT_EQ(header, "epoch,total,l_sta,l_aux,l_reg,seconds");
  std::vector<double> v;
  std::stringstream cells(row);
  for (std::string cell; std::getline(cells, cell, ',');) v.push_back(std::stod(cell));
  ASSERT_EQ(v.size(), 6u);
  EXPECT_NEAR(v[1], v[2] + v[3], 1e-9 * std::abs(v[1]));
}

TEST_F(Cli, ErrorsGiveNonzeroExit) {
  EXPECT_NE(run("train --no-such-flag 1" + out()), 0);
  EXPECT_NE(run("train --heads 7" + out()), 0);
  EXPECT_NE(run("eval --scores /nonexistent.csv" + out()), 0);
}

TEST_F(Cli, AblationBenchHasTwelveRows) {
  ASSERT_EQ(run("bench --grid ablation " + tiny() + out()), 0) << read("stdout.txt");
  const std::string table = read("bench.csv");
  EXPECT_EQ(count_lines(table), 13u);
  EXPECT_EQ(count_lines(read("bench_long.csv")), 1u + 12u * 2u * 7u);
}

}  // namespace
}  // namespace edad
