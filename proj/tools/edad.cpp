#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "edad/config.hpp"
#include "edad/pipeline.hpp"

namespace fs = std::filesystem;
using namespace edad;

namespace {

struct CommandLine {
  std::string config_path;
  std::map<std::string, std::string> overrides;
};

// One --dashed-key option per config key, applied after the config file.
void add_config_options(CLI::App& cmd, CommandLine& cl) {
  cmd.add_option("--config", cl.config_path, "flat key = value config file")->check(CLI::ExistingFile);
  for (const auto& key : config_keys()) {
    std::string dashed = key;
    std::replace(dashed.begin(), dashed.end(), '_', '-');
    std::string names = "--" + dashed;
    if (dashed != key) names += ",--" + key;
    cmd.add_option_function<std::string>(names, [&cl, key](const std::string& v) { cl.overrides[key] = v; },
                                         "config key '" + key + "'");
  }
}

RunConfig resolve(const CommandLine& cl, const std::string& command) {
  RunConfig config;
  if (!cl.config_path.empty()) load_config_file(config, cl.config_path);
  for (const auto& key : config_keys())
    if (auto it = cl.overrides.find(key); it != cl.overrides.end()) set_config_value(config, key, it->second);
  config.validate();
  write_config_snapshot(config.out, config, command);
  return config;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

int cmd_inject(const RunConfig& config) {
  const TimeSeries base = config.input_csv.empty() ? synthetic_fixture(config) : load_csv(config.input_csv);
  if (base.dims() != 1) throw ConfigError("inject works on univariate series; split the channels first");
  const InjectionSpec spec{config.kind, config.inject_ratio, config.magnitude, config.seed, config.segment_length};
  const TimeSeries injected = inject_anomalies(base, spec);
  auto out = open_out(fs::path(config.out) / "series.csv");
  write_csv(out, injected);
  const auto labeled = std::count(injected.labels->begin(), injected.labels->end(), 1);
  std::cout << "wrote " << (fs::path(config.out) / "series.csv").string() << ": " << injected.length() << " rows, "
            << labeled << " labeled " << to_string(config.kind) << '\n';
  return 0;
}

int cmd_train(const RunConfig& config) {
  const Dataset data = prepare_dataset(config);
  const auto windows = training_windows(data.train, config.window, config.stride);
  const fs::path dir = config.out;
  auto log = open_out(dir / "train_log.csv");
  write_log_header(log);
  const auto result = train(windows, config.model_config(), config.train_config(),
                            [&](const EpochRecord& rec, const TrainState&, bool improved) {
                              write_log_row(log, rec);
                              log.flush();
                              std::cout << "epoch " << rec.epoch << " loss " << format_real(rec.total)
                                        << (improved ? " (best)" : "") << '\n';
                            });
  write_checkpoint(dir / "checkpoint.bin", to_checkpoint(result.best));
  write_checkpoint(dir / "last.bin", to_checkpoint(result.last));
  std::cout << "best epoch " << result.best_epoch << "; checkpoint " << (dir / "checkpoint.bin").string() << '\n';
  return 0;
}

int cmd_score(const RunConfig& config, const std::string& checkpoint) {
  const fs::path path = checkpoint.empty() ? fs::path(config.out) / "checkpoint.bin" : fs::path(checkpoint);
  const TrainState state = from_checkpoint(read_checkpoint(path), config.model_config());
  const Dataset data = prepare_dataset(config);
  const Detection d = detect(config, state.model, data);
  auto out = open_out(fs::path(config.out) / "scores.csv");
  write_scores_csv(out, d.scores, d.predictions, data.test_labels);
  std::cout << "wrote " << (fs::path(config.out) / "scores.csv").string() << ": " << d.scores.scores.size()
            << " rows\n";
  return 0;
}

int cmd_eval(const RunConfig& config, const std::string& scores_path) {
  const fs::path path = scores_path.empty() ? fs::path(config.out) / "scores.csv" : fs::path(scores_path);
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open " + path.string());
  const ScoreTable table = read_scores_csv(in);
  if (!table.labels) throw IngestionError(path.string() + " has no label column");
  const EvalReport report = evaluate(table.scores, table.predictions, *table.labels, config.buffer_width());
  auto txt = open_out(fs::path(config.out) / "report.txt");
  write_report(txt, report);
  auto csv = open_out(fs::path(config.out) / "report.csv");
  write_report_csv_header(csv);
  write_report_csv_row(csv, report);
  write_report(std::cout, report);
  return 0;
}

const char* kMetricNames[] = {"precision", "recall", "f1", "auc_pr", "auc_roc", "vus_pr", "vus_roc"};

std::vector<double> metric_values(const EvalReport& r) {
  return {r.counts.precision, r.counts.recall, r.counts.f1, r.auc_pr, r.auc_roc, r.vus_pr, r.vus_roc};
}

std::string csv_safe(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

int cmd_bench(const RunConfig& config) {
  std::vector<RunConfig> cells;
  if (config.grid == "contamination") {
    for (double r : config.ratios()) {
      RunConfig c = config;
      c.contamination = r;
      cells.push_back(c);
    }
  } else {
    for (auto e : {EstimatorKind::infonce, EstimatorKind::nwj, EstimatorKind::mine, EstimatorKind::jsd})
      for (auto k : {CriticKind::separable, CriticKind::bilinear, CriticKind::concatenated}) {
        RunConfig c = config;
        c.estimator = e;
        c.critic = k;
        cells.push_back(c);
      }
  }

  const fs::path dir = config.out;
  auto table = open_out(dir / "bench.csv");
  auto long_table = open_out(dir / "bench_long.csv");
  table << "cell,contamination,estimator,critic,status";
  for (const char* arm : {"edad", "baseline"})
    for (const char* m : kMetricNames) table << ',' << arm << '_' << m;
  table << '\n';
  long_table << "cell,contamination,estimator,critic,arm,metric,value\n";

  // The baseline ignores estimator and critic, so ablation cells share one run.
  std::optional<Detection> shared_baseline;
  std::size_t failures = 0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const RunConfig& c = cells[i];
    const std::string key = std::to_string(i) + ',' + format_real(c.contamination) + ',' + to_string(c.estimator) +
                            ',' + to_string(c.critic);
    std::cout << "cell " << i + 1 << '/' << cells.size() << ": contamination " << format_real(c.contamination)
              << ", " << to_string(c.estimator) << '/' << to_string(c.critic) << std::endl;
    try {
      const bool need_baseline = config.grid == "contamination" || !shared_baseline;
      CellResult r = run_cell(c, need_baseline);
      if (config.grid == "ablation" && need_baseline) shared_baseline = r.baseline;
      const Detection& base = config.grid == "ablation" ? *shared_baseline : *r.baseline;
      if (!r.edad.report || !base.report) throw MetricUndefined("test labels lack one of the two classes");
      table << key << ",ok";
      const std::pair<const char*, const Detection*> arms[] = {{"edad", &r.edad}, {"baseline", &base}};
      for (const auto& [arm, d] : arms)
        for (double v : metric_values(*d->report)) table << ',' << format_real(v);
      table << '\n';
      for (const auto& [arm, d] : arms) {
        const auto values = metric_values(*d->report);
        for (std::size_t m = 0; m < values.size(); ++m)
          long_table << key << ',' << arm << ',' << kMetricNames[m] << ',' << format_real(values[m]) << '\n';
      }
    } catch (const std::exception& e) {
      ++failures;
      std::cerr << "cell " << i + 1 << " failed: " << e.what() << '\n';
      table << key << ",error: " << csv_safe(e.what()) << std::string(2 * std::size(kMetricNames), ',') << '\n';
    }
    table.flush();
    long_table.flush();
  }
  std::cout << "wrote " << (dir / "bench.csv").string() << " and " << (dir / "bench_long.csv").string() << '\n';
  return failures ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Encode-then-decompose time-series anomaly detection"};
  app.require_subcommand(1);

  CommandLine inject_cl, train_cl, score_cl, eval_cl, bench_cl;
  std::string checkpoint, scores_path;

  auto* inject = app.add_subcommand("inject", "write a series with injected anomalies and labels");
  add_config_options(*inject, inject_cl);
  inject->add_option_function<std::string>(
      "--ratio", [&](const std::string& v) { inject_cl.overrides["inject_ratio"] = v; }, "alias of --inject-ratio");

  auto* train_cmd = app.add_subcommand("train", "train a model; writes checkpoint.bin, last.bin, train_log.csv");
  add_config_options(*train_cmd, train_cl);

  auto* score = app.add_subcommand("score", "score the test split; writes scores.csv");
  add_config_options(*score, score_cl);
  score->add_option("--checkpoint", checkpoint, "checkpoint file (default OUT/checkpoint.bin)");

  auto* eval = app.add_subcommand("eval", "evaluate a scores file; writes report.txt and report.csv");
  add_config_options(*eval, eval_cl);
  eval->add_option("--scores", scores_path, "scores CSV (default OUT/scores.csv)");

  auto* bench = app.add_subcommand("bench", "contamination or estimator/critic sweep; writes bench.csv");
  add_config_options(*bench, bench_cl);

  CLI11_PARSE(app, argc, argv);

  try {
    if (inject->parsed()) return cmd_inject(resolve(inject_cl, "inject"));
    if (train_cmd->parsed()) return cmd_train(resolve(train_cl, "train"));
    if (score->parsed()) return cmd_score(resolve(score_cl, "score"), checkpoint);
    if (eval->parsed()) return cmd_eval(resolve(eval_cl, "eval"), scores_path);
    if (bench->parsed()) return cmd_bench(resolve(bench_cl, "bench"));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
