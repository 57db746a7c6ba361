// Acceptance runner: one PASS/FAIL line per criterion; exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "edad/metrics.hpp"
#include "edad/pipeline.hpp"
#include "support/gradcheck.hpp"
#include "support/mi_calibration.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace edad;

namespace {

// Tolerances and thresholds.
constexpr std::size_t kMinGradCases = 100;
constexpr double kGradTolerance = 1e-3;
constexpr std::size_t kMetricInstances = 50;
constexpr std::size_t kMetricMaxLength = 200;
constexpr double kMetricTolerance = 1e-6;
constexpr double kTableTolerance = 0.001;
constexpr std::size_t kMiSteps = 2000;
constexpr std::size_t kMiBatch = 128;
constexpr double kTrivialTolerance = 1e-9;
constexpr double kEndToEndRoc = 0.80;
constexpr double kAboveRandom = 0.25;
constexpr double kRobustnessGap = 0.10;
constexpr double kDecomposerTolerance = 1e-10;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s << std::setprecision(digits) << v;
  return s.str();
}

Outcome gradient_suite_check() {
  const auto cases = testing::gradient_suite(20240601);
  double worst = 0;
  std::string worst_name;
  for (const auto& c : cases) {
    const auto r = testing::check_gradient(c);
    if (!(r.max_rel_error <= worst)) {
      worst = r.max_rel_error;
      worst_name = r.name + "/" + r.worst_tensor;
    }
  }
  return {cases.size() >= kMinGradCases && worst < kGradTolerance,
          std::to_string(cases.size()) + " cases, max relative error " + fmt(worst) + " at " + worst_name +
              " (limit " + fmt(kGradTolerance) + ")"};
}

Outcome metric_oracle_check() {
  Rng rng(77);
  double worst = 0;
  for (std::size_t k = 0; k < kMetricInstances; ++k) {
    const std::size_t n = 20 + rng.below(kMetricMaxLength - 19);
    std::vector<real> scores(n);
    std::vector<std::uint8_t> labels(n, 0);
    for (real& s : scores) s = static_cast<real>(std::round(rng.normal() * 5) / 5);
    const std::size_t segments = 1 + rng.below(5);
    for (std::size_t j = 0; j < segments; ++j) {
      const std::size_t start = rng.below(n), len = 1 + rng.below(8);
      for (std::size_t i = start; i < std::min(n, start + len); ++i) labels[i] = 1;
    }
    labels[rng.below(n)] = 0;
    const std::vector<real> soft(labels.begin(), labels.end());
    const std::size_t max_buffer = rng.below(15);
    const auto v = vus(scores, labels, max_buffer);
    const auto [bpr, broc] = testing::brute_vus(scores, labels, max_buffer);
    for (double d : {auc_roc(scores, labels) - testing::brute_roc(scores, soft),
                     auc_pr(scores, labels) - testing::brute_pr(scores, soft), v.pr - bpr, v.roc - broc})
      worst = std::max(worst, std::abs(d));
  }
  return {worst <= kMetricTolerance, std::to_string(kMetricInstances) + " instances (N <= " +
                                         std::to_string(kMetricMaxLength) + "), max deviation " + fmt(worst) +
                                         " (limit " + fmt(kMetricTolerance) + ")"};
}

Outcome table_identity_check() {
  const double swat = f1_score(0.938, 1.000), psm = f1_score(0.978, 0.984);
  return {std::abs(swat - 0.968) <= kTableTolerance && std::abs(psm - 0.981) <= kTableTolerance,
          "F1(0.938, 1.000) = " + fmt(swat, 6) + " vs 0.968; F1(0.978, 0.984) = " + fmt(psm, 6) + " vs 0.981"};
}

Outcome mi_ordering_check() {
  EstimatorConfig infonce, standard, nwj, jsd;
  standard.standard_infonce = true;
  nwj.kind = EstimatorKind::nwj;
  jsd.kind = EstimatorKind::jsd;
  const std::pair<const char*, EstimatorConfig> estimators[] = {
      {"infonce", infonce}, {"standard_infonce", standard}, {"nwj", nwj}, {"jsd", jsd}};
  bool pass = true;
  std::string detail;
  for (const auto& [name, est] : estimators) {
    const double a = testing::calibrated_mi(est, 0.3, kMiSteps, kMiBatch),
                 b = testing::calibrated_mi(est, 0.6, kMiSteps, kMiBatch),
                 c = testing::calibrated_mi(est, 0.9, kMiSteps, kMiBatch);
    pass = pass && a < b && b < c;
    detail += std::string(detail.empty() ? "" : "; ") + name + " " + fmt(a, 3) + " < " + fmt(b, 3) + " < " + fmt(c, 3);
  }
  return {pass, detail + " (true 0.0472 < 0.223 < 0.830)"};
}

Outcome trivial_critic_check() {
  Tape tape(false);
  const Var zero = tape.constant(Tensor::matrix(16, 16));
  EstimatorConfig c;
  const double infonce = estimate(c, zero).value.item();
  c.kind = EstimatorKind::mine;
  const double mine = estimate(c, zero, MineAverage{}).value.item();
  c.kind = EstimatorKind::jsd;
  const double jsd = estimate(c, zero).value.item();
  c.kind = EstimatorKind::nwj;
  const double nwj = estimate(c, zero).value.item();
  const double err = std::max({std::abs(infonce + 1), std::abs(mine), std::abs(jsd + 2 * std::numbers::ln2),
                               std::abs(nwj + std::exp(-1.0))});
  return {err <= kTrivialTolerance, "infonce " + fmt(infonce, 12) + ", mine " + fmt(mine, 12) + ", jsd " +
                                        fmt(jsd, 12) + ", nwj " + fmt(nwj, 12) + "; max error " + fmt(err)};
}

RunConfig fixture_config() {
  RunConfig c;
  c.length = 10000;
  c.period = 50;
  c.noise = 0.1;
  c.d_model = 64;
  c.layers = 2;
  c.window = 100;
  c.max_epochs = 10;
  c.contamination = 0.05;
  c.inject_ratio = 0.02;
  c.kind = AnomalyKind::global;
  c.seed = 0;
  return c;
}

Outcome end_to_end_check() {
  const CellResult r = run_cell(fixture_config(), false);
  if (!r.edad.report) return {false, "test split lacks one of the two classes"};
  const double roc = r.edad.report->auc_roc;
  return {roc >= kEndToEndRoc && roc - 0.5 >= kAboveRandom,
          "A-ROC " + fmt(roc) + " (need >= " + fmt(kEndToEndRoc) + "), A-PR " + fmt(r.edad.report->auc_pr) +
              ", trained " + std::to_string(r.training.log.size()) + " epochs, best epoch " +
              std::to_string(r.training.best_epoch)};
}

Outcome robustness_check() {
  RunConfig low = fixture_config(), high = fixture_config();
  low.contamination = 0.01;
  high.contamination = 0.20;
  const CellResult a = run_cell(low, true), b = run_cell(high, true);
  if (!a.edad.report || !b.edad.report || !a.baseline->report || !b.baseline->report)
    return {false, "test split lacks one of the two classes"};
  const double e1 = a.edad.report->auc_roc, e20 = b.edad.report->auc_roc;
  const double b1 = a.baseline->report->auc_roc, b20 = b.baseline->report->auc_roc;
  const double edad_drop = e1 - e20, base_drop = b1 - b20;
  return {std::abs(e20 - e1) <= kRobustnessGap && base_drop > edad_drop,
          "EDAD A-ROC " + fmt(e1) + " -> " + fmt(e20) + " (|gap| <= " + fmt(kRobustnessGap) + "), baseline " + fmt(b1) +
              " -> " + fmt(b20) + "; degradation EDAD " + fmt(edad_drop) + " vs baseline " + fmt(base_drop)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism_check() {
  const fs::path root = fs::temp_directory_path() / "edad_acceptance_determinism";
  fs::remove_all(root);
  const std::string flags =
      " --seed 42 --length 3000 --d-model 16 --layers 1 --heads 4 --max-epochs 2 --threads 1";
  for (const char* run : {"a", "b"}) {
    const std::string out = " --out " + (root / run).string();
    for (const char* cmd : {"train", "score", "eval"}) {
      const std::string line = std::string(EDAD_CLI_PATH) + " " + cmd + flags + out + " > " +
                               (root.string() + "_" + run + "_" + cmd + ".log") + " 2>&1";
      fs::create_directories(root);
      if (std::system(line.c_str()) != 0) return {false, std::string("command failed: ") + cmd};
    }
  }
  bool pass = true;
  std::string detail;
  for (const char* file : {"checkpoint.bin", "last.bin", "scores.csv", "report.txt", "report.csv", "train_log.csv"}) {
    const std::string a = slurp(root / "a" / file), b = slurp(root / "b" / file);
    const bool same = !a.empty() && a == b;
    // The log records wall-clock seconds, so compare it without the last column.
    bool same_log = same;
    if (std::string(file) == "train_log.csv") {
      auto strip = [](const std::string& s) {
        std::istringstream in(s);
        std::string line, out;
        while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + '\n';
        return out;
      };
      same_log = !a.empty() && strip(a) == strip(b);
    }
    const bool ok = std::string(file) == "train_log.csv" ? same_log : same;
    pass = pass && ok;
    detail += std::string(detail.empty() ? "" : ", ") + file + (ok ? " identical" : " DIFFERS");
  }
  fs::remove_all(root);
  return {pass, detail};
}

Outcome decomposer_identity_check() {
  ModelConfig cfg;
  cfg.window = 10;
  cfg.encoder.d_model = 8;
  cfg.encoder.heads = 2;
  cfg.encoder.layers = 1;
  double worst = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Model model = Model::initialize(cfg, seed);
    std::vector<real> window(cfg.window);
    Rng rng(seed + 100);
    for (real& v : window) v = static_cast<real>(rng.normal());
    Tape tape(false);
    const BoundParams bound(tape, model.params, false);
    const Var y = encode(tape, bound, window, cfg.encoder);
    const auto [sta, aux] = split(y);
    std::vector<std::size_t> id(cfg.window);
    for (std::size_t i = 0; i < id.size(); ++i) id[i] = i;
    const Var eye = tape.constant(Tensor::identity(cfg.encoder.d_model));
    const Var y_aux_hat = aux_branch(sta, aux, id, eye);
    const Var y_sta_hat = sta_branch(sta, aux, id, eye);
    worst = std::max({worst, std::abs(aux_loss(y, y_aux_hat, id).item()), max_abs_diff(y_aux_hat.value(), y.value()),
                      max_abs_diff(y_sta_hat.value(), y.value())});
    const Tensor f = critic_scores(y, aux, bound, cfg.critic).value();
    for (auto kind : {EstimatorKind::infonce, EstimatorKind::nwj, EstimatorKind::jsd}) {
      EstimatorConfig est;
      est.kind = kind;
      const auto c = pointwise_scores(est, f);
      double mean = 0;
      for (real v : c) mean += v;
      mean /= static_cast<double>(c.size());
      worst = std::max(worst, std::abs(mean - estimate(est, tape.constant(f)).value.item()));
    }
  }
  return {worst <= kDecomposerTolerance, "max deviation " + fmt(worst) + " (limit " + fmt(kDecomposerTolerance) + ")"};
}

}  // namespace

int main() {
  // Wall-clock budgets in seconds; 0 means unbounded.
  const struct {
    const char* name;
    std::function<Outcome()> run;
    double budget;
  } criteria[] = {
      {"gradient suite", gradient_suite_check, 60},
      {"metric oracle equivalence", metric_oracle_check, 60},
      {"table F1 identities", table_identity_check, 0},
      {"MI estimator ordering", mi_ordering_check, 180},
      {"trivial-critic identities", trivial_critic_check, 0},
      {"decomposer identities", decomposer_identity_check, 0},
      {"determinism", determinism_check, 0},
      {"end-to-end detection", end_to_end_check, 600},
      {"contamination robustness", robustness_check, 1800},
  };
  int failures = 0;
  for (const auto& [name, run, budget] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (budget > 0 && secs > budget) {
      o.pass = false;
      o.detail += "; over the " + fmt(budget) + " s budget";
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << ": " << o.detail << " [" << fmt(secs, 3) << " s]"
              << std::endl;
  }
  std::cout << (failures ? std::to_string(failures) + " criteria failed" : std::string("all criteria passed"))
            << std::endl;
  return failures ? 1 : 0;
}
