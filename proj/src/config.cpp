#include "edad/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

namespace edad {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty())
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("config key '" + key + "': expected true or false, got '" + text + "'");
}

struct Field {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T>
Field field(T RunConfig::*member) {
  Field f;
  f.set = [member](RunConfig& c, const std::string& key, const std::string& text) {
    if constexpr (std::is_same_v<T, bool>)
      c.*member = parse_bool(key, text);
    else if constexpr (std::is_same_v<T, std::string>)
      c.*member = text;
    else
      c.*member = parse_number<T>(key, text);
  };
  f.get = [member](const RunConfig& c) -> std::string {
    if constexpr (std::is_same_v<T, bool>)
      return c.*member ? "true" : "false";
    else if constexpr (std::is_same_v<T, std::string>)
      return c.*member;
    else if constexpr (std::is_floating_point_v<T>)
      return format_real(c.*member);
    else
      return std::to_string(c.*member);
  };
  return f;
}

template <class E>
Field enum_field(E RunConfig::*member, E (*parse)(const std::string&)) {
  Field f;
  f.set = [member, parse](RunConfig& c, const std::string&, const std::string& text) { c.*member = parse(text); };
  f.get = [member](const RunConfig& c) { return to_string(c.*member); };
  return f;
}

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"train_csv", field(&RunConfig::train_csv)},
      {"test_csv", field(&RunConfig::test_csv)},
      {"input_csv", field(&RunConfig::input_csv)},
      {"split", field(&RunConfig::split)},
      {"length", field(&RunConfig::length)},
      {"period", field(&RunConfig::period)},
      {"noise", field(&RunConfig::noise)},
      {"kind", enum_field(&RunConfig::kind, &parse_anomaly_kind)},
      {"inject_ratio", field(&RunConfig::inject_ratio)},
      {"magnitude", field(&RunConfig::magnitude)},
      {"segment_length", field(&RunConfig::segment_length)},
      {"contamination", field(&RunConfig::contamination)},
      {"window", field(&RunConfig::window)},
      {"d_model", field(&RunConfig::d_model)},
      {"layers", field(&RunConfig::layers)},
      {"heads", field(&RunConfig::heads)},
      {"d_ff", field(&RunConfig::d_ff)},
      {"conventional_addnorm", field(&RunConfig::conventional_addnorm)},
      {"critic", enum_field(&RunConfig::critic, &parse_critic_kind)},
      {"critic_hidden", field(&RunConfig::critic_hidden)},
      {"critic_embedding", field(&RunConfig::critic_embedding)},
      {"estimator", enum_field(&RunConfig::estimator, &parse_estimator_kind)},
      {"standard_infonce", field(&RunConfig::standard_infonce)},
      {"untie_wp", field(&RunConfig::untie_wp)},
      {"lambda1", field(&RunConfig::lambda1)},
      {"lambda2", field(&RunConfig::lambda2)},
      {"lambda3", field(&RunConfig::lambda3)},
      {"lr", field(&RunConfig::lr)},
      {"max_epochs", field(&RunConfig::max_epochs)},
      {"patience", field(&RunConfig::patience)},
      {"min_improvement", field(&RunConfig::min_improvement)},
      {"batch_size", field(&RunConfig::batch_size)},
      {"ema_decay", field(&RunConfig::ema_decay)},
      {"stride", field(&RunConfig::stride)},
      {"threads", field(&RunConfig::threads)},
      {"score_stride", field(&RunConfig::score_stride)},
      {"anomaly_ratio", field(&RunConfig::anomaly_ratio)},
      {"overlap", enum_field(&RunConfig::overlap, &parse_aggregation)},
      {"channel_aggregation", enum_field(&RunConfig::channel_aggregation, &parse_aggregation)},
      {"point_adjust", field(&RunConfig::point_adjust)},
      {"pool_train_scores", field(&RunConfig::pool_train_scores)},
      {"max_buffer", field(&RunConfig::max_buffer)},
      {"baseline_lr", field(&RunConfig::baseline_lr)},
      {"baseline_hidden", field(&RunConfig::baseline_hidden)},
      {"baseline_epochs", field(&RunConfig::baseline_epochs)},
      {"grid", field(&RunConfig::grid)},
      {"grid_ratios", field(&RunConfig::grid_ratios)},
      {"seed", field(&RunConfig::seed)},
      {"out", field(&RunConfig::out)},
  };
  return table;
}

const Field& find_field(const std::string& key) {
  for (const auto& [name, f] : fields())
    if (name == key) return f;
  throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, f] : fields()) k.push_back(name);
    return k;
  }();
  return keys;
}

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  find_field(key).set(config, key, value);
}

std::string get_config_value(const RunConfig& config, const std::string& key) { return find_field(key).get(config); }

void apply_config_text(RunConfig& config, std::istream& in, const std::string& source) {
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(source + ":" + std::to_string(n) + ": expected key = value");
    try {
      set_config_value(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(n) + ": " + e.what());
    }
  }
}

void load_config_file(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  apply_config_text(config, in, path.string());
}

void write_config(std::ostream& out, const RunConfig& config) {
  for (const auto& [name, f] : fields()) out << name << " = " << f.get(config) << '\n';
}

std::vector<double> RunConfig::ratios() const {
  std::vector<double> out;
  std::stringstream ss(grid_ratios);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(parse_number<double>("grid_ratios", trim(item)));
  if (out.empty()) throw ConfigError("grid_ratios is empty");
  return out;
}

ModelConfig RunConfig::model_config() const {
  ModelConfig m;
  m.window = window;
  m.encoder.d_model = d_model;
  m.encoder.layers = layers;
  m.encoder.heads = heads;
  m.encoder.d_ff = d_ff;
  m.encoder.conventional_addnorm = conventional_addnorm;
  m.critic.kind = critic;
  m.critic.hidden = critic_hidden;
  m.critic.embedding = critic_embedding;
  m.estimator.kind = estimator;
  m.estimator.standard_infonce = standard_infonce;
  m.untie_wp = untie_wp;
  return m;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.lambda1 = lambda1;
  t.lambda2 = lambda2;
  t.lambda3 = lambda3;
  t.lr = lr;
  t.max_epochs = max_epochs;
  t.patience = patience;
  t.min_improvement = min_improvement;
  t.batch_size = batch_size;
  t.ema_decay = ema_decay;
  t.seed = seed;
  t.threads = threads;
  return t;
}

BaselineConfig RunConfig::baseline_config() const {
  BaselineConfig b;
  b.window = window;
  b.hidden = baseline_hidden;
  b.lr = baseline_lr;
  b.max_epochs = baseline_epochs;
  b.patience = patience;
  b.min_improvement = min_improvement;
  b.batch_size = batch_size;
  b.seed = seed;
  return b;
}

ScoringOptions RunConfig::scoring_options() const { return {score_stride, overlap, channel_aggregation, threads}; }

void RunConfig::validate() const {
  model_config().validate();
  train_config().validate();
  baseline_config().validate();
  if (!(split > 0 && split < 1)) throw ConfigError("split must lie in (0, 1)");
  if (!(anomaly_ratio > 0 && anomaly_ratio < 1)) throw ConfigError("anomaly_ratio must lie in (0, 1)");
  if (!(inject_ratio >= 0 && inject_ratio < 1)) throw ConfigError("inject_ratio must lie in [0, 1)");
  if (!(contamination >= 0 && contamination < 1)) throw ConfigError("contamination must lie in [0, 1)");
  if (stride == 0 || score_stride == 0) throw ConfigError("strides must be positive");
  if (segment_length == 0) throw ConfigError("segment_length must be positive");
  if (!(period > 0) || !(noise >= 0)) throw ConfigError("period must be positive and noise non-negative");
  if (grid != "contamination" && grid != "ablation")
    throw ConfigError("grid must be 'contamination' or 'ablation', got '" + grid + "'");
  for (double r : ratios())
    if (!(r >= 0 && r < 1)) throw ConfigError("grid_ratios entries must lie in [0, 1)");
  if (out.empty()) throw ConfigError("out directory is empty");
}

}  // namespace edad
