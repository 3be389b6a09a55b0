#include "config.hpp"

#include <cstdlib>
#include <fstream>

#include "error.hpp"

namespace ftsqa {

static const std::map<std::string, std::string>& defaults() {
  static const std::map<std::string, std::string> kDefaults = {
      {"variant", "fts-brnn"},
      {"loss", "full-time"},
      {"output_mode", "affine"},
      {"eval_method", "innerp"},
      {"hidden_dim", "100"},
      {"embed_dim", "0"},
      {"seq_len", "0"},
      {"lr", "0.002"},
      {"momentum", "0.8"},
      {"rms_decay", "0.9"},
      {"epsilon", "1e-6"},
      {"dropout", "0.7"},
      {"dropout_semantics", "drop"},
      {"epochs", "100"},
      {"batch_size", "32"},
      {"seed", "42"},
      {"margin", "1"},
      {"train_embeddings", "false"},
      {"grad_clip", "0"},
      {"wrong_answer_policy", "all"},
      {"sample_k", "10"},
      {"unk_policy", "trainable"},
      {"min_answer_count", "6"},
      {"checkpoint_dtype", "f32"},
      {"lr_l2", "1e-4"},
      {"lr_iterations", "500"},
      {"lr_step", "0.5"},
      {"dataset", ""},
      {"valid", ""},
      {"lr_train", ""},
      {"embeddings", ""},
      {"checkpoint", ""},
      {"out", ""},
  };
  return kDefaults;
}

Config::Config() : values_(defaults()) {}

void Config::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) fail(ErrorKind::invalid_argument, "unknown config key: " + key);
  it->second = value;
}

const std::string& Config::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) fail(ErrorKind::invalid_argument, "unknown config key: " + key);
  return it->second;
}

static std::string trim(const std::string& s) {
  const std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

void Config::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open config file: " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      fail(ErrorKind::parse,
           path + ":" + std::to_string(lineno) + ": expected `key = value`");
    }
    set(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
  }
}

std::string Config::dump() const {
  std::string out;
  for (const auto& [k, v] : values_) {
    out += k;
    out += " = ";
    out += v;
    out += "\n";
  }
  return out;
}

double Config::get_double(const std::string& key) const {
  const std::string& s = get(key);
  char* end = nullptr;
  const double x = std::strtod(s.c_str(), &end);
  if (s.empty() || end == nullptr || *end != '\0') {
    fail(ErrorKind::invalid_argument, "config key " + key + ": '" + s + "' is not a number");
  }
  return x;
}

long long Config::get_int(const std::string& key) const {
  const std::string& s = get(key);
  char* end = nullptr;
  const long long x = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || end == nullptr || *end != '\0') {
    fail(ErrorKind::invalid_argument, "config key " + key + ": '" + s + "' is not an integer");
  }
  return x;
}

bool Config::get_bool(const std::string& key) const {
  const std::string& s = get(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  fail(ErrorKind::invalid_argument, "config key " + key + ": '" + s + "' is not a boolean");
}

Variant Config::variant() const {
  const std::string& s = get("variant");
  if (s == "fts-brnn") return Variant::fts_brnn;
  if (s == "fts-brnn-s") return Variant::fts_brnn_s;
  fail(ErrorKind::invalid_argument, "config key variant: '" + s +
                                        "' (expected fts-brnn or fts-brnn-s)");
}

OutputMode Config::output_mode() const {
  const std::string& s = get("output_mode");
  if (s == "affine") return OutputMode::affine;
  if (s == "concat") return OutputMode::concat;
  fail(ErrorKind::invalid_argument, "config key output_mode: '" + s +
                                        "' (expected affine or concat)");
}

LossKind Config::loss_kind() const {
  const std::string& s = get("loss");
  if (s == "full-time") return LossKind::full_time;
  if (s == "pooling") return LossKind::pooling;
  fail(ErrorKind::invalid_argument, "config key loss: '" + s +
                                        "' (expected full-time or pooling)");
}

EvalMethod Config::eval_method() const {
  const std::string& s = get("eval_method");
  if (s == "innerp") return EvalMethod::inner_product;
  if (s == "lr") return EvalMethod::lr;
  fail(ErrorKind::invalid_argument, "config key eval_method: '" + s +
                                        "' (expected innerp or lr)");
}

UnkPolicy Config::unk_policy() const {
  const std::string& s = get("unk_policy");
  if (s == "trainable") return UnkPolicy::trainable;
  if (s == "zero") return UnkPolicy::zero;
  fail(ErrorKind::invalid_argument, "config key unk_policy: '" + s +
                                        "' (expected trainable or zero)");
}

HyperParams Config::hyper() const {
  HyperParams hp;
  hp.learning_rate = get_double("lr");
  hp.momentum = get_double("momentum");
  hp.rms_decay = get_double("rms_decay");
  hp.epsilon = get_double("epsilon");
  hp.dropout_rate = get_double("dropout");
  const std::string& sem = get("dropout_semantics");
  if (sem != "drop" && sem != "keep") {
    fail(ErrorKind::invalid_argument, "config key dropout_semantics: '" + sem +
                                          "' (expected drop or keep)");
  }
  hp.dropout_is_keep_prob = sem == "keep";
  hp.epochs = static_cast<int>(get_int("epochs"));
  hp.batch_size = static_cast<int>(get_int("batch_size"));
  hp.seed = static_cast<std::uint64_t>(get_int("seed"));
  hp.margin = get_double("margin");
  hp.train_embeddings = get_bool("train_embeddings");
  hp.grad_clip = get_double("grad_clip");
  return hp;
}

LossConfig Config::loss_config() const {
  LossConfig cfg;
  cfg.margin = get_double("margin");
  const std::string& s = get("wrong_answer_policy");
  if (s == "all") {
    cfg.wrong_answer_policy = WrongAnswerPolicy::all;
  } else if (s == "sample-k") {
    cfg.wrong_answer_policy = WrongAnswerPolicy::sample_k;
  } else {
    fail(ErrorKind::invalid_argument, "config key wrong_answer_policy: '" + s +
                                          "' (expected all or sample-k)");
  }
  cfg.sample_k = static_cast<int>(get_int("sample_k"));
  return cfg;
}

LRConfig Config::lr_config() const {
  LRConfig cfg;
  cfg.l2 = get_double("lr_l2");
  cfg.iterations = static_cast<int>(get_int("lr_iterations"));
  cfg.step = get_double("lr_step");
  return cfg;
}

int Config::hidden_dim() const { return static_cast<int>(get_int("hidden_dim")); }
int Config::embed_dim_raw() const { return static_cast<int>(get_int("embed_dim")); }

int Config::resolved_embed_dim() const {
  const int e = embed_dim_raw();
  if (e > 0) return e;
  if (!embeddings_path().empty()) return 100;
  return hidden_dim();
}

int Config::seq_len() const { return static_cast<int>(get_int("seq_len")); }
int Config::min_answer_count() const { return static_cast<int>(get_int("min_answer_count")); }

std::string Config::checkpoint_dtype() const {
  const std::string& s = get("checkpoint_dtype");
  if (s != "f32" && s != "f64") {
    fail(ErrorKind::invalid_argument, "config key checkpoint_dtype: '" + s +
                                          "' (expected f32 or f64)");
  }
  return s;
}

void Config::validate() const {
  const Variant v = variant();
  const OutputMode mode = output_mode();
  if (v == Variant::fts_brnn && mode != OutputMode::affine) {
    fail(ErrorKind::invalid_argument,
         "config key output_mode: fts-brnn requires affine");
  }
  loss_kind();
  eval_method();
  unk_policy();
  checkpoint_dtype();
  const HyperParams hp = hyper();
  if (!(hp.learning_rate > 0)) fail(ErrorKind::invalid_argument, "config key lr: must be > 0");
  if (hp.momentum < 0 || hp.momentum >= 1) {
    fail(ErrorKind::invalid_argument, "config key momentum: must be in [0, 1)");
  }
  if (hp.rms_decay <= 0 || hp.rms_decay >= 1) {
    fail(ErrorKind::invalid_argument, "config key rms_decay: must be in (0, 1)");
  }
  if (!(hp.epsilon > 0)) fail(ErrorKind::invalid_argument, "config key epsilon: must be > 0");
  if (hp.dropout_rate < 0 || hp.dropout_rate >= 1) {
    fail(ErrorKind::invalid_argument, "config key dropout: must be in [0, 1)");
  }
  if (hp.epochs < 1) fail(ErrorKind::invalid_argument, "config key epochs: must be >= 1");
  if (hp.batch_size < 1) fail(ErrorKind::invalid_argument, "config key batch_size: must be >= 1");
  if (!(hp.margin > 0)) fail(ErrorKind::invalid_argument, "config key margin: must be > 0");
  if (hp.grad_clip < 0) fail(ErrorKind::invalid_argument, "config key grad_clip: must be >= 0");
  if (hidden_dim() < 1) fail(ErrorKind::invalid_argument, "config key hidden_dim: must be >= 1");
  if (embed_dim_raw() < 0) fail(ErrorKind::invalid_argument, "config key embed_dim: must be >= 0");
  if (min_answer_count() < 1) {
    fail(ErrorKind::invalid_argument, "config key min_answer_count: must be >= 1");
  }
  const LossConfig lc = loss_config();
  if (lc.wrong_answer_policy == WrongAnswerPolicy::sample_k && lc.sample_k < 1) {
    fail(ErrorKind::invalid_argument, "config key sample_k: must be >= 1");
  }
  if (v == Variant::fts_brnn_s && seq_len() < 1) {
    fail(ErrorKind::invalid_argument, "config key seq_len: fts-brnn-s needs seq_len >= 1");
  }
  const LRConfig lrc = lr_config();
  if (lrc.iterations < 1) {
    fail(ErrorKind::invalid_argument, "config key lr_iterations: must be >= 1");
  }
  if (!(lrc.step > 0)) fail(ErrorKind::invalid_argument, "config key lr_step: must be > 0");
  if (lrc.l2 < 0) fail(ErrorKind::invalid_argument, "config key lr_l2: must be >= 0");
}

} // namespace ftsqa
