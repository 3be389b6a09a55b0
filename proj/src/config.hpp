#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "infer.hpp"
#include "loss.hpp"
#include "model.hpp"
#include "optim.hpp"

namespace ftsqa {

// Flat `key = value` configuration. Every key has a default; setting an
// unknown key or an out-of-range value is an error naming the key.
class Config {
public:
  Config();

  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  void load_file(const std::string& path);
  // resolved `key = value` lines, sorted, defaults included
  std::string dump() const;
  const std::map<std::string, std::string>& values() const { return values_; }
  void validate() const;

  // typed accessors (validate on access)
  Variant variant() const;
  OutputMode output_mode() const;
  LossKind loss_kind() const;
  EvalMethod eval_method() const;
  UnkPolicy unk_policy() const;
  HyperParams hyper() const;
  LossConfig loss_config() const;
  LRConfig lr_config() const;
  int hidden_dim() const;
  // 0 falls back to 100 with an embedding file, hidden_dim without
  int embed_dim_raw() const;
  int resolved_embed_dim() const;
  int seq_len() const;
  int min_answer_count() const;
  std::string checkpoint_dtype() const;

  std::string dataset_path() const { return get("dataset"); }
  std::string valid_path() const { return get("valid"); }
  std::string lr_train_path() const { return get("lr_train"); }
  std::string embeddings_path() const { return get("embeddings"); }
  std::string checkpoint_path() const { return get("checkpoint"); }
  std::string out_dir() const { return get("out"); }

  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;

private:
  std::map<std::string, std::string> values_;
};

} // namespace ftsqa
