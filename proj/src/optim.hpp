#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "data.hpp"
#include "loss.hpp"
#include "model.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace ftsqa {

enum class LossKind { full_time, pooling };

struct HyperParams {
  double learning_rate = 0.002;
  double momentum = 0.8;
  double rms_decay = 0.9;
  double epsilon = 1e-6;
  double dropout_rate = 0.7;
  bool dropout_is_keep_prob = false; // rate names the keep probability instead
  int epochs = 100;
  int batch_size = 32;
  std::uint64_t seed = 42;
  double margin = 1.0;
  bool train_embeddings = false;
  double grad_clip = 0.0; // max global grad norm, 0 disables
};

// uniform in [-a, a] with a = sqrt(6/(InputSize+OutputSize)),
// InputSize = cols, OutputSize = rows
Tensor init_uniform(std::size_t rows, std::size_t cols, Rng& rng);
Tensor init_uniform_bound(std::size_t rows, std::size_t cols, double a, Rng& rng);

// Inverted dropout: zero with probability `rate`, survivors scaled by
// 1/(1-rate); identity at inference. The mask holds the multipliers.
std::pair<Tensor, Tensor> apply_dropout(const Tensor& x, double rate, Rng& rng,
                                        bool training);
Tensor make_dropout_mask(std::size_t n, double rate, Rng& rng);

// rms ← ρ·rms + (1−ρ)·g²;  v ← μ·v − lr·g/√(rms+ε);  param ← param + v
void rmsprop_momentum_step(Tensor& rms, Tensor& velocity, Tensor& param,
                           const Tensor& grad, const HyperParams& hp,
                           const std::string& param_name);

struct OptimizerState {
  struct Slot {
    std::string name;
    Tensor* param = nullptr;
    Tensor rms;
    Tensor velocity;
  };
  std::vector<Slot> slots;
  long step_count = 0;

  static OptimizerState for_model(ModelParams& m);
};

// Uniform init for every weight matrix and initial state; biases start at
// zero. Embedding rows come from the table where the token is present,
// uniform ±sqrt(3/e) otherwise. A zero-policy unk row stays zero.
void initialize_model(ModelParams& m, const Vocabulary& vocab,
                      const EmbeddingTable* pretrained, Rng& rng);

struct EpochStats {
  double mean_loss = 0.0;
  std::size_t examples = 0;
};

// One training example as the loss sees it.
struct CheckExample {
  std::vector<int> question_ids;
  int correct_id = 0;
  std::vector<int> correct_answer_ids;
  std::vector<std::pair<int, std::vector<int>>> wrong; // id -> token ids
};

double example_loss(const ModelParams& m, const CheckExample& ex, LossKind kind,
                    const LossConfig& cfg, std::size_t seq_len, int pad_id);

ModelGrads example_grads(const ModelParams& m, const CheckExample& ex, LossKind kind,
                         const LossConfig& cfg, std::size_t seq_len, int pad_id);

struct GradCheckReport {
  struct Entry {
    std::string name;
    double max_rel_err = 0.0;
  };
  std::vector<Entry> entries;
  bool pass = false;
  std::string worst_name;
  double worst_err = 0.0;
};

// relative error |a−n| / max(1e−8, |a|+|n|), max over elements per tensor
GradCheckReport compare_against_numeric(ModelParams& m, const CheckExample& ex,
                                        const ModelGrads& analytic, LossKind kind,
                                        const LossConfig& cfg, std::size_t seq_len,
                                        int pad_id, double tolerance, double step);

GradCheckReport gradient_check(ModelParams& m, const CheckExample& ex, LossKind kind,
                               const LossConfig& cfg, std::size_t seq_len, int pad_id,
                               double tolerance, double step = 1e-5);

struct CheckInstance {
  ModelParams model;
  CheckExample example;
  std::size_t seq_len = 0;
  int pad_id = 1;
};

// Random desk-scale instance (d ≤ 4, T ≤ 6, 3 answers, weights in
// ±0.5). Instances whose hinge arguments land near the kink are
// resampled so central differences stay valid.
CheckInstance make_check_instance(Variant variant, OutputMode mode, LossKind kind,
                                  const LossConfig& cfg, std::uint64_t seed);

class Trainer {
public:
  Trainer(ModelParams model, Vocabulary vocab, LossKind loss_kind, LossConfig loss_cfg,
          HyperParams hp, std::size_t seq_len);

  // optimizer slots point into model_
  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  // Shuffles question order, then per batch: fresh dropout masks, forward
  // and backward in fixed index order, answers encoded once per batch,
  // one optimizer step. Returns the mean per-question loss.
  EpochStats train_epoch(const Dataset& train);

  ModelParams& model() { return model_; }
  const ModelParams& model() const { return model_; }
  const Vocabulary& vocab() const { return vocab_; }
  std::size_t seq_len() const { return seq_len_; }
  LossKind loss_kind() const { return loss_kind_; }
  const LossConfig& loss_config() const { return loss_cfg_; }
  const HyperParams& hyper() const { return hp_; }

private:
  ModelParams model_;
  Vocabulary vocab_;
  LossKind loss_kind_;
  LossConfig loss_cfg_;
  HyperParams hp_;
  std::size_t seq_len_;
  Rng rng_;
  OptimizerState state_;
};

} // namespace ftsqa
