#pragma once

#include <optional>
#include <string>

#include "checkpoint.hpp"
#include "config.hpp"
#include "data.hpp"
#include "infer.hpp"
#include "model.hpp"

namespace ftsqa {

struct TrainedModel {
  ModelParams params;
  Vocabulary vocab;
  AnswerSet answers;
  std::map<std::string, std::string> config; // resolved snapshot
  BestMeta best;

  std::size_t seq_len() const;
  std::string checkpoint_dtype() const;
};

// answers mapped onto `reference` by phrase; unseen answers get id -1
// (never predictable, counted wrong)
Dataset align_answers(const Dataset& d, const AnswerSet& reference);

// Full training run: builds the vocabulary from `train`, initializes the
// model (GloVe-backed embeddings when configured), trains cfg.epochs
// epochs and writes metrics.jsonl, config.resolved, best.ckpt and
// final.ckpt under out_dir. Returns the best-on-validation model.
TrainedModel run_train(const Config& cfg, const Dataset& train,
                       const Dataset* validation, const std::string& out_dir);

double model_evaluate(const TrainedModel& tm, const Dataset& data, EvalMethod method,
                      const Dataset* lr_train);

void model_predict(const TrainedModel& tm, const Dataset& data, EvalMethod method,
                   const Dataset* lr_train, const std::string& out_path);

Checkpoint to_checkpoint(const TrainedModel& tm);
TrainedModel from_checkpoint(const Checkpoint& ckpt);

// gradient check over `instances` random instances of the configured
// variant/output-mode/loss; report has one line per parameter tensor
std::string run_gradcheck(const Config& cfg, double tolerance, int instances, bool& pass);

} // namespace ftsqa
