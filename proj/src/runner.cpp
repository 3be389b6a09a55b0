#include "runner.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "error.hpp"
#include "optim.hpp"

namespace ftsqa {

using nlohmann::json;

std::size_t TrainedModel::seq_len() const {
  auto it = config.find("seq_len");
  if (it == config.end()) return 0;
  return static_cast<std::size_t>(std::strtoull(it->second.c_str(), nullptr, 10));
}

std::string TrainedModel::checkpoint_dtype() const {
  auto it = config.find("checkpoint_dtype");
  return it == config.end() ? "f32" : it->second;
}

Dataset align_answers(const Dataset& d, const AnswerSet& reference) {
  Dataset out;
  out.split_tag = d.split_tag;
  out.answer_set = reference;
  std::size_t unseen = 0;
  for (const Question& q : d.questions) {
    Question aligned = q;
    aligned.answer_id = reference.find_phrase(d.answer_set.answers.at(q.answer_id).phrase);
    if (aligned.answer_id < 0) ++unseen;
    out.questions.push_back(std::move(aligned));
  }
  if (unseen > 0) {
    std::cerr << "warning: " << unseen
              << " question(s) have answers outside the model's answer set\n";
  }
  return out;
}

static void write_file_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) fail(ErrorKind::io, "cannot write " + tmp);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) fail(ErrorKind::io, "write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    fail(ErrorKind::io, "cannot rename " + tmp + " to " + path);
  }
}

static Checkpoint snapshot(const ModelParams& params, const Vocabulary& vocab,
                           const AnswerSet& answers,
                           const std::map<std::string, std::string>& cfg_map,
                           const BestMeta& best, const std::string& dtype) {
  Checkpoint ckpt;
  ckpt.dtype = dtype;
  ckpt.config = cfg_map;
  ckpt.vocab = vocab;
  ckpt.answers = answers;
  ckpt.best = best;
  const_cast<ModelParams&>(params).for_each_tensor(
      [&](const std::string& name, Tensor& t) { ckpt.tensors.emplace_back(name, t); });
  return ckpt;
}

TrainedModel run_train(const Config& cfg, const Dataset& train,
                       const Dataset* validation, const std::string& out_dir) {
  cfg.validate();
  if (train.questions.empty()) fail(ErrorKind::invalid_argument, "training set is empty");
  std::filesystem::create_directories(out_dir);

  Vocabulary vocab = build_vocabulary(train, cfg.unk_policy());
  Dataset train_enc = train;
  encode(train_enc, vocab);
  Dataset valid_enc = validation ? align_answers(*validation, train.answer_set) : train_enc;
  if (validation) encode(valid_enc, vocab);

  std::optional<EmbeddingTable> pretrained;
  const int embed_dim = cfg.resolved_embed_dim();
  if (!cfg.embeddings_path().empty()) {
    pretrained = load_embeddings(cfg.embeddings_path(), static_cast<std::size_t>(embed_dim));
  }

  const HyperParams hp = cfg.hyper();
  ModelParams model = ModelParams::zeros(cfg.variant(), cfg.output_mode(),
                                         static_cast<std::size_t>(cfg.hidden_dim()),
                                         static_cast<std::size_t>(embed_dim),
                                         static_cast<std::size_t>(vocab.size()));
  model.train_embeddings = hp.train_embeddings;
  Rng init_rng(hp.seed);
  initialize_model(model, vocab, pretrained ? &*pretrained : nullptr, init_rng);

  Trainer trainer(std::move(model), vocab, cfg.loss_kind(), cfg.loss_config(), hp,
                  static_cast<std::size_t>(cfg.seq_len()));

  write_file_atomic(out_dir + "/config.resolved", cfg.dump());

  const std::string dtype = cfg.checkpoint_dtype();
  BestMeta best;
  ModelParams best_params = trainer.model();
  std::string metrics;
  for (int epoch = 1; epoch <= hp.epochs; ++epoch) {
    const EpochStats stats = trainer.train_epoch(train_enc);
    const double val_acc =
        evaluate(trainer.model(), valid_enc, EvalMethod::inner_product, nullptr,
                 trainer.seq_len(), vocab.pad_id);
    json line;
    line["epoch"] = epoch;
    line["mean_loss"] = stats.mean_loss;
    line["val_acc_innerp"] = val_acc;
    metrics += line.dump();
    metrics += "\n";
    write_file_atomic(out_dir + "/metrics.jsonl", metrics);
    if (best.epoch < 0 || val_acc > best.val_acc) {
      best.epoch = epoch;
      best.val_acc = val_acc;
      best_params = trainer.model();
      save_checkpoint(out_dir + "/best.ckpt",
                      snapshot(best_params, vocab, train.answer_set, cfg.values(), best, dtype));
    }
  }
  save_checkpoint(out_dir + "/final.ckpt",
                  snapshot(trainer.model(), vocab, train.answer_set, cfg.values(), best, dtype));

  TrainedModel tm;
  tm.params = std::move(best_params);
  tm.vocab = vocab;
  tm.answers = train_enc.answer_set;
  tm.config = cfg.values();
  tm.best = best;
  return tm;
}

static LRModel fit_lr_head(const TrainedModel& tm, const Dataset& lr_train_raw) {
  Dataset train = align_answers(lr_train_raw, tm.answers);
  encode(train, tm.vocab);
  std::vector<std::pair<Tensor, int>> reps;
  for (const Question& q : train.questions) {
    if (q.answer_id < 0) continue; // unknown class, cannot be a training target
    reps.emplace_back(question_representation(tm.params, q, tm.seq_len(), tm.vocab.pad_id),
                      q.answer_id);
  }
  if (reps.empty()) fail(ErrorKind::invalid_argument, "lr training split has no usable questions");
  Config cfg;
  for (const auto& [k, v] : tm.config) cfg.set(k, v);
  return train_lr(reps, static_cast<int>(tm.answers.answers.size()), cfg.lr_config());
}

double model_evaluate(const TrainedModel& tm, const Dataset& data, EvalMethod method,
                      const Dataset* lr_train) {
  Dataset aligned = align_answers(data, tm.answers);
  encode(aligned, tm.vocab);
  std::optional<LRModel> lr;
  if (method == EvalMethod::lr) {
    if (!lr_train) fail(ErrorKind::invalid_argument, "lr evaluation needs an lr training split");
    lr = fit_lr_head(tm, *lr_train);
  }
  return evaluate(tm.params, aligned, method, lr ? &*lr : nullptr, tm.seq_len(),
                  tm.vocab.pad_id);
}

void model_predict(const TrainedModel& tm, const Dataset& data, EvalMethod method,
                   const Dataset* lr_train, const std::string& out_path) {
  Dataset aligned = align_answers(data, tm.answers);
  encode(aligned, tm.vocab);
  std::optional<LRModel> lr;
  if (method == EvalMethod::lr) {
    if (!lr_train) fail(ErrorKind::invalid_argument, "lr prediction needs an lr training split");
    lr = fit_lr_head(tm, *lr_train);
  }
  std::vector<std::pair<int, Tensor>> reps;
  if (method == EvalMethod::inner_product) {
    reps = answer_representations(tm.params, aligned.answer_set, tm.seq_len(), tm.vocab.pad_id);
  }

  std::string out;
  for (std::size_t i = 0; i < aligned.questions.size(); ++i) {
    const Question& q = aligned.questions[i];
    const Tensor pooled = question_representation(tm.params, q, tm.seq_len(), tm.vocab.pad_id);
    const std::vector<int> top = method == EvalMethod::inner_product
                                     ? top_k_inner_product(pooled, reps, 5)
                                     : top_k_lr(*lr, pooled, 5);
    const std::string truth =
        q.answer_id >= 0 ? tm.answers.answers.at(q.answer_id).phrase : "<unknown>";
    out += std::to_string(i);
    out += '\t';
    out += truth;
    out += '\t';
    out += top.empty() ? "<none>" : tm.answers.answers.at(top[0]).phrase;
    out += '\t';
    for (std::size_t k = 0; k < top.size(); ++k) {
      if (k) out += ',';
      out += std::to_string(top[k]);
    }
    out += '\n';
  }
  write_file_atomic(out_path, out);
}

Checkpoint to_checkpoint(const TrainedModel& tm) {
  return snapshot(tm.params, tm.vocab, tm.answers, tm.config, tm.best,
                  tm.checkpoint_dtype());
}

TrainedModel from_checkpoint(const Checkpoint& ckpt) {
  Config cfg;
  for (const auto& [k, v] : ckpt.config) cfg.set(k, v);
  TrainedModel tm;
  tm.vocab = ckpt.vocab;
  tm.answers = ckpt.answers;
  encode_answers(tm.answers, tm.vocab);
  tm.config = ckpt.config;
  tm.best = ckpt.best;

  const int embed_dim = cfg.resolved_embed_dim();
  tm.params = ModelParams::zeros(cfg.variant(), cfg.output_mode(),
                                 static_cast<std::size_t>(cfg.hidden_dim()),
                                 static_cast<std::size_t>(embed_dim),
                                 static_cast<std::size_t>(ckpt.vocab.id_to_token.size()));
  tm.params.train_embeddings = cfg.hyper().train_embeddings;

  std::map<std::string, const Tensor*> by_name;
  for (const auto& [name, t] : ckpt.tensors) by_name.emplace(name, &t);
  tm.params.for_each_tensor([&](const std::string& name, Tensor& t) {
    auto it = by_name.find(name);
    if (it == by_name.end()) fail(ErrorKind::parse, "checkpoint is missing tensor " + name);
    if (!t.same_shape(*it->second)) {
      fail(ErrorKind::parse, "checkpoint tensor " + name + " is " + it->second->shape_str() +
                                 ", expected " + t.shape_str());
    }
    t = *it->second;
  });
  return tm;
}

std::string run_gradcheck(const Config& cfg, double tolerance, int instances, bool& pass) {
  cfg.validate();
  if (instances < 1) fail(ErrorKind::invalid_argument, "gradcheck needs >= 1 instance");
  const Variant variant = cfg.variant();
  const OutputMode mode = cfg.output_mode();
  const LossKind kind = cfg.loss_kind();
  const LossConfig loss_cfg = cfg.loss_config();
  const std::uint64_t seed = cfg.hyper().seed;

  std::map<std::string, double> worst_by_tensor;
  pass = true;
  for (int i = 0; i < instances; ++i) {
    CheckInstance inst = make_check_instance(variant, mode, kind, loss_cfg, seed + i);
    const GradCheckReport report = gradient_check(inst.model, inst.example, kind, loss_cfg,
                                                  inst.seq_len, inst.pad_id, tolerance);
    if (!report.pass) pass = false;
    for (const auto& entry : report.entries) {
      auto [it, fresh] = worst_by_tensor.try_emplace(entry.name, entry.max_rel_err);
      if (!fresh) it->second = std::max(it->second, entry.max_rel_err);
    }
  }

  std::ostringstream out;
  out << "gradcheck: " << cfg.get("variant") << " " << cfg.get("output_mode") << " "
      << cfg.get("loss") << ", " << instances << " instance(s), tolerance " << tolerance
      << "\n";
  for (const auto& [name, err] : worst_by_tensor) {
    out << "  " << name << "  max_rel_err " << err << (err < tolerance ? "" : "  FAIL") << "\n";
  }
  out << (pass ? "PASS" : "FAIL") << "\n";
  return out.str();
}

} // namespace ftsqa
