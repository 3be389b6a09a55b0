// Command-line front end. Talks to the toolkit exclusively through the C
// API in ftsqa/ftsqa.h.
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ftsqa/ftsqa.h"

namespace {

struct ConfigDeleter {
  void operator()(ftsqa_config* c) const { ftsqa_config_free(c); }
};
struct DatasetDeleter {
  void operator()(ftsqa_dataset* d) const { ftsqa_dataset_free(d); }
};
struct ModelDeleter {
  void operator()(ftsqa_model* m) const { ftsqa_model_free(m); }
};

using ConfigPtr = std::unique_ptr<ftsqa_config, ConfigDeleter>;
using DatasetPtr = std::unique_ptr<ftsqa_dataset, DatasetDeleter>;
using ModelPtr = std::unique_ptr<ftsqa_model, ModelDeleter>;

[[noreturn]] void die(const std::string& where) {
  std::fprintf(stderr, "error: %s: %s\n", where.c_str(), ftsqa_last_error());
  std::exit(1);
}

void check(ftsqa_status s, const std::string& where) {
  if (s != FTSQA_OK) die(where);
}

DatasetPtr load_dataset(const std::string& path) {
  ftsqa_dataset* ds = nullptr;
  check(ftsqa_dataset_load(path.c_str(), &ds), "loading " + path);
  return DatasetPtr(ds);
}

// Options shared by the subcommands; only flags the user actually passed
// override the config file, which overrides the built-in defaults.
struct CommonOpts {
  std::string config_file;
  std::vector<std::pair<CLI::Option*, std::pair<std::string, std::string*>>> bound;

  CLI::Option* bind(CLI::App* app, const std::string& flag, const std::string& key,
                    std::string* storage, const std::string& help) {
    CLI::Option* opt = app->add_option(flag, *storage, help);
    bound.push_back({opt, {key, storage}});
    return opt;
  }

  ConfigPtr resolve() const {
    ConfigPtr cfg(ftsqa_config_new());
    if (!config_file.empty()) {
      check(ftsqa_config_load_file(cfg.get(), config_file.c_str()),
            "reading config " + config_file);
    }
    for (const auto& [opt, kv] : bound) {
      if (opt->count() > 0) {
        check(ftsqa_config_set(cfg.get(), kv.first.c_str(), kv.second->c_str()),
              "setting " + kv.first);
      }
    }
    return cfg;
  }
};

struct FlagStore {
  std::string dataset, valid, lr_train, embeddings, checkpoint, out;
  std::string variant, loss, output_mode, eval_method;
  std::string lr, momentum, dropout, epochs, batch_size, seed, seq_len;
  std::string min_answer_count, hidden_dim, embed_dim, train_embeddings, margin, dtype;
};

void add_model_flags(CLI::App* app, CommonOpts& opts, FlagStore& f) {
  opts.bind(app, "--variant", "variant", &f.variant, "fts-brnn or fts-brnn-s");
  opts.bind(app, "--loss", "loss", &f.loss, "full-time or pooling");
  opts.bind(app, "--output-mode", "output_mode", &f.output_mode, "affine or concat");
  opts.bind(app, "--lr", "lr", &f.lr, "learning rate");
  opts.bind(app, "--momentum", "momentum", &f.momentum, "momentum coefficient");
  opts.bind(app, "--dropout", "dropout", &f.dropout, "question-input dropout rate");
  opts.bind(app, "--epochs", "epochs", &f.epochs, "training epochs");
  opts.bind(app, "--batch-size", "batch_size", &f.batch_size, "questions per batch");
  opts.bind(app, "--seed", "seed", &f.seed, "RNG seed");
  opts.bind(app, "--seq-len", "seq_len", &f.seq_len, "padded length for fts-brnn-s");
  opts.bind(app, "--hidden-dim", "hidden_dim", &f.hidden_dim, "GRU state size");
  opts.bind(app, "--embed-dim", "embed_dim", &f.embed_dim, "embedding size (0 = auto)");
  opts.bind(app, "--train-embeddings", "train_embeddings", &f.train_embeddings,
            "update embedding rows (true/false)");
  opts.bind(app, "--margin", "margin", &f.margin, "hinge margin");
  opts.bind(app, "--embeddings", "embeddings", &f.embeddings, "pretrained embedding file");
  opts.bind(app, "--dtype", "checkpoint_dtype", &f.dtype, "checkpoint precision (f32/f64)");
}

std::string config_string(const ftsqa_config* cfg, const std::string& key) {
  // dump() is `key = value` per line, sorted
  char* text = nullptr;
  check(ftsqa_config_dump(cfg, &text), "resolving config");
  std::string all(text);
  ftsqa_string_free(text);
  const std::string needle = key + " = ";
  std::size_t pos = all.rfind(needle, 0) == 0 ? 0 : all.find("\n" + needle);
  if (pos == std::string::npos) return "";
  if (pos != 0) pos += 1;
  pos += needle.size();
  return all.substr(pos, all.find('\n', pos) - pos);
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"full-time supervised bidirectional GRU question answering"};
  app.require_subcommand(1);

  CommonOpts opts;
  FlagStore f;
  app.add_option("--config", opts.config_file, "key = value config file")
      ->expected(1);

  auto* train = app.add_subcommand("train", "train a model, writing metrics and checkpoints");
  opts.bind(train, "--dataset", "dataset", &f.dataset, "training split (JSON Lines)")->required();
  opts.bind(train, "--valid", "valid", &f.valid, "validation split for checkpoint selection");
  opts.bind(train, "--out", "out", &f.out, "output directory");
  add_model_flags(train, opts, f);

  auto* eval = app.add_subcommand("eval", "report accuracy of a checkpoint on a dataset");
  opts.bind(eval, "--checkpoint", "checkpoint", &f.checkpoint, "model checkpoint")->required();
  opts.bind(eval, "--dataset", "dataset", &f.dataset, "dataset to score")->required();
  opts.bind(eval, "--eval-method", "eval_method", &f.eval_method, "innerp or lr");
  opts.bind(eval, "--lr-train", "lr_train", &f.lr_train,
            "training split for fitting the LR head (lr method)");

  auto* predict = app.add_subcommand("predict", "write per-question ranked answers as TSV");
  opts.bind(predict, "--checkpoint", "checkpoint", &f.checkpoint, "model checkpoint")->required();
  opts.bind(predict, "--dataset", "dataset", &f.dataset, "dataset to predict")->required();
  opts.bind(predict, "--out", "out", &f.out, "output TSV path")->required();
  opts.bind(predict, "--eval-method", "eval_method", &f.eval_method, "innerp or lr");
  opts.bind(predict, "--lr-train", "lr_train", &f.lr_train,
            "training split for fitting the LR head (lr method)");

  auto* gradcheck = app.add_subcommand("gradcheck",
                                       "verify the backward pass against central differences");
  double tolerance = 1e-5;
  int instances = 10;
  gradcheck->add_option("--tolerance", tolerance, "max relative error");
  gradcheck->add_option("--instances", instances, "random instances to check");
  add_model_flags(gradcheck, opts, f);

  auto* split = app.add_subcommand("split", "stratified 60/20/20 split into three files");
  opts.bind(split, "--dataset", "dataset", &f.dataset, "dataset to split")->required();
  opts.bind(split, "--out", "out", &f.out, "directory for the three output files");
  opts.bind(split, "--seed", "seed", &f.seed, "shuffle seed");
  opts.bind(split, "--min-answer-count", "min_answer_count", &f.min_answer_count,
            "drop answers with fewer questions than this");

  auto* synth = app.add_subcommand("synth", "generate a synthetic benchmark dataset");
  int n_answers = 20, q_per_answer = 15, signature_len = 3, noise_len = 12;
  std::string synth_out;
  synth->add_option("--answers", n_answers, "answer classes");
  synth->add_option("--per-answer", q_per_answer, "questions per class");
  synth->add_option("--signature", signature_len, "signature tokens per class");
  synth->add_option("--noise", noise_len, "noise tokens per question");
  synth->add_option("--out", synth_out, "output JSON Lines path")->required();
  opts.bind(synth, "--seed", "seed", &f.seed, "generator seed");

  CLI11_PARSE(app, argc, argv);
  ConfigPtr cfg = opts.resolve();

  if (train->parsed()) {
    DatasetPtr train_ds = load_dataset(f.dataset);
    DatasetPtr valid_ds;
    if (!f.valid.empty()) valid_ds = load_dataset(f.valid);
    const std::string out_dir = config_string(cfg.get(), "out").empty()
                                    ? "run"
                                    : config_string(cfg.get(), "out");
    char* resolved = nullptr;
    check(ftsqa_config_dump(cfg.get(), &resolved), "resolving config");
    std::printf("%s", resolved);
    ftsqa_string_free(resolved);
    ftsqa_model* model = nullptr;
    check(ftsqa_train(cfg.get(), train_ds.get(), valid_ds.get(), out_dir.c_str(), &model),
          "training");
    ModelPtr owned(model);
    std::printf("training done; artifacts in %s\n", out_dir.c_str());
    return 0;
  }

  if (eval->parsed() || predict->parsed()) {
    ftsqa_model* model = nullptr;
    check(ftsqa_model_load(config_string(cfg.get(), "checkpoint").c_str(), &model),
          "loading checkpoint");
    ModelPtr owned(model);
    DatasetPtr data = load_dataset(f.dataset);
    const std::string method = config_string(cfg.get(), "eval_method");
    DatasetPtr lr_train;
    const std::string lr_train_path = config_string(cfg.get(), "lr_train");
    if (!lr_train_path.empty()) lr_train = load_dataset(lr_train_path);
    if (eval->parsed()) {
      double acc = 0.0;
      check(ftsqa_evaluate(owned.get(), data.get(), method.c_str(), lr_train.get(), &acc),
            "evaluating");
      std::printf("accuracy (%s): %.4f\n", method.c_str(), acc);
    } else {
      const std::string out_path = config_string(cfg.get(), "out");
      check(ftsqa_predict(owned.get(), data.get(), method.c_str(), lr_train.get(),
                          out_path.c_str()),
            "predicting");
      std::printf("predictions written to %s\n", out_path.c_str());
    }
    return 0;
  }

  if (gradcheck->parsed()) {
    char* report = nullptr;
    int32_t pass = 0;
    check(ftsqa_gradcheck(cfg.get(), tolerance, instances, &report, &pass), "gradcheck");
    std::printf("%s", report);
    ftsqa_string_free(report);
    return pass ? 0 : 1;
  }

  if (split->parsed()) {
    DatasetPtr raw = load_dataset(f.dataset);
    const int min_count = std::stoi(config_string(cfg.get(), "min_answer_count"));
    DatasetPtr filtered;
    {
      ftsqa_dataset* out = nullptr;
      check(ftsqa_dataset_filter_min_count(raw.get(), min_count, &out), "filtering");
      filtered.reset(out);
    }
    const uint64_t seed = std::stoull(config_string(cfg.get(), "seed"));
    ftsqa_dataset *tr = nullptr, *va = nullptr, *te = nullptr;
    check(ftsqa_dataset_split(filtered.get(), seed, &tr, &va, &te), "splitting");
    DatasetPtr train_ds(tr), valid_ds(va), test_ds(te);
    std::string base = f.dataset;
    const std::string out_dir = config_string(cfg.get(), "out");
    if (!out_dir.empty()) {
      const std::size_t slash = base.find_last_of('/');
      base = out_dir + "/" + (slash == std::string::npos ? base : base.substr(slash + 1));
    }
    check(ftsqa_dataset_save(train_ds.get(), (base + ".train").c_str()), "saving train split");
    check(ftsqa_dataset_save(valid_ds.get(), (base + ".valid").c_str()), "saving valid split");
    check(ftsqa_dataset_save(test_ds.get(), (base + ".test").c_str()), "saving test split");
    std::printf("split %d questions / %d answers into %d train, %d valid, %d test\n",
                ftsqa_dataset_num_questions(filtered.get()),
                ftsqa_dataset_num_answers(filtered.get()),
                ftsqa_dataset_num_questions(train_ds.get()),
                ftsqa_dataset_num_questions(valid_ds.get()),
                ftsqa_dataset_num_questions(test_ds.get()));
    return 0;
  }

  if (synth->parsed()) {
    const uint64_t seed = std::stoull(config_string(cfg.get(), "seed"));
    ftsqa_dataset* ds = nullptr;
    check(ftsqa_dataset_synth(n_answers, q_per_answer, signature_len, noise_len, seed, &ds),
          "generating");
    DatasetPtr owned(ds);
    check(ftsqa_dataset_save(owned.get(), synth_out.c_str()), "saving");
    std::printf("wrote %d questions over %d answers to %s\n",
                ftsqa_dataset_num_questions(owned.get()),
                ftsqa_dataset_num_answers(owned.get()), synth_out.c_str());
    return 0;
  }

  return 0;
}
