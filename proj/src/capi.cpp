#include "ftsqa/ftsqa.h"

#include <cstring>
#include <string>

#include "checkpoint.hpp"
#include "config.hpp"
#include "data.hpp"
#include "error.hpp"
#include "runner.hpp"

struct ftsqa_config {
  ftsqa::Config cfg;
};

struct ftsqa_dataset {
  ftsqa::Dataset ds;
};

struct ftsqa_model {
  ftsqa::TrainedModel tm;
};

namespace {

thread_local std::string g_last_error = "no error";

ftsqa_status status_of(const ftsqa::Error& e) {
  using ftsqa::ErrorKind;
  switch (e.kind) {
    case ErrorKind::invalid_argument: return FTSQA_ERR_INVALID_ARGUMENT;
    case ErrorKind::io: return FTSQA_ERR_IO;
    case ErrorKind::parse: return FTSQA_ERR_PARSE;
    case ErrorKind::shape: return FTSQA_ERR_SHAPE;
    case ErrorKind::numeric: return FTSQA_ERR_NUMERIC;
    case ErrorKind::state: return FTSQA_ERR_STATE;
  }
  return FTSQA_ERR_STATE;
}

template <class Fn>
ftsqa_status wrap(Fn&& fn) {
  try {
    fn();
    return FTSQA_OK;
  } catch (const ftsqa::Error& e) {
    g_last_error = e.what();
    return status_of(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return FTSQA_ERR_STATE;
  }
}

ftsqa_status require(bool ok, const char* what) {
  if (ok) return FTSQA_OK;
  g_last_error = std::string("null argument: ") + what;
  return FTSQA_ERR_INVALID_ARGUMENT;
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

ftsqa::EvalMethod parse_method(const char* method) {
  const std::string m = method ? method : "";
  if (m == "innerp") return ftsqa::EvalMethod::inner_product;
  if (m == "lr") return ftsqa::EvalMethod::lr;
  ftsqa::fail(ftsqa::ErrorKind::invalid_argument,
              "eval method must be innerp or lr, got '" + m + "'");
}

} // namespace

extern "C" {

const char* ftsqa_last_error(void) { return g_last_error.c_str(); }

void ftsqa_string_free(char* s) { delete[] s; }

ftsqa_config* ftsqa_config_new(void) { return new ftsqa_config(); }

void ftsqa_config_free(ftsqa_config* cfg) { delete cfg; }

ftsqa_status ftsqa_config_set(ftsqa_config* cfg, const char* key, const char* value) {
  if (auto s = require(cfg && key && value, "config/key/value")) return s;
  return wrap([&] { cfg->cfg.set(key, value); });
}

ftsqa_status ftsqa_config_load_file(ftsqa_config* cfg, const char* path) {
  if (auto s = require(cfg && path, "config/path")) return s;
  return wrap([&] { cfg->cfg.load_file(path); });
}

ftsqa_status ftsqa_config_dump(const ftsqa_config* cfg, char** out) {
  if (auto s = require(cfg && out, "config/out")) return s;
  return wrap([&] { *out = dup_string(cfg->cfg.dump()); });
}

ftsqa_status ftsqa_dataset_load(const char* path, ftsqa_dataset** out) {
  if (auto s = require(path && out, "path/out")) return s;
  return wrap([&] { *out = new ftsqa_dataset{ftsqa::load_dataset(path)}; });
}

ftsqa_status ftsqa_dataset_save(const ftsqa_dataset* ds, const char* path) {
  if (auto s = require(ds && path, "dataset/path")) return s;
  return wrap([&] { ftsqa::save_dataset(ds->ds, path); });
}

ftsqa_status ftsqa_dataset_synth(int32_t n_answers, int32_t q_per_answer,
                                 int32_t signature_len, int32_t noise_len,
                                 uint64_t seed, ftsqa_dataset** out) {
  if (auto s = require(out != nullptr, "out")) return s;
  return wrap([&] {
    *out = new ftsqa_dataset{
        ftsqa::generate_synthetic(n_answers, q_per_answer, signature_len, noise_len, seed)};
  });
}

ftsqa_status ftsqa_dataset_filter_min_count(const ftsqa_dataset* ds, int32_t min_count,
                                            ftsqa_dataset** out) {
  if (auto s = require(ds && out, "dataset/out")) return s;
  return wrap([&] {
    *out = new ftsqa_dataset{ftsqa::filter_min_answer_count(ds->ds, min_count)};
  });
}

ftsqa_status ftsqa_dataset_split(const ftsqa_dataset* ds, uint64_t seed,
                                 ftsqa_dataset** train, ftsqa_dataset** validation,
                                 ftsqa_dataset** test) {
  if (auto s = require(ds && train && validation && test, "dataset/outs")) return s;
  return wrap([&] {
    ftsqa::SplitResult split = ftsqa::split_dataset(ds->ds, seed);
    *train = new ftsqa_dataset{std::move(split.train)};
    *validation = new ftsqa_dataset{std::move(split.validation)};
    *test = new ftsqa_dataset{std::move(split.test)};
  });
}

int32_t ftsqa_dataset_num_questions(const ftsqa_dataset* ds) {
  return ds ? static_cast<int32_t>(ds->ds.questions.size()) : -1;
}

int32_t ftsqa_dataset_num_answers(const ftsqa_dataset* ds) {
  return ds ? static_cast<int32_t>(ds->ds.answer_set.answers.size()) : -1;
}

void ftsqa_dataset_free(ftsqa_dataset* ds) { delete ds; }

ftsqa_status ftsqa_train(const ftsqa_config* cfg, const ftsqa_dataset* train,
                         const ftsqa_dataset* validation, const char* out_dir,
                         ftsqa_model** out) {
  if (auto s = require(cfg && train && out_dir && out, "config/train/out_dir/out")) return s;
  return wrap([&] {
    *out = new ftsqa_model{ftsqa::run_train(cfg->cfg, train->ds,
                                            validation ? &validation->ds : nullptr, out_dir)};
  });
}

ftsqa_status ftsqa_model_load(const char* path, ftsqa_model** out) {
  if (auto s = require(path && out, "path/out")) return s;
  return wrap([&] {
    *out = new ftsqa_model{ftsqa::from_checkpoint(ftsqa::load_checkpoint(path))};
  });
}

ftsqa_status ftsqa_model_save(const ftsqa_model* m, const char* path) {
  if (auto s = require(m && path, "model/path")) return s;
  return wrap([&] { ftsqa::save_checkpoint(path, ftsqa::to_checkpoint(m->tm)); });
}

void ftsqa_model_free(ftsqa_model* m) { delete m; }

ftsqa_status ftsqa_evaluate(const ftsqa_model* m, const ftsqa_dataset* data,
                            const char* method, const ftsqa_dataset* lr_train,
                            double* accuracy) {
  if (auto s = require(m && data && method && accuracy, "model/data/method/accuracy")) return s;
  return wrap([&] {
    *accuracy = ftsqa::model_evaluate(m->tm, data->ds, parse_method(method),
                                      lr_train ? &lr_train->ds : nullptr);
  });
}

ftsqa_status ftsqa_predict(const ftsqa_model* m, const ftsqa_dataset* data,
                           const char* method, const ftsqa_dataset* lr_train,
                           const char* out_path) {
  if (auto s = require(m && data && method && out_path, "model/data/method/out_path")) return s;
  return wrap([&] {
    ftsqa::model_predict(m->tm, data->ds, parse_method(method),
                         lr_train ? &lr_train->ds : nullptr, out_path);
  });
}

ftsqa_status ftsqa_gradcheck(const ftsqa_config* cfg, double tolerance,
                             int32_t instances, char** report, int32_t* pass) {
  if (auto s = require(cfg && report && pass, "config/report/pass")) return s;
  return wrap([&] {
    bool ok = false;
    const std::string text = ftsqa::run_gradcheck(cfg->cfg, tolerance, instances, ok);
    *report = dup_string(text);
    *pass = ok ? 1 : 0;
  });
}

} // extern "C"
