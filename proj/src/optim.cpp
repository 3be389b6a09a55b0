#include "optim.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "error.hpp"
#include "infer.hpp"

namespace ftsqa {

Tensor init_uniform_bound(std::size_t rows, std::size_t cols, double a, Rng& rng) {
  Tensor t = cols > 1 ? Tensor::mat(rows, cols) : Tensor::vec(rows);
  for (double& x : t.v) x = rng.uniform(-a, a);
  return t;
}

Tensor init_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
  if (rows < 1 || cols < 1) fail(ErrorKind::invalid_argument, "init_uniform: empty shape");
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  return init_uniform_bound(rows, cols, a, rng);
}

Tensor make_dropout_mask(std::size_t n, double rate, Rng& rng) {
  Tensor mask = Tensor::vec(n);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double& m : mask.v) m = rng.uniform01() < rate ? 0.0 : keep_scale;
  return mask;
}

std::pair<Tensor, Tensor> apply_dropout(const Tensor& x, double rate, Rng& rng,
                                        bool training) {
  if (rate < 0.0 || rate >= 1.0) {
    fail(ErrorKind::invalid_argument, "apply_dropout: rate must be in [0, 1)");
  }
  if (!training || rate == 0.0) {
    Tensor ones = x;
    for (double& m : ones.v) m = 1.0;
    return {x, std::move(ones)};
  }
  Tensor mask = make_dropout_mask(x.size(), rate, rng);
  mask.rows = x.rows;
  mask.cols = x.cols;
  mask.matrix = x.matrix;
  return {hadamard(x, mask), std::move(mask)};
}

void rmsprop_momentum_step(Tensor& rms, Tensor& velocity, Tensor& param,
                           const Tensor& grad, const HyperParams& hp,
                           const std::string& param_name) {
  if (!all_finite(grad)) {
    fail(ErrorKind::numeric, "non-finite gradient for parameter " + param_name);
  }
  for (std::size_t i = 0; i < param.v.size(); ++i) {
    const double g = grad.v[i];
    rms.v[i] = hp.rms_decay * rms.v[i] + (1.0 - hp.rms_decay) * g * g;
    velocity.v[i] = hp.momentum * velocity.v[i] -
                    hp.learning_rate * g / std::sqrt(rms.v[i] + hp.epsilon);
    param.v[i] += velocity.v[i];
  }
}

OptimizerState OptimizerState::for_model(ModelParams& m) {
  OptimizerState st;
  m.for_each_trainable([&](const std::string& name, Tensor& t) {
    Slot s;
    s.name = name;
    s.param = &t;
    s.rms = t;
    s.rms.set_zero();
    s.velocity = s.rms;
    st.slots.push_back(std::move(s));
  });
  return st;
}

void initialize_model(ModelParams& m, const Vocabulary& vocab,
                      const EmbeddingTable* pretrained, Rng& rng) {
  m.for_each_trainable([&](const std::string& name, Tensor& t) {
    if (name == "embeddings") return; // handled below
    const bool is_bias = name.find(".b_") != std::string::npos ||
                         (name.size() >= 5 && name.compare(name.size() - 5, 5, ".bias") == 0);
    if (is_bias) {
      t.set_zero();
    } else {
      t = init_uniform(t.rows, t.matrix ? t.cols : 1, rng);
    }
  });
  const std::size_t e = m.embed_dim();
  const double a = std::sqrt(3.0 / static_cast<double>(e)); // sqrt(6/(e+e))
  for (std::size_t row = 0; row < m.embeddings.rows; ++row) {
    const std::string& token = vocab.id_to_token.at(row);
    const Tensor* pre = pretrained ? pretrained->find(token) : nullptr;
    double* dst = &m.embeddings.v[row * e];
    if (pre) {
      std::copy(pre->v.begin(), pre->v.end(), dst);
    } else if (static_cast<int>(row) == vocab.unk_id && vocab.unk_policy == UnkPolicy::zero) {
      std::fill(dst, dst + e, 0.0);
    } else {
      for (std::size_t j = 0; j < e; ++j) dst[j] = rng.uniform(-a, a);
    }
  }
}

// ---- per-example loss/grads (gradient checker path, no dropout) ----

namespace {

struct ExampleForward {
  QuestionTrace question;
  // fts_brnn
  AnswerTrace correct_rnn;
  std::map<int, AnswerTrace> wrong_rnn;
  // fts_brnn_s
  QuestionTrace correct_shared;
  std::map<int, QuestionTrace> wrong_shared;
};

ExampleForward forward_example(const ModelParams& m, const CheckExample& ex,
                               std::size_t seq_len, int pad_id) {
  ExampleForward fwd;
  std::vector<int> q_ids = ex.question_ids;
  if (m.variant == Variant::fts_brnn_s) q_ids = pad_or_truncate(q_ids, seq_len, pad_id);
  fwd.question = encode_question(m, q_ids, nullptr);
  if (m.variant == Variant::fts_brnn) {
    fwd.correct_rnn = encode_answer(m, ex.correct_answer_ids);
    for (const auto& [id, ids] : ex.wrong) fwd.wrong_rnn.emplace(id, encode_answer(m, ids));
  } else {
    fwd.correct_shared = encode_answer_shared(m, ex.correct_answer_ids, seq_len, pad_id);
    for (const auto& [id, ids] : ex.wrong) {
      fwd.wrong_shared.emplace(id, encode_answer_shared(m, ids, seq_len, pad_id));
    }
  }
  return fwd;
}

} // namespace

double example_loss(const ModelParams& m, const CheckExample& ex, LossKind kind,
                    const LossConfig& cfg, std::size_t seq_len, int pad_id) {
  const ExampleForward fwd = forward_example(m, ex, seq_len, pad_id);
  if (m.variant == Variant::fts_brnn) {
    std::vector<std::pair<int, Tensor>> wrong;
    for (const auto& [id, trace] : fwd.wrong_rnn) wrong.emplace_back(id, trace.final_state);
    if (kind == LossKind::full_time) {
      return full_time_loss(fwd.question.outputs, fwd.correct_rnn.final_state, wrong, cfg).value;
    }
    return pooling_loss(fwd.question.outputs, fwd.correct_rnn.final_state, wrong, cfg).value;
  }
  if (kind == LossKind::full_time) {
    std::vector<std::pair<int, std::vector<Tensor>>> wrong;
    for (const auto& [id, trace] : fwd.wrong_shared) wrong.emplace_back(id, trace.outputs);
    return full_time_loss_shared(fwd.question.outputs, fwd.correct_shared.outputs, wrong, cfg)
        .value;
  }
  std::vector<std::pair<int, Tensor>> wrong;
  for (const auto& [id, trace] : fwd.wrong_shared) {
    wrong.emplace_back(id, average_pool(trace.outputs));
  }
  return pooling_loss(fwd.question.outputs, average_pool(fwd.correct_shared.outputs), wrong, cfg)
      .value;
}

static std::vector<Tensor> spread_over_steps(const Tensor& pooled_grad, std::size_t T) {
  Tensor per_step = pooled_grad;
  for (double& x : per_step.v) x /= static_cast<double>(T);
  return std::vector<Tensor>(T, per_step);
}

ModelGrads example_grads(const ModelParams& m, const CheckExample& ex, LossKind kind,
                         const LossConfig& cfg, std::size_t seq_len, int pad_id) {
  ExampleForward fwd = forward_example(m, ex, seq_len, pad_id);
  ModelGrads grads = ModelGrads::zeros_like(m);
  if (m.variant == Variant::fts_brnn) {
    std::vector<std::pair<int, Tensor>> wrong;
    for (const auto& [id, trace] : fwd.wrong_rnn) wrong.emplace_back(id, trace.final_state);
    const LossResult res =
        kind == LossKind::full_time
            ? full_time_loss(fwd.question.outputs, fwd.correct_rnn.final_state, wrong, cfg)
            : pooling_loss(fwd.question.outputs, fwd.correct_rnn.final_state, wrong, cfg);
    backward_question(m, fwd.question, res.grad_outputs, grads);
    backward_answer(m, fwd.correct_rnn, res.grad_correct, grads);
    for (const auto& [id, g] : res.grad_wrong) {
      backward_answer(m, fwd.wrong_rnn.at(id), g, grads);
    }
    return grads;
  }
  if (kind == LossKind::full_time) {
    std::vector<std::pair<int, std::vector<Tensor>>> wrong;
    for (const auto& [id, trace] : fwd.wrong_shared) wrong.emplace_back(id, trace.outputs);
    const SharedLossResult res =
        full_time_loss_shared(fwd.question.outputs, fwd.correct_shared.outputs, wrong, cfg);
    backward_question(m, fwd.question, res.grad_outputs, grads);
    backward_question(m, fwd.correct_shared, res.grad_correct, grads);
    for (const auto& [id, steps] : res.grad_wrong) {
      backward_question(m, fwd.wrong_shared.at(id), steps, grads);
    }
    return grads;
  }
  std::vector<std::pair<int, Tensor>> wrong;
  for (const auto& [id, trace] : fwd.wrong_shared) {
    wrong.emplace_back(id, average_pool(trace.outputs));
  }
  const LossResult res =
      pooling_loss(fwd.question.outputs, average_pool(fwd.correct_shared.outputs), wrong, cfg);
  backward_question(m, fwd.question, res.grad_outputs, grads);
  backward_question(m, fwd.correct_shared,
                    spread_over_steps(res.grad_correct, fwd.correct_shared.outputs.size()), grads);
  for (const auto& [id, g] : res.grad_wrong) {
    const QuestionTrace& trace = fwd.wrong_shared.at(id);
    backward_question(m, trace, spread_over_steps(g, trace.outputs.size()), grads);
  }
  return grads;
}

GradCheckReport compare_against_numeric(ModelParams& m, const CheckExample& ex,
                                        const ModelGrads& analytic, LossKind kind,
                                        const LossConfig& cfg, std::size_t seq_len,
                                        int pad_id, double tolerance, double step) {
  std::vector<std::pair<std::string, Tensor*>> params;
  m.for_each_trainable([&](const std::string& n, Tensor& t) { params.emplace_back(n, &t); });
  std::vector<const Tensor*> analytic_ts;
  const_cast<ModelGrads&>(analytic).for_each_like(
      m, [&](const std::string&, Tensor& t) { analytic_ts.push_back(&t); });

  // A single step cannot serve every component: the loss is O(10), so the
  // difference quotient at h carries ~ulp(loss)/h quantization noise, while
  // its truncation error grows as h². Components whose gradient sits near
  // the noise floor of the requested step get re-read on a coarser rung of
  // a step ladder and keep their best reading; a defective gradient is off
  // by the component's own scale and fails every rung.
  GradCheckReport report;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor* param = params[k].second;
    auto f = [&](const Tensor& probe) {
      const Tensor saved = *param;
      *param = probe;
      const double value = example_loss(m, ex, kind, cfg, seq_len, pad_id);
      *param = saved;
      return value;
    };
    auto rel_errs = [&](const Tensor& a, const Tensor& numeric) {
      std::vector<double> errs(numeric.v.size());
      for (std::size_t i = 0; i < numeric.v.size(); ++i) {
        const double denom = std::max(1e-8, std::fabs(a.v[i]) + std::fabs(numeric.v[i]));
        errs[i] = std::fabs(a.v[i] - numeric.v[i]) / denom;
      }
      return errs;
    };
    const Tensor& a = *analytic_ts[k];
    std::vector<double> errs = rel_errs(a, numerical_gradient(f, *param, step));
    double worst = *std::max_element(errs.begin(), errs.end());
    for (double h = step * 10.0; worst >= tolerance && h <= 1.01e-2; h *= 10.0) {
      const std::vector<double> coarse = rel_errs(a, numerical_gradient(f, *param, h));
      worst = 0.0;
      for (std::size_t i = 0; i < errs.size(); ++i) {
        errs[i] = std::min(errs[i], coarse[i]);
        worst = std::max(worst, errs[i]);
      }
    }
    report.entries.push_back({params[k].first, worst});
    if (worst > report.worst_err) {
      report.worst_err = worst;
      report.worst_name = params[k].first;
    }
  }
  report.pass = report.worst_err < tolerance;
  return report;
}

GradCheckReport gradient_check(ModelParams& m, const CheckExample& ex, LossKind kind,
                               const LossConfig& cfg, std::size_t seq_len, int pad_id,
                               double tolerance, double step) {
  const ModelGrads analytic = example_grads(m, ex, kind, cfg, seq_len, pad_id);
  return compare_against_numeric(m, ex, analytic, kind, cfg, seq_len, pad_id, tolerance, step);
}

// smallest |margin − o·A_c + o·A_w| across the instance's hinge terms
static double min_hinge_gap(const ModelParams& m, const CheckExample& ex, LossKind kind,
                            const LossConfig& cfg, std::size_t seq_len, int pad_id) {
  const ExampleForward fwd = forward_example(m, ex, seq_len, pad_id);
  double gap = 1e300;
  auto consider = [&](double arg) { gap = std::min(gap, std::fabs(arg)); };
  if (m.variant == Variant::fts_brnn || kind == LossKind::pooling) {
    Tensor correct;
    std::vector<Tensor> wrong;
    if (m.variant == Variant::fts_brnn) {
      correct = fwd.correct_rnn.final_state;
      for (const auto& [id, t] : fwd.wrong_rnn) wrong.push_back(t.final_state);
    } else {
      correct = average_pool(fwd.correct_shared.outputs);
      for (const auto& [id, t] : fwd.wrong_shared) wrong.push_back(average_pool(t.outputs));
    }
    if (kind == LossKind::pooling) {
      const Tensor pooled = average_pool(fwd.question.outputs);
      for (const Tensor& w : wrong) consider(cfg.margin - dot(pooled, correct) + dot(pooled, w));
    } else {
      for (const Tensor& o : fwd.question.outputs) {
        for (const Tensor& w : wrong) consider(cfg.margin - dot(o, correct) + dot(o, w));
      }
    }
    return gap;
  }
  for (std::size_t t = 0; t < fwd.question.outputs.size(); ++t) {
    const Tensor& o = fwd.question.outputs[t];
    for (const auto& [id, trace] : fwd.wrong_shared) {
      consider(cfg.margin - dot(o, fwd.correct_shared.outputs[t]) + dot(o, trace.outputs[t]));
    }
  }
  return gap;
}

CheckInstance make_check_instance(Variant variant, OutputMode mode, LossKind kind,
                                  const LossConfig& cfg, std::uint64_t seed) {
  constexpr int kVocab = 12;
  for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
    Rng rng(seed * 0x9e3779b97f4a7c15ULL + attempt + 1);
    const std::size_t d = 2 + rng.below(3);  // 2..4
    const std::size_t e = 2 + rng.below(2);  // 2..3
    const std::size_t T = 2 + rng.below(5);  // 2..6

    CheckInstance inst;
    inst.model = ModelParams::zeros(variant, mode, d, e, kVocab);
    inst.model.train_embeddings = true;
    inst.model.for_each_trainable([&](const std::string&, Tensor& t) {
      for (double& x : t.v) x = rng.uniform(-0.5, 0.5);
    });
    inst.seq_len = T;
    inst.pad_id = 1;

    auto draw_ids = [&](std::size_t n) {
      std::vector<int> ids;
      for (std::size_t i = 0; i < n; ++i) ids.push_back(2 + static_cast<int>(rng.below(kVocab - 2)));
      return ids;
    };
    inst.example.question_ids = draw_ids(T);
    inst.example.correct_id = 0;
    inst.example.correct_answer_ids = draw_ids(1 + rng.below(3));
    inst.example.wrong = {{1, draw_ids(1 + rng.below(3))}, {2, draw_ids(1 + rng.below(3))}};

    if (min_hinge_gap(inst.model, inst.example, kind, cfg, inst.seq_len, inst.pad_id) > 1e-3) {
      return inst;
    }
  }
  fail(ErrorKind::state, "make_check_instance: could not find a kink-free instance");
}

// ---- training loop ----

Trainer::Trainer(ModelParams model, Vocabulary vocab, LossKind loss_kind,
                 LossConfig loss_cfg, HyperParams hp, std::size_t seq_len)
    : model_(std::move(model)),
      vocab_(std::move(vocab)),
      loss_kind_(loss_kind),
      loss_cfg_(std::move(loss_cfg)),
      hp_(hp),
      seq_len_(seq_len),
      rng_(hp.seed),
      state_(OptimizerState::for_model(model_)) {
  if (model_.variant == Variant::fts_brnn_s && seq_len_ < 1) {
    fail(ErrorKind::invalid_argument, "fts-brnn-s needs seq_len >= 1");
  }
}

EpochStats Trainer::train_epoch(const Dataset& train) {
  const auto& qs = train.questions;
  if (qs.empty()) fail(ErrorKind::invalid_argument, "train_epoch: empty training set");
  const int C = static_cast<int>(train.answer_set.answers.size());
  const bool shared = model_.variant == Variant::fts_brnn_s;
  const double drop_rate =
      hp_.dropout_is_keep_prob ? 1.0 - hp_.dropout_rate : hp_.dropout_rate;

  std::vector<std::size_t> order(qs.size());
  std::iota(order.begin(), order.end(), 0);
  rng_.shuffle(order);

  double total_loss = 0.0;
  const std::size_t batch_size = static_cast<std::size_t>(std::max(1, hp_.batch_size));

  for (std::size_t start = 0, batch_index = 0; start < order.size();
       start += batch_size, ++batch_index) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    ModelGrads grads = ModelGrads::zeros_like(model_);

    // answers depend only on the parameters, which are fixed within a
    // batch: encode each once, flush the summed gradients afterwards
    std::map<int, AnswerTrace> ans_rnn;
    std::map<int, QuestionTrace> ans_shared;
    std::map<int, Tensor> ans_grad;                    // final or pooled
    std::map<int, std::vector<Tensor>> ans_grad_steps; // per-step (shared full-time)

    auto ensure_answer = [&](int id) {
      if (model_.variant == Variant::fts_brnn) {
        if (!ans_rnn.count(id)) {
          ans_rnn.emplace(id, encode_answer(model_, train.answer_set.answers[id].token_ids));
        }
      } else if (!ans_shared.count(id)) {
        ans_shared.emplace(id, encode_answer_shared(model_, train.answer_set.answers[id].token_ids,
                                                    seq_len_, vocab_.pad_id));
      }
    };

    double batch_loss = 0.0;
    for (std::size_t k = start; k < end; ++k) {
      const Question& q = qs[order[k]];
      std::vector<int> ids = q.token_ids;
      if (shared) ids = pad_or_truncate(ids, seq_len_, vocab_.pad_id);

      std::vector<Tensor> mask;
      const std::vector<Tensor>* maskp = nullptr;
      if (drop_rate > 0.0) {
        mask.reserve(ids.size());
        for (std::size_t t = 0; t < ids.size(); ++t) {
          mask.push_back(make_dropout_mask(model_.embed_dim(), drop_rate, rng_));
        }
        maskp = &mask;
      }
      QuestionTrace trace = encode_question(model_, ids, maskp);

      std::vector<int> wrong_ids;
      if (loss_cfg_.wrong_answer_policy == WrongAnswerPolicy::all ||
          loss_cfg_.sample_k >= C - 1) {
        for (int a = 0; a < C; ++a) {
          if (a != q.answer_id) wrong_ids.push_back(a);
        }
      } else {
        std::vector<int> candidates;
        for (int a = 0; a < C; ++a) {
          if (a != q.answer_id) candidates.push_back(a);
        }
        for (int pick = 0; pick < loss_cfg_.sample_k; ++pick) {
          const std::size_t j = pick + rng_.below(candidates.size() - pick);
          std::swap(candidates[pick], candidates[j]);
          wrong_ids.push_back(candidates[pick]);
        }
        std::sort(wrong_ids.begin(), wrong_ids.end());
      }
      ensure_answer(q.answer_id);
      for (int id : wrong_ids) ensure_answer(id);

      if (model_.variant == Variant::fts_brnn || loss_kind_ == LossKind::pooling) {
        Tensor correct;
        std::vector<std::pair<int, Tensor>> wrong;
        if (model_.variant == Variant::fts_brnn) {
          correct = ans_rnn.at(q.answer_id).final_state;
          for (int id : wrong_ids) wrong.emplace_back(id, ans_rnn.at(id).final_state);
        } else {
          correct = average_pool(ans_shared.at(q.answer_id).outputs);
          for (int id : wrong_ids) {
            wrong.emplace_back(id, average_pool(ans_shared.at(id).outputs));
          }
        }
        const LossResult res = loss_kind_ == LossKind::full_time
                                   ? full_time_loss(trace.outputs, correct, wrong, loss_cfg_)
                                   : pooling_loss(trace.outputs, correct, wrong, loss_cfg_);
        batch_loss += res.value;
        backward_question(model_, trace, res.grad_outputs, grads);
        auto add_vec_grad = [&](int id, const Tensor& g) {
          auto [it, fresh] = ans_grad.try_emplace(id, g);
          if (!fresh) axpy(1.0, g, it->second);
        };
        add_vec_grad(q.answer_id, res.grad_correct);
        for (const auto& [id, g] : res.grad_wrong) add_vec_grad(id, g);
      } else {
        std::vector<std::pair<int, std::vector<Tensor>>> wrong;
        for (int id : wrong_ids) wrong.emplace_back(id, ans_shared.at(id).outputs);
        const SharedLossResult res = full_time_loss_shared(
            trace.outputs, ans_shared.at(q.answer_id).outputs, wrong, loss_cfg_);
        batch_loss += res.value;
        backward_question(model_, trace, res.grad_outputs, grads);
        auto add_step_grad = [&](int id, const std::vector<Tensor>& gs) {
          auto [it, fresh] = ans_grad_steps.try_emplace(id, gs);
          if (!fresh) {
            for (std::size_t t = 0; t < gs.size(); ++t) axpy(1.0, gs[t], it->second[t]);
          }
        };
        add_step_grad(q.answer_id, res.grad_correct);
        for (const auto& [id, gs] : res.grad_wrong) add_step_grad(id, gs);
      }
    }

    if (!std::isfinite(batch_loss)) {
      fail(ErrorKind::numeric, "non-finite loss in batch " + std::to_string(batch_index));
    }
    total_loss += batch_loss;

    // flush answer gradients in id order
    for (const auto& [id, g] : ans_grad) {
      if (model_.variant == Variant::fts_brnn) {
        backward_answer(model_, ans_rnn.at(id), g, grads);
      } else {
        const QuestionTrace& trace = ans_shared.at(id);
        backward_question(model_, trace, spread_over_steps(g, trace.outputs.size()), grads);
      }
    }
    for (const auto& [id, gs] : ans_grad_steps) {
      backward_question(model_, ans_shared.at(id), gs, grads);
    }

    if (model_.train_embeddings && vocab_.unk_policy == UnkPolicy::zero && vocab_.unk_id >= 0) {
      double* row = &grads.embeddings.v[static_cast<std::size_t>(vocab_.unk_id) *
                                        grads.embeddings.cols];
      std::fill(row, row + grads.embeddings.cols, 0.0);
    }

    std::vector<Tensor*> grad_ts;
    grads.for_each_like(model_, [&](const std::string&, Tensor& t) { grad_ts.push_back(&t); });
    const double scale = 1.0 / static_cast<double>(end - start);
    for (Tensor* t : grad_ts) {
      for (double& x : t->v) x *= scale;
    }
    if (hp_.grad_clip > 0.0) {
      double sq = 0.0;
      for (Tensor* t : grad_ts) {
        const double n = norm2(*t);
        sq += n * n;
      }
      const double gnorm = std::sqrt(sq);
      if (gnorm > hp_.grad_clip) {
        const double shrink = hp_.grad_clip / gnorm;
        for (Tensor* t : grad_ts) {
          for (double& x : t->v) x *= shrink;
        }
      }
    }

    for (std::size_t s = 0; s < state_.slots.size(); ++s) {
      OptimizerState::Slot& slot = state_.slots[s];
      rmsprop_momentum_step(slot.rms, slot.velocity, *slot.param, *grad_ts[s], hp_, slot.name);
    }
    state_.step_count++;
  }

  EpochStats stats;
  stats.examples = qs.size();
  stats.mean_loss = total_loss / static_cast<double>(qs.size());
  return stats;
}

} // namespace ftsqa
