#include "infer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "error.hpp"

namespace ftsqa {

Tensor average_pool(std::span<const Tensor> outputs) {
  if (outputs.empty()) fail(ErrorKind::invalid_argument, "average_pool: empty list");
  Tensor pooled = Tensor::vec(outputs[0].rows);
  for (const Tensor& o : outputs) axpy(1.0, o, pooled);
  for (double& x : pooled.v) x /= static_cast<double>(outputs.size());
  return pooled;
}

int predict_inner_product(const Tensor& q,
                          std::span<const std::pair<int, Tensor>> answers) {
  if (answers.empty()) fail(ErrorKind::invalid_argument, "predict_inner_product: no answers");
  int best_id = -1;
  double best = 0.0;
  for (const auto& [id, rep] : answers) {
    const double score = dot(q, rep);
    if (best_id < 0 || score > best || (score == best && id < best_id)) {
      best = score;
      best_id = id;
    }
  }
  return best_id;
}

std::vector<int> top_k_inner_product(const Tensor& q,
                                     std::span<const std::pair<int, Tensor>> answers,
                                     std::size_t k) {
  std::vector<std::pair<double, int>> scored;
  scored.reserve(answers.size());
  for (const auto& [id, rep] : answers) scored.emplace_back(dot(q, rep), id);
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<int> out;
  for (std::size_t i = 0; i < scored.size() && i < k; ++i) out.push_back(scored[i].second);
  return out;
}

static std::vector<double> softmax_logits(const LRModel& m, const Tensor& x) {
  const std::size_t C = m.W.rows;
  std::vector<double> logits(C);
  for (std::size_t c = 0; c < C; ++c) {
    double acc = 0.0;
    const double* row = &m.W.v[c * m.W.cols];
    for (std::size_t j = 0; j < m.W.cols; ++j) acc += row[j] * x.v[j];
    logits[c] = acc + m.b.v[c];
  }
  return logits;
}

LRModel train_lr(std::span<const std::pair<Tensor, int>> examples, int num_classes,
                 const LRConfig& cfg) {
  if (examples.empty()) fail(ErrorKind::invalid_argument, "train_lr: no examples");
  const std::size_t d = examples[0].first.rows;
  const std::size_t C = static_cast<std::size_t>(num_classes);
  {
    bool degenerate = true;
    for (const auto& [x, y] : examples) {
      if (y != examples[0].second) degenerate = false;
      if (x.rows != d) fail(ErrorKind::shape, "train_lr: inconsistent feature dims");
      if (y < 0 || static_cast<std::size_t>(y) >= C) {
        fail(ErrorKind::invalid_argument, "train_lr: label " + std::to_string(y) + " out of range");
      }
    }
    if (degenerate) std::cerr << "warning: train_lr: all labels identical\n";
  }

  LRModel m;
  m.W = Tensor::mat(C, d);
  m.b = Tensor::vec(C);
  const double inv_n = 1.0 / static_cast<double>(examples.size());

  Tensor gW = Tensor::mat(C, d);
  Tensor gb = Tensor::vec(C);
  for (int it = 0; it < cfg.iterations; ++it) {
    gW.set_zero();
    gb.set_zero();
    for (const auto& [x, y] : examples) {
      std::vector<double> logits = softmax_logits(m, x);
      const double mx = *std::max_element(logits.begin(), logits.end());
      double z = 0.0;
      for (double& l : logits) {
        l = std::exp(l - mx);
        z += l;
      }
      for (std::size_t c = 0; c < C; ++c) {
        const double p = logits[c] / z;
        const double delta = (p - (static_cast<int>(c) == y ? 1.0 : 0.0)) * inv_n;
        double* row = &gW.v[c * d];
        for (std::size_t j = 0; j < d; ++j) row[j] += delta * x.v[j];
        gb.v[c] += delta;
      }
    }
    axpy(2.0 * cfg.l2, m.W, gW);
    const double gnorm = std::sqrt(norm2(gW) * norm2(gW) + norm2(gb) * norm2(gb));
    if (gnorm < cfg.grad_tolerance) break;
    axpy(-cfg.step, gW, m.W);
    axpy(-cfg.step, gb, m.b);
  }
  return m;
}

int predict_lr(const LRModel& m, const Tensor& q) {
  if (q.rows != m.W.cols) {
    fail(ErrorKind::shape, "predict_lr: feature is " + q.shape_str() + ", model expects " +
                               std::to_string(m.W.cols));
  }
  const std::vector<double> logits = softmax_logits(m, q);
  int best = 0;
  for (std::size_t c = 1; c < logits.size(); ++c) {
    if (logits[c] > logits[best]) best = static_cast<int>(c);
  }
  return best;
}

std::vector<int> top_k_lr(const LRModel& m, const Tensor& q, std::size_t k) {
  const std::vector<double> logits = softmax_logits(m, q);
  std::vector<std::pair<double, int>> scored;
  for (std::size_t c = 0; c < logits.size(); ++c) scored.emplace_back(logits[c], static_cast<int>(c));
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<int> out;
  for (std::size_t i = 0; i < scored.size() && i < k; ++i) out.push_back(scored[i].second);
  return out;
}

Tensor question_representation(const ModelParams& m, const Question& q,
                               std::size_t seq_len, int pad_id) {
  std::vector<int> ids = q.token_ids;
  if (m.variant == Variant::fts_brnn_s) ids = pad_or_truncate(ids, seq_len, pad_id);
  QuestionTrace trace = encode_question(m, ids, nullptr);
  return average_pool(trace.outputs);
}

std::vector<std::pair<int, Tensor>> answer_representations(const ModelParams& m,
                                                           const AnswerSet& answers,
                                                           std::size_t seq_len,
                                                           int pad_id) {
  std::vector<std::pair<int, Tensor>> reps;
  reps.reserve(answers.answers.size());
  for (const Answer& a : answers.answers) {
    if (m.variant == Variant::fts_brnn) {
      reps.emplace_back(a.id, encode_answer(m, a.token_ids).final_state);
    } else {
      QuestionTrace trace = encode_answer_shared(m, a.token_ids, seq_len, pad_id);
      reps.emplace_back(a.id, average_pool(trace.outputs));
    }
  }
  return reps;
}

double evaluate(const ModelParams& m, const Dataset& data, EvalMethod method,
                const LRModel* lr_model, std::size_t seq_len, int pad_id) {
  if (data.questions.empty()) fail(ErrorKind::invalid_argument, "evaluate: empty dataset");
  if (method == EvalMethod::lr && !lr_model) {
    fail(ErrorKind::invalid_argument, "evaluate: lr method needs a trained LR model");
  }
  std::vector<std::pair<int, Tensor>> reps;
  if (method == EvalMethod::inner_product) {
    reps = answer_representations(m, data.answer_set, seq_len, pad_id);
  }
  std::size_t correct = 0;
  for (const Question& q : data.questions) {
    const Tensor pooled = question_representation(m, q, seq_len, pad_id);
    const int pred = method == EvalMethod::inner_product
                         ? predict_inner_product(pooled, reps)
                         : predict_lr(*lr_model, pooled);
    if (pred == q.answer_id) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.questions.size());
}

} // namespace ftsqa
