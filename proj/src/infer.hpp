#pragma once

#include <span>
#include <utility>
#include <vector>

#include "data.hpp"
#include "model.hpp"
#include "tensor.hpp"

namespace ftsqa {

// elementwise mean over the time axis
Tensor average_pool(std::span<const Tensor> outputs);

// argmax of q·A_i; ties broken by smallest answer id
int predict_inner_product(const Tensor& q,
                          std::span<const std::pair<int, Tensor>> answers);

// answer ids ranked by (score desc, id asc), at most k
std::vector<int> top_k_inner_product(const Tensor& q,
                                     std::span<const std::pair<int, Tensor>> answers,
                                     std::size_t k);

struct LRConfig {
  double l2 = 1e-4;
  int iterations = 500;
  double step = 0.5;
  double grad_tolerance = 1e-6;
};

// multinomial logistic regression, full-batch gradient descent on softmax
// cross-entropy with L2 penalty, zero init
struct LRModel {
  Tensor W; // C x d_rep
  Tensor b; // C
};

LRModel train_lr(std::span<const std::pair<Tensor, int>> examples, int num_classes,
                 const LRConfig& cfg);

int predict_lr(const LRModel& m, const Tensor& q);

std::vector<int> top_k_lr(const LRModel& m, const Tensor& q, std::size_t k);

enum class EvalMethod { inner_product, lr };

// Pooled question representation with dropout disabled. For fts-brnn-s
// the sequence is padded/truncated to seq_len first.
Tensor question_representation(const ModelParams& m, const Question& q,
                               std::size_t seq_len, int pad_id);

// One representation per answer id: final RNN state for fts-brnn,
// average-pooled shared-BRNN outputs for fts-brnn-s.
std::vector<std::pair<int, Tensor>> answer_representations(const ModelParams& m,
                                                           const AnswerSet& answers,
                                                           std::size_t seq_len,
                                                           int pad_id);

// fraction of questions whose predicted answer id equals the true id;
// lr_model required for EvalMethod::lr
double evaluate(const ModelParams& m, const Dataset& data, EvalMethod method,
                const LRModel* lr_model, std::size_t seq_len, int pad_id);

} // namespace ftsqa
