#pragma once

#include <map>
#include <span>
#include <utility>
#include <vector>

#include "tensor.hpp"

namespace ftsqa {

enum class WrongAnswerPolicy { all, sample_k };

struct LossConfig {
  double margin = 1.0;
  WrongAnswerPolicy wrong_answer_policy = WrongAnswerPolicy::all;
  int sample_k = 10;
};

struct LossResult {
  double value = 0.0;
  std::vector<Tensor> grad_outputs;   // one per question time step
  Tensor grad_correct;
  std::map<int, Tensor> grad_wrong;   // answer id -> gradient
};

struct SharedLossResult {
  double value = 0.0;
  std::vector<Tensor> grad_outputs;
  std::vector<Tensor> grad_correct;                 // per time step
  std::map<int, std::vector<Tensor>> grad_wrong;    // per answer, per step
};

// Σ_t Σ_w max(0, margin − o^(t)·A_correct + o^(t)·A_w). A hinge exactly
// at zero contributes no gradient.
LossResult full_time_loss(std::span<const Tensor> outputs, const Tensor& correct,
                          std::span<const std::pair<int, Tensor>> wrong,
                          const LossConfig& cfg);

// hinge on the average-pooled output o_p = Σ_t o^(t) / T; each step
// receives 1/T of the pooled gradient
LossResult pooling_loss(std::span<const Tensor> outputs, const Tensor& correct,
                        std::span<const std::pair<int, Tensor>> wrong,
                        const LossConfig& cfg);

// per-step answer outputs paired with per-step question outputs; all
// sequences must share one length
SharedLossResult full_time_loss_shared(
    std::span<const Tensor> outputs, std::span<const Tensor> correct,
    std::span<const std::pair<int, std::vector<Tensor>>> wrong,
    const LossConfig& cfg);

} // namespace ftsqa
