#include "loss.hpp"

#include <iostream>

#include "error.hpp"

namespace ftsqa {

static void check_dim(const Tensor& a, const Tensor& b, const char* what) {
  if (a.matrix || b.matrix || a.rows != b.rows) {
    fail(ErrorKind::shape, std::string(what) + ": " + a.shape_str() + " vs " + b.shape_str());
  }
}

static bool warn_empty_wrong(std::size_t n_wrong) {
  if (n_wrong == 0) {
    std::cerr << "warning: no wrong answers supplied, loss is 0\n";
    return true;
  }
  return false;
}

LossResult full_time_loss(std::span<const Tensor> outputs, const Tensor& correct,
                          std::span<const std::pair<int, Tensor>> wrong,
                          const LossConfig& cfg) {
  LossResult res;
  res.grad_outputs.assign(outputs.size(), Tensor::vec(correct.rows));
  res.grad_correct = Tensor::vec(correct.rows);
  if (warn_empty_wrong(wrong.size())) return res;
  for (const auto& [id, vec] : wrong) res.grad_wrong.emplace(id, Tensor::vec(correct.rows));

  for (std::size_t t = 0; t < outputs.size(); ++t) {
    const Tensor& o = outputs[t];
    check_dim(o, correct, "full_time_loss");
    const double oc = dot(o, correct);
    for (const auto& [id, aw] : wrong) {
      check_dim(o, aw, "full_time_loss");
      const double arg = cfg.margin - oc + dot(o, aw);
      if (arg > 0.0) {
        res.value += arg;
        Tensor& go = res.grad_outputs[t];
        for (std::size_t i = 0; i < go.rows; ++i) go.v[i] += aw.v[i] - correct.v[i];
        axpy(-1.0, o, res.grad_correct);
        axpy(1.0, o, res.grad_wrong.at(id));
      }
    }
  }
  return res;
}

LossResult pooling_loss(std::span<const Tensor> outputs, const Tensor& correct,
                        std::span<const std::pair<int, Tensor>> wrong,
                        const LossConfig& cfg) {
  if (outputs.empty()) fail(ErrorKind::invalid_argument, "pooling_loss: no outputs");
  const std::size_t T = outputs.size();
  Tensor pooled = Tensor::vec(outputs[0].rows);
  for (const Tensor& o : outputs) axpy(1.0, o, pooled);
  for (double& x : pooled.v) x /= static_cast<double>(T);

  LossResult res;
  res.grad_outputs.assign(T, Tensor::vec(correct.rows));
  res.grad_correct = Tensor::vec(correct.rows);
  if (warn_empty_wrong(wrong.size())) return res;
  for (const auto& [id, vec] : wrong) res.grad_wrong.emplace(id, Tensor::vec(correct.rows));

  check_dim(pooled, correct, "pooling_loss");
  Tensor grad_pooled = Tensor::vec(correct.rows);
  const double oc = dot(pooled, correct);
  for (const auto& [id, aw] : wrong) {
    check_dim(pooled, aw, "pooling_loss");
    const double arg = cfg.margin - oc + dot(pooled, aw);
    if (arg > 0.0) {
      res.value += arg;
      for (std::size_t i = 0; i < grad_pooled.rows; ++i) grad_pooled.v[i] += aw.v[i] - correct.v[i];
      axpy(-1.0, pooled, res.grad_correct);
      axpy(1.0, pooled, res.grad_wrong.at(id));
    }
  }
  for (std::size_t t = 0; t < T; ++t) {
    axpy(1.0 / static_cast<double>(T), grad_pooled, res.grad_outputs[t]);
  }
  return res;
}

SharedLossResult full_time_loss_shared(
    std::span<const Tensor> outputs, std::span<const Tensor> correct,
    std::span<const std::pair<int, std::vector<Tensor>>> wrong,
    const LossConfig& cfg) {
  const std::size_t T = outputs.size();
  if (correct.size() != T) {
    fail(ErrorKind::invalid_argument,
         "full_time_loss_shared: question has " + std::to_string(T) +
             " steps, correct answer has " + std::to_string(correct.size()));
  }
  const std::size_t dim = T ? outputs[0].rows : 0;
  SharedLossResult res;
  res.grad_outputs.assign(T, Tensor::vec(dim));
  res.grad_correct.assign(T, Tensor::vec(dim));
  if (warn_empty_wrong(wrong.size())) return res;
  for (const auto& [id, steps] : wrong) {
    if (steps.size() != T) {
      fail(ErrorKind::invalid_argument,
           "full_time_loss_shared: wrong answer " + std::to_string(id) + " has " +
               std::to_string(steps.size()) + " steps, expected " + std::to_string(T));
    }
    res.grad_wrong.emplace(id, std::vector<Tensor>(T, Tensor::vec(dim)));
  }

  for (std::size_t t = 0; t < T; ++t) {
    const Tensor& o = outputs[t];
    check_dim(o, correct[t], "full_time_loss_shared");
    const double oc = dot(o, correct[t]);
    for (const auto& [id, steps] : wrong) {
      check_dim(o, steps[t], "full_time_loss_shared");
      const double arg = cfg.margin - oc + dot(o, steps[t]);
      if (arg > 0.0) {
        res.value += arg;
        Tensor& go = res.grad_outputs[t];
        for (std::size_t i = 0; i < go.rows; ++i) go.v[i] += steps[t].v[i] - correct[t].v[i];
        axpy(-1.0, o, res.grad_correct[t]);
        axpy(1.0, o, res.grad_wrong.at(id)[t]);
      }
    }
  }
  return res;
}

} // namespace ftsqa
