#include "model.hpp"

#include <algorithm>

#include "error.hpp"

namespace ftsqa {

OutputLayerParams OutputLayerParams::zeros(std::size_t d) {
  OutputLayerParams p;
  p.W_o = Tensor::mat(d, d);
  p.U_o = Tensor::mat(d, d);
  p.bias = Tensor::vec(d);
  return p;
}

OutputGrads OutputGrads::zeros_like(const OutputLayerParams& p) {
  OutputGrads g;
  g.W_o = Tensor::mat(p.W_o.rows, p.W_o.cols);
  g.U_o = Tensor::mat(p.U_o.rows, p.U_o.cols);
  g.bias = Tensor::vec(p.bias.rows);
  return g;
}

ModelParams ModelParams::zeros(Variant v, OutputMode mode, std::size_t d,
                               std::size_t embed_dim, std::size_t vocab_size) {
  if (v == Variant::fts_brnn && mode != OutputMode::affine) {
    fail(ErrorKind::invalid_argument,
         "fts-brnn requires the affine output layer (answer and question "
         "dimensions must match)");
  }
  ModelParams m;
  m.variant = v;
  m.output_mode = mode;
  m.q_forward = GRUParams::zeros(d, embed_dim);
  m.q_backward = GRUParams::zeros(d, embed_dim);
  if (mode == OutputMode::affine) m.out = OutputLayerParams::zeros(d);
  if (v == Variant::fts_brnn) m.answer_encoder = GRUParams::zeros(d, embed_dim);
  m.embeddings = Tensor::mat(vocab_size, embed_dim);
  return m;
}

void ModelParams::for_each_trainable(
    const std::function<void(const std::string&, Tensor&)>& fn) {
  q_forward.for_each([&](const std::string& n, Tensor& t) { fn("q_forward." + n, t); });
  q_backward.for_each([&](const std::string& n, Tensor& t) { fn("q_backward." + n, t); });
  if (out) {
    fn("out.W_o", out->W_o);
    fn("out.U_o", out->U_o);
    fn("out.bias", out->bias);
  }
  if (answer_encoder) {
    answer_encoder->for_each(
        [&](const std::string& n, Tensor& t) { fn("answer_encoder." + n, t); });
  }
  if (train_embeddings) fn("embeddings", embeddings);
}

void ModelParams::for_each_tensor(
    const std::function<void(const std::string&, Tensor&)>& fn) {
  const bool saved = train_embeddings;
  train_embeddings = true;
  for_each_trainable(fn);
  train_embeddings = saved;
}

ModelGrads ModelGrads::zeros_like(const ModelParams& m) {
  ModelGrads g;
  g.q_forward = GRUGrads::zeros_like(m.q_forward);
  g.q_backward = GRUGrads::zeros_like(m.q_backward);
  if (m.out) g.out = OutputGrads::zeros_like(*m.out);
  if (m.answer_encoder) g.answer_encoder = GRUGrads::zeros_like(*m.answer_encoder);
  g.embeddings = Tensor::mat(m.embeddings.rows, m.embeddings.cols);
  return g;
}

void ModelGrads::for_each_like(const ModelParams& m,
                               const std::function<void(const std::string&, Tensor&)>& fn) {
  q_forward.for_each([&](const std::string& n, Tensor& t) { fn("q_forward." + n, t); });
  q_backward.for_each([&](const std::string& n, Tensor& t) { fn("q_backward." + n, t); });
  if (m.out) {
    fn("out.W_o", out.W_o);
    fn("out.U_o", out.U_o);
    fn("out.bias", out.bias);
  }
  if (m.answer_encoder) {
    answer_encoder.for_each(
        [&](const std::string& n, Tensor& t) { fn("answer_encoder." + n, t); });
  }
  if (m.train_embeddings) fn("embeddings", embeddings);
}

static Tensor embed_token(const ModelParams& m, int id) {
  if (id < 0 || static_cast<std::size_t>(id) >= m.embeddings.rows) {
    fail(ErrorKind::invalid_argument, "token id " + std::to_string(id) + " outside embedding table");
  }
  Tensor x = Tensor::vec(m.embed_dim());
  const double* row = &m.embeddings.v[static_cast<std::size_t>(id) * m.embeddings.cols];
  std::copy(row, row + m.embeddings.cols, x.v.begin());
  return x;
}

static Tensor concat2(const Tensor& a, const Tensor& b) {
  Tensor y = Tensor::vec(a.rows + b.rows);
  std::copy(a.v.begin(), a.v.end(), y.v.begin());
  std::copy(b.v.begin(), b.v.end(), y.v.begin() + a.rows);
  return y;
}

QuestionTrace encode_question(const ModelParams& m, std::span<const int> token_ids,
                              const std::vector<Tensor>* mask) {
  if (token_ids.empty()) fail(ErrorKind::invalid_argument, "encode_question: empty question");
  if (mask && mask->size() != token_ids.size()) {
    fail(ErrorKind::invalid_argument, "encode_question: mask length mismatch");
  }
  QuestionTrace trace;
  trace.token_ids.assign(token_ids.begin(), token_ids.end());
  const std::size_t T = token_ids.size();
  trace.inputs.reserve(T);
  for (std::size_t t = 0; t < T; ++t) {
    Tensor x = embed_token(m, token_ids[t]);
    if (mask) x = hadamard(x, (*mask)[t]);
    trace.inputs.push_back(std::move(x));
  }
  if (mask) trace.mask = *mask;

  trace.fwd = gru_forward(m.q_forward, trace.inputs);

  std::vector<Tensor> rev(trace.inputs.rbegin(), trace.inputs.rend());
  trace.bwd = gru_forward(m.q_backward, rev);
  trace.b.assign(trace.bwd.hs.rbegin(), trace.bwd.hs.rend());

  trace.outputs.reserve(T);
  for (std::size_t t = 0; t < T; ++t) {
    if (m.output_mode == OutputMode::affine) {
      Tensor o = affine(m.out->W_o, trace.fwd.hs[t], m.out->bias);
      axpy(1.0, affine(m.out->U_o, trace.b[t], Tensor::vec(m.dim())), o);
      trace.outputs.push_back(std::move(o));
    } else {
      trace.outputs.push_back(concat2(trace.fwd.hs[t], trace.b[t]));
    }
  }
  return trace;
}

AnswerTrace encode_answer(const ModelParams& m, std::span<const int> token_ids) {
  if (m.variant != Variant::fts_brnn) {
    fail(ErrorKind::state, "encode_answer: model has no dedicated answer encoder");
  }
  if (token_ids.empty()) fail(ErrorKind::invalid_argument, "encode_answer: empty answer");
  AnswerTrace trace;
  trace.token_ids.assign(token_ids.begin(), token_ids.end());
  for (int id : token_ids) trace.inputs.push_back(embed_token(m, id));
  trace.fwd = gru_forward(*m.answer_encoder, trace.inputs);
  trace.final_state = trace.fwd.hs.back();
  return trace;
}

std::vector<int> pad_or_truncate(std::span<const int> ids, std::size_t T, int pad_id) {
  std::vector<int> out(ids.begin(), ids.end());
  if (out.size() > T) out.resize(T);
  while (out.size() < T) out.push_back(pad_id);
  return out;
}

QuestionTrace encode_answer_shared(const ModelParams& m, std::span<const int> token_ids,
                                   std::size_t T, int pad_id) {
  if (m.variant != Variant::fts_brnn_s) {
    fail(ErrorKind::state, "encode_answer_shared: model does not share the question BRNN");
  }
  if (T < 1) fail(ErrorKind::invalid_argument, "encode_answer_shared: T must be >= 1");
  const std::vector<int> padded = pad_or_truncate(token_ids, T, pad_id);
  return encode_question(m, padded, nullptr); // answers never get dropout
}

void backward_question(const ModelParams& m, const QuestionTrace& trace,
                       std::span<const Tensor> grad_outputs, ModelGrads& grads) {
  const std::size_t T = trace.outputs.size();
  if (grad_outputs.size() != T) {
    fail(ErrorKind::invalid_argument, "backward_question: " + std::to_string(T) +
                                          " outputs vs " + std::to_string(grad_outputs.size()) +
                                          " gradients");
  }
  const std::size_t d = m.dim();
  std::vector<Tensor> gf(T, Tensor::vec(d));
  std::vector<Tensor> gb(T, Tensor::vec(d));
  if (m.output_mode == OutputMode::affine) {
    for (std::size_t t = 0; t < T; ++t) {
      const Tensor& go = grad_outputs[t];
      add_outer(grads.out.W_o, go, trace.fwd.hs[t]);
      add_outer(grads.out.U_o, go, trace.b[t]);
      axpy(1.0, go, grads.out.bias);
      add_matvec_t(gf[t], m.out->W_o, go);
      add_matvec_t(gb[t], m.out->U_o, go);
    }
  } else {
    for (std::size_t t = 0; t < T; ++t) {
      const Tensor& go = grad_outputs[t];
      std::copy(go.v.begin(), go.v.begin() + d, gf[t].v.begin());
      std::copy(go.v.begin() + d, go.v.end(), gb[t].v.begin());
    }
  }

  const bool need_inputs = m.train_embeddings;
  std::vector<Tensor> gx_fwd;
  gru_backward(m.q_forward, trace.fwd.caches, gf, grads.q_forward,
               need_inputs ? &gx_fwd : nullptr);

  std::vector<Tensor> gb_rev(gb.rbegin(), gb.rend());
  std::vector<Tensor> gx_bwd_rev;
  gru_backward(m.q_backward, trace.bwd.caches, gb_rev, grads.q_backward,
               need_inputs ? &gx_bwd_rev : nullptr);

  if (need_inputs) {
    for (std::size_t t = 0; t < T; ++t) {
      Tensor gx = gx_fwd[t];
      axpy(1.0, gx_bwd_rev[T - 1 - t], gx);
      if (!trace.mask.empty()) gx = hadamard(gx, trace.mask[t]);
      const std::size_t row = static_cast<std::size_t>(trace.token_ids[t]) * grads.embeddings.cols;
      for (std::size_t j = 0; j < grads.embeddings.cols; ++j) {
        grads.embeddings.v[row + j] += gx.v[j];
      }
    }
  }
}

void backward_answer(const ModelParams& m, const AnswerTrace& trace,
                     const Tensor& grad_final, ModelGrads& grads) {
  const std::size_t T = trace.fwd.caches.size();
  std::vector<Tensor> grad_hs(T, Tensor::vec(m.dim()));
  grad_hs.back() = grad_final;
  const bool need_inputs = m.train_embeddings;
  std::vector<Tensor> gx;
  gru_backward(*m.answer_encoder, trace.fwd.caches, grad_hs, grads.answer_encoder,
               need_inputs ? &gx : nullptr);
  if (need_inputs) {
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t row = static_cast<std::size_t>(trace.token_ids[t]) * grads.embeddings.cols;
      for (std::size_t j = 0; j < grads.embeddings.cols; ++j) {
        grads.embeddings.v[row + j] += gx[t].v[j];
      }
    }
  }
}

} // namespace ftsqa
