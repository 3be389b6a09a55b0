#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gru.hpp"
#include "tensor.hpp"

namespace ftsqa {

enum class Variant { fts_brnn, fts_brnn_s };
enum class OutputMode { affine, concat };

// o^(t) = W_o f^(t) + U_o b^(t) + bias
struct OutputLayerParams {
  Tensor W_o, U_o, bias;
  static OutputLayerParams zeros(std::size_t d);
};

struct OutputGrads {
  Tensor W_o, U_o, bias;
  static OutputGrads zeros_like(const OutputLayerParams& p);
};

struct ModelParams {
  Variant variant = Variant::fts_brnn;
  OutputMode output_mode = OutputMode::affine;
  bool train_embeddings = false;

  GRUParams q_forward;
  GRUParams q_backward;
  std::optional<OutputLayerParams> out;     // absent in concat mode
  std::optional<GRUParams> answer_encoder;  // fts_brnn only; fts_brnn_s shares the BRNN
  Tensor embeddings;                        // |V| x embed_dim

  std::size_t dim() const { return q_forward.dim(); }
  std::size_t embed_dim() const { return embeddings.cols; }
  // d in affine mode, 2d in concat mode
  std::size_t output_dim() const {
    return output_mode == OutputMode::affine ? dim() : 2 * dim();
  }

  static ModelParams zeros(Variant v, OutputMode mode, std::size_t d,
                           std::size_t embed_dim, std::size_t vocab_size);

  // parameters the optimizer updates (embeddings only when trainable)
  void for_each_trainable(const std::function<void(const std::string&, Tensor&)>& fn);
  // every tensor, for checkpointing
  void for_each_tensor(const std::function<void(const std::string&, Tensor&)>& fn);
};

struct QuestionTrace {
  std::vector<int> token_ids;
  std::vector<Tensor> inputs; // embedded tokens, dropout mask applied
  std::vector<Tensor> mask;   // empty when no dropout
  GRUForward fwd;             // forward direction, input order
  GRUForward bwd;             // backward direction, reversed input order
  std::vector<Tensor> b;      // backward states re-aligned to token index
  std::vector<Tensor> outputs; // o^(t)
};

struct AnswerTrace {
  std::vector<int> token_ids;
  std::vector<Tensor> inputs;
  GRUForward fwd;
  Tensor final_state; // A_e
};

struct ModelGrads {
  GRUGrads q_forward, q_backward;
  OutputGrads out;
  GRUGrads answer_encoder;
  Tensor embeddings;
  static ModelGrads zeros_like(const ModelParams& m);
  // enumerates in the exact order of m.for_each_trainable
  void for_each_like(const ModelParams& m,
                     const std::function<void(const std::string&, Tensor&)>& fn);
};

// Bidirectional encode of a token sequence. `mask` (when non-null) is one
// multiplier vector per token, applied to the embedded inputs; an
// all-ones mask is bitwise identical to no mask.
QuestionTrace encode_question(const ModelParams& m, std::span<const int> token_ids,
                              const std::vector<Tensor>* mask);

// unidirectional answer encoder, final hidden state (fts_brnn only)
AnswerTrace encode_answer(const ModelParams& m, std::span<const int> token_ids);

// answer through the shared BRNN at fixed length T: truncates or pads
// with pad_id (fts_brnn_s only)
QuestionTrace encode_answer_shared(const ModelParams& m, std::span<const int> token_ids,
                                   std::size_t T, int pad_id);

// Backward through output layer, both GRU directions and (when trainable)
// the embedding rows this sequence touched. Accumulates into `grads`.
void backward_question(const ModelParams& m, const QuestionTrace& trace,
                       std::span<const Tensor> grad_outputs, ModelGrads& grads);

// Backward through the answer RNN from a gradient on the final state.
void backward_answer(const ModelParams& m, const AnswerTrace& trace,
                     const Tensor& grad_final, ModelGrads& grads);

std::vector<int> pad_or_truncate(std::span<const int> ids, std::size_t T, int pad_id);

} // namespace ftsqa
