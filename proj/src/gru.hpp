#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace ftsqa {

class Rng;

// One GRU cell:
//   r = σ(W_r x + U_r h_prev + b_r)
//   z = σ(W_z x + U_z h_prev + b_z)
//   h~ = tanh(W_h x + U_h (r ⊙ h_prev) + b_h)
//   h = z ⊙ h_prev + (1−z) ⊙ h~        (z gates the previous state)
// The initial state h0 is a learned parameter.
struct GRUParams {
  Tensor W_r, U_r, b_r;
  Tensor W_z, U_z, b_z;
  Tensor W_h, U_h, b_h;
  Tensor h0;

  static GRUParams zeros(std::size_t d, std::size_t d_in);

  std::size_t dim() const { return h0.rows; }
  std::size_t input_dim() const { return W_r.cols; }

  // stable parameter enumeration; used by the optimizer, checkpoints and
  // the gradient checker
  void for_each(const std::function<void(const std::string&, Tensor&)>& fn);
};

struct GRUStepCache {
  Tensor x, h_prev, r, z, h_tilde, h;
};

struct GRUGrads {
  Tensor W_r, U_r, b_r;
  Tensor W_z, U_z, b_z;
  Tensor W_h, U_h, b_h;
  Tensor h0;

  static GRUGrads zeros_like(const GRUParams& p);
  void for_each(const std::function<void(const std::string&, Tensor&)>& fn);
};

std::pair<Tensor, GRUStepCache> gru_step(const GRUParams& p, const Tensor& x,
                                         const Tensor& h_prev);

struct GRUForward {
  std::vector<Tensor> hs;
  std::vector<GRUStepCache> caches;
};

// unrolls from p.h0 over xs in order
GRUForward gru_forward(const GRUParams& p, std::span<const Tensor> xs);

// Exact reverse-mode gradients of Σ_t ⟨grad_hs[t], h^(t)⟩. Accumulates
// into `grads` (caller zeroes); grad w.r.t. each input lands in grad_xs
// when non-null, grad w.r.t. the initial state in grads.h0. Full BPTT —
// h_prev gradient flows through all three gates and the reset path.
void gru_backward(const GRUParams& p, std::span<const GRUStepCache> caches,
                  std::span<const Tensor> grad_hs, GRUGrads& grads,
                  std::vector<Tensor>* grad_xs);

} // namespace ftsqa
