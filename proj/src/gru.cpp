#include "gru.hpp"

#include "error.hpp"

namespace ftsqa {

GRUParams GRUParams::zeros(std::size_t d, std::size_t d_in) {
  GRUParams p;
  p.W_r = Tensor::mat(d, d_in);
  p.U_r = Tensor::mat(d, d);
  p.b_r = Tensor::vec(d);
  p.W_z = Tensor::mat(d, d_in);
  p.U_z = Tensor::mat(d, d);
  p.b_z = Tensor::vec(d);
  p.W_h = Tensor::mat(d, d_in);
  p.U_h = Tensor::mat(d, d);
  p.b_h = Tensor::vec(d);
  p.h0 = Tensor::vec(d);
  return p;
}

void GRUParams::for_each(const std::function<void(const std::string&, Tensor&)>& fn) {
  fn("W_r", W_r);
  fn("U_r", U_r);
  fn("b_r", b_r);
  fn("W_z", W_z);
  fn("U_z", U_z);
  fn("b_z", b_z);
  fn("W_h", W_h);
  fn("U_h", U_h);
  fn("b_h", b_h);
  fn("h0", h0);
}

GRUGrads GRUGrads::zeros_like(const GRUParams& p) {
  GRUGrads g;
  g.W_r = Tensor::mat(p.W_r.rows, p.W_r.cols);
  g.U_r = Tensor::mat(p.U_r.rows, p.U_r.cols);
  g.b_r = Tensor::vec(p.b_r.rows);
  g.W_z = Tensor::mat(p.W_z.rows, p.W_z.cols);
  g.U_z = Tensor::mat(p.U_z.rows, p.U_z.cols);
  g.b_z = Tensor::vec(p.b_z.rows);
  g.W_h = Tensor::mat(p.W_h.rows, p.W_h.cols);
  g.U_h = Tensor::mat(p.U_h.rows, p.U_h.cols);
  g.b_h = Tensor::vec(p.b_h.rows);
  g.h0 = Tensor::vec(p.h0.rows);
  return g;
}

void GRUGrads::for_each(const std::function<void(const std::string&, Tensor&)>& fn) {
  fn("W_r", W_r);
  fn("U_r", U_r);
  fn("b_r", b_r);
  fn("W_z", W_z);
  fn("U_z", U_z);
  fn("b_z", b_z);
  fn("W_h", W_h);
  fn("U_h", U_h);
  fn("b_h", b_h);
  fn("h0", h0);
}

std::pair<Tensor, GRUStepCache> gru_step(const GRUParams& p, const Tensor& x,
                                         const Tensor& h_prev) {
  if (x.rows != p.input_dim() || h_prev.rows != p.dim()) {
    fail(ErrorKind::shape, "gru_step: x is " + x.shape_str() + ", h_prev is " +
                               h_prev.shape_str() + ", cell expects " +
                               std::to_string(p.input_dim()) + "/" +
                               std::to_string(p.dim()));
  }
  GRUStepCache c;
  c.x = x;
  c.h_prev = h_prev;

  Tensor ar = affine(p.W_r, x, p.b_r);
  axpy(1.0, affine(p.U_r, h_prev, Tensor::vec(p.dim())), ar);
  c.r = sigmoid(std::move(ar));

  Tensor az = affine(p.W_z, x, p.b_z);
  axpy(1.0, affine(p.U_z, h_prev, Tensor::vec(p.dim())), az);
  c.z = sigmoid(std::move(az));

  Tensor ah = affine(p.W_h, x, p.b_h);
  axpy(1.0, affine(p.U_h, hadamard(c.r, h_prev), Tensor::vec(p.dim())), ah);
  c.h_tilde = tanh_act(std::move(ah));

  Tensor h = Tensor::vec(p.dim());
  for (std::size_t i = 0; i < h.rows; ++i) {
    h.v[i] = c.z.v[i] * h_prev.v[i] + (1.0 - c.z.v[i]) * c.h_tilde.v[i];
  }
  c.h = h;
  return {std::move(h), std::move(c)};
}

GRUForward gru_forward(const GRUParams& p, std::span<const Tensor> xs) {
  if (xs.empty()) fail(ErrorKind::invalid_argument, "gru_forward: empty input sequence");
  GRUForward out;
  out.hs.reserve(xs.size());
  out.caches.reserve(xs.size());
  Tensor h = p.h0;
  for (const Tensor& x : xs) {
    auto [hn, cache] = gru_step(p, x, h);
    h = hn;
    out.hs.push_back(std::move(hn));
    out.caches.push_back(std::move(cache));
  }
  return out;
}

void gru_backward(const GRUParams& p, std::span<const GRUStepCache> caches,
                  std::span<const Tensor> grad_hs, GRUGrads& grads,
                  std::vector<Tensor>* grad_xs) {
  if (caches.size() != grad_hs.size()) {
    fail(ErrorKind::invalid_argument,
         "gru_backward: " + std::to_string(caches.size()) + " caches vs " +
             std::to_string(grad_hs.size()) + " upstream gradients");
  }
  const std::size_t d = p.dim();
  const std::size_t T = caches.size();
  if (grad_xs) grad_xs->assign(T, Tensor::vec(p.input_dim()));

  Tensor gh = Tensor::vec(d); // dL/dh flowing into step t from t+1
  for (std::size_t ti = T; ti-- > 0;) {
    const GRUStepCache& c = caches[ti];
    axpy(1.0, grad_hs[ti], gh);

    // h = z⊙h_prev + (1−z)⊙h~
    Tensor dz = Tensor::vec(d);
    Tensor dhtilde = Tensor::vec(d);
    Tensor ghprev = Tensor::vec(d);
    for (std::size_t i = 0; i < d; ++i) {
      dz.v[i] = gh.v[i] * (c.h_prev.v[i] - c.h_tilde.v[i]);
      dhtilde.v[i] = gh.v[i] * (1.0 - c.z.v[i]);
      ghprev.v[i] = gh.v[i] * c.z.v[i];
    }

    // candidate pre-activation: da_h = dh~ ⊙ (1 − h~²)
    Tensor dah = Tensor::vec(d);
    for (std::size_t i = 0; i < d; ++i) {
      dah.v[i] = dhtilde.v[i] * (1.0 - c.h_tilde.v[i] * c.h_tilde.v[i]);
    }
    add_outer(grads.W_h, dah, c.x);
    Tensor rh = hadamard(c.r, c.h_prev);
    add_outer(grads.U_h, dah, rh);
    axpy(1.0, dah, grads.b_h);

    // through U_h(r ⊙ h_prev)
    Tensor drh = Tensor::vec(d);
    add_matvec_t(drh, p.U_h, dah);
    Tensor dr = Tensor::vec(d);
    for (std::size_t i = 0; i < d; ++i) {
      dr.v[i] = drh.v[i] * c.h_prev.v[i];
      ghprev.v[i] += drh.v[i] * c.r.v[i];
    }

    // gate pre-activations: σ' = s(1−s)
    Tensor dar = Tensor::vec(d);
    Tensor daz = Tensor::vec(d);
    for (std::size_t i = 0; i < d; ++i) {
      dar.v[i] = dr.v[i] * c.r.v[i] * (1.0 - c.r.v[i]);
      daz.v[i] = dz.v[i] * c.z.v[i] * (1.0 - c.z.v[i]);
    }
    add_outer(grads.W_r, dar, c.x);
    add_outer(grads.U_r, dar, c.h_prev);
    axpy(1.0, dar, grads.b_r);
    add_outer(grads.W_z, daz, c.x);
    add_outer(grads.U_z, daz, c.h_prev);
    axpy(1.0, daz, grads.b_z);

    add_matvec_t(ghprev, p.U_r, dar);
    add_matvec_t(ghprev, p.U_z, daz);

    if (grad_xs) {
      Tensor& gx = (*grad_xs)[ti];
      add_matvec_t(gx, p.W_r, dar);
      add_matvec_t(gx, p.W_z, daz);
      add_matvec_t(gx, p.W_h, dah);
    }

    gh = std::move(ghprev);
  }
  axpy(1.0, gh, grads.h0);
}

} // namespace ftsqa
