#include "tensor.hpp"

#include <cmath>

#include "error.hpp"

namespace ftsqa {

std::string Tensor::shape_str() const {
  if (matrix) return std::to_string(rows) + "x" + std::to_string(cols);
  return std::to_string(rows);
}

Tensor affine(const Tensor& W, const Tensor& x, const Tensor& b) {
  if (!W.matrix || x.matrix || b.matrix || W.cols != x.rows || W.rows != b.rows) {
    fail(ErrorKind::shape, "affine: W is " + W.shape_str() + ", x is " +
                               x.shape_str() + ", b is " + b.shape_str());
  }
  Tensor y = Tensor::vec(W.rows);
  for (std::size_t i = 0; i < W.rows; ++i) {
    double acc = 0.0;
    const double* row = &W.v[i * W.cols];
    for (std::size_t j = 0; j < W.cols; ++j) acc += row[j] * x.v[j];
    y.v[i] = acc + b.v[i];
  }
  return y;
}

static double sigmoid1(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor sigmoid(Tensor t) {
  for (double& x : t.v) x = sigmoid1(x);
  return t;
}

Tensor tanh_act(Tensor t) {
  for (double& x : t.v) x = std::tanh(x);
  return t;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    fail(ErrorKind::shape, "hadamard: " + a.shape_str() + " vs " + b.shape_str());
  }
  Tensor y = a;
  for (std::size_t i = 0; i < y.v.size(); ++i) y.v[i] *= b.v[i];
  return y;
}

double dot(const Tensor& a, const Tensor& b) {
  if (a.matrix || b.matrix || a.rows != b.rows) {
    fail(ErrorKind::shape, "dot: " + a.shape_str() + " vs " + b.shape_str());
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.rows; ++i) acc += a.v[i] * b.v[i];
  return acc;
}

Tensor numerical_gradient(const std::function<double(const Tensor&)>& f,
                          const Tensor& x, double step) {
  if (!(step > 0.0)) fail(ErrorKind::invalid_argument, "numerical_gradient: step must be > 0");
  Tensor probe = x;
  Tensor g = x;
  g.set_zero();
  for (std::size_t i = 0; i < x.v.size(); ++i) {
    const double x0 = x.v[i];
    probe.v[i] = x0 + step;
    const double fp = f(probe);
    probe.v[i] = x0 - step;
    const double fm = f(probe);
    probe.v[i] = x0;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      fail(ErrorKind::numeric, "numerical_gradient: non-finite evaluation at coordinate " +
                                   std::to_string(i));
    }
    g.v[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

void axpy(double a, const Tensor& x, Tensor& y) {
  if (!x.same_shape(y)) {
    fail(ErrorKind::shape, "axpy: " + x.shape_str() + " vs " + y.shape_str());
  }
  for (std::size_t i = 0; i < y.v.size(); ++i) y.v[i] += a * x.v[i];
}

void add_outer(Tensor& G, const Tensor& g, const Tensor& x) {
  if (!G.matrix || G.rows != g.rows || G.cols != x.rows) {
    fail(ErrorKind::shape, "add_outer: G is " + G.shape_str() + ", g is " +
                               g.shape_str() + ", x is " + x.shape_str());
  }
  for (std::size_t i = 0; i < G.rows; ++i) {
    double* row = &G.v[i * G.cols];
    const double gi = g.v[i];
    for (std::size_t j = 0; j < G.cols; ++j) row[j] += gi * x.v[j];
  }
}

void add_matvec_t(Tensor& y, const Tensor& W, const Tensor& g) {
  if (!W.matrix || W.rows != g.rows || W.cols != y.rows) {
    fail(ErrorKind::shape, "add_matvec_t: W is " + W.shape_str() + ", g is " +
                               g.shape_str() + ", y is " + y.shape_str());
  }
  for (std::size_t i = 0; i < W.rows; ++i) {
    const double* row = &W.v[i * W.cols];
    const double gi = g.v[i];
    for (std::size_t j = 0; j < W.cols; ++j) y.v[j] += row[j] * gi;
  }
}

bool all_finite(const Tensor& t) {
  for (double x : t.v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

double max_abs(const Tensor& t) {
  double m = 0.0;
  for (double x : t.v) m = std::max(m, std::fabs(x));
  return m;
}

double norm2(const Tensor& t) {
  double acc = 0.0;
  for (double x : t.v) acc += x * x;
  return std::sqrt(acc);
}

} // namespace ftsqa
