#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

namespace ftsqa {

// Dense rank-1/rank-2 array of doubles, row-major. Substrate for every
// parameter and activation in the toolkit.
struct Tensor {
  std::size_t rows = 0;
  std::size_t cols = 1;
  bool matrix = false; // rank 2 when true
  std::vector<double> v;

  Tensor() = default;

  static Tensor vec(std::size_t n) {
    Tensor t;
    t.rows = n;
    t.v.assign(n, 0.0);
    return t;
  }

  static Tensor mat(std::size_t r, std::size_t c) {
    Tensor t;
    t.rows = r;
    t.cols = c;
    t.matrix = true;
    t.v.assign(r * c, 0.0);
    return t;
  }

  static Tensor of(std::initializer_list<double> xs) {
    Tensor t;
    t.rows = xs.size();
    t.v.assign(xs);
    return t;
  }

  std::size_t size() const { return v.size(); }
  double& operator[](std::size_t i) { return v[i]; }
  double operator[](std::size_t i) const { return v[i]; }
  double& at(std::size_t i, std::size_t j) { return v[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return v[i * cols + j]; }

  bool same_shape(const Tensor& o) const {
    return rows == o.rows && cols == o.cols && matrix == o.matrix;
  }

  std::string shape_str() const;
  void set_zero() { v.assign(v.size(), 0.0); }
};

// W·x + b, rows accumulated left to right (fixed order keeps runs
// bit-reproducible).
Tensor affine(const Tensor& W, const Tensor& x, const Tensor& b);

// elementwise 1/(1+exp(-x)), evaluated in the overflow-safe branch form
Tensor sigmoid(Tensor t);

Tensor tanh_act(Tensor t);

// elementwise product, shapes must match exactly
Tensor hadamard(const Tensor& a, const Tensor& b);

// Σ a_i b_i, left-to-right
double dot(const Tensor& a, const Tensor& b);

// central differences (f(x+h e_i) - f(x-h e_i)) / 2h per coordinate
Tensor numerical_gradient(const std::function<double(const Tensor&)>& f,
                          const Tensor& x, double step);

// in-place kernels used by the backward passes
void axpy(double a, const Tensor& x, Tensor& y);          // y += a*x
void add_outer(Tensor& G, const Tensor& g, const Tensor& x); // G += g xᵀ
void add_matvec_t(Tensor& y, const Tensor& W, const Tensor& g); // y += Wᵀ g

bool all_finite(const Tensor& t);
double max_abs(const Tensor& t);
double norm2(const Tensor& t);

} // namespace ftsqa
