#pragma once

#include <vector>

#include "greensec/common.hpp"

namespace greensec {

// Small dense MLP, tanh hidden layers, linear output, 64-bit throughout.
// Parameters live in one flat vector so optimizers, checkpoints, hashing and
// finite-difference checks all operate on the same storage.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<int> layer_sizes, Rng& rng);  // {in, h1, ..., out}

  const std::vector<int>& layers() const { return sizes_; }
  int in_dim() const { return sizes_.front(); }
  int out_dim() const { return sizes_.back(); }
  int n_params() const { return static_cast<int>(params_.size()); }
  const Vec& params() const { return params_; }
  Vec& params() { return params_; }
  std::uint64_t param_hash() const { return hash_vec(params_); }

  Eigen::Map<const Mat> weight(int layer) const;
  Eigen::Map<const Vec> bias(int layer) const;
  Eigen::Map<Mat> weight(int layer);
  Eigen::Map<Vec> bias(int layer);

  // Samples are columns.  The tape stores the input and each post-activation
  // layer output, as needed by the backward passes.
  Mat forward(const Mat& x, std::vector<Mat>* tape = nullptr) const;

  // Backpropagates dL/dout (columns = samples).  Adds parameter gradients to
  // grad (flat, same layout as params) when grad != nullptr; returns dL/dx
  // when want_input_grad.
  Mat backward(const std::vector<Mat>& tape, const Mat& g_out, Vec* grad,
               bool want_input_grad = false) const;

 private:
  std::vector<int> sizes_;
  std::vector<int> w_off_, b_off_;
  Vec params_;
};

// Adam on a flat parameter vector.
class Adam {
 public:
  Adam() = default;
  Adam(int n, double lr) : lr_(lr), m_(Vec::Zero(n)), v_(Vec::Zero(n)) {}

  // Descends along grad; pass the negated gradient to ascend.
  void step(Vec& params, const Vec& grad);
  double lr() const { return lr_; }

 private:
  double lr_ = 1e-3;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
  Vec m_, v_;
};

// Central finite-difference gradient of a scalar function of a flat
// parameter vector; used by tests to validate analytic gradients.
Vec finite_difference_gradient(const std::function<double(const Vec&)>& f, const Vec& at,
                               double h = 1e-6);

// max_i |a_i - b_i| / max(1, |a_i|, |b_i|)
double max_relative_error(const Vec& a, const Vec& b);

}  // namespace greensec
