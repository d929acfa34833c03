#include "greensec/nets.hpp"

namespace greensec {

Mlp::Mlp(std::vector<int> layer_sizes, Rng& rng) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw ArgumentError("mlp: need at least input and output layers");
  int total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    w_off_.push_back(total);
    total += sizes_[l] * sizes_[l + 1];
    b_off_.push_back(total);
    total += sizes_[l + 1];
  }
  params_ = Vec::Zero(total);
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const double bound = std::sqrt(6.0 / (sizes_[l] + sizes_[l + 1]));
    std::uniform_real_distribution<double> u(-bound, bound);
    auto w = weight(static_cast<int>(l));
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = u(rng);
  }
}

Eigen::Map<const Mat> Mlp::weight(int layer) const {
  return {params_.data() + w_off_[static_cast<std::size_t>(layer)], sizes_[static_cast<std::size_t>(layer) + 1],
          sizes_[static_cast<std::size_t>(layer)]};
}

Eigen::Map<const Vec> Mlp::bias(int layer) const {
  return {params_.data() + b_off_[static_cast<std::size_t>(layer)], sizes_[static_cast<std::size_t>(layer) + 1]};
}

Eigen::Map<Mat> Mlp::weight(int layer) {
  return {params_.data() + w_off_[static_cast<std::size_t>(layer)], sizes_[static_cast<std::size_t>(layer) + 1],
          sizes_[static_cast<std::size_t>(layer)]};
}

Eigen::Map<Vec> Mlp::bias(int layer) {
  return {params_.data() + b_off_[static_cast<std::size_t>(layer)], sizes_[static_cast<std::size_t>(layer) + 1]};
}

Mat Mlp::forward(const Mat& x, std::vector<Mat>* tape) const {
  if (x.rows() != in_dim()) throw ArgumentError("mlp: input dimension mismatch");
  if (tape) {
    tape->clear();
    tape->push_back(x);
  }
  Mat h = x;
  const int n_layers = static_cast<int>(sizes_.size()) - 1;
  for (int l = 0; l < n_layers; ++l) {
    Mat z = (weight(l) * h).colwise() + bias(l);
    if (l + 1 < n_layers) z = z.array().tanh();
    h = std::move(z);
    if (tape && l + 1 < n_layers) tape->push_back(h);
  }
  return h;
}

Mat Mlp::backward(const std::vector<Mat>& tape, const Mat& g_out, Vec* grad,
                  bool want_input_grad) const {
  const int n_layers = static_cast<int>(sizes_.size()) - 1;
  if (static_cast<int>(tape.size()) != n_layers)
    throw ArgumentError("mlp: tape does not match network depth");
  Mat g = g_out;  // dL/d(pre-activation) of the current layer, output is linear
  for (int l = n_layers - 1; l >= 0; --l) {
    const Mat& h_prev = tape[static_cast<std::size_t>(l)];
    if (grad) {
      Eigen::Map<Mat> dW(grad->data() + w_off_[static_cast<std::size_t>(l)],
                         sizes_[static_cast<std::size_t>(l) + 1], sizes_[static_cast<std::size_t>(l)]);
      Eigen::Map<Vec> db(grad->data() + b_off_[static_cast<std::size_t>(l)],
                         sizes_[static_cast<std::size_t>(l) + 1]);
      dW.noalias() += g * h_prev.transpose();
      db.noalias() += g.rowwise().sum();
    }
    if (l == 0 && !want_input_grad) return {};
    Mat gh = weight(l).transpose() * g;
    if (l > 0) g = gh.array() * (1.0 - tape[static_cast<std::size_t>(l)].array().square());
    else return gh;
  }
  return {};
}

void Adam::step(Vec& params, const Vec& grad) {
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = (beta2_ * v_.array() + (1.0 - beta2_) * grad.array().square()).matrix();
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -= lr_ * (m_.array() / bc1) / ((v_.array() / bc2).sqrt() + eps_);
}

Vec finite_difference_gradient(const std::function<double(const Vec&)>& f, const Vec& at,
                               double h) {
  Vec g(at.size());
  Vec x = at;
  for (int i = 0; i < at.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double fp = f(x);
    x[i] = x0 - h;
    const double fm = f(x);
    x[i] = x0;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

double max_relative_error(const Vec& a, const Vec& b) {
  double worst = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    const double denom = std::max({1.0, std::abs(a[i]), std::abs(b[i])});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

}  // namespace greensec
