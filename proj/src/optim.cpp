#include "stformer/optim.hpp"

#include <cmath>
#include <string>

#include "stformer/error.hpp"

namespace stformer {

Adam::Adam(std::vector<Tensor*> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
  if (!(cfg.lr >= 0.0) || !std::isfinite(cfg.lr)) {
    throw ConfigError("learning rate must be finite and >= 0, got " + std::to_string(cfg.lr));
  }
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0) || !(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(cfg.eps > 0.0)) throw ConfigError("Adam eps must be > 0");
  for (const Tensor* p : params_) {
    m_.emplace_back(p->numel(), 0.0);
    v_.emplace_back(p->numel(), 0.0);
  }
}

void Adam::step(const std::vector<std::vector<double>>& grads) {
  if (grads.size() != params_.size()) {
    throw DimensionError("Adam got " + std::to_string(grads.size()) + " gradients for " +
                         std::to_string(params_.size()) + " parameters");
  }
  ++t_;
  const double b1 = cfg_.beta1, b2 = cfg_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto data = params_[i]->data();
    const auto& g = grads[i];
    if (g.size() != data.size()) throw DimensionError("Adam gradient size mismatch at parameter " + std::to_string(i));
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < data.size(); ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      data[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

double grad_norm(const std::vector<std::vector<double>>& grads) {
  double s = 0.0;
  for (const auto& g : grads)
    for (double x : g) s += x * x;
  return std::sqrt(s);
}

double clip_grad_norm(std::vector<std::vector<double>>& grads, double max_norm) {
  if (!(max_norm > 0.0)) throw ConfigError("gradient clip norm must be > 0");
  const double norm = grad_norm(grads);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& g : grads)
      for (double& x : g) x *= scale;
  }
  return norm;
}

}  // namespace stformer
