#include "stformer/layers.hpp"

#include <cmath>

namespace stformer {

Tensor uniform_init(Shape shape, std::size_t fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : t.data()) v = dist(rng);
  return t;
}

Affine Affine::init(std::size_t in, std::size_t out, Rng& rng) {
  return Affine{uniform_init({in, out}, in, rng), Tensor({out})};
}

Var Affine::apply(Var x) const { return affine(x, bind(weight, x), bind(bias, x)); }

void Affine::visit(const std::string& prefix, const ParamVisitor& fn) {
  fn(prefix + ".weight", weight);
  fn(prefix + ".bias", bias);
}

Conv Conv::init(std::size_t c_in, std::size_t c_out, std::size_t k, Rng& rng) {
  return Conv{uniform_init({c_out, c_in, k}, c_in * k, rng), Tensor({c_out})};
}

void Conv::visit(const std::string& prefix, const ParamVisitor& fn) {
  fn(prefix + ".weight", weight);
  fn(prefix + ".bias", bias);
}

Norm Norm::init(std::size_t width) { return Norm{Tensor({width}, 1.0), Tensor({width})}; }

Var Norm::apply(Var x, double eps) const {
  return layer_norm_rows(x, bind(gain, x), bind(bias, x), eps);
}

void Norm::visit(const std::string& prefix, const ParamVisitor& fn) {
  fn(prefix + ".gain", gain);
  fn(prefix + ".bias", bias);
}

}  // namespace stformer
