#pragma once

#include <cstddef>
#include <functional>
#include <random>
#include <string>

#include "stformer/ops.hpp"

namespace stformer {

using Rng = std::mt19937_64;

/// Callback receiving every parameter tensor with its dotted name.
using ParamVisitor = std::function<void(const std::string& name, Tensor& t)>;

/// x W + b with W[in x out].
struct Affine {
  Tensor weight;
  Tensor bias;

  /// Weights uniform in +-sqrt(1/in), bias zero.
  static Affine init(std::size_t in, std::size_t out, Rng& rng);
  Var apply(Var x) const;
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

/// 1-d convolution weights [C_out x C_in x k] and bias [C_out].
struct Conv {
  Tensor weight;
  Tensor bias;

  static Conv init(std::size_t c_in, std::size_t c_out, std::size_t k, Rng& rng);
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

/// Layer-norm gain and bias; initialized to ones and zeros.
struct Norm {
  Tensor gain;
  Tensor bias;

  static Norm init(std::size_t width);
  Var apply(Var x, double eps) const;
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

/// Uniform(+-sqrt(1/fan_in)) tensor of the given shape.
Tensor uniform_init(Shape shape, std::size_t fan_in, Rng& rng);

/// Binds a parameter read-only on the tape of `like`.
inline Var bind(const Tensor& t, Var like) { return like.tape().leaf(t); }

}  // namespace stformer
