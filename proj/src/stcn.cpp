#include "stformer/stcn.hpp"

#include <string>

#include "stformer/error.hpp"

namespace stformer {

TcnParams TcnParams::init(std::size_t channels, std::size_t n_layers, std::size_t kernel,
                          bool per_variable, Rng& rng) {
  TcnParams p;
  const std::size_t c_in = per_variable ? 1 : channels;
  for (std::size_t l = 0; l < n_layers; ++l) {
    TcnLayer layer;
    layer.conv1 = Conv::init(c_in, channels, kernel, rng);
    layer.conv2 = Conv::init(c_in, channels, kernel, rng);
    layer.dilation = std::size_t{1} << l;
    layer.per_variable = per_variable;
    p.layers.push_back(std::move(layer));
  }
  return p;
}

void TcnParams::visit(const std::string& prefix, const ParamVisitor& fn) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string base = prefix + "." + std::to_string(l);
    layers[l].conv1.visit(base + ".conv1", fn);
    layers[l].conv2.visit(base + ".conv2", fn);
  }
}

ScnParams ScnParams::init(std::size_t in_channels, std::size_t d_s,
                          const std::vector<std::size_t>& kernels, PaddingMode padding,
                          Rng& rng) {
  ScnParams p;
  p.padding = padding;
  std::size_t c_in = in_channels;
  for (std::size_t k : kernels) {
    ScnLayer layer;
    layer.kernel = k;
    for (auto& block : layer.blocks) {
      block = Conv::init(c_in, d_s, k, rng);
      c_in = d_s;
    }
    p.layers.push_back(std::move(layer));
  }
  return p;
}

void ScnParams::visit(const std::string& prefix, const ParamVisitor& fn) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    for (std::size_t b = 0; b < 3; ++b) {
      layers[l].blocks[b].visit(prefix + "." + std::to_string(l) + ".block" + std::to_string(b), fn);
    }
  }
}

StcnParams StcnParams::init(std::size_t M, std::size_t in_len, std::size_t F, std::size_t d_s,
                            std::size_t tcn_layers, std::size_t tcn_kernel,
                            bool tcn_per_variable, const std::vector<std::size_t>& scn_kernels,
                            PaddingMode padding, Rng& rng) {
  if (F % 2 != 0) throw ConfigError("STCN output width F must be even, got " + std::to_string(F));
  StcnParams p;
  p.tcn = TcnParams::init(M, tcn_layers, tcn_kernel, tcn_per_variable, rng);
  p.scn = ScnParams::init(in_len, d_s, scn_kernels, padding, rng);
  p.mlp1 = Affine::init(in_len, F / 2, rng);
  p.mlp2 = Affine::init(d_s, F / 2, rng);
  return p;
}

void StcnParams::visit(const std::string& prefix, const ParamVisitor& fn) {
  tcn.visit(prefix + ".tcn", fn);
  scn.visit(prefix + ".scn", fn);
  mlp1.visit(prefix + ".mlp1", fn);
  mlp2.visit(prefix + ".mlp2", fn);
}

namespace {

Var activate(Var h, DropoutContext drop) {
  h = relu(h);
  return drop.active() ? dropout(h, drop.rate, *drop.rng) : h;
}

}  // namespace

Var tcn_forward(Var x, const TcnParams& p, DropoutContext drop) {
  const std::size_t channels = x.value().rows();
  Var h = x;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const TcnLayer& layer = p.layers[l];
    const std::size_t c_in = layer.per_variable ? 1 : channels;
    for (const Conv* conv : {&layer.conv1, &layer.conv2}) {
      if (conv->weight.dim(0) != channels || conv->weight.dim(1) != c_in) {
        throw ConfigError("TCN layer " + std::to_string(l) + " weight " +
                          shape_string(conv->weight.shape()) + " does not preserve " +
                          std::to_string(channels) + " channels");
      }
    }
    Var y = causal_dilated_conv1d(h, bind(layer.conv1.weight, h), bind(layer.conv1.bias, h),
                                  layer.dilation, layer.per_variable);
    y = activate(y, drop);
    y = causal_dilated_conv1d(y, bind(layer.conv2.weight, h), bind(layer.conv2.bias, h),
                              layer.dilation, layer.per_variable);
    y = activate(y, drop);
    h = add(y, h);
  }
  return h;
}

Var scn_forward(Var x_t, const ScnParams& p) {
  const std::size_t length = x_t.value().cols();
  Var h = x_t;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const ScnLayer& layer = p.layers[l];
    if (layer.kernel > length) {
      throw ConfigError("SCN layer " + std::to_string(l) + " kernel width " +
                        std::to_string(layer.kernel) + " exceeds the " + std::to_string(length) +
                        " variables; set widths <= M (width 1 for a univariate series)");
    }
    for (const Conv& block : layer.blocks) {
      h = relu(circular_conv1d(h, bind(block.weight, h), bind(block.bias, h), p.padding));
    }
  }
  return h;
}

Var stcn_forward(Var x, const StcnParams& p, DropoutContext drop) {
  if (p.mlp1.bias.numel() != p.mlp2.bias.numel()) {
    throw ConfigError("STCN branch widths differ: " + std::to_string(p.mlp1.bias.numel()) +
                      " vs " + std::to_string(p.mlp2.bias.numel()) + " (F must be even)");
  }
  Var temporal = p.mlp1.apply(tcn_forward(x, p.tcn, drop));
  Var sequence = p.mlp2.apply(transpose(scn_forward(transpose(x), p.scn)));
  return concat_cols(temporal, sequence);
}

}  // namespace stformer
