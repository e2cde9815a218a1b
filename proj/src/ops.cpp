#include "stformer/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stformer/error.hpp"

namespace stformer {

namespace {

Tape& same_tape(Var a, Var b, const char* op) {
  if (&a.tape() != &b.tape()) throw UsageError(std::string(op) + ": operands on different tapes");
  return a.tape();
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
}

void require_matrix(const Tensor& a, const char* op) {
  if (a.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_string(a.shape()));
  }
}

void require_vector(const Tensor& v, std::size_t n, const char* op, const char* what) {
  if (v.rank() != 1 || v.dim(0) != n) {
    throw DimensionError(std::string(op) + ": " + what + " must have shape [" +
                         std::to_string(n) + "], got " + shape_string(v.shape()));
  }
}

// c[p x r] += a[p x q] * b[q x r], with optional transposes expressed by strides.
void gemm_acc(const double* a, const double* b, double* c, std::size_t p, std::size_t q,
              std::size_t r, bool trans_a, bool trans_b) {
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t k = 0; k < q; ++k) {
      const double aik = trans_a ? a[k * p + i] : a[i * q + k];
      if (aik == 0.0) continue;
      double* crow = c + i * r;
      if (trans_b) {
        for (std::size_t j = 0; j < r; ++j) crow[j] += aik * b[j * q + k];
      } else {
        const double* brow = b + k * r;
        for (std::size_t j = 0; j < r; ++j) crow[j] += aik * brow[j];
      }
    }
  }
}

}  // namespace

namespace kernels {

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner extents differ for " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  Tensor c({a.rows(), b.cols()});
  gemm_acc(a.data().data(), b.data().data(), c.data().data(), a.rows(), a.cols(), b.cols(), false,
           false);
  return c;
}

Tensor transpose(const Tensor& a) {
  require_matrix(a, "transpose");
  Tensor t({a.cols(), a.rows()});
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t.at(j, i) = a.at(i, j);
  return t;
}

}  // namespace kernels

Var matmul(Var a, Var b) {
  Tape& tape = same_tape(a, b, "matmul");
  Tensor out = kernels::matmul(a.value(), b.value());
  const std::size_t p = a.value().rows(), q = a.value().cols(), r = b.value().cols();
  return tape.record(std::move(out), [ai = a.id(), bi = b.id(), p, q, r](Tape& t, std::size_t self) {
    const double* dc = t.grad(self).data();
    // dA = dC * B^T ; dB = A^T * dC
    gemm_acc(dc, t.value(bi).data().data(), t.grad(ai).data(), p, r, q, false, true);
    gemm_acc(t.value(ai).data().data(), dc, t.grad(bi).data(), q, p, r, true, false);
  });
}

Var add(Var a, Var b) {
  Tape& tape = same_tape(a, b, "add");
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] += b.value()[i];
  return tape.record(std::move(out), [ai = a.id(), bi = b.id()](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    auto ga = t.grad(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    auto gb = t.grad(bi);
    for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
  });
}

Var sub(Var a, Var b) {
  Tape& tape = same_tape(a, b, "sub");
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] -= b.value()[i];
  return tape.record(std::move(out), [ai = a.id(), bi = b.id()](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    auto ga = t.grad(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    auto gb = t.grad(bi);
    for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
  });
}

Var hadamard(Var a, Var b) {
  Tape& tape = same_tape(a, b, "hadamard");
  require_same_shape(a.value(), b.value(), "hadamard");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= b.value()[i];
  return tape.record(std::move(out), [ai = a.id(), bi = b.id()](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    const auto& av = t.value(ai);
    const auto& bv = t.value(bi);
    auto ga = t.grad(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    auto gb = t.grad(bi);
    for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
  });
}

Var scale(Var a, double factor) {
  Tensor out = a.value();
  for (auto& v : out.data()) v *= factor;
  return a.tape().record(std::move(out), [ai = a.id(), factor](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    auto ga = t.grad(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += factor * g[i];
  });
}

Var add_row_bias(Var a, Var bias) {
  Tape& tape = same_tape(a, bias, "add_row_bias");
  require_matrix(a.value(), "add_row_bias");
  const std::size_t p = a.value().rows(), q = a.value().cols();
  require_vector(bias.value(), q, "add_row_bias", "bias");
  Tensor out = a.value();
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < q; ++j) out.at(i, j) += bias.value()[j];
  return tape.record(std::move(out), [ai = a.id(), bi = bias.id(), p, q](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    auto ga = t.grad(ai);
    auto gb = t.grad(bi);
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j < q; ++j) {
        ga[i * q + j] += g[i * q + j];
        gb[j] += g[i * q + j];
      }
    }
  });
}

Var affine(Var x, Var weight, Var bias) { return add_row_bias(matmul(x, weight), bias); }

Var relu(Var a) {
  Tensor out = a.value();
  for (auto& v : out.data()) v = v > 0.0 ? v : 0.0;
  return a.tape().record(std::move(out), [ai = a.id()](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    const auto& x = t.value(ai);
    auto ga = t.grad(ai);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (x[i] > 0.0) ga[i] += g[i];
  });
}

Var softmax_rows(Var a) {
  require_matrix(a.value(), "softmax_rows");
  const std::size_t p = a.value().rows(), q = a.value().cols();
  Tensor out = a.value();
  for (std::size_t i = 0; i < p; ++i) {
    double* row = &out.at(i, 0);
    const double mx = *std::max_element(row, row + q);
    double total = 0.0;
    for (std::size_t j = 0; j < q; ++j) {
      row[j] = std::exp(row[j] - mx);
      total += row[j];
    }
    for (std::size_t j = 0; j < q; ++j) row[j] /= total;
  }
  return a.tape().record(std::move(out), [ai = a.id(), p, q](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    const auto& y = t.value(self);
    auto ga = t.grad(ai);
    for (std::size_t i = 0; i < p; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < q; ++j) dot += g[i * q + j] * y[i * q + j];
      for (std::size_t j = 0; j < q; ++j) ga[i * q + j] += y[i * q + j] * (g[i * q + j] - dot);
    }
  });
}

Var layer_norm_rows(Var a, Var gain, Var bias, double eps) {
  Tape& tape = same_tape(a, gain, "layer_norm_rows");
  require_matrix(a.value(), "layer_norm_rows");
  if (!(eps > 0.0)) throw ConfigError("layer_norm_rows: eps must be positive");
  const std::size_t p = a.value().rows(), q = a.value().cols();
  require_vector(gain.value(), q, "layer_norm_rows", "gain");
  require_vector(bias.value(), q, "layer_norm_rows", "bias");

  Tensor xhat({p, q});
  std::vector<double> inv_std(p);
  Tensor out({p, q});
  const auto& x = a.value();
  for (std::size_t i = 0; i < p; ++i) {
    double mu = 0.0;
    for (std::size_t j = 0; j < q; ++j) mu += x.at(i, j);
    mu /= static_cast<double>(q);
    double var = 0.0;
    for (std::size_t j = 0; j < q; ++j) var += (x.at(i, j) - mu) * (x.at(i, j) - mu);
    var /= static_cast<double>(q);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < q; ++j) {
      xhat.at(i, j) = (x.at(i, j) - mu) * inv_std[i];
      out.at(i, j) = xhat.at(i, j) * gain.value()[j] + bias.value()[j];
    }
  }
  return tape.record(std::move(out), [ai = a.id(), gi = gain.id(), bi = bias.id(), p, q,
                                      xhat = std::move(xhat),
                                      inv_std = std::move(inv_std)](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    const auto& gv = t.value(gi);
    auto ga = t.grad(ai);
    auto gg = t.grad(gi);
    auto gb = t.grad(bi);
    std::vector<double> dxhat(q);
    for (std::size_t i = 0; i < p; ++i) {
      double mean_d = 0.0, mean_dx = 0.0;
      for (std::size_t j = 0; j < q; ++j) {
        const double gij = g[i * q + j];
        gg[j] += gij * xhat.at(i, j);
        gb[j] += gij;
        dxhat[j] = gij * gv[j];
        mean_d += dxhat[j];
        mean_dx += dxhat[j] * xhat.at(i, j);
      }
      mean_d /= static_cast<double>(q);
      mean_dx /= static_cast<double>(q);
      for (std::size_t j = 0; j < q; ++j) {
        ga[i * q + j] += inv_std[i] * (dxhat[j] - mean_d - xhat.at(i, j) * mean_dx);
      }
    }
  });
}

namespace {

struct ConvDims {
  std::size_t c_in, c_out, k, len;
};

ConvDims conv_dims(const Tensor& x, const Tensor& w, const Tensor& b, const char* op,
                   bool depthwise = false) {
  require_matrix(x, op);
  if (w.rank() != 3) {
    throw DimensionError(std::string(op) + ": weight must be [C_out x C_in x k], got " +
                         shape_string(w.shape()));
  }
  ConvDims d{x.rows(), w.dim(0), w.dim(2), x.cols()};
  if (depthwise ? (w.dim(1) != 1 || d.c_out != d.c_in) : w.dim(1) != d.c_in) {
    throw DimensionError(std::string(op) + ": weight " + shape_string(w.shape()) +
                         " does not take input " + shape_string(x.shape()));
  }
  if (d.k == 0) throw ConfigError(std::string(op) + ": kernel width must be >= 1");
  require_vector(b, d.c_out, op, "bias");
  return d;
}

}  // namespace

Var causal_dilated_conv1d(Var x, Var w, Var b, std::size_t dilation, bool depthwise) {
  Tape& tape = same_tape(x, w, "causal_dilated_conv1d");
  if (dilation == 0) throw ConfigError("causal_dilated_conv1d: dilation must be >= 1");
  const ConvDims d =
      conv_dims(x.value(), w.value(), b.value(), "causal_dilated_conv1d", depthwise);
  // Input channels read by output channel c: all of them, or only c itself.
  const std::size_t w_in = depthwise ? 1 : d.c_in;
  const auto& xv = x.value();
  const auto& wv = w.value();
  Tensor out({d.c_out, d.len});
  for (std::size_t c = 0; c < d.c_out; ++c) {
    const std::size_t first = depthwise ? c : 0;
    for (std::size_t t = 0; t < d.len; ++t) {
      double acc = b.value()[c];
      for (std::size_t wi = 0; wi < w_in; ++wi) {
        for (std::size_t j = 0; j < d.k; ++j) {
          const std::size_t back = (d.k - 1 - j) * dilation;
          if (back > t) continue;
          acc += wv.at(c, wi, j) * xv.at(first + wi, t - back);
        }
      }
      out.at(c, t) = acc;
    }
  }
  return tape.record(std::move(out), [xi = x.id(), wi_id = w.id(), bi = b.id(), d, dilation,
                                      depthwise, w_in](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    const auto& xv = t.value(xi);
    const auto& wv = t.value(wi_id);
    auto gx = t.grad(xi);
    auto gw = t.grad(wi_id);
    auto gb = t.grad(bi);
    for (std::size_t c = 0; c < d.c_out; ++c) {
      const std::size_t first = depthwise ? c : 0;
      for (std::size_t s = 0; s < d.len; ++s) {
        const double go = g[c * d.len + s];
        if (go == 0.0) continue;
        gb[c] += go;
        for (std::size_t wi = 0; wi < w_in; ++wi) {
          for (std::size_t j = 0; j < d.k; ++j) {
            const std::size_t back = (d.k - 1 - j) * dilation;
            if (back > s) continue;
            const std::size_t src = s - back;
            gx[(first + wi) * d.len + src] += wv.at(c, wi, j) * go;
            gw[(c * w_in + wi) * d.k + j] += xv.at(first + wi, src) * go;
          }
        }
      }
    }
  });
}

Var circular_conv1d(Var x, Var w, Var b, PaddingMode mode) {
  Tape& tape = same_tape(x, w, "circular_conv1d");
  const ConvDims d = conv_dims(x.value(), w.value(), b.value(), "circular_conv1d");
  if (d.k > d.len) {
    throw ConfigError("circular_conv1d: kernel width " + std::to_string(d.k) +
                      " exceeds sequence length " + std::to_string(d.len));
  }
  const bool wrap = mode == PaddingMode::Circular;
  const auto& xv = x.value();
  const auto& wv = w.value();
  Tensor out({d.c_out, d.len});
  for (std::size_t c = 0; c < d.c_out; ++c) {
    for (std::size_t t = 0; t < d.len; ++t) {
      double acc = b.value()[c];
      for (std::size_t i = 0; i < d.c_in; ++i) {
        for (std::size_t j = 0; j < d.k; ++j) {
          std::size_t src = t + j;
          if (src >= d.len) {
            if (!wrap) continue;
            src -= d.len;
          }
          acc += wv.at(c, i, j) * xv.at(i, src);
        }
      }
      out.at(c, t) = acc;
    }
  }
  return tape.record(std::move(out), [xi = x.id(), wi = w.id(), bi = b.id(), d,
                                      wrap](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    const auto& xv = t.value(xi);
    const auto& wv = t.value(wi);
    auto gx = t.grad(xi);
    auto gw = t.grad(wi);
    auto gb = t.grad(bi);
    for (std::size_t c = 0; c < d.c_out; ++c) {
      for (std::size_t s = 0; s < d.len; ++s) {
        const double go = g[c * d.len + s];
        if (go == 0.0) continue;
        gb[c] += go;
        for (std::size_t i = 0; i < d.c_in; ++i) {
          for (std::size_t j = 0; j < d.k; ++j) {
            std::size_t src = s + j;
            if (src >= d.len) {
              if (!wrap) continue;
              src -= d.len;
            }
            gx[i * d.len + src] += wv.at(c, i, j) * go;
            gw[(c * d.c_in + i) * d.k + j] += xv.at(i, src) * go;
          }
        }
      }
    }
  });
}

Var concat_cols(Var a, Var b) {
  Tape& tape = same_tape(a, b, "concat_cols");
  const auto& av = a.value();
  const auto& bv = b.value();
  require_matrix(av, "concat_cols");
  require_matrix(bv, "concat_cols");
  if (av.rows() != bv.rows()) {
    throw DimensionError("concat_cols: row counts differ for " + shape_string(av.shape()) +
                         " and " + shape_string(bv.shape()));
  }
  const std::size_t p = av.rows(), q1 = av.cols(), q2 = bv.cols();
  Tensor out({p, q1 + q2});
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < q1; ++j) out.at(i, j) = av.at(i, j);
    for (std::size_t j = 0; j < q2; ++j) out.at(i, q1 + j) = bv.at(i, j);
  }
  return tape.record(std::move(out), [ai = a.id(), bi = b.id(), p, q1, q2](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    auto ga = t.grad(ai);
    auto gb = t.grad(bi);
    const std::size_t q = q1 + q2;
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j < q1; ++j) ga[i * q1 + j] += g[i * q + j];
      for (std::size_t j = 0; j < q2; ++j) gb[i * q2 + j] += g[i * q + q1 + j];
    }
  });
}

Var transpose(Var a) {
  Tensor out = kernels::transpose(a.value());
  const std::size_t p = a.value().rows(), q = a.value().cols();
  return a.tape().record(std::move(out), [ai = a.id(), p, q](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    auto ga = t.grad(ai);
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < q; ++j) ga[i * q + j] += g[j * p + i];
  });
}

Var sum(Var a) {
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  return a.tape().record(Tensor::scalar(total), [ai = a.id()](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    for (auto& v : t.grad(ai)) v += g;
  });
}

Var mean(Var a) {
  const auto n = static_cast<double>(a.value().numel());
  if (n == 0) throw DimensionError("mean of an empty tensor");
  return scale(sum(a), 1.0 / n);
}

Var mse_loss(Var pred, Var target) {
  Var diff = sub(pred, target);
  return mean(hadamard(diff, diff));
}

Var dropout(Var a, double rate, std::mt19937_64& rng) {
  if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout rate must be in [0, 1)");
  if (rate == 0.0) return a;
  std::bernoulli_distribution keep(1.0 - rate);
  Tensor mask(a.value().shape());
  for (auto& m : mask.data()) m = keep(rng) ? 1.0 / (1.0 - rate) : 0.0;
  return hadamard(a, a.tape().constant(std::move(mask)));
}

}  // namespace stformer
