#include "stformer/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "stformer/error.hpp"

namespace stformer {

namespace {

double evaluate(const LossBuilder& f) {
  Tape tape;
  return f(tape).value().item();
}

}  // namespace

double central_difference(const LossBuilder& f, Tensor& param, std::size_t coord, double h) {
  const double orig = param[coord];
  param[coord] = orig + h;
  const double up = evaluate(f);
  param[coord] = orig - h;
  const double down = evaluate(f);
  param[coord] = orig;
  return (up - down) / (2.0 * h);
}

GradCheckResult finite_diff_check(const LossBuilder& f, const std::vector<Tensor*>& params,
                                  double h, double report_tol) {
  if (!(h > 0.0)) throw UsageError("finite_diff_check: step must be positive");
  GradCheckResult result;

  std::vector<std::vector<double>> analytic;
  {
    Tape tape;
    Var loss = f(tape);
    if (!std::isfinite(loss.value().item())) {
      result.finite = false;
      result.failure = "loss is non-finite at the unperturbed point";
      return result;
    }
    tape.backward(loss);
    for (const Tensor* p : params) {
      auto g = tape.grad_of(*p);
      // Unbound parameters are disconnected from the loss.
      analytic.emplace_back(g.empty() ? std::vector<double>(p->numel(), 0.0)
                                      : std::vector<double>(g.begin(), g.end()));
    }
  }

  for (std::size_t pi = 0; pi < params.size() && result.finite; ++pi) {
    Tensor& p = *params[pi];
    for (std::size_t c = 0; c < p.numel(); ++c) {
      const double orig = p[c];
      p[c] = orig + h;
      const double up = evaluate(f);
      p[c] = orig - h;
      const double down = evaluate(f);
      p[c] = orig;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        result.finite = false;
        result.failure = "non-finite loss when perturbing parameter " + std::to_string(pi) +
                         " coordinate " + std::to_string(c);
        result.worst_param = pi;
        result.worst_coord = c;
        break;
      }
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[pi][c];
      const double err = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      ++result.coords_checked;
      if (err >= report_tol) result.over_tol.push_back({pi, c, a, numeric, err});
      if (err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst_param = pi;
        result.worst_coord = c;
      }
    }
  }

  return result;
}

GradAudit audit_gradcheck(const GradCheckResult& r, const LossBuilder& f,
                          const std::vector<Tensor*>& params) {
  constexpr double kRoundoff = 1e-9;
  GradAudit audit;
  for (const CoordError& e : r.over_tol) {
    if (std::abs(e.analytic - e.numeric) <= kRoundoff) {
      ++audit.roundoff;
      continue;
    }
    bool closed = false;
    for (double h : {1e-6, 1e-7}) {
      const double n = central_difference(f, *params[e.param], e.coord, h);
      const double gap = std::abs(e.analytic - n);
      if (gap <= 1e-4 * (std::abs(e.analytic) + std::abs(n)) || gap <= 10 * kRoundoff) closed = true;
    }
    if (closed) {
      ++audit.kink;
    } else {
      audit.unexplained.push_back("param " + std::to_string(e.param) + " coord " + std::to_string(e.coord) +
                                  ": analytic " + std::to_string(e.analytic) + " numeric " +
                                  std::to_string(e.numeric));
    }
  }
  return audit;
}

}  // namespace stformer
