#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "stformer/tape.hpp"

namespace stformer {

/// Builds a scalar loss on a fresh tape from the current parameter values.
using LossBuilder = std::function<Var(Tape&)>;

/// One coordinate whose relative error reached the reporting threshold.
struct CoordError {
  std::size_t param = 0;
  std::size_t coord = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_coord = 0;
  std::size_t coords_checked = 0;
  /// Coordinates with relative error >= report_tol, in visiting order.
  std::vector<CoordError> over_tol;
  /// False when the loss evaluated to a non-finite value; `failure` then names
  /// the offending parameter and coordinate.
  bool finite = true;
  std::string failure;

  bool passed(double tol) const { return finite && max_rel_error < tol; }
};

/// Compares reverse-mode gradients against central differences
/// (f(p + h) - f(p - h)) / 2h, one coordinate at a time. The per-coordinate
/// error is |a - n| / max(1e-8, |a| + |n|); the maximum is returned.
///
/// `params` are perturbed in place and restored. Analytic gradients are read
/// from the tape (Tape::grad_of), so `f` may bind them read-only.
GradCheckResult finite_diff_check(const LossBuilder& f, const std::vector<Tensor*>& params,
                                  double h = 1e-5, double report_tol = 1e-4);

/// Central difference of `f` in one coordinate of `param`.
double central_difference(const LossBuilder& f, Tensor& param, std::size_t coord, double h);

/// Classification of the over-tolerance coordinates of a check. Roundoff:
/// the absolute gap is at most 1e-9, the noise floor of a central difference
/// at h = 1e-5 in double. Kink: the gap closes at h = 1e-6 or 1e-7, so the
/// wider interval straddled a ReLU corner. Anything else is unexplained.
struct GradAudit {
  std::size_t roundoff = 0;
  std::size_t kink = 0;
  std::vector<std::string> unexplained;
};

GradAudit audit_gradcheck(const GradCheckResult& r, const LossBuilder& f,
                          const std::vector<Tensor*>& params);

}  // namespace stformer
