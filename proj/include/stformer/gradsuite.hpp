#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "stformer/gradcheck.hpp"
#include "stformer/model_config.hpp"

namespace stformer {

/// One finite-difference check from the suite: a primitive op, a module or
/// the full model under one ablation variant.
struct GradSuiteEntry {
  std::string name;
  std::string kind;  // "op", "module" or "model"
  GradCheckResult result;
  GradAudit audit;

  bool passed(double tol) const { return result.passed(tol); }
  /// Every over-tolerance coordinate is roundoff or a ReLU corner.
  bool explained() const { return result.finite && audit.unexplained.empty(); }
};

struct GradSuiteOptions {
  std::uint64_t seed = 0;
  double tol = 1e-4;
  bool ops = true;
  bool modules = true;
  bool models = true;
};

std::vector<GradSuiteEntry> run_grad_suite(const GradSuiteOptions& opts = {});

/// Small configuration used for whole-model checks: M=3, T=8, K=2, F=8.
ModelConfig gradcheck_toy_config(AblationVariant variant);

/// MSE against a random target at a generic point (biases jittered away from
/// zero), with the input series included among the checked tensors.
GradSuiteEntry model_gradcheck(const ModelConfig& cfg, std::uint64_t seed);

/// Model checks over seeds [first, first + count) for one variant.
struct GradSweep {
  AblationVariant variant = AblationVariant::Original;
  std::size_t seeds = 0;
  std::size_t passed = 0;       // max rel error below tol
  std::size_t explained = 0;    // passed, or every miss accounted for by the audit
  double worst_rel_error = 0.0;
};

GradSweep sweep_model_gradcheck(AblationVariant variant, std::uint64_t first, std::size_t count,
                                double tol = 1e-4);

}  // namespace stformer
