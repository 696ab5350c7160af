#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "stfnet/autograd.hpp"

namespace stfnet::ad {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam over every real plane of a ParamStore. Constraints
/// are re-applied after each step.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}
  void step(ParamStore& params, const Gradients& grads);
  std::size_t steps() const { return t_; }

 private:
  struct Moments {
    Value m, v;
  };
  AdamConfig config_;
  std::map<std::string, Moments> state_;
  std::size_t t_ = 0;
};

/// Loss, kink signature and (optionally) analytic gradients at `params`.
struct Evaluation {
  double loss = 0.0;
  std::uint64_t kink = 0;
  Gradients grads;
};
using Objective = std::function<Evaluation(const ParamStore& params, bool want_grad)>;

struct GradcheckEntry {
  std::string name;
  std::size_t checked = 0;
  /// Elements whose finite-difference stencil crossed a ReLU/max kink.
  std::size_t skipped = 0;
  double max_abs_error = 0.0;
  double max_rel_error = 0.0;
  bool pass = true;
};

struct GradcheckReport {
  double step = 1e-5;
  double tolerance = 1e-4;
  std::vector<GradcheckEntry> entries;
  bool pass = true;
};

/// Central differences on every real scalar of every parameter (or at most
/// `max_elements` per parameter, evenly strided). Relative error per
/// parameter is max|g - fd| / max(max|g|, max|fd|, 1e-6).
GradcheckReport gradcheck(const Objective& objective, ParamStore params, double step = 1e-5,
                          double tolerance = 1e-4, std::size_t max_elements = 0);

}  // namespace stfnet::ad
