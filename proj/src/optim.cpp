#include "stfnet/optim.hpp"

#include <algorithm>
#include <cmath>

#include "stfnet/error.hpp"

namespace stfnet::ad {

namespace {
constexpr double kScaleFloor = 1e-6;
}

void Adam::step(ParamStore& params, const Gradients& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (auto& [name, param] : params) {
    auto g = grads.find(name);
    if (g == grads.end()) continue;
    auto [it, fresh] = state_.try_emplace(name);
    if (fresh) {
      it->second.m = zeros_like(param.value);
      it->second.v = zeros_like(param.value);
    }
    auto p = planes(param.value);
    auto m = planes(it->second.m);
    auto v = planes(it->second.v);
    const auto gp = planes(g->second);
    if (gp.size() != p.size()) throw ShapeError("Adam: gradient kind differs for " + name);
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (gp[k].size() != p[k].size()) throw ShapeError("Adam: gradient shape differs for " + name);
      for (std::size_t i = 0; i < p[k].size(); ++i) {
        const double gi = gp[k][i];
        m[k][i] = config_.beta1 * m[k][i] + (1.0 - config_.beta1) * gi;
        v[k][i] = config_.beta2 * v[k][i] + (1.0 - config_.beta2) * gi * gi;
        p[k][i] -= config_.lr * (m[k][i] / c1) / (std::sqrt(v[k][i] / c2) + config_.eps);
      }
    }
  }
  params.apply_constraints();
}

GradcheckReport gradcheck(const Objective& objective, ParamStore params, double step,
                          double tolerance, std::size_t max_elements) {
  GradcheckReport report;
  report.step = step;
  report.tolerance = tolerance;
  const Evaluation base = objective(params, true);
  for (auto& [name, param] : params) {
    GradcheckEntry entry;
    entry.name = name;
    const auto analytic = planes(base.grads.at(name));
    auto values = planes(param.value);
    std::size_t total = 0;
    for (auto plane : values) total += plane.size();
    const std::size_t stride =
        max_elements == 0 || total <= max_elements ? 1 : (total + max_elements - 1) / max_elements;
    double max_g = 0.0, max_fd = 0.0;
    std::size_t flat = 0;
    for (std::size_t k = 0; k < values.size(); ++k)
      for (std::size_t i = 0; i < values[k].size(); ++i, ++flat) {
        if (flat % stride != 0) continue;
        const double saved = values[k][i];
        values[k][i] = saved + step;
        const Evaluation up = objective(params, false);
        values[k][i] = saved - step;
        const Evaluation down = objective(params, false);
        values[k][i] = saved;
        if (up.kink != base.kink || down.kink != base.kink) {
          ++entry.skipped;
          continue;
        }
        const double fd = (up.loss - down.loss) / (2.0 * step);
        const double g = analytic[k][i];
        entry.max_abs_error = std::max(entry.max_abs_error, std::abs(fd - g));
        max_g = std::max(max_g, std::abs(g));
        max_fd = std::max(max_fd, std::abs(fd));
        ++entry.checked;
      }
    // Floor keeps round-off in the differences from dominating parameters
    // whose gradient is essentially zero.
    const double scale = std::max({max_g, max_fd, kScaleFloor});
    entry.max_rel_error = entry.max_abs_error / scale;
    entry.pass = entry.max_rel_error <= tolerance;
    report.pass = report.pass && entry.pass;
    report.entries.push_back(entry);
  }
  return report;
}

}  // namespace stfnet::ad
