#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "srbrcnn/tensor.hpp"

namespace srbrcnn {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst;       // "name[i]" of the worst coordinate
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  size_t coords = 0;
  bool pass = false;
};

// Relative error with an absolute floor, so finite-difference noise on
// near-zero coordinates does not drown the signal.
inline double rel_err(double a, double n) {
  return std::fabs(a - n) / std::max({std::fabs(a), std::fabs(n), 1e-2});
}

// Central finite differences against precomputed analytic gradients.
// `f` re-evaluates the scalar objective from the current parameter values;
// each checked coordinate is perturbed in place and restored.
struct CheckedParam {
  std::string name;
  Tensor* value;
  const Tensor* analytic;
};

inline GradCheckReport grad_check(const std::function<double()>& f,
                                  const std::vector<CheckedParam>& params, double step,
                                  double tolerance) {
  GradCheckReport rep;
  for (const CheckedParam& p : params) {
    for (size_t i = 0; i < p.value->size(); ++i) {
      double saved = p.value->at(i);
      p.value->at(i) = saved + step;
      double up = f();
      p.value->at(i) = saved - step;
      double down = f();
      p.value->at(i) = saved;
      if (!std::isfinite(up) || !std::isfinite(down))
        throw NumericError("grad_check: objective is not finite near " + p.name);
      double numeric = (up - down) / (2.0 * step);
      double analytic = p.analytic->at(i);
      double e = rel_err(analytic, numeric);
      ++rep.coords;
      if (e > rep.max_rel_err) {
        rep.max_rel_err = e;
        rep.worst = p.name + "[" + std::to_string(i) + "]";
        rep.worst_analytic = analytic;
        rep.worst_numeric = numeric;
      }
    }
  }
  rep.pass = rep.max_rel_err < tolerance;
  return rep;
}

}  // namespace srbrcnn
