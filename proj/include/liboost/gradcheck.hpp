#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "liboost/autodiff.hpp"

namespace liboost {

// Scalar-valued function built on a tape from its single input variable.
using TapedFunction = std::function<Var<double>(Tape<double>&, Var<double>)>;

// Max over coordinates of |analytic - central difference| / max(1, |analytic|),
// where the analytic gradient comes from reverse mode and the difference
// quotient uses step h.
inline double check_gradient(const TapedFunction& f, const Tensor<double>& point,
                             double h) {
  if (!(h > 0)) throw Error("check_gradient: step must be positive");

  Tape<double> tape;
  Var<double> x = tape.variable(point);
  Var<double> y = f(tape, x);
  Tensor<double> analytic(point.shape(), 0.0);
  // A constant function leaves no history to differentiate; its gradient
  // is zero.
  if (y.requires_grad()) {
    tape.backward(y);
    analytic = tape.grad(x);
  }

  auto evaluate = [&f](const Tensor<double>& at) {
    Tape<double> local;
    return f(local, local.constant(at)).value()[0];
  };

  double worst = 0.0;
  Tensor<double> probe = point;
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + h;
    const double up = evaluate(probe);
    probe[i] = saved - h;
    const double down = evaluate(probe);
    probe[i] = saved;
    const double numeric = (up - down) / (2 * h);
    const double err =
        std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i]));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace liboost
