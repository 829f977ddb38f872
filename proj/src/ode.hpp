#pragma once

// Thin wrapper over Boost.Odeint's controlled Dormand-Prince 5(4) stepper.

#include <cmath>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "circadian/errors.hpp"

namespace circadian::detail {

using OdeState = std::vector<double>;

// Integrates y' = rhs(y, t) from t0 to t1 in place. Steps never exceed max_dt.
template <class Rhs>
void integrate_dopri(Rhs&& rhs, OdeState& y, double t0, double t1, double rtol, double atol,
                     double max_dt) {
  namespace odeint = boost::numeric::odeint;
  if (!(t1 > t0)) return;
  auto system = [&rhs](const OdeState& x, OdeState& dxdt, double t) { rhs(x, dxdt, t); };
  auto stepper =
      odeint::make_controlled(atol, rtol, max_dt, odeint::runge_kutta_dopri5<OdeState>());
  double dt = std::min(max_dt, t1 - t0);
  try {
    odeint::integrate_adaptive(stepper, system, y, t0, t1, dt);
  } catch (const odeint::step_adjustment_error& e) {
    throw NumericalError(std::string("ODE step adjustment failed: ") + e.what());
  } catch (const odeint::no_progress_error& e) {
    throw NumericalError(std::string("ODE solver made no progress: ") + e.what());
  }
  for (double v : y) {
    if (!std::isfinite(v)) throw NumericalError("ODE solution became non-finite");
  }
}

}  // namespace circadian::detail
