#pragma once

#include <vector>

namespace fact {

// Right-continuous piecewise-constant function of time. Used for
// Kaplan-Meier curves, censoring-distribution estimates and the Breslow
// cumulative baseline hazard.
struct StepFunction {
  std::vector<double> knots;   // strictly increasing
  std::vector<double> values;  // one per knot
  double left_value = 1.0;     // value for t below the first knot

  // Value at the largest knot <= t, else left_value. Flat extension
  // beyond the last knot.
  double operator()(double t) const;

  // Left limit: value at the largest knot strictly below t.
  double eval_left(double t) const;
};

}  // namespace fact
