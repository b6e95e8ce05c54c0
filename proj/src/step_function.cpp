#include "fact/step_function.hpp"

#include <algorithm>

namespace fact {

double StepFunction::operator()(double t) const {
  auto it = std::upper_bound(knots.begin(), knots.end(), t);
  if (it == knots.begin()) return left_value;
  return values[static_cast<size_t>(it - knots.begin()) - 1];
}

double StepFunction::eval_left(double t) const {
  auto it = std::lower_bound(knots.begin(), knots.end(), t);
  if (it == knots.begin()) return left_value;
  return values[static_cast<size_t>(it - knots.begin()) - 1];
}

}  // namespace fact
