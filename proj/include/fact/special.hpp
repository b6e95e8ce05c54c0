#pragma once

namespace fact {

// Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a),
// via the series / continued-fraction pair.
double regularized_gamma_q(double a, double x);

// Survival function of the chi-square distribution with 1 degree of
// freedom: P(X > x) = Q(1/2, x/2).
double chi_square_1df_sf(double x);

}  // namespace fact
