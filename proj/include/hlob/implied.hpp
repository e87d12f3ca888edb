#pragma once

namespace hlob {

struct ImpliedVolQuery {
    double price = 0.0;
    double spot = 0.0;
    double strike = 0.0;
    double rate = 0.0;
    double tau = 0.0;
};

// Volatility reproducing an observed call price. Safeguarded Newton on the log price with a
// bisection fallback; the initial bracket is [1e-8, 5], widened if the root lies outside.
// Throws NoSolutionError when the price is not strictly inside (S - K e^{-r tau})+ < c < S.
[[nodiscard]] double implied_vol(const ImpliedVolQuery& query);

// Order-flow moments implied by a volatility:
//   E = sigma^2 / (sigma*^2 + a*^2/(1 - mu)^2),  Var = sigma^2 / (sigma*^2 (1 - mu)^2 + a*^2).
struct ImpliedOrderFlow {
    double e_implied = 0.0;
    double var_implied = 0.0;
};

[[nodiscard]] ImpliedOrderFlow implied_order_flow(double sigma_hat_implied, double sigma_star, double a_star,
                                                  double mu_hat);

} // namespace hlob
