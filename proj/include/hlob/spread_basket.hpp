#pragma once

#include "hlob/emgchp.hpp"

#include <Eigen/Dense>

namespace hlob {

// Risk-neutral lognormal asset: spot and volatility (1/sqrt(year)).
struct AssetDiffusion {
    double s0 = 0.0;
    double sigma_bar = 0.0;
};

// Volatility of a one-dimensional Hawkes-based asset; same formula as hawkes_bs_vol.
[[nodiscard]] double sigma_bar(double lambda_inf, double mu_hat, double sigma_star, double a_star, double n_scale = 1.0);

struct SpreadContract {
    double maturity = 1.0;
    double rho = 0.0;
};

// Option to exchange strike_multiplier units of asset 2 for one unit of asset 1, given the
// total variance of ln(S1(T)/S2(T)). Discount-free: asset 2 is the numeraire.
[[nodiscard]] double exchange_price(double s1, double s2, double total_variance, double strike_multiplier = 1.0);

// Margrabe price with sigma_exp^2 = T (s1^2 + s2^2 - 2 rho s1 s2).
[[nodiscard]] double margrabe_price(const AssetDiffusion& asset1, const AssetDiffusion& asset2, double maturity,
                                    double rho, double strike_multiplier = 1.0);
[[nodiscard]] double margrabe_price(const AssetDiffusion& asset1, const AssetDiffusion& asset2,
                                    const SpreadContract& contract);

// sigma_exp = sqrt(C1^2 + C2^2 - 2 rho C1 C2) from a two-dimensional diffusion limit.
[[nodiscard]] double spread_exp_vol(const DiffusionApprox& approx);

// Spread option on a two-dimensional model with the correlation its C matrix implies.
[[nodiscard]] double spread_2d_emgchp(const EmgchpParams& params, double maturity);

struct BasketContract {
    Eigen::VectorXd weights;
    double strike = 0.0;
    int theta = 1;  // +1 call, -1 put
    double maturity = 1.0;
    double rate = 0.0;

    void validate(std::size_t dim) const;
};

// Intermediate quantities of the geometric-average approximation.
struct BasketQuote {
    double price = 0.0;
    double m_tilde = 0.0;
    double v_tilde_sq = 0.0;
    double adjusted_strike = 0.0;   // K*
    double arithmetic_mean = 0.0;   // E[A_basket(T)]
    double geometric_mean = 0.0;    // E[A_geometric(T)]
    Eigen::VectorXd tilde_weights;
};

// Price under the lognormal vols C~ and correlations of `approx`; throws if K* <= 0.
[[nodiscard]] BasketQuote basket_quote(const DiffusionApprox& approx, const Eigen::VectorXd& spots,
                                       const BasketContract& contract);
[[nodiscard]] double basket_price(const EmgchpParams& params, const BasketContract& contract);

} // namespace hlob
