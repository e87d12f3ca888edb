#pragma once

#include "hlob/emgchp.hpp"
#include "hlob/european.hpp"
#include "hlob/spread_basket.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>

namespace hlob {

struct McEstimate {
    double price = 0.0;
    double std_error = 0.0;
    std::size_t paths = 0;  // payoff evaluations actually used
    std::uint64_t seed = 0;
};

struct McOptions {
    std::size_t paths = 1'000'000;  // at least 10^4; rounded up to even under antithetic sampling
    std::uint64_t seed = 0;
    bool antithetic = true;
};

// Terminal draws S_T = S exp((r - sigma^2/2) T + sigma sqrt(T) Z), discounted payoff at t = 0.
[[nodiscard]] McEstimate mc_euro(double sigma_hat, const EuroContract& contract, double spot, const McOptions& options);

// (S1_T - S2_T)+ with no discounting, simulated under the measure with asset 2 as numeraire.
[[nodiscard]] McEstimate mc_exchange(double s1, double s2, double vol1, double vol2, double rho, double maturity,
                                     const McOptions& options);

enum class BasketAverage { arithmetic, geometric };

// Correlated terminal GBM with vols approx.asset_vol and correlations approx.corr.
// Geometric mode pays on F * prod (A_i(T) / F_i)^{w~_i}, F_i the forwards, against contract.strike.
[[nodiscard]] McEstimate mc_basket(const DiffusionApprox& approx, const Eigen::VectorXd& spots,
                                   const BasketContract& contract, BasketAverage mode, const McOptions& options);

// Lower-triangular L with L L' = corr; falls back to a symmetric square root for singular PSD input.
[[nodiscard]] Eigen::MatrixXd correlation_factor(const Eigen::MatrixXd& corr);

} // namespace hlob
