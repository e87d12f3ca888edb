#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace hlob {

class EmgchpParams;

enum class OptionKind { call, put };

struct EuroContract {
    double strike = 0.0;
    double maturity = 0.0;
    double rate = 0.0;
    OptionKind kind = OptionKind::call;

    void validate() const;
};

// The constants the Hawkes-based volatility is built from, for one asset.
struct HawkesBsModel {
    double sigma_star = 0.0;
    double a_star = 0.0;
    double mu_hat = 0.0;
    double lambda_inf = 0.0;
    double n_scale = 1.0;

    [[nodiscard]] double sigma_hat() const;

    // One-dimensional reduction of `asset` in a multivariate model.
    static HawkesBsModel from_params(const EmgchpParams& params, std::size_t asset = 0);
};

struct DPlusMinus {
    double plus;
    double minus;
};

// d+- = [ln(x/K) + (r +- sigma^2/2) tau] / (sigma sqrt(tau)).
[[nodiscard]] DPlusMinus d_plus_minus(double tau, double spot, const EuroContract& contract, double sigma_hat);

// Black-Scholes call with the Hawkes-based volatility; handles t = T and x = 0.
[[nodiscard]] double call_price(double t, double spot, const EuroContract& contract, double sigma_hat);
// Put through parity.
[[nodiscard]] double put_price(double t, double spot, const EuroContract& contract, double sigma_hat);
// Dispatches on contract.kind.
[[nodiscard]] double option_price(double t, double spot, const EuroContract& contract, double sigma_hat);

struct GreeksReport {
    double delta = 0.0;
    double theta = 0.0;             // d price / d t (calendar time, not time to expiry)
    double greek_sigma_star = 0.0;
    double greek_a_star = 0.0;
    double greek_mu_hat = 0.0;
};

// Sensitivities at time t; put Greeks follow from parity.
[[nodiscard]] GreeksReport greeks(double t, double spot, const EuroContract& contract, const HawkesBsModel& model);

// Minimal replicating portfolio: alpha shares and beta bond units (bond worth e^{r t}).
struct HedgePortfolio {
    double alpha = 0.0;
    double beta = 0.0;
    double capital = 0.0;
};

[[nodiscard]] HedgePortfolio hedge_portfolio(double t, double spot, const EuroContract& contract, double sigma_hat);

struct HedgeRow {
    double t;
    double spot;
    HedgePortfolio portfolio;
    double price;  // call_price(t, spot)
};

// Risk-neutral GBM path with `steps` equal steps to maturity and the hedge at each node.
// The last row sits at t = T with the payoff and the limiting (in/out of the money) portfolio.
[[nodiscard]] std::vector<HedgeRow> hedge_path(const EuroContract& contract, double sigma_hat, double spot,
                                               std::size_t steps, std::uint64_t seed);

struct SurfacePoint {
    double t;
    double x;
    double price;
};

// Row-major over time_grid (outer) and spot_grid (inner).
[[nodiscard]] std::vector<SurfacePoint> price_surface(const EuroContract& contract, double sigma_hat,
                                                      std::span<const double> spot_grid,
                                                      std::span<const double> time_grid);

} // namespace hlob
