#include "hlob/spread_basket.hpp"

#include "hlob/errors.hpp"
#include "hlob/normal.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace hlob {

double sigma_bar(double lambda_inf, double mu_hat, double sigma_star, double a_star, double n_scale) {
    return hawkes_bs_vol(lambda_inf, mu_hat, sigma_star, a_star, n_scale);
}

double exchange_price(double s1, double s2, double total_variance, double strike_multiplier) {
    if (!(s1 > 0.0) || !(s2 > 0.0)) throw ArgumentError("spread spots must be > 0");
    if (!(strike_multiplier > 0.0)) throw ArgumentError("strike multiplier must be > 0");
    if (!(total_variance >= 0.0) || !std::isfinite(total_variance)) {
        throw ArgumentError("exponent variance must be finite and >= 0");
    }
    const double strike = strike_multiplier * s2;
    if (total_variance == 0.0) return std::max(s1 - strike, 0.0);
    const double vol = std::sqrt(total_variance);
    const double d1 = (std::log(s1 / strike) + 0.5 * total_variance) / vol;
    return s1 * norm_cdf(d1) - strike * norm_cdf(d1 - vol);
}

double margrabe_price(const AssetDiffusion& asset1, const AssetDiffusion& asset2, double maturity, double rho,
                      double strike_multiplier) {
    if (!(maturity > 0.0)) throw ArgumentError("maturity must be > 0");
    if (!(std::abs(rho) <= 1.0)) throw ArgumentError("correlation must lie in [-1, 1]");
    if (!(asset1.sigma_bar >= 0.0) || !(asset2.sigma_bar >= 0.0)) throw ArgumentError("volatilities must be >= 0");
    const double v1 = asset1.sigma_bar;
    const double v2 = asset2.sigma_bar;
    // (v1 - v2)^2 + 2 (1 - rho) v1 v2 avoids cancellation at rho = 1.
    const double rate_variance = (v1 - v2) * (v1 - v2) + 2.0 * (1.0 - rho) * v1 * v2;
    return exchange_price(asset1.s0, asset2.s0, maturity * std::max(0.0, rate_variance), strike_multiplier);
}

double margrabe_price(const AssetDiffusion& asset1, const AssetDiffusion& asset2, const SpreadContract& contract) {
    return margrabe_price(asset1, asset2, contract.maturity, contract.rho);
}

double spread_exp_vol(const DiffusionApprox& approx) {
    if (approx.dim() != 2) throw DimensionError("spread requires a two-dimensional model");
    const double c1 = approx.asset_vol(0);
    const double c2 = approx.asset_vol(1);
    const double rho = approx.corr(0, 1);
    return std::sqrt(std::max(0.0, (c1 - c2) * (c1 - c2) + 2.0 * (1.0 - rho) * c1 * c2));
}

double spread_2d_emgchp(const EmgchpParams& params, double maturity) {
    if (params.dim() != 2) throw DimensionError("spread_2d_emgchp requires d = 2, got " + std::to_string(params.dim()));
    if (!(maturity > 0.0)) throw ArgumentError("maturity must be > 0");
    const auto approx = diffusion_approx(params);
    const double vol = spread_exp_vol(approx);
    const Eigen::VectorXd spots = params.spots();
    return exchange_price(spots(0), spots(1), vol * vol * maturity);
}

void BasketContract::validate(std::size_t dim) const {
    if (static_cast<std::size_t>(weights.size()) != dim) throw DimensionError("basket weights must match the dimension");
    if ((weights.array() < 0.0).any()) throw ArgumentError("basket weights must be >= 0");
    if (std::abs(weights.sum() - 1.0) > 1e-12) throw ArgumentError("basket weights must sum to 1");
    if (!(strike > 0.0)) throw ArgumentError("basket strike must be > 0");
    if (theta != 1 && theta != -1) throw ArgumentError("theta must be +1 (call) or -1 (put)");
    if (!(maturity > 0.0)) throw ArgumentError("maturity must be > 0");
    if (!std::isfinite(rate)) throw ArgumentError("rate must be finite");
}

BasketQuote basket_quote(const DiffusionApprox& approx, const Eigen::VectorXd& spots, const BasketContract& contract) {
    const std::size_t d = approx.dim();
    contract.validate(d);
    if (static_cast<std::size_t>(spots.size()) != d || (spots.array() <= 0.0).any()) {
        throw ArgumentError("basket needs one positive spot per asset");
    }
    const double T = contract.maturity;
    const double growth = std::exp(contract.rate * T);

    BasketQuote q;
    const Eigen::VectorXd forward_weighted = contract.weights.cwiseProduct(spots) * growth;
    q.arithmetic_mean = forward_weighted.sum();
    q.tilde_weights = forward_weighted / q.arithmetic_mean;
    const Eigen::VectorXd vol_sq = approx.asset_vol.array().square();
    q.m_tilde = std::log(q.arithmetic_mean) - 0.5 * q.tilde_weights.dot(vol_sq) * T;
    const Eigen::VectorXd scaled = q.tilde_weights.cwiseProduct(approx.asset_vol);
    q.v_tilde_sq = std::max(0.0, static_cast<double>(scaled.transpose() * approx.corr * scaled) * T);
    q.geometric_mean = std::exp(q.m_tilde + 0.5 * q.v_tilde_sq);
    q.adjusted_strike = contract.strike - (q.arithmetic_mean - q.geometric_mean);
    if (!(q.adjusted_strike > 0.0)) {
        std::ostringstream msg;
        msg << "adjusted strike K* = " << q.adjusted_strike << " <= 0 (E[basket] = " << q.arithmetic_mean
            << ", E[geometric] = " << q.geometric_mean << ")";
        throw NumericalError(msg.str());
    }

    const double discount = std::exp(-contract.rate * T);
    const double theta = contract.theta;
    if (q.v_tilde_sq == 0.0) {
        q.price = discount * std::max(theta * (q.geometric_mean - q.adjusted_strike), 0.0);
        return q;
    }
    const double v = std::sqrt(q.v_tilde_sq);
    const double d1 = (q.m_tilde - std::log(q.adjusted_strike) + q.v_tilde_sq) / v;
    const double d2 = d1 - v;
    q.price = discount * theta * (q.geometric_mean * norm_cdf(theta * d1) - q.adjusted_strike * norm_cdf(theta * d2));
    return q;
}

double basket_price(const EmgchpParams& params, const BasketContract& contract) {
    return basket_quote(diffusion_approx(params), params.spots(), contract).price;
}

} // namespace hlob
