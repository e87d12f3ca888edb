#include "hlob/european.hpp"

#include "hlob/emgchp.hpp"
#include "hlob/errors.hpp"
#include "hlob/normal.hpp"
#include "hlob/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace hlob {

void EuroContract::validate() const {
    if (!(strike > 0.0) || !std::isfinite(strike)) throw ArgumentError("strike must be finite and > 0");
    if (!(maturity > 0.0) || !std::isfinite(maturity)) throw ArgumentError("maturity must be finite and > 0");
    if (!std::isfinite(rate)) throw ArgumentError("rate must be finite");
}

double HawkesBsModel::sigma_hat() const { return hawkes_bs_vol(lambda_inf, mu_hat, sigma_star, a_star, n_scale); }

HawkesBsModel HawkesBsModel::from_params(const EmgchpParams& params, std::size_t asset) {
    if (asset >= params.dim()) throw ArgumentError("asset index out of range");
    const auto i = static_cast<Eigen::Index>(asset);
    const auto& s = params.summaries()[asset];
    return {s.sigma_star(), s.a_star, params.hawkes().branching()(i, i), params.hawkes().lambda_inf()(i),
            params.n_scale()};
}

namespace {

void check_vol(double sigma_hat) {
    if (!(sigma_hat > 0.0) || !std::isfinite(sigma_hat)) throw ArgumentError("volatility must be finite and > 0");
}

void check_time(double t, const EuroContract& contract) {
    if (!std::isfinite(t) || t > contract.maturity) throw ArgumentError("valuation time must not exceed maturity");
}

} // namespace

DPlusMinus d_plus_minus(double tau, double spot, const EuroContract& contract, double sigma_hat) {
    contract.validate();
    check_vol(sigma_hat);
    if (!(tau > 0.0)) throw ArgumentError("time to expiry must be > 0");
    if (!(spot > 0.0)) throw ArgumentError("spot must be > 0");
    const double vol_root_tau = sigma_hat * std::sqrt(tau);
    const double plus = (std::log(spot / contract.strike) + (contract.rate + 0.5 * sigma_hat * sigma_hat) * tau) / vol_root_tau;
    return {plus, plus - vol_root_tau};
}

double call_price(double t, double spot, const EuroContract& contract, double sigma_hat) {
    contract.validate();
    check_vol(sigma_hat);
    check_time(t, contract);
    if (!(spot >= 0.0) || !std::isfinite(spot)) throw ArgumentError("spot must be finite and >= 0");
    if (spot == 0.0) return 0.0;
    const double tau = contract.maturity - t;
    if (tau == 0.0) return std::max(spot - contract.strike, 0.0);
    const auto d = d_plus_minus(tau, spot, contract, sigma_hat);
    return spot * norm_cdf(d.plus) - contract.strike * std::exp(-contract.rate * tau) * norm_cdf(d.minus);
}

double put_price(double t, double spot, const EuroContract& contract, double sigma_hat) {
    const double tau = contract.maturity - t;
    return call_price(t, spot, contract, sigma_hat) - spot + contract.strike * std::exp(-contract.rate * tau);
}

double option_price(double t, double spot, const EuroContract& contract, double sigma_hat) {
    return contract.kind == OptionKind::call ? call_price(t, spot, contract, sigma_hat)
                                             : put_price(t, spot, contract, sigma_hat);
}

GreeksReport greeks(double t, double spot, const EuroContract& contract, const HawkesBsModel& model) {
    contract.validate();
    if (!(t >= 0.0 && t < contract.maturity)) throw ArgumentError("greeks require 0 <= t < maturity");
    if (!(spot > 0.0)) throw ArgumentError("spot must be > 0");
    if (!(model.mu_hat < 1.0)) throw StationarityError("mu_hat must be < 1");

    const double sigma = model.sigma_hat();
    check_vol(sigma);
    const double tau = contract.maturity - t;
    const double root_tau = std::sqrt(tau);
    const double discount_strike = contract.strike * std::exp(-contract.rate * tau);
    const auto d = d_plus_minus(tau, spot, contract, sigma);
    const double pdf_plus = norm_pdf(d.plus);
    const double pdf_minus = norm_pdf(d.minus);

    // d(sigma_hat)/d(parameter) from sigma_hat^2 = n lambda (s^2/(1-mu) + a^2/(1-mu)^3).
    const double rest = 1.0 - model.mu_hat;
    const double nl = model.n_scale * model.lambda_inf;
    const double dvol_dsigma = nl * model.sigma_star / rest / sigma;
    const double dvol_da = nl * model.a_star / (rest * rest * rest) / sigma;
    const double dvol_dmu = 0.5 * nl *
                            (model.sigma_star * model.sigma_star / (rest * rest) +
                             3.0 * model.a_star * model.a_star / (rest * rest * rest * rest)) /
                            sigma;

    // F, G and H: d(d+-)/d(parameter) = (-d+-/sigma_hat +- sqrt(tau)) * d(sigma_hat)/d(parameter).
    const double dd_plus = -d.plus / sigma + root_tau;
    const double dd_minus = -d.minus / sigma - root_tau;
    const auto assemble = [&](double dvol) {
        return spot * pdf_plus * dd_plus * dvol - discount_strike * pdf_minus * dd_minus * dvol;
    };

    GreeksReport g;
    g.delta = norm_cdf(d.plus);
    g.theta = -contract.rate * discount_strike * norm_cdf(d.minus) - spot * pdf_plus * sigma / (2.0 * root_tau);
    g.greek_sigma_star = assemble(dvol_dsigma);
    g.greek_a_star = assemble(dvol_da);
    g.greek_mu_hat = assemble(dvol_dmu);
    if (contract.kind == OptionKind::put) {
        g.delta -= 1.0;
        g.theta += contract.rate * discount_strike;
    }
    return g;
}

HedgePortfolio hedge_portfolio(double t, double spot, const EuroContract& contract, double sigma_hat) {
    contract.validate();
    if (!(t >= 0.0 && t < contract.maturity)) throw ArgumentError("hedge requires 0 <= t < maturity");
    if (!(spot > 0.0)) throw ArgumentError("spot must be > 0");
    const auto d = d_plus_minus(contract.maturity - t, spot, contract, sigma_hat);
    HedgePortfolio h;
    h.alpha = norm_cdf(d.plus);
    h.beta = -contract.strike * std::exp(-contract.rate * contract.maturity) * norm_cdf(d.minus);
    h.capital = call_price(t, spot, contract, sigma_hat);
    return h;
}

std::vector<HedgeRow> hedge_path(const EuroContract& contract, double sigma_hat, double spot, std::size_t steps,
                                 std::uint64_t seed) {
    contract.validate();
    check_vol(sigma_hat);
    if (contract.kind != OptionKind::call) throw ArgumentError("hedge paths are defined for calls");
    if (!(spot > 0.0)) throw ArgumentError("spot must be > 0");
    if (steps == 0) throw ArgumentError("hedge needs at least one step");
    const double dt = contract.maturity / static_cast<double>(steps);
    const double drift = (contract.rate - 0.5 * sigma_hat * sigma_hat) * dt;
    const double vol = sigma_hat * std::sqrt(dt);
    auto engine = make_engine(seed, streams::gbm_path);
    std::normal_distribution<double> normal;

    std::vector<HedgeRow> rows;
    rows.reserve(steps + 1);
    double s = spot;
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        const auto h = hedge_portfolio(t, s, contract, sigma_hat);
        rows.push_back({t, s, h, h.capital});
        s *= std::exp(drift + vol * normal(engine));
    }
    const bool in_money = s > contract.strike;
    const double payoff = std::max(s - contract.strike, 0.0);
    const HedgePortfolio last{in_money ? 1.0 : 0.0,
                              in_money ? -contract.strike * std::exp(-contract.rate * contract.maturity) : 0.0, payoff};
    rows.push_back({contract.maturity, s, last, payoff});
    return rows;
}

std::vector<SurfacePoint> price_surface(const EuroContract& contract, double sigma_hat, std::span<const double> spot_grid,
                                        std::span<const double> time_grid) {
    std::vector<SurfacePoint> out;
    out.reserve(spot_grid.size() * time_grid.size());
    for (double t : time_grid) {
        if (t < 0.0) throw ArgumentError("time grid must be >= 0");
        for (double x : spot_grid) out.push_back({t, x, option_price(t, x, contract, sigma_hat)});
    }
    return out;
}

} // namespace hlob
