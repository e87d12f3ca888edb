#include "hlob/implied.hpp"

#include "hlob/errors.hpp"
#include "hlob/european.hpp"
#include "hlob/normal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace hlob {

double implied_vol(const ImpliedVolQuery& q) {
    if (!(q.spot > 0.0) || !(q.strike > 0.0) || !(q.tau > 0.0) || !std::isfinite(q.rate)) {
        throw ArgumentError("implied_vol needs spot > 0, strike > 0, tau > 0 and a finite rate");
    }
    if (!std::isfinite(q.price)) throw ArgumentError("observed price must be finite");

    const double lower = std::max(q.spot - q.strike * std::exp(-q.rate * q.tau), 0.0);
    if (!(q.price > lower)) {
        std::ostringstream msg;
        msg << "no implied volatility: price " << q.price << " is not above the lower bound (S - K e^{-r tau})+ = " << lower;
        throw NoSolutionError(msg.str());
    }
    if (!(q.price < q.spot)) {
        std::ostringstream msg;
        msg << "no implied volatility: price " << q.price << " is not below the upper bound S = " << q.spot;
        throw NoSolutionError(msg.str());
    }

    const EuroContract contract{q.strike, q.tau, q.rate, OptionKind::call};
    const double log_price = std::log(q.price);
    // Iterate on log prices so deep out-of-the-money quotes keep relative accuracy.
    const auto excess = [&](double sigma) { return std::log(call_price(0.0, q.spot, contract, sigma)) - log_price; };

    double lo = 1e-8;
    double hi = 5.0;
    while (excess(hi) < 0.0) {
        hi *= 2.0;
        if (hi > 1e4) throw NoSolutionError("no implied volatility below 1e4 reproduces the price");
    }
    while (excess(lo) > 0.0) {
        lo *= 0.1;
        if (lo < 1e-30) return lo;
    }

    const double tol = 1e-14;
    double sigma = std::clamp(std::sqrt(2.0 * std::numbers::pi / q.tau) * q.price / q.spot, lo, hi);
    if (sigma <= lo || sigma >= hi) sigma = std::sqrt(lo * hi);
    double previous = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 500; ++iter) {
        const double c = call_price(0.0, q.spot, contract, sigma);
        const double g = std::log(c) - log_price;
        if (std::abs(g) <= tol) return sigma;
        (g < 0.0 ? lo : hi) = sigma;
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;

        const double vega = q.spot * norm_pdf(d_plus_minus(q.tau, q.spot, contract, sigma).plus) * std::sqrt(q.tau);
        const double slope = vega / c;
        double next = slope > 0.0 && std::isfinite(slope) && std::isfinite(g) ? sigma - g / slope : lo;
        // Fall back to bisection when Newton leaves the bracket or stops halving the error.
        if (!(next > lo && next < hi) || std::abs(g) > 0.5 * previous) {
            next = hi > 4.0 * lo ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
        }
        previous = std::abs(g);
        sigma = next;
    }
    const double a = std::abs(excess(lo));
    const double b = std::abs(excess(hi));
    sigma = a <= b ? lo : hi;
    if (!(std::min(a, b) < 1e-10)) throw NumericalError("implied volatility iteration did not converge");
    return sigma;
}

ImpliedOrderFlow implied_order_flow(double sigma_hat_implied, double sigma_star, double a_star, double mu_hat) {
    if (!(mu_hat >= 0.0 && mu_hat < 1.0)) throw StationarityError("mu_hat must lie in [0, 1)");
    if (sigma_star == 0.0 && a_star == 0.0) throw DegenerateError("sigma* = a* = 0: order flow is not identified");
    if (!(sigma_hat_implied >= 0.0)) throw ArgumentError("implied volatility must be >= 0");
    const double rest = 1.0 - mu_hat;
    const double var_sq = sigma_hat_implied * sigma_hat_implied;
    ImpliedOrderFlow out;
    out.var_implied = var_sq / (sigma_star * sigma_star * rest * rest + a_star * a_star);
    out.e_implied = out.var_implied * rest * rest;
    return out;
}

} // namespace hlob
