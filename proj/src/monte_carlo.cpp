#include "hlob/monte_carlo.hpp"

#include "hlob/errors.hpp"
#include "hlob/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace hlob {

namespace {

constexpr std::size_t kBatch = 8192;  // sampling units per batch (pairs under antithetic sampling)

// Welford accumulator; merging uses the pairwise update so identical samples give exactly zero spread.
struct Moments {
    double count = 0.0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        count += 1.0;
        const double delta = x - mean;
        mean += delta / count;
        m2 += delta * (x - mean);
    }

    void merge(const Moments& other) {
        if (other.count == 0.0) return;
        const double total = count + other.count;
        const double delta = other.mean - mean;
        mean += delta * other.count / total;
        m2 += other.m2 + delta * delta * count * other.count / total;
        count = total;
    }
};

double gbm_terminal(double spot, double drift, double vol_root_t, double z) {
    return spot * std::exp(drift + vol_root_t * z);
}

void check_paths(const McOptions& options) {
    if (options.paths < 10'000) throw ArgumentError("Monte Carlo needs at least 10^4 paths");
}

// Runs `unit(engine, normal)` for every sampling unit in fixed-size batches seeded by batch index,
// then reduces batches in order so the estimate does not depend on the worker count.
template <class Unit>
McEstimate run_batches(const McOptions& options, Unit unit) {
    check_paths(options);
    const std::size_t per_unit = options.antithetic ? 2 : 1;
    const std::size_t units = (options.paths + per_unit - 1) / per_unit;
    const std::size_t batches = (units + kBatch - 1) / kBatch;
    std::vector<Moments> partial(batches);
    parallel_for(batches, [&](std::size_t b) {
        auto engine = make_engine(options.seed, streams::monte_carlo, b);
        const std::size_t size = std::min(kBatch, units - b * kBatch);
        std::normal_distribution<double> normal;
        Moments m;
        for (std::size_t k = 0; k < size; ++k) m.add(unit(engine, normal));
        partial[b] = m;
    });
    Moments total;
    for (const auto& m : partial) total.merge(m);
    McEstimate out;
    out.price = total.mean;
    out.std_error = total.count > 1.0 ? std::sqrt(total.m2 / (total.count - 1.0) / total.count) : 0.0;
    out.paths = units * per_unit;
    out.seed = options.seed;
    return out;
}

} // namespace

McEstimate mc_euro(double sigma_hat, const EuroContract& contract, double spot, const McOptions& options) {
    contract.validate();
    if (!(spot > 0.0)) throw ArgumentError("spot must be > 0");
    if (!(sigma_hat >= 0.0) || !std::isfinite(sigma_hat)) throw ArgumentError("volatility must be finite and >= 0");
    const double T = contract.maturity;
    const double drift = (contract.rate - 0.5 * sigma_hat * sigma_hat) * T;
    const double vol = sigma_hat * std::sqrt(T);
    const double discount = std::exp(-contract.rate * T);
    const double sign = contract.kind == OptionKind::call ? 1.0 : -1.0;
    const double strike = contract.strike;
    const auto payoff = [&](double z) {
        return discount * std::max(sign * (gbm_terminal(spot, drift, vol, z) - strike), 0.0);
    };
    const bool antithetic = options.antithetic;
    return run_batches(options, [&](std::mt19937_64& engine, std::normal_distribution<double>& normal) {
        const double z = normal(engine);
        return antithetic ? 0.5 * (payoff(z) + payoff(-z)) : payoff(z);
    });
}

McEstimate mc_exchange(double s1, double s2, double vol1, double vol2, double rho, double maturity,
                       const McOptions& options) {
    if (!(s1 > 0.0) || !(s2 > 0.0)) throw ArgumentError("spread spots must be > 0");
    if (!(vol1 >= 0.0) || !(vol2 >= 0.0)) throw ArgumentError("volatilities must be >= 0");
    if (!(std::abs(rho) <= 1.0)) throw ArgumentError("correlation must lie in [-1, 1]");
    if (!(maturity > 0.0)) throw ArgumentError("maturity must be > 0");
    // Under the asset-2 measure ln(S1/S2) has drift -v^2/2 where v^2 = (vol1 - vol2)^2 + 2 (1 - rho) vol1 vol2.
    const double ratio_var = (vol1 - vol2) * (vol1 - vol2) + 2.0 * (1.0 - rho) * vol1 * vol2;
    const double drift = -0.5 * std::max(0.0, ratio_var) * maturity;
    const double root_t = std::sqrt(maturity);
    const double ortho = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    const auto payoff = [&](double z1, double w) {
        const double z2 = rho * z1 + ortho * w;
        const double x = drift + root_t * (vol1 * z1 - vol2 * z2);
        return std::max(s1 * std::exp(x) - s2, 0.0);
    };
    const bool antithetic = options.antithetic;
    return run_batches(options, [&](std::mt19937_64& engine, std::normal_distribution<double>& normal) {
        const double z1 = normal(engine);
        const double w = normal(engine);
        return antithetic ? 0.5 * (payoff(z1, w) + payoff(-z1, -w)) : payoff(z1, w);
    });
}

Eigen::MatrixXd correlation_factor(const Eigen::MatrixXd& corr) {
    if (corr.rows() != corr.cols()) throw DimensionError("correlation matrix must be square");
    Eigen::LLT<Eigen::MatrixXd> llt(corr);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr);
    if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() < -1e-10) {
        throw NumericalError("correlation matrix is not positive semidefinite");
    }
    return eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
}

McEstimate mc_basket(const DiffusionApprox& approx, const Eigen::VectorXd& spots, const BasketContract& contract,
                     BasketAverage mode, const McOptions& options) {
    const std::size_t d = approx.dim();
    contract.validate(d);
    if (static_cast<std::size_t>(spots.size()) != d || (spots.array() <= 0.0).any()) {
        throw ArgumentError("basket needs one positive spot per asset");
    }
    const auto n = static_cast<Eigen::Index>(d);
    const double T = contract.maturity;
    const double r = contract.rate;
    const Eigen::MatrixXd factor = correlation_factor(approx.corr);
    Eigen::VectorXd drift(n);
    Eigen::VectorXd vol(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        drift(i) = (r - 0.5 * approx.asset_vol(i) * approx.asset_vol(i)) * T;
        vol(i) = approx.asset_vol(i) * std::sqrt(T);
    }
    const Eigen::VectorXd forward_weighted = contract.weights.cwiseProduct(spots) * std::exp(r * T);
    const double forward = forward_weighted.sum();
    const Eigen::VectorXd tilde = forward_weighted / forward;
    const Eigen::VectorXd log_forward = (spots.array() * std::exp(r * T)).log();
    const double discount = std::exp(-r * T);
    const double theta = contract.theta;
    const double strike = contract.strike;

    const auto payoff = [&](const Eigen::VectorXd& z) {
        double level = 0.0;
        if (mode == BasketAverage::arithmetic) {
            for (Eigen::Index i = 0; i < n; ++i) level += contract.weights(i) * gbm_terminal(spots(i), drift(i), vol(i), z(i));
        } else {
            double log_ratio = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                log_ratio += tilde(i) * (std::log(spots(i)) + drift(i) + vol(i) * z(i) - log_forward(i));
            }
            level = forward * std::exp(log_ratio);
        }
        return discount * std::max(theta * (level - strike), 0.0);
    };
    const bool antithetic = options.antithetic;
    return run_batches(options, [&](std::mt19937_64& engine, std::normal_distribution<double>& normal) {
        Eigen::VectorXd w(n);
        for (Eigen::Index i = 0; i < n; ++i) w(i) = normal(engine);
        const Eigen::VectorXd z = factor * w;
        return antithetic ? 0.5 * (payoff(z) + payoff(-z)) : payoff(z);
    });
}

} // namespace hlob
