#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace hlob {

// Two-state chain over (+delta, -delta) with P = [[p, 1-p], [1-p', p']].
struct TwoStateSpec {
    double p = 0.5;
    double p_prime = 0.5;
    double delta = 1.0;
};

// Finite jump-size chain: row-stochastic P and the price change a(x) of each state.
// Construction validates stochasticity and ergodicity (irreducibility).
class MarkovChainSpec {
public:
    MarkovChainSpec(Eigen::MatrixXd transition, Eigen::VectorXd values);

    static MarkovChainSpec from_two_state(const TwoStateSpec& spec);

    // i.i.d. two-valued chain with jumps mean +/- sd and equal probabilities, so that
    // a* = mean and sigma*^2 = sd^2 exactly. Lets a model be stated through (a*, sigma*).
    static MarkovChainSpec from_moments(double mean, double sd);

    [[nodiscard]] const Eigen::MatrixXd& transition() const noexcept { return transition_; }
    [[nodiscard]] const Eigen::VectorXd& values() const noexcept { return values_; }
    [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(values_.size()); }

private:
    Eigen::MatrixXd transition_;
    Eigen::VectorXd values_;
};

struct ChainSummary {
    Eigen::VectorXd pi_star;
    double a_star = 0.0;
    double sigma_star_sq = 0.0;

    [[nodiscard]] double sigma_star() const;
};

// Irreducibility of the positive-entry graph of P.
[[nodiscard]] bool is_ergodic(const Eigen::MatrixXd& transition);

// Left fixed vector of P summing to one. Throws ErgodicityError if P is not ergodic.
[[nodiscard]] Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& transition);

[[nodiscard]] double a_star(const MarkovChainSpec& chain);

// Long-run variance sum_k pi*_k v(k), with b = a - a*, g = (P + Pi* - I)^{-1} b and
// v(k) = b(k)^2 + sum_j (g(j) - g(k))^2 P(k, j) - 2 b(k) sum_j (g(j) - g(k)) P(k, j).
[[nodiscard]] double sigma_star_sq(const MarkovChainSpec& chain);

[[nodiscard]] ChainSummary summarize(const MarkovChainSpec& chain);

// Closed form for the two-state chain: a* = delta (2 pi* - 1),
// sigma*^2 = 4 delta^2 ((1 - p' + pi*(p' - p)) / (p + p' - 2)^2 - pi*(1 - pi*)).
[[nodiscard]] ChainSummary two_state_summary(const TwoStateSpec& spec);

// Trajectory of a(X_1), ..., a(X_steps) with X_1 drawn from pi*.
[[nodiscard]] std::vector<double> simulate_chain(const MarkovChainSpec& chain, std::size_t steps, std::uint64_t seed);

// Sequential sampler, used when chain draws are interleaved with other simulation.
class ChainSampler {
public:
    ChainSampler(const MarkovChainSpec& chain, const Eigen::VectorXd& pi_star);

    template <class Engine>
    double next(Engine& engine) {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        const double u = unif(engine);
        const auto& cdf = started_ ? row_cdf_[state_] : start_cdf_;
        state_ = pick(cdf, u);
        started_ = true;
        return values_[state_];
    }

private:
    static std::size_t pick(const std::vector<double>& cdf, double u);

    std::vector<double> start_cdf_;
    std::vector<std::vector<double>> row_cdf_;
    std::vector<double> values_;
    std::size_t state_ = 0;
    bool started_ = false;
};

// JSON: {"P": row-major flat or nested, "values": [...]}, or the shorthands
// {"p", "p_prime", "delta"} and {"a_star", "sigma_star"}.
[[nodiscard]] MarkovChainSpec chain_from_json(const nlohmann::json& doc);
[[nodiscard]] nlohmann::json to_json(const MarkovChainSpec& chain);

} // namespace hlob
