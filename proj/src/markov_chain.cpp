#include "hlob/markov_chain.hpp"

#include "hlob/errors.hpp"
#include "hlob/hawkes.hpp"
#include "hlob/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <string>

namespace hlob {

namespace {

void validate_stochastic(const Eigen::MatrixXd& p) {
    if (p.rows() == 0 || p.rows() != p.cols()) throw ArgumentError("transition matrix must be square and non-empty");
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
        double sum = 0.0;
        for (Eigen::Index c = 0; c < p.cols(); ++c) {
            if (!(p(r, c) >= 0.0) || !std::isfinite(p(r, c))) {
                throw ArgumentError("transition probabilities must be finite and >= 0");
            }
            sum += p(r, c);
        }
        if (std::abs(sum - 1.0) > 1e-12) {
            throw ArgumentError("row " + std::to_string(r) + " of the transition matrix does not sum to 1");
        }
    }
}

} // namespace

MarkovChainSpec::MarkovChainSpec(Eigen::MatrixXd transition, Eigen::VectorXd values)
    : transition_(std::move(transition)), values_(std::move(values)) {
    validate_stochastic(transition_);
    if (values_.size() != transition_.rows()) throw ArgumentError("values length does not match the state count");
    if (!values_.allFinite()) throw ArgumentError("state values must be finite");
    if (!is_ergodic(transition_)) throw ErgodicityError("transition matrix is not ergodic (reducible)");
}

MarkovChainSpec MarkovChainSpec::from_two_state(const TwoStateSpec& spec) {
    if (!(spec.p >= 0.0 && spec.p <= 1.0 && spec.p_prime >= 0.0 && spec.p_prime <= 1.0)) {
        throw ArgumentError("two-state probabilities must lie in [0, 1]");
    }
    if (!(spec.delta >= 0.0)) throw ArgumentError("tick size must be >= 0");
    Eigen::MatrixXd p(2, 2);
    p << spec.p, 1.0 - spec.p, 1.0 - spec.p_prime, spec.p_prime;
    Eigen::VectorXd v(2);
    v << spec.delta, -spec.delta;
    return MarkovChainSpec(p, v);
}

MarkovChainSpec MarkovChainSpec::from_moments(double mean, double sd) {
    if (!(sd >= 0.0) || !std::isfinite(mean) || !std::isfinite(sd)) {
        throw ArgumentError("moment chain needs finite mean and sd >= 0");
    }
    Eigen::VectorXd v(2);
    v << mean + sd, mean - sd;
    return MarkovChainSpec(Eigen::MatrixXd::Constant(2, 2, 0.5), v);
}

double ChainSummary::sigma_star() const { return std::sqrt(sigma_star_sq); }

bool is_ergodic(const Eigen::MatrixXd& transition) {
    const auto n = transition.rows();
    if (n == 0 || transition.cols() != n) return false;
    // Strongly connected iff state 0 reaches every state in the graph and its transpose.
    const auto reaches_all = [&](bool transpose) {
        std::vector<char> seen(static_cast<std::size_t>(n), 0);
        std::vector<Eigen::Index> stack{0};
        seen[0] = 1;
        while (!stack.empty()) {
            const auto s = stack.back();
            stack.pop_back();
            for (Eigen::Index t = 0; t < n; ++t) {
                const double w = transpose ? transition(t, s) : transition(s, t);
                if (w > 0.0 && !seen[static_cast<std::size_t>(t)]) {
                    seen[static_cast<std::size_t>(t)] = 1;
                    stack.push_back(t);
                }
            }
        }
        return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
    };
    return reaches_all(false) && reaches_all(true);
}

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& transition) {
    validate_stochastic(transition);
    if (!is_ergodic(transition)) throw ErgodicityError("transition matrix is not ergodic (reducible)");
    const auto n = transition.rows();
    if (n == 1) return Eigen::VectorXd::Ones(1);

    // (P' - I) pi = 0 with the last equation replaced by sum(pi) = 1.
    Eigen::MatrixXd a = transition.transpose() - Eigen::MatrixXd::Identity(n, n);
    a.row(n - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs(n - 1) = 1.0;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    Eigen::VectorXd pi = lu.solve(rhs);
    // One step of iterative refinement.
    pi += lu.solve(rhs - a * pi);
    pi /= pi.sum();

    const double residual = (pi.transpose() * transition - pi.transpose()).cwiseAbs().maxCoeff();
    if (!(residual < 1e-12) || !(pi.minCoeff() > 0.0)) {
        std::ostringstream msg;
        msg << "stationary distribution solve failed (residual " << residual << ", min entry " << pi.minCoeff() << ")";
        throw NumericalError(msg.str());
    }
    return pi;
}

double a_star(const MarkovChainSpec& chain) {
    return stationary_distribution(chain.transition()).dot(chain.values());
}

namespace {

double long_run_variance(const MarkovChainSpec& chain, const Eigen::VectorXd& pi, double mean) {
    const auto n = static_cast<Eigen::Index>(chain.size());
    const auto& p = chain.transition();
    const Eigen::VectorXd b = chain.values().array() - mean;
    const Eigen::MatrixXd fundamental =
        p + Eigen::VectorXd::Ones(n) * pi.transpose() - Eigen::MatrixXd::Identity(n, n);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(fundamental);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-14)) {
        std::ostringstream msg;
        msg << "P + Pi* - I is numerically singular (rcond " << rcond << ", " << n << " states)";
        throw NumericalError(msg.str());
    }
    const Eigen::VectorXd g = lu.solve(b);

    double total = 0.0;
    double scale = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        double sq = 0.0;
        double lin = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            const double diff = g(j) - g(k);
            sq += diff * diff * p(k, j);
            lin += diff * p(k, j);
        }
        const double v = b(k) * b(k) + sq - 2.0 * b(k) * lin;
        total += pi(k) * v;
        scale += pi(k) * (b(k) * b(k) + sq);
    }
    // Cancellation can leave a tiny negative remainder for zero-variance chains.
    if (total < 0.0) {
        if (total > -1e-12 * std::max(1.0, scale)) return 0.0;
        std::ostringstream msg;
        msg << "long-run variance evaluated negative (" << total << ")";
        throw NumericalError(msg.str());
    }
    return total;
}

} // namespace

double sigma_star_sq(const MarkovChainSpec& chain) {
    const Eigen::VectorXd pi = stationary_distribution(chain.transition());
    return long_run_variance(chain, pi, pi.dot(chain.values()));
}

ChainSummary summarize(const MarkovChainSpec& chain) {
    ChainSummary s;
    s.pi_star = stationary_distribution(chain.transition());
    s.a_star = s.pi_star.dot(chain.values());
    s.sigma_star_sq = long_run_variance(chain, s.pi_star, s.a_star);
    return s;
}

ChainSummary two_state_summary(const TwoStateSpec& spec) {
    const double p = spec.p;
    const double q = spec.p_prime;
    if (!(p >= 0.0 && p <= 1.0 && q >= 0.0 && q <= 1.0)) throw ArgumentError("two-state probabilities must lie in [0, 1]");
    if (!(spec.delta >= 0.0)) throw ArgumentError("tick size must be >= 0");
    if (!(p + q < 2.0)) throw DegenerateError("p + p' = 2: both states are absorbing");

    const double pi = (1.0 - q) / (2.0 - p - q);
    const double denom = (p + q - 2.0) * (p + q - 2.0);
    ChainSummary s;
    s.pi_star.resize(2);
    s.pi_star << pi, 1.0 - pi;
    s.a_star = spec.delta * (2.0 * pi - 1.0);
    const double bracket = (1.0 - q + pi * (q - p)) / denom - pi * (1.0 - pi);
    s.sigma_star_sq = std::max(0.0, 4.0 * spec.delta * spec.delta * bracket);
    return s;
}

ChainSampler::ChainSampler(const MarkovChainSpec& chain, const Eigen::VectorXd& pi_star) {
    const auto n = static_cast<Eigen::Index>(chain.size());
    const auto cumulative = [](auto&& row) {
        std::vector<double> cdf;
        double acc = 0.0;
        for (Eigen::Index j = 0; j < row.size(); ++j) cdf.push_back(acc += row(j));
        cdf.back() = 1.0;
        return cdf;
    };
    start_cdf_ = cumulative(pi_star);
    for (Eigen::Index k = 0; k < n; ++k) row_cdf_.push_back(cumulative(chain.transition().row(k)));
    values_.assign(chain.values().data(), chain.values().data() + n);
}

std::size_t ChainSampler::pick(const std::vector<double>& cdf, double u) {
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

std::vector<double> simulate_chain(const MarkovChainSpec& chain, std::size_t steps, std::uint64_t seed) {
    std::vector<double> out;
    if (steps == 0) return out;
    out.reserve(steps);
    ChainSampler sampler(chain, stationary_distribution(chain.transition()));
    auto engine = make_engine(seed, streams::chain);
    for (std::size_t k = 0; k < steps; ++k) out.push_back(sampler.next(engine));
    return out;
}

MarkovChainSpec chain_from_json(const nlohmann::json& doc) {
    try {
        if (doc.contains("P")) {
            const auto values = doc.at("values").get<std::vector<double>>();
            if (values.empty()) throw ParseError("chain 'values' must be non-empty");
            Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
            return MarkovChainSpec(detail::read_square_matrix(doc, "P", values.size()), v);
        }
        if (doc.contains("p")) {
            return MarkovChainSpec::from_two_state({doc.at("p").get<double>(), doc.at("p_prime").get<double>(),
                                                    doc.at("delta").get<double>()});
        }
        if (doc.contains("a_star")) {
            return MarkovChainSpec::from_moments(doc.at("a_star").get<double>(), doc.at("sigma_star").get<double>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid chain document: ") + e.what());
    }
    throw ParseError("chain document needs 'P'+'values', 'p'+'p_prime'+'delta', or 'a_star'+'sigma_star'");
}

nlohmann::json to_json(const MarkovChainSpec& chain) {
    nlohmann::json doc;
    doc["P"] = detail::flatten(chain.transition());
    doc["values"] = std::vector<double>(chain.values().data(), chain.values().data() + chain.values().size());
    return doc;
}

} // namespace hlob
