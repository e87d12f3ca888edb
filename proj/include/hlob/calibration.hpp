#pragma once

#include "hlob/hawkes.hpp"
#include "hlob/markov_chain.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace hlob {

struct TickRecord {
    double time;
    std::size_t dim;
    double price_change;
};

// Event stream plus the price change attached to each event (marks[k] belongs to stream.events[k]).
struct TickData {
    EventStream stream;
    std::vector<double> marks;

    [[nodiscard]] std::vector<double> marks_of(std::size_t dim) const;
    [[nodiscard]] std::vector<TickRecord> records() const;
};

// Reads CSV with header `time,dim,price_change` (or `time,dim`, marks then zero).
// Rows must be time-ordered within each dim; the result is ordered by time overall.
// The horizon defaults to the last event time.
[[nodiscard]] TickData read_events(std::istream& in, std::size_t dim, std::optional<double> horizon = std::nullopt);
[[nodiscard]] TickData load_events(const std::filesystem::path& path, std::size_t dim,
                                   std::optional<double> horizon = std::nullopt);

void write_events(std::ostream& out, const TickData& data);
void save_events(const std::filesystem::path& path, const TickData& data);

// Exponential-kernel log-likelihood over [0, stream.horizon].
[[nodiscard]] double hawkes_log_likelihood(const EventStream& stream, const HawkesParams& params);

struct LikelihoodGradient {
    double value = 0.0;
    Eigen::VectorXd d_lambda;   // d / d lambda_inf
    Eigen::MatrixXd d_alpha;
    Eigen::MatrixXd d_beta;
};

// Same likelihood with its analytic gradient in (lambda_inf, alpha, beta).
[[nodiscard]] LikelihoodGradient hawkes_log_likelihood_gradient(const EventStream& stream, const HawkesParams& params);

struct MleOptions {
    std::size_t max_iterations = 500;
    double gradient_tolerance = 1e-7;  // projected gradient, objective normalised per event
    double max_branching = 0.999;      // box bound on each alpha_ij / beta_ij
    double min_beta = 1e-4;
    double max_beta = 1e5;
};

struct MleResult {
    HawkesParams params;
    double log_likelihood = 0.0;
    std::size_t iterations = 0;
    double gradient_norm = 0.0;
};

// Box-constrained projected BFGS over (log lambda_inf, alpha/beta, log beta). Proposals with
// rho(K) >= max_branching are rejected by the line search. Throws ConvergenceError.
[[nodiscard]] MleResult fit_hawkes_mle_detailed(const EventStream& stream, std::size_t dim, const MleOptions& options = {});
[[nodiscard]] HawkesParams fit_hawkes_mle(const EventStream& stream, std::size_t dim, const MleOptions& options = {});

// Empirical transition frequencies over the distinct observed values, with additive smoothing.
[[nodiscard]] MarkovChainSpec fit_chain(std::span<const double> marks, double smoothing = 1e-6);
[[nodiscard]] MarkovChainSpec fit_chain(const TickData& data, std::size_t dim, double smoothing = 1e-6);

} // namespace hlob
