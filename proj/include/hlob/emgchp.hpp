#pragma once

#include "hlob/hawkes.hpp"
#include "hlob/markov_chain.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace hlob {

// Exponential multivariate general compound Hawkes model: asset i has log-price
// S_i(t) = S_i(0) + sum_{k <= N_i(t)} a(X_{i,k}) and price A_i(t) = exp(S_i(t)).
class EmgchpParams {
public:
    EmgchpParams(HawkesParams hawkes, std::vector<MarkovChainSpec> chains, Eigen::VectorXd s0, double n_scale = 1.0);

    [[nodiscard]] const HawkesParams& hawkes() const noexcept { return hawkes_; }
    [[nodiscard]] const std::vector<MarkovChainSpec>& chains() const noexcept { return chains_; }
    [[nodiscard]] const std::vector<ChainSummary>& summaries() const noexcept { return summaries_; }
    [[nodiscard]] const Eigen::VectorXd& s0() const noexcept { return s0_; }
    [[nodiscard]] Eigen::VectorXd spots() const { return s0_.array().exp(); }
    [[nodiscard]] double n_scale() const noexcept { return n_scale_; }
    [[nodiscard]] std::size_t dim() const noexcept { return hawkes_.dim(); }

private:
    HawkesParams hawkes_;
    std::vector<MarkovChainSpec> chains_;
    std::vector<ChainSummary> summaries_;
    Eigen::VectorXd s0_;
    double n_scale_;
};

// Multivariate GBM limit dA_i = A_i (D_i dt + C_i dW), W a 2d-dimensional Brownian motion.
struct DiffusionApprox {
    Eigen::MatrixXd sigma_mat;  // diag((I - K)^{-1} lambda_inf)
    Eigen::MatrixXd c_mat;      // d x 2d
    Eigen::VectorXd drift;      // D
    Eigen::VectorXd asset_vol;  // row norms of C
    Eigen::MatrixXd corr;
    double n_scale = 1.0;

    [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(asset_vol.size()); }
};

// Piecewise-constant log-price: log_prices[k] holds from times[k] until the next jump.
// times[0] == 0 and log_prices[0] == S(0).
struct AssetPath {
    std::vector<double> times;
    std::vector<double> log_prices;

    [[nodiscard]] double at(double t) const;
    [[nodiscard]] std::size_t jumps() const noexcept { return times.empty() ? 0 : times.size() - 1; }
};

struct MgchpPath {
    std::vector<AssetPath> assets;
    double horizon = 0.0;
};

struct EmgchpPath {
    MgchpPath log_path;
    std::vector<std::vector<double>> prices;  // prices[i][k] = exp(log_path.assets[i].log_prices[k])
};

// Hawkes event times with the chain jump drawn at each one (jumps[k] belongs to stream.events[k]).
struct MarkedEvents {
    EventStream stream;
    std::vector<double> jumps;
};

[[nodiscard]] MarkedEvents marked_events(const EmgchpParams& params, double horizon, std::uint64_t seed);
[[nodiscard]] MgchpPath mgchp_path(const EmgchpParams& params, double horizon, std::uint64_t seed);
[[nodiscard]] EmgchpPath emgchp_path(const EmgchpParams& params, double horizon, std::uint64_t seed);

[[nodiscard]] Eigen::MatrixXd sigma_matrix(const EmgchpParams& params);

// [sqrt(n) diag(sigma*) Sigma^{1/2}, sqrt(n) diag(a*) (I - K)^{-1} Sigma^{1/2}].
[[nodiscard]] Eigen::MatrixXd c_matrix(const EmgchpParams& params);

[[nodiscard]] DiffusionApprox diffusion_approx(const EmgchpParams& params);

// sqrt(n (sigma*^2 lambda/(1 - mu) + a*^2 lambda/(1 - mu)^3)).
[[nodiscard]] double hawkes_bs_vol(double lambda_inf, double mu_hat, double sigma_star, double a_star, double n_scale = 1.0);

// One-dimensional reduction for `asset`: its own background rate and mu_hat = K_ii.
[[nodiscard]] double hawkes_bs_vol(const EmgchpParams& params, std::size_t asset);

// Monte Carlo mean of (A_i(n t))^{1/n} per asset; the limit is exp(a*_i Sigma_ii t).
[[nodiscard]] std::vector<double> lln_statistic(const EmgchpParams& params, double n, double t,
                                                std::size_t replications, std::uint64_t seed);

enum class Centering { stochastic, deterministic };

// Per-asset samples of the scaled residual at time n t, with S measured from S(0):
//   stochastic:    (S_i(nt) - S_i(0) - a*_i N_i(nt)) / sqrt(n)
//   deterministic: (S_i(nt) - S_i(0) - a*_i n t Sigma_ii) / sqrt(n)
// Result is indexed [asset][replication].
[[nodiscard]] std::vector<std::vector<double>> fclt_residual_sample(const EmgchpParams& params, double n, double t,
                                                                    std::size_t replications, std::uint64_t seed,
                                                                    Centering mode);

// Model document: {"hawkes": {...}, "chains": [...], "s0": [...] or "spot": [...], "n_scale": 1}.
[[nodiscard]] EmgchpParams emgchp_from_json(const nlohmann::json& doc);
[[nodiscard]] nlohmann::json to_json(const EmgchpParams& params);
[[nodiscard]] nlohmann::json to_json(const DiffusionApprox& approx);

// CSV `time,asset,log_price,price`, rows ordered by time.
void write_path_csv(std::ostream& out, const EmgchpPath& path);

} // namespace hlob
