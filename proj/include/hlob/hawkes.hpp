#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace hlob {

// Excitation mu_ij(t) = alpha_ij * exp(-beta_ij * t): an event in dimension j raises
// the intensity of dimension i by alpha_ij, decaying at rate beta_ij.
class ExponentialKernel {
public:
    ExponentialKernel(Eigen::MatrixXd alpha, Eigen::MatrixXd beta);

    [[nodiscard]] const Eigen::MatrixXd& alpha() const noexcept { return alpha_; }
    [[nodiscard]] const Eigen::MatrixXd& beta() const noexcept { return beta_; }
    [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(alpha_.rows()); }

private:
    Eigen::MatrixXd alpha_;
    Eigen::MatrixXd beta_;
};

// Background intensities plus kernel. Construction rejects rho(K) >= 1.
class HawkesParams {
public:
    HawkesParams(Eigen::VectorXd lambda_inf, ExponentialKernel kernel);

    static HawkesParams univariate(double lambda_inf, double alpha, double beta);

    [[nodiscard]] const Eigen::VectorXd& lambda_inf() const noexcept { return lambda_inf_; }
    [[nodiscard]] const ExponentialKernel& kernel() const noexcept { return kernel_; }
    [[nodiscard]] std::size_t dim() const noexcept { return kernel_.dim(); }
    // Branching matrix K = alpha / beta (element-wise).
    [[nodiscard]] const Eigen::MatrixXd& branching() const noexcept { return branching_; }

private:
    Eigen::VectorXd lambda_inf_;
    ExponentialKernel kernel_;
    Eigen::MatrixXd branching_;
};

struct Event {
    double time;
    std::size_t dim;

    friend bool operator==(const Event&, const Event&) = default;
};

// Time-ordered events over [0, horizon].
struct EventStream {
    std::vector<Event> events;
    double horizon = 0.0;

    [[nodiscard]] std::size_t count(std::size_t dim) const;
    [[nodiscard]] std::vector<double> times(std::size_t dim) const;

    friend bool operator==(const EventStream&, const EventStream&) = default;
};

// lambda_i(t) = lambda_inf_i + sum over events (s, j), s < t, of alpha_ij exp(-beta_ij (t - s)).
// Events at or after t are ignored.
[[nodiscard]] double intensity_at(const HawkesParams& params, const EventStream& history, double t, std::size_t i);

[[nodiscard]] Eigen::MatrixXd branching_matrix(const ExponentialKernel& kernel);
[[nodiscard]] Eigen::MatrixXd branching_matrix(const HawkesParams& params);

[[nodiscard]] double spectral_radius(const Eigen::MatrixXd& m);

// rho(K); a model is admissible only when this is < 1.
[[nodiscard]] double stationarity_margin(const ExponentialKernel& kernel);
[[nodiscard]] double stationarity_margin(const HawkesParams& params);

// Stationary event rates (I - K)^{-1} lambda_inf.
[[nodiscard]] Eigen::VectorXd expected_rate(const HawkesParams& params);

// Ogata thinning with per-pair decayed accumulators; deterministic in `seed`.
[[nodiscard]] EventStream simulate(const HawkesParams& params, double horizon, std::uint64_t seed);

// JSON document {dim, lambda_inf, alpha, beta}; alpha and beta are row-major flat arrays.
// Nested row arrays are also accepted on input.
[[nodiscard]] nlohmann::json to_json(const HawkesParams& params);
[[nodiscard]] HawkesParams hawkes_from_json(const nlohmann::json& doc);

// CSV with header `time,dim`.
void write_events_csv(std::ostream& out, const EventStream& stream);

namespace detail {
Eigen::MatrixXd read_square_matrix(const nlohmann::json& doc, const char* key, std::size_t dim);
nlohmann::json flatten(const Eigen::MatrixXd& m);
} // namespace detail

} // namespace hlob
