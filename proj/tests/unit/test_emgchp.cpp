#include "hlob/emgchp.hpp"
#include "hlob/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace hlob;

namespace {

EmgchpParams base_model(double n = 1.0) {
    return EmgchpParams(HawkesParams::univariate(0.75, 0.7, 1.0), {MarkovChainSpec::from_moments(0.03, 0.05)},
                        Eigen::VectorXd::Constant(1, std::log(50.0)), n);
}

MarkovChainSpec constant_chain(double c) {
    return MarkovChainSpec(Eigen::MatrixXd::Constant(2, 2, 0.5), Eigen::Vector2d(c, c));
}

EmgchpParams spread_2d() {
    Eigen::MatrixXd alpha(2, 2);
    alpha << 115.7317, 0.4492, 0.0218, 123.2703;
    Eigen::MatrixXd beta(2, 2);
    beta << 280.9249, 2.9611, 0.0669, 307.2993;
    return EmgchpParams(HawkesParams(Eigen::Vector2d(0.0545, 0.0593), ExponentialKernel(alpha, beta)),
                        {MarkovChainSpec::from_moments(0.03, 0.05), MarkovChainSpec::from_moments(0.04, 0.03)},
                        Eigen::Vector2d(std::log(30.0), std::log(20.0)));
}

double sample_variance(const std::vector<double>& x) {
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double s = 0.0;
    for (double v : x) s += (v - mean) * (v - mean);
    return s / static_cast<double>(x.size() - 1);
}

} // namespace

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(EmgchpParams(HawkesParams::univariate(1, 0.5, 1), {}, Eigen::VectorXd::Zero(1)), ArgumentError);
    CHECK_THROWS_AS(EmgchpParams(HawkesParams::univariate(1, 0.5, 1), {constant_chain(1)}, Eigen::VectorXd::Zero(2)),
                    ArgumentError);
    CHECK_THROWS_AS(
        EmgchpParams(HawkesParams::univariate(1, 0.5, 1), {constant_chain(1)}, Eigen::VectorXd::Zero(1), 0.0),
        ArgumentError);
}

TEST_CASE("paths without events stay at s0") {
    // Background rate so small that no event is expected in the horizon.
    const EmgchpParams p(HawkesParams::univariate(1e-12, 0.0, 1.0), {constant_chain(1.0)}, Eigen::VectorXd::Constant(1, 0.3));
    const auto path = emgchp_path(p, 10.0, 1);
    CHECK(path.log_path.assets[0].jumps() == 0);
    CHECK(path.log_path.assets[0].at(5.0) == 0.3);
    CHECK(path.prices[0][0] == std::exp(0.3));
}

TEST_CASE("deterministic jumps give S0 + c N") {
    const EmgchpParams p(HawkesParams::univariate(0.75, 0.7, 1.0), {constant_chain(0.25)}, Eigen::VectorXd::Constant(1, 1.0));
    const auto path = mgchp_path(p, 200.0, 3);
    const auto& a = path.assets[0];
    for (std::size_t k = 0; k < a.log_prices.size(); ++k) {
        CHECK(a.log_prices[k] == doctest::Approx(1.0 + 0.25 * static_cast<double>(k)).epsilon(1e-12));
    }
    const auto events = simulate(p.hawkes(), 200.0, 3);
    REQUIRE(events.events.size() == a.jumps());
    for (std::size_t k = 0; k < a.jumps(); ++k) CHECK(a.times[k + 1] == events.events[k].time);
}

TEST_CASE("exp/log duality and positivity") {
    const auto p = spread_2d();
    const auto e = emgchp_path(p, 500.0, 9);
    const auto m = mgchp_path(p, 500.0, 9);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(e.log_path.assets[i].log_prices == m.assets[i].log_prices);
        for (std::size_t k = 0; k < e.prices[i].size(); ++k) {
            CHECK(e.prices[i][k] > 0.0);
            CHECK(e.prices[i][k] == std::exp(m.assets[i].log_prices[k]));
        }
    }
}

TEST_CASE("terminal mean of the log path follows the rate") {
    const auto p = base_model();
    const double horizon = 1e4;
    double acc = 0.0;
    for (std::uint64_t s = 0; s < 200; ++s) acc += mgchp_path(p, horizon, s).assets[0].log_prices.back();
    const double target = std::log(50.0) + 0.03 * 2.5 * horizon;
    CHECK(std::abs(acc / 200.0 / target - 1.0) < 0.05);
}

TEST_CASE("sigma and C matrices") {
    const auto p = base_model();
    CHECK(sigma_matrix(p)(0, 0) == doctest::Approx(2.5).epsilon(1e-14));
    const auto c = c_matrix(p);
    CHECK(c(0, 0) == doctest::Approx(0.05 * std::sqrt(2.5)).epsilon(1e-13));
    CHECK(c(0, 1) == doctest::Approx(0.03 / 0.3 * std::sqrt(2.5)).epsilon(1e-13));
    CHECK(c(0, 0) == doctest::Approx(0.0790569).epsilon(1e-6));
    CHECK(c(0, 1) == doctest::Approx(0.1581139).epsilon(1e-6));
    const auto c4 = c_matrix(base_model(4.0));
    CHECK(c4(0, 1) == doctest::Approx(2.0 * c(0, 1)).epsilon(1e-14));

    const EmgchpParams poisson(HawkesParams(Eigen::Vector2d(0.3, 0.4), ExponentialKernel(Eigen::MatrixXd::Zero(2, 2),
                                                                                         Eigen::MatrixXd::Ones(2, 2))),
                               {constant_chain(0.0), MarkovChainSpec::from_moments(0.0, 0.1)}, Eigen::Vector2d::Zero());
    CHECK(sigma_matrix(poisson).diagonal() == Eigen::Vector2d(0.3, 0.4));
    const auto cz = c_matrix(poisson);
    CHECK(cz.rightCols(2).norm() == 0.0);
    CHECK(cz.row(0).norm() == 0.0);
    CHECK_THROWS_AS((void)diffusion_approx(poisson), DegenerateError);
}

TEST_CASE("two-dimensional Sigma solves the stationary rate system") {
    const auto p = spread_2d();
    const Eigen::MatrixXd s = sigma_matrix(p);
    const Eigen::Vector2d rate = s.diagonal();
    const Eigen::Vector2d residual = rate - p.hawkes().branching() * rate - p.hawkes().lambda_inf();
    CHECK(residual.norm() < 1e-14);
    CHECK(s(0, 1) == 0.0);
    CHECK(s(1, 0) == 0.0);
}

TEST_CASE("diffusion approximation in one dimension") {
    const auto d = diffusion_approx(base_model());
    CHECK(d.asset_vol(0) * d.asset_vol(0) == doctest::Approx(0.03125).epsilon(1e-14));
    CHECK(d.corr(0, 0) == 1.0);
    CHECK(d.asset_vol(0) == doctest::Approx(hawkes_bs_vol(base_model(), 0)).epsilon(1e-14));
    CHECK(d.drift(0) - 0.5 * d.asset_vol(0) * d.asset_vol(0) == doctest::Approx(0.03 * 2.5).epsilon(1e-14));
}

TEST_CASE("diffusion approximation in two dimensions") {
    const auto p = spread_2d();
    const auto d = diffusion_approx(p);
    const Eigen::MatrixXd gram = d.c_mat * d.c_mat.transpose();
    for (Eigen::Index i = 0; i < 2; ++i) {
        CHECK(d.asset_vol(i) == doctest::Approx(std::sqrt(gram(i, i))).epsilon(1e-14));
        CHECK(d.corr(i, i) == 1.0);
        const double a = p.summaries()[static_cast<std::size_t>(i)].a_star;
        CHECK(d.drift(i) - 0.5 * gram(i, i) == doctest::Approx(a * d.sigma_mat(i, i)).epsilon(1e-13));
    }
    CHECK(d.corr(0, 1) == d.corr(1, 0));
    CHECK(std::abs(d.corr(0, 1)) <= 1.0);
    CHECK(d.corr(0, 1) == doctest::Approx(gram(0, 1) / (d.asset_vol(0) * d.asset_vol(1))).epsilon(1e-14));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(d.corr);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-14);
}

TEST_CASE("correlation matches simulated Brownian increments") {
    const auto d = diffusion_approx(spread_2d());
    std::mt19937_64 rng(77);
    std::normal_distribution<double> z;
    const int steps = 100000;
    double sxx = 0.0;
    double syy = 0.0;
    double sxy = 0.0;
    Eigen::VectorXd w(4);
    for (int k = 0; k < steps; ++k) {
        for (Eigen::Index j = 0; j < 4; ++j) w(j) = z(rng);
        const Eigen::Vector2d inc = d.c_mat * w;
        sxx += inc(0) * inc(0);
        syy += inc(1) * inc(1);
        sxy += inc(0) * inc(1);
    }
    CHECK(std::abs(sxy / std::sqrt(sxx * syy) - d.corr(0, 1)) < 0.05);
}

TEST_CASE("Hawkes-based volatility") {
    CHECK(hawkes_bs_vol(base_model(), 0) == doctest::Approx(0.1767767).epsilon(1e-7));
    CHECK(hawkes_bs_vol(0.75, 0.7, 0.05, 0.0) == doctest::Approx(0.05 * std::sqrt(0.75 / 0.3)).epsilon(1e-14));
    CHECK(hawkes_bs_vol(0.75, 0.0, 0.05, 0.03) == doctest::Approx(std::sqrt(0.75 * (0.05 * 0.05 + 0.03 * 0.03))).epsilon(1e-14));
    CHECK(hawkes_bs_vol(0.75, 0.7, 0.05, 0.03, 4.0) == doctest::Approx(2.0 * hawkes_bs_vol(0.75, 0.7, 0.05, 0.03)).epsilon(1e-14));
    CHECK_THROWS_AS((void)hawkes_bs_vol(0.75, 1.0, 0.05, 0.03), StationarityError);
}

TEST_CASE("LLN statistic") {
    const EmgchpParams zero(HawkesParams::univariate(0.75, 0.7, 1.0), {MarkovChainSpec::from_moments(0.0, 0.05)},
                            Eigen::VectorXd::Zero(1));
    const auto z = lln_statistic(zero, 1000.0, 1.0, 100, 3);
    CHECK(std::abs(z[0] - 1.0) < 0.02);

    const auto v = lln_statistic(base_model(), 1000.0, 1.0, 500, 5);
    CHECK(std::abs(v[0] / std::exp(0.075) - 1.0) < 0.05);

    const EmgchpParams det(HawkesParams::univariate(0.75, 0.7, 1.0), {constant_chain(0.02)}, Eigen::VectorXd::Zero(1));
    const auto w = lln_statistic(det, 1000.0, 1.0, 300, 8);
    CHECK(std::abs(w[0] / std::exp(0.02 * 2.5) - 1.0) < 0.02);
    CHECK(lln_statistic(base_model(), 100.0, 1.0, 20, 4) == lln_statistic(base_model(), 100.0, 1.0, 20, 4));
    CHECK_THROWS_AS((void)lln_statistic(base_model(), 100.0, 1.0, 0, 4), ArgumentError);
}

TEST_CASE("FCLT residuals") {
    const EmgchpParams flat(HawkesParams::univariate(0.75, 0.7, 1.0), {constant_chain(0.02)}, Eigen::VectorXd::Zero(1));
    const auto exact = fclt_residual_sample(flat, 100.0, 1.0, 50, 2, Centering::stochastic);
    for (double r : exact[0]) CHECK(std::abs(r) < 1e-12);

    const auto s = fclt_residual_sample(base_model(), 1000.0, 1.0, 1000, 12, Centering::stochastic);
    CHECK(std::abs(sample_variance(s[0]) / 0.00625 - 1.0) < 0.10);
    const auto d = fclt_residual_sample(base_model(), 1000.0, 1.0, 1000, 12, Centering::deterministic);
    CHECK(std::abs(sample_variance(d[0]) / 0.03125 - 1.0) < 0.10);
}

TEST_CASE("model JSON round trip and path CSV") {
    const auto p = spread_2d();
    const auto q = emgchp_from_json(to_json(p));
    CHECK(q.s0() == p.s0());
    CHECK(q.hawkes().kernel().alpha() == p.hawkes().kernel().alpha());
    CHECK(q.summaries()[1].a_star == doctest::Approx(p.summaries()[1].a_star).epsilon(1e-14));
    const auto spot = emgchp_from_json(nlohmann::json::parse(
        R"({"hawkes":{"dim":1,"lambda_inf":[0.75],"alpha":[0.7],"beta":[1]},"chains":[{"a_star":0.03,"sigma_star":0.05}],"spot":[50]})"));
    CHECK(spot.s0()(0) == doctest::Approx(std::log(50.0)).epsilon(1e-15));
    const auto doc = to_json(diffusion_approx(p));
    CHECK(doc.contains("corr"));
    CHECK(doc.contains("asset_vol"));

    std::ostringstream out;
    write_path_csv(out, emgchp_path(p, 100.0, 1));
    CHECK(out.str().rfind("time,asset,log_price,price\n", 0) == 0);
}
