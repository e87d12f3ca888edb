#include "hlob/emgchp.hpp"
#include "hlob/errors.hpp"
#include "hlob/european.hpp"
#include "hlob/spread_basket.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace hlob;

namespace {

const AssetDiffusion kAsset1{30.0, std::sqrt(0.03125)};
const AssetDiffusion kAsset2{20.0, std::sqrt(0.0087)};

// E[(S1 - S2)+] for lognormal ratio through one-dimensional quadrature in the ratio's normal factor.
double exchange_quadrature(double s1, double s2, double v) {
    const int n = 400000;
    const double lo = -14.0;
    const double hi = 14.0;
    const double h = (hi - lo) / n;
    double acc = 0.0;
    for (int k = 0; k <= n; ++k) {
        const double z = lo + k * h;
        const double w = (k == 0 || k == n) ? 0.5 : 1.0;
        acc += w * std::max(s1 * std::exp(-0.5 * v * v + v * z) - s2, 0.0) * std::exp(-0.5 * z * z);
    }
    return acc * h / std::sqrt(2.0 * M_PI);
}

EmgchpParams decoupled() {
    Eigen::MatrixXd alpha(2, 2);
    alpha << 0.7, 0.0, 0.0, 0.5;
    return EmgchpParams(HawkesParams(Eigen::Vector2d(0.75, 1.5), ExponentialKernel(alpha, Eigen::MatrixXd::Ones(2, 2))),
                        {MarkovChainSpec::from_moments(0.03, 0.05), MarkovChainSpec::from_moments(0.01, 0.05)},
                        Eigen::Vector2d(std::log(30.0), std::log(20.0)));
}

EmgchpParams basket_model() {
    Eigen::MatrixXd k(3, 3);
    k << 0.5933, 0.2068, 0.1743, 0.0845, 0.6746, 0.1222, 0.0312, 0.2033, 0.3820;
    return EmgchpParams(
        HawkesParams(Eigen::Vector3d(0.0545, 0.0593, 0.0623), ExponentialKernel(k, Eigen::MatrixXd::Ones(3, 3))),
        {MarkovChainSpec::from_moments(0.03, 0.05), MarkovChainSpec::from_moments(0.04, 0.03),
         MarkovChainSpec::from_moments(0.02, 0.06)},
        Eigen::Vector3d(std::log(30.0), std::log(20.0), std::log(25.0)));
}

} // namespace

TEST_CASE("sigma_bar examples") {
    CHECK(sigma_bar(0.75, 0.7, 0.05, 0.03) == doctest::Approx(0.17678).epsilon(1e-5));
    CHECK(sigma_bar(1.5, 0.5, 0.05, 0.01) == doctest::Approx(0.09327).epsilon(1e-4));
    CHECK(sigma_bar(1.5, 0.5, 0.05, 0.01) == doctest::Approx(std::sqrt(0.0087)).epsilon(1e-14));
    CHECK(sigma_bar(0.8, 0.2, 0.0, 0.0) == 0.0);
    CHECK(sigma_bar(0.75, 0.7, 0.05, 0.03, 2.0) == hawkes_bs_vol(0.75, 0.7, 0.05, 0.03, 2.0));
}

TEST_CASE("Margrabe examples") {
    const AssetDiffusion same1{30.0, 0.2};
    const AssetDiffusion same2{20.0, 0.2};
    CHECK(margrabe_price(same1, same2, 1.0, 1.0) == 10.0);
    CHECK(margrabe_price(same2, same1, 1.0, 1.0) == 0.0);
    const double v0 = margrabe_price(kAsset1, kAsset2, 1.0, 0.0);
    CHECK(v0 == doctest::Approx(10.04).epsilon(1e-3));
    const double var = 0.03125 + 0.0087;
    CHECK(v0 == doctest::Approx(exchange_quadrature(30.0, 20.0, std::sqrt(var))).epsilon(1e-9));
    CHECK(margrabe_price(kAsset1, kAsset2, {1.0, 0.5}) == doctest::Approx(10.0047).epsilon(1e-5));
    CHECK_THROWS_AS((void)margrabe_price(kAsset1, kAsset2, 1.0, 1.5), ArgumentError);
    CHECK_THROWS_AS((void)margrabe_price(kAsset1, kAsset2, 0.0, 0.5), ArgumentError);
    CHECK_THROWS_AS((void)margrabe_price({0.0, 0.1}, kAsset2, 1.0, 0.5), ArgumentError);
}

TEST_CASE("Margrabe invariants") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 1000; ++k) {
        const AssetDiffusion a{1.0 + 100.0 * u(rng), 0.5 * u(rng)};
        const AssetDiffusion b{1.0 + 100.0 * u(rng), 0.5 * u(rng)};
        const double T = 0.1 + 10.0 * u(rng);
        const double rho = 2.0 * u(rng) - 1.0;
        const double lambda = 0.1 + 10.0 * u(rng);
        const double v = margrabe_price(a, b, T, rho);
        const double scaled = margrabe_price({lambda * a.s0, a.sigma_bar}, {lambda * b.s0, b.sigma_bar}, T, rho);
        CHECK(std::abs(scaled - lambda * v) <= 1e-12 * std::max(1.0, lambda * v));
        CHECK(v >= std::max(a.s0 - b.s0, 0.0) - 1e-12 * a.s0);
        CHECK(std::abs(v - margrabe_price(b, a, T, rho) - (a.s0 - b.s0)) <= 1e-12 * std::max(a.s0, b.s0));
    }
    double last = margrabe_price(kAsset1, kAsset2, 5.0, 0.0);
    for (int k = 1; k <= 100; ++k) {
        const double v = margrabe_price(kAsset1, kAsset2, 5.0, 0.01 * k);
        CHECK(v <= last + 1e-14);
        last = v;
    }
}

TEST_CASE("two-dimensional spread") {
    const auto p = decoupled();
    const double v1 = hawkes_bs_vol(p, 0);
    const double v2 = hawkes_bs_vol(p, 1);
    for (double T : {1.0, 7.0, 50.0}) {
        CHECK(std::abs(spread_2d_emgchp(p, T) - margrabe_price({30.0, v1}, {20.0, v2}, T, 0.0)) < 1e-10);
    }
    const auto equal = EmgchpParams(p.hawkes(), p.chains(), Eigen::Vector2d(std::log(25.0), std::log(25.0)));
    CHECK(spread_2d_emgchp(equal, 1.0) > 0.0);
    CHECK_THROWS_AS((void)spread_2d_emgchp(basket_model(), 1.0), DimensionError);
    CHECK_THROWS_AS((void)spread_exp_vol(diffusion_approx(basket_model())), DimensionError);
}

TEST_CASE("basket degenerates to the European call in one dimension") {
    const EmgchpParams p(HawkesParams::univariate(0.75, 0.7, 1.0), {MarkovChainSpec::from_moments(0.03, 0.05)},
                         Eigen::VectorXd::Constant(1, std::log(50.0)));
    const double sigma = diffusion_approx(p).asset_vol(0);
    for (double T : {0.5, 1.0, 3.0}) {
        for (double K : {40.0, 50.0, 65.0}) {
            const BasketContract c{Eigen::VectorXd::Ones(1), K, 1, T, 0.06};
            const double b = basket_price(p, c);
            const double e = call_price(0.0, p.spots()(0), {K, T, 0.06, OptionKind::call}, sigma);
            CHECK(std::abs(b - e) <= 1e-12 * std::max(1.0, e));
            const auto q = basket_quote(diffusion_approx(p), p.spots(), c);
            CHECK(q.adjusted_strike == doctest::Approx(K).epsilon(1e-14));
        }
    }
}

TEST_CASE("basket put-call relation and perfectly correlated case") {
    const auto p = basket_model();
    const auto approx = diffusion_approx(p);
    const Eigen::Vector3d w(0.3, 0.5, 0.2);
    const BasketContract call{w, 24.0, 1, 2.0, 0.06};
    BasketContract put = call;
    put.theta = -1;
    const auto qc = basket_quote(approx, p.spots(), call);
    const auto qp = basket_quote(approx, p.spots(), put);
    const double rhs = std::exp(-0.06 * 2.0) * (std::exp(qc.m_tilde + 0.5 * qc.v_tilde_sq) - qc.adjusted_strike);
    CHECK(qc.price - qp.price == doctest::Approx(rhs).epsilon(1e-12));

    DiffusionApprox perfect = approx;
    perfect.asset_vol.setConstant(0.2);
    perfect.corr.setOnes();
    const auto q = basket_quote(perfect, p.spots(), call);
    const double spot = w.dot(p.spots());
    CHECK(q.price == doctest::Approx(call_price(0.0, spot, {24.0, 2.0, 0.06, OptionKind::call}, 0.2)).epsilon(1e-12));
}

TEST_CASE("basket quote intermediate quantities") {
    const auto p = basket_model();
    const auto approx = diffusion_approx(p);
    const Eigen::Vector3d w(0.3, 0.5, 0.2);
    const double T = 1.0;
    const auto q = basket_quote(approx, p.spots(), {w, 24.0, 1, T, 0.06});
    CHECK(q.tilde_weights.sum() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(q.arithmetic_mean == doctest::Approx(24.0 * std::exp(0.06)).epsilon(1e-14));
    double v2 = 0.0;
    for (int i = 0; i < 3; ++i) {
        for (int k = 0; k < 3; ++k) {
            v2 += q.tilde_weights(i) * q.tilde_weights(k) * approx.asset_vol(i) * approx.asset_vol(k) * approx.corr(i, k) * T;
        }
    }
    CHECK(q.v_tilde_sq == doctest::Approx(v2).epsilon(1e-13));
    CHECK(q.geometric_mean <= q.arithmetic_mean);
    CHECK(q.adjusted_strike < 24.0);
}

TEST_CASE("basket contract validation") {
    const auto p = basket_model();
    CHECK_THROWS_AS((void)basket_price(p, {Eigen::Vector3d(0.3, 0.3, 0.3), 24.0, 1, 1.0, 0.06}), ArgumentError);
    CHECK_THROWS_AS((void)basket_price(p, {Eigen::Vector3d(1.2, -0.2, 0.0), 24.0, 1, 1.0, 0.06}), ArgumentError);
    CHECK_THROWS_AS((void)basket_price(p, {Eigen::Vector2d(0.5, 0.5), 24.0, 1, 1.0, 0.06}), DimensionError);
    CHECK_THROWS_AS((void)basket_price(p, {Eigen::Vector3d(0.3, 0.5, 0.2), 24.0, 0, 1.0, 0.06}), ArgumentError);
    // A tiny strike against a large convexity gap drives K* below zero.
    DiffusionApprox wild = diffusion_approx(p);
    wild.asset_vol.setConstant(3.0);
    wild.corr.setIdentity();
    CHECK_THROWS_AS((void)basket_quote(wild, p.spots(), {Eigen::Vector3d(0.3, 0.5, 0.2), 0.5, 1, 1.0, 0.06}),
                    NumericalError);
}
