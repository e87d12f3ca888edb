#include "hlob/emgchp.hpp"

#include "hlob/errors.hpp"
#include "hlob/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <string>
#include <tuple>

namespace hlob {

EmgchpParams::EmgchpParams(HawkesParams hawkes, std::vector<MarkovChainSpec> chains, Eigen::VectorXd s0,
                           double n_scale)
    : hawkes_(std::move(hawkes)), chains_(std::move(chains)), s0_(std::move(s0)), n_scale_(n_scale) {
    if (chains_.size() != hawkes_.dim()) throw ArgumentError("one jump chain per Hawkes dimension is required");
    if (static_cast<std::size_t>(s0_.size()) != hawkes_.dim()) throw ArgumentError("s0 length must equal dimension");
    if (!s0_.allFinite()) throw ArgumentError("s0 must be finite");
    if (!(n_scale_ > 0.0) || !std::isfinite(n_scale_)) throw ArgumentError("n_scale must be finite and > 0");
    summaries_.reserve(chains_.size());
    for (const auto& c : chains_) summaries_.push_back(summarize(c));
}

double AssetPath::at(double t) const {
    if (times.empty()) throw ArgumentError("empty path");
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const auto k = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
    return log_prices[k];
}

namespace {

struct TerminalState {
    std::vector<double> log_increment;  // S_i(T) - S_i(0)
    std::vector<double> count;          // N_i(T)
};

std::vector<ChainSampler> make_samplers(const EmgchpParams& params) {
    std::vector<ChainSampler> samplers;
    for (std::size_t i = 0; i < params.dim(); ++i) samplers.emplace_back(params.chains()[i], params.summaries()[i].pi_star);
    return samplers;
}

TerminalState terminal_state(const EmgchpParams& params, double horizon, std::uint64_t seed) {
    const auto stream = simulate(params.hawkes(), horizon, seed);
    auto samplers = make_samplers(params);
    std::vector<std::mt19937_64> engines;
    for (std::size_t i = 0; i < params.dim(); ++i) engines.push_back(make_engine(seed, streams::chain, i));
    TerminalState out{std::vector<double>(params.dim(), 0.0), std::vector<double>(params.dim(), 0.0)};
    for (const auto& e : stream.events) {
        out.log_increment[e.dim] += samplers[e.dim].next(engines[e.dim]);
        out.count[e.dim] += 1.0;
    }
    return out;
}

std::uint64_t replication_seed(std::uint64_t seed, std::size_t r) {
    auto engine = make_engine(seed, streams::replication, r);
    return engine();
}

void check_scaling(double n, double t, std::size_t replications) {
    if (!(n > 0.0) || !std::isfinite(n)) throw ArgumentError("scale n must be finite and > 0");
    if (!(t > 0.0) || !std::isfinite(t)) throw ArgumentError("time t must be finite and > 0");
    if (replications == 0) throw ArgumentError("replications must be >= 1");
}

} // namespace

MarkedEvents marked_events(const EmgchpParams& params, double horizon, std::uint64_t seed) {
    MarkedEvents out;
    out.stream = simulate(params.hawkes(), horizon, seed);
    auto samplers = make_samplers(params);
    std::vector<std::mt19937_64> engines;
    for (std::size_t i = 0; i < params.dim(); ++i) engines.push_back(make_engine(seed, streams::chain, i));
    out.jumps.reserve(out.stream.events.size());
    for (const auto& e : out.stream.events) out.jumps.push_back(samplers[e.dim].next(engines[e.dim]));
    return out;
}

MgchpPath mgchp_path(const EmgchpParams& params, double horizon, std::uint64_t seed) {
    const auto marked = marked_events(params, horizon, seed);
    MgchpPath path;
    path.horizon = horizon;
    path.assets.resize(params.dim());
    for (std::size_t i = 0; i < params.dim(); ++i) {
        path.assets[i].times.push_back(0.0);
        path.assets[i].log_prices.push_back(params.s0()(static_cast<Eigen::Index>(i)));
    }
    for (std::size_t k = 0; k < marked.jumps.size(); ++k) {
        const auto& e = marked.stream.events[k];
        auto& asset = path.assets[e.dim];
        asset.times.push_back(e.time);
        asset.log_prices.push_back(asset.log_prices.back() + marked.jumps[k]);
    }
    return path;
}

EmgchpPath emgchp_path(const EmgchpParams& params, double horizon, std::uint64_t seed) {
    EmgchpPath out;
    out.log_path = mgchp_path(params, horizon, seed);
    for (const auto& asset : out.log_path.assets) {
        std::vector<double> prices;
        prices.reserve(asset.log_prices.size());
        for (double s : asset.log_prices) prices.push_back(std::exp(s));
        out.prices.push_back(std::move(prices));
    }
    return out;
}

Eigen::MatrixXd sigma_matrix(const EmgchpParams& params) {
    return expected_rate(params.hawkes()).asDiagonal();
}

Eigen::MatrixXd c_matrix(const EmgchpParams& params) {
    const auto d = static_cast<Eigen::Index>(params.dim());
    const Eigen::VectorXd rate = expected_rate(params.hawkes());
    Eigen::VectorXd sigma_star(d);
    Eigen::VectorXd a_star(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        sigma_star(i) = params.summaries()[static_cast<std::size_t>(i)].sigma_star();
        a_star(i) = params.summaries()[static_cast<std::size_t>(i)].a_star;
    }
    const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(d, d);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(identity - params.hawkes().branching());
    if (!lu.isInvertible()) throw StationarityError("I - K is singular");
    const Eigen::MatrixXd resolvent = lu.inverse();
    const Eigen::VectorXd root_rate = rate.cwiseSqrt();
    const double root_n = std::sqrt(params.n_scale());

    Eigen::MatrixXd c(d, 2 * d);
    c.leftCols(d) = root_n * (sigma_star.cwiseProduct(root_rate)).asDiagonal().toDenseMatrix();
    c.rightCols(d) = root_n * a_star.asDiagonal() * resolvent * root_rate.asDiagonal();
    return c;
}

DiffusionApprox diffusion_approx(const EmgchpParams& params) {
    const auto d = static_cast<Eigen::Index>(params.dim());
    DiffusionApprox out;
    out.n_scale = params.n_scale();
    out.sigma_mat = sigma_matrix(params);
    out.c_mat = c_matrix(params);
    const Eigen::MatrixXd gram = out.c_mat * out.c_mat.transpose();
    out.asset_vol = out.c_mat.rowwise().norm();
    out.drift.resize(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        const double a_star = params.summaries()[static_cast<std::size_t>(i)].a_star;
        out.drift(i) = a_star * params.n_scale() * out.sigma_mat(i, i) + 0.5 * gram(i, i);
        if (!(out.asset_vol(i) > 0.0)) {
            throw DegenerateError("asset " + std::to_string(i) + " has zero diffusion volatility; correlation undefined");
        }
    }
    out.corr = gram.array() / (out.asset_vol * out.asset_vol.transpose()).array();
    for (Eigen::Index i = 0; i < d; ++i) {
        out.corr(i, i) = 1.0;
        for (Eigen::Index k = i + 1; k < d; ++k) {
            const double v = std::clamp(0.5 * (out.corr(i, k) + out.corr(k, i)), -1.0, 1.0);
            out.corr(i, k) = out.corr(k, i) = v;
        }
    }
    return out;
}

double hawkes_bs_vol(double lambda_inf, double mu_hat, double sigma_star, double a_star, double n_scale) {
    if (!(mu_hat >= 0.0 && mu_hat < 1.0)) throw StationarityError("mu_hat must lie in [0, 1)");
    if (!(lambda_inf > 0.0)) throw ArgumentError("lambda_inf must be > 0");
    if (!(n_scale > 0.0)) throw ArgumentError("n_scale must be > 0");
    const double rest = 1.0 - mu_hat;
    const double rate = lambda_inf / rest;
    return std::sqrt(n_scale * (sigma_star * sigma_star * rate + a_star * a_star * rate / (rest * rest)));
}

double hawkes_bs_vol(const EmgchpParams& params, std::size_t asset) {
    if (asset >= params.dim()) throw ArgumentError("asset index out of range");
    const auto i = static_cast<Eigen::Index>(asset);
    const auto& s = params.summaries()[asset];
    return hawkes_bs_vol(params.hawkes().lambda_inf()(i), params.hawkes().branching()(i, i), s.sigma_star(), s.a_star,
                         params.n_scale());
}

std::vector<double> lln_statistic(const EmgchpParams& params, double n, double t, std::size_t replications,
                                  std::uint64_t seed) {
    check_scaling(n, t, replications);
    const std::size_t d = params.dim();
    std::vector<std::vector<double>> stats(replications);
    parallel_for(replications, [&](std::size_t r) {
        const auto state = terminal_state(params, n * t, replication_seed(seed, r));
        stats[r].resize(d);
        for (std::size_t i = 0; i < d; ++i) {
            const double s = params.s0()(static_cast<Eigen::Index>(i)) + state.log_increment[i];
            stats[r][i] = std::exp(s / n);
        }
    });
    std::vector<double> mean(d, 0.0);
    for (const auto& row : stats) {
        for (std::size_t i = 0; i < d; ++i) mean[i] += row[i];
    }
    for (auto& m : mean) m /= static_cast<double>(replications);
    return mean;
}

std::vector<std::vector<double>> fclt_residual_sample(const EmgchpParams& params, double n, double t,
                                                      std::size_t replications, std::uint64_t seed, Centering mode) {
    check_scaling(n, t, replications);
    const std::size_t d = params.dim();
    const Eigen::VectorXd rate = expected_rate(params.hawkes());
    const double root_n = std::sqrt(n);
    std::vector<std::vector<double>> out(d, std::vector<double>(replications));
    parallel_for(replications, [&](std::size_t r) {
        const auto state = terminal_state(params, n * t, replication_seed(seed, r));
        for (std::size_t i = 0; i < d; ++i) {
            const double a_star = params.summaries()[i].a_star;
            const double centre = mode == Centering::stochastic
                                      ? a_star * state.count[i]
                                      : a_star * n * t * rate(static_cast<Eigen::Index>(i));
            out[i][r] = (state.log_increment[i] - centre) / root_n;
        }
    });
    return out;
}

EmgchpParams emgchp_from_json(const nlohmann::json& doc) {
    try {
        if (!doc.contains("hawkes")) throw ParseError("model document is missing 'hawkes'");
        auto hawkes = hawkes_from_json(doc.at("hawkes"));
        const std::size_t d = hawkes.dim();
        if (!doc.contains("chains") || !doc.at("chains").is_array() || doc.at("chains").size() != d) {
            throw ParseError("model document needs 'chains' with one entry per dimension");
        }
        std::vector<MarkovChainSpec> chains;
        for (const auto& c : doc.at("chains")) chains.push_back(chain_from_json(c));
        Eigen::VectorXd s0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
        const auto read_vector = [&](const char* key) {
            const auto& node = doc.at(key);
            std::vector<double> v = node.is_number() ? std::vector<double>{node.get<double>()} : node.get<std::vector<double>>();
            if (v.size() != d) throw ParseError(std::string("'") + key + "' must have one entry per dimension");
            return v;
        };
        if (doc.contains("s0")) {
            const auto v = read_vector("s0");
            for (std::size_t i = 0; i < d; ++i) s0(static_cast<Eigen::Index>(i)) = v[i];
        } else if (doc.contains("spot")) {
            const auto v = read_vector("spot");
            for (std::size_t i = 0; i < d; ++i) {
                if (!(v[i] > 0.0)) throw ArgumentError("spot prices must be > 0");
                s0(static_cast<Eigen::Index>(i)) = std::log(v[i]);
            }
        }
        const double n_scale = doc.value("n_scale", 1.0);
        return EmgchpParams(std::move(hawkes), std::move(chains), s0, n_scale);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid model document: ") + e.what());
    }
}

nlohmann::json to_json(const EmgchpParams& params) {
    nlohmann::json doc;
    doc["hawkes"] = to_json(params.hawkes());
    doc["chains"] = nlohmann::json::array();
    for (const auto& c : params.chains()) doc["chains"].push_back(to_json(c));
    doc["s0"] = std::vector<double>(params.s0().data(), params.s0().data() + params.s0().size());
    doc["n_scale"] = params.n_scale();
    return doc;
}

nlohmann::json to_json(const DiffusionApprox& approx) {
    const auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    const auto mat = [](const Eigen::MatrixXd& m) {
        auto rows = nlohmann::json::array();
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            auto row = nlohmann::json::array();
            for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
            rows.push_back(row);
        }
        return rows;
    };
    nlohmann::json doc;
    doc["dim"] = approx.dim();
    doc["n_scale"] = approx.n_scale;
    doc["sigma"] = vec(approx.sigma_mat.diagonal());
    doc["c"] = mat(approx.c_mat);
    doc["drift"] = vec(approx.drift);
    doc["asset_vol"] = vec(approx.asset_vol);
    doc["corr"] = mat(approx.corr);
    return doc;
}

void write_path_csv(std::ostream& out, const EmgchpPath& path) {
    std::vector<std::tuple<double, std::size_t, std::size_t>> rows;
    for (std::size_t i = 0; i < path.log_path.assets.size(); ++i) {
        const auto& asset = path.log_path.assets[i];
        for (std::size_t k = 0; k < asset.times.size(); ++k) rows.emplace_back(asset.times[k], i, k);
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return std::get<0>(a) < std::get<0>(b); });
    out << "time,asset,log_price,price\n";
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& [time, i, k] : rows) {
        out << time << ',' << i << ',' << path.log_path.assets[i].log_prices[k] << ',' << path.prices[i][k] << '\n';
    }
}

} // namespace hlob
