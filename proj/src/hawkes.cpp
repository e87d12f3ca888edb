#include "hlob/hawkes.hpp"

#include "hlob/errors.hpp"
#include "hlob/parallel.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

namespace hlob {

namespace {

void require_square(const Eigen::MatrixXd& m, const char* name) {
    if (m.rows() == 0 || m.rows() != m.cols()) {
        throw ArgumentError(std::string(name) + " must be a non-empty square matrix");
    }
}

} // namespace

ExponentialKernel::ExponentialKernel(Eigen::MatrixXd alpha, Eigen::MatrixXd beta)
    : alpha_(std::move(alpha)), beta_(std::move(beta)) {
    require_square(alpha_, "alpha");
    require_square(beta_, "beta");
    if (alpha_.rows() != beta_.rows()) throw ArgumentError("alpha and beta dimensions differ");
    for (Eigen::Index i = 0; i < alpha_.rows(); ++i) {
        for (Eigen::Index j = 0; j < alpha_.cols(); ++j) {
            if (!(alpha_(i, j) >= 0.0) || !std::isfinite(alpha_(i, j))) {
                throw ArgumentError("alpha entries must be finite and >= 0");
            }
            if (!(beta_(i, j) > 0.0) || !std::isfinite(beta_(i, j))) {
                throw ArgumentError("beta entries must be finite and > 0");
            }
        }
    }
}

HawkesParams::HawkesParams(Eigen::VectorXd lambda_inf, ExponentialKernel kernel)
    : lambda_inf_(std::move(lambda_inf)), kernel_(std::move(kernel)), branching_(branching_matrix(kernel_)) {
    if (static_cast<std::size_t>(lambda_inf_.size()) != kernel_.dim()) {
        throw ArgumentError("lambda_inf length does not match kernel dimension");
    }
    for (Eigen::Index i = 0; i < lambda_inf_.size(); ++i) {
        if (!(lambda_inf_(i) > 0.0) || !std::isfinite(lambda_inf_(i))) {
            throw ArgumentError("lambda_inf entries must be finite and > 0");
        }
    }
    const double radius = spectral_radius(branching_);
    if (!(radius < 1.0)) {
        std::ostringstream msg;
        msg << "branching matrix spectral radius " << radius << " >= 1 (non-stationary Hawkes process)";
        throw StationarityError(msg.str());
    }
}

HawkesParams HawkesParams::univariate(double lambda_inf, double alpha, double beta) {
    return HawkesParams(Eigen::VectorXd::Constant(1, lambda_inf),
                        ExponentialKernel(Eigen::MatrixXd::Constant(1, 1, alpha), Eigen::MatrixXd::Constant(1, 1, beta)));
}

std::size_t EventStream::count(std::size_t dim) const {
    std::size_t n = 0;
    for (const auto& e : events) n += (e.dim == dim);
    return n;
}

std::vector<double> EventStream::times(std::size_t dim) const {
    std::vector<double> out;
    for (const auto& e : events) {
        if (e.dim == dim) out.push_back(e.time);
    }
    return out;
}

double intensity_at(const HawkesParams& params, const EventStream& history, double t, std::size_t i) {
    if (i >= params.dim()) throw ArgumentError("dimension index " + std::to_string(i) + " out of range");
    if (t < 0.0) throw ArgumentError("intensity time must be >= 0");
    const auto& alpha = params.kernel().alpha();
    const auto& beta = params.kernel().beta();
    double value = params.lambda_inf()(static_cast<Eigen::Index>(i));
    for (const auto& e : history.events) {
        if (!(e.time < t)) continue;
        if (e.dim >= params.dim()) throw ArgumentError("history contains an unknown dimension");
        const auto r = static_cast<Eigen::Index>(i);
        const auto c = static_cast<Eigen::Index>(e.dim);
        value += alpha(r, c) * std::exp(-beta(r, c) * (t - e.time));
    }
    return value;
}

Eigen::MatrixXd branching_matrix(const ExponentialKernel& kernel) {
    return kernel.alpha().cwiseQuotient(kernel.beta());
}

Eigen::MatrixXd branching_matrix(const HawkesParams& params) { return params.branching(); }

double spectral_radius(const Eigen::MatrixXd& m) {
    if (m.rows() == 1) return std::abs(m(0, 0));
    Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
    if (solver.info() != Eigen::Success) throw NumericalError("eigenvalue computation failed");
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

double stationarity_margin(const ExponentialKernel& kernel) { return spectral_radius(branching_matrix(kernel)); }

double stationarity_margin(const HawkesParams& params) { return spectral_radius(params.branching()); }

Eigen::VectorXd expected_rate(const HawkesParams& params) {
    const auto d = static_cast<Eigen::Index>(params.dim());
    const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(d, d) - params.branching();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
    if (!lu.isInvertible()) throw StationarityError("I - K is singular");
    return lu.solve(params.lambda_inf());
}

EventStream simulate(const HawkesParams& params, double horizon, std::uint64_t seed) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ArgumentError("horizon must be finite and > 0");

    const auto d = static_cast<Eigen::Index>(params.dim());
    const auto& alpha = params.kernel().alpha();
    const auto& beta = params.kernel().beta();
    const Eigen::VectorXd& base = params.lambda_inf();

    auto engine = make_engine(seed, streams::hawkes);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    // excitation(i, j): current contribution of past dim-j events to dim-i intensity.
    Eigen::MatrixXd excitation = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd intensity(d);

    EventStream out;
    out.horizon = horizon;

    const auto decay_to = [&](double dt) {
        excitation.array() *= (-beta.array() * dt).exp();
    };
    const auto total_intensity = [&] {
        intensity = base + excitation.rowwise().sum();
        return intensity.sum();
    };

    double t = 0.0;
    double upper = total_intensity();
    while (true) {
        // 1 - U lies in (0, 1], keeping the log finite.
        const double wait = -std::log(1.0 - unif(engine)) / upper;
        if (t + wait > horizon) break;
        t += wait;
        decay_to(wait);
        const double current = total_intensity();
        const double u = unif(engine) * upper;
        if (u < current) {
            // u is uniform on [0, current) given acceptance: reuse it to pick the dimension.
            Eigen::Index dim = 0;
            double acc = intensity(0);
            while (u >= acc && dim + 1 < d) acc += intensity(++dim);
            out.events.push_back({t, static_cast<std::size_t>(dim)});
            excitation.col(dim) += alpha.col(dim);
            upper = total_intensity();
        } else {
            upper = current;
        }
    }
    return out;
}

namespace detail {

Eigen::MatrixXd read_square_matrix(const nlohmann::json& doc, const char* key, std::size_t dim) {
    if (!doc.contains(key)) throw ParseError(std::string("missing key '") + key + "'");
    const auto& node = doc.at(key);
    const auto n = static_cast<Eigen::Index>(dim);
    Eigen::MatrixXd m(n, n);
    if (node.is_number() && dim == 1) {
        m(0, 0) = node.get<double>();
        return m;
    }
    if (!node.is_array()) throw ParseError(std::string("'") + key + "' must be an array");
    if (node.size() == dim * dim && (dim == 1 || !node.at(0).is_array())) {
        for (std::size_t k = 0; k < dim * dim; ++k) {
            m(static_cast<Eigen::Index>(k / dim), static_cast<Eigen::Index>(k % dim)) = node.at(k).get<double>();
        }
        return m;
    }
    if (node.size() == dim) {
        for (std::size_t r = 0; r < dim; ++r) {
            const auto& row = node.at(r);
            if (!row.is_array() || row.size() != dim) {
                throw ParseError(std::string("'") + key + "' row " + std::to_string(r) + " has wrong length");
            }
            for (std::size_t c = 0; c < dim; ++c) {
                m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row.at(c).get<double>();
            }
        }
        return m;
    }
    throw ParseError(std::string("'") + key + "' must hold dim*dim values");
}

nlohmann::json flatten(const Eigen::MatrixXd& m) {
    auto arr = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) arr.push_back(m(r, c));
    }
    return arr;
}

} // namespace detail

nlohmann::json to_json(const HawkesParams& params) {
    nlohmann::json doc;
    doc["dim"] = params.dim();
    doc["lambda_inf"] = std::vector<double>(params.lambda_inf().data(),
                                            params.lambda_inf().data() + params.lambda_inf().size());
    doc["alpha"] = detail::flatten(params.kernel().alpha());
    doc["beta"] = detail::flatten(params.kernel().beta());
    return doc;
}

HawkesParams hawkes_from_json(const nlohmann::json& doc) {
    try {
        if (!doc.contains("lambda_inf")) throw ParseError("missing key 'lambda_inf'");
        std::vector<double> lambda;
        if (doc.at("lambda_inf").is_number()) {
            lambda.push_back(doc.at("lambda_inf").get<double>());
        } else {
            lambda = doc.at("lambda_inf").get<std::vector<double>>();
        }
        const std::size_t dim = doc.contains("dim") ? doc.at("dim").get<std::size_t>() : lambda.size();
        if (dim == 0 || lambda.size() != dim) throw ParseError("lambda_inf length does not match dim");
        Eigen::VectorXd base = Eigen::Map<Eigen::VectorXd>(lambda.data(), static_cast<Eigen::Index>(dim));
        return HawkesParams(base, ExponentialKernel(detail::read_square_matrix(doc, "alpha", dim),
                                                    detail::read_square_matrix(doc, "beta", dim)));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid Hawkes parameter document: ") + e.what());
    }
}

void write_events_csv(std::ostream& out, const EventStream& stream) {
    out << "time,dim\n";
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& e : stream.events) out << e.time << ',' << e.dim << '\n';
}

} // namespace hlob
