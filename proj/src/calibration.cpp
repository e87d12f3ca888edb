#include "hlob/calibration.hpp"

#include "hlob/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

namespace hlob {

std::vector<double> TickData::marks_of(std::size_t dim) const {
    std::vector<double> out;
    for (std::size_t k = 0; k < stream.events.size(); ++k) {
        if (stream.events[k].dim == dim) out.push_back(marks[k]);
    }
    return out;
}

std::vector<TickRecord> TickData::records() const {
    std::vector<TickRecord> out;
    out.reserve(marks.size());
    for (std::size_t k = 0; k < marks.size(); ++k) out.push_back({stream.events[k].time, stream.events[k].dim, marks[k]});
    return out;
}

namespace {

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

double parse_double(const std::string& text, std::size_t line, const char* column) {
    double value = 0.0;
    const auto* begin = text.data();
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (text.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
        throw ParseError("line " + std::to_string(line) + ": cannot parse " + column + " '" + text + "'", line);
    }
    return value;
}

std::size_t parse_index(const std::string& text, std::size_t line) {
    std::size_t value = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec != std::errc() || ptr != end) {
        throw ParseError("line " + std::to_string(line) + ": cannot parse dim '" + text + "'", line);
    }
    return value;
}

} // namespace

TickData read_events(std::istream& in, std::size_t dim, std::optional<double> horizon) {
    if (dim == 0) throw ArgumentError("dimension must be >= 1");
    std::string line;
    std::size_t line_no = 0;
    bool has_marks = false;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        const auto header = split(line);
        if (header == std::vector<std::string>{"time", "dim", "price_change"}) {
            has_marks = true;
        } else if (header != std::vector<std::string>{"time", "dim"}) {
            throw ParseError("line " + std::to_string(line_no) + ": expected header 'time,dim,price_change'", line_no);
        }
        break;
    }
    if (line_no == 0) throw ParseError("empty input: missing header 'time,dim,price_change'");

    std::vector<TickRecord> rows;
    std::vector<double> last_time(dim, -std::numeric_limits<double>::infinity());
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        const auto fields = split(line);
        const std::size_t expected = has_marks ? 3 : 2;
        if (fields.size() != expected) {
            throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(expected) + " fields, got " +
                                 std::to_string(fields.size()),
                             line_no);
        }
        TickRecord r{parse_double(fields[0], line_no, "time"), parse_index(fields[1], line_no),
                     has_marks ? parse_double(fields[2], line_no, "price_change") : 0.0};
        if (r.time < 0.0) throw DataError("line " + std::to_string(line_no) + ": negative time", line_no);
        if (r.dim >= dim) {
            throw DataError("line " + std::to_string(line_no) + ": dim " + std::to_string(r.dim) +
                                " out of range for d = " + std::to_string(dim),
                            line_no);
        }
        if (r.time < last_time[r.dim]) {
            throw DataError("line " + std::to_string(line_no) + ": times not sorted within dim " + std::to_string(r.dim),
                            line_no);
        }
        last_time[r.dim] = r.time;
        rows.push_back(r);
    }

    std::stable_sort(rows.begin(), rows.end(), [](const TickRecord& a, const TickRecord& b) { return a.time < b.time; });
    TickData data;
    data.stream.events.reserve(rows.size());
    data.marks.reserve(rows.size());
    for (const auto& r : rows) {
        data.stream.events.push_back({r.time, r.dim});
        data.marks.push_back(r.price_change);
    }
    const double last = rows.empty() ? 0.0 : rows.back().time;
    data.stream.horizon = horizon.value_or(last);
    if (data.stream.horizon < last) throw DataError("horizon precedes the last event");
    return data;
}

TickData load_events(const std::filesystem::path& path, std::size_t dim, std::optional<double> horizon) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open event file '" + path.string() + "'");
    return read_events(in, dim, horizon);
}

void write_events(std::ostream& out, const TickData& data) {
    out << "time,dim,price_change\n";
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (std::size_t k = 0; k < data.marks.size(); ++k) {
        out << data.stream.events[k].time << ',' << data.stream.events[k].dim << ',' << data.marks[k] << '\n';
    }
}

void save_events(const std::filesystem::path& path, const TickData& data) {
    std::ofstream out(path);
    if (!out) throw ArgumentError("cannot write event file '" + path.string() + "'");
    write_events(out, data);
}

LikelihoodGradient hawkes_log_likelihood_gradient(const EventStream& stream, const HawkesParams& params) {
    const auto d = static_cast<Eigen::Index>(params.dim());
    const auto& alpha = params.kernel().alpha();
    const auto& beta = params.kernel().beta();
    const auto& base = params.lambda_inf();
    const double horizon = stream.horizon;

    LikelihoodGradient out;
    out.d_lambda = Eigen::VectorXd::Zero(d);
    out.d_alpha = Eigen::MatrixXd::Zero(d, d);
    out.d_beta = Eigen::MatrixXd::Zero(d, d);

    // decayed(i, j) = sum_{s in j, s < t} e^{-beta_ij (t - s)}; lagged(i, j) carries the (t - s) weight.
    Eigen::MatrixXd decayed = Eigen::MatrixXd::Zero(d, d);
    Eigen::MatrixXd lagged = Eigen::MatrixXd::Zero(d, d);
    Eigen::MatrixXd factor(d, d);
    double last = 0.0;
    double value = 0.0;
    for (const auto& e : stream.events) {
        if (e.dim >= params.dim()) throw ArgumentError("event stream has an unknown dimension");
        const double dt = e.time - last;
        if (dt < 0.0) throw DataError("event stream is not time-ordered");
        if (dt > 0.0) {
            factor = (-beta.array() * dt).exp();
            lagged = factor.cwiseProduct(lagged + dt * decayed);
            decayed = decayed.cwiseProduct(factor);
            last = e.time;
        }
        const auto m = static_cast<Eigen::Index>(e.dim);
        const double intensity = base(m) + alpha.row(m).dot(decayed.row(m));
        if (!(intensity > 0.0)) throw NumericalError("non-positive intensity in likelihood");
        value += std::log(intensity);
        const double inv = 1.0 / intensity;
        out.d_lambda(m) += inv;
        out.d_alpha.row(m) += inv * decayed.row(m);
        out.d_beta.row(m) -= inv * alpha.row(m).cwiseProduct(lagged.row(m));
        decayed.col(m).array() += 1.0;
    }

    // Compensator.
    for (const auto& e : stream.events) {
        const double u = horizon - e.time;
        const auto j = static_cast<Eigen::Index>(e.dim);
        for (Eigen::Index i = 0; i < d; ++i) {
            const double b = beta(i, j);
            const double tail = std::exp(-b * u);
            const double integral = -std::expm1(-b * u) / b;
            value -= alpha(i, j) * integral;
            out.d_alpha(i, j) -= integral;
            out.d_beta(i, j) -= alpha(i, j) * (u * tail / b - integral / b);
        }
    }
    value -= base.sum() * horizon;
    out.d_lambda.array() -= horizon;
    out.value = value;
    return out;
}

double hawkes_log_likelihood(const EventStream& stream, const HawkesParams& params) {
    return hawkes_log_likelihood_gradient(stream, params).value;
}

namespace {

// Unknowns: [log lambda_i (d)] [K_ij (d*d, row-major)] [log beta_ij (d*d, row-major)].
struct MleProblem {
    const EventStream& stream;
    std::size_t dim;
    const MleOptions& options;
    double scale;  // objective normalisation: 1 / max(1, event count)

    [[nodiscard]] Eigen::Index size() const { return static_cast<Eigen::Index>(dim + 2 * dim * dim); }

    [[nodiscard]] std::optional<HawkesParams> params_of(const Eigen::VectorXd& x) const {
        const auto d = static_cast<Eigen::Index>(dim);
        Eigen::VectorXd base = x.head(d).array().exp();
        Eigen::MatrixXd branching(d, d);
        Eigen::MatrixXd beta(d, d);
        for (Eigen::Index i = 0; i < d; ++i) {
            for (Eigen::Index j = 0; j < d; ++j) {
                branching(i, j) = x(d + i * d + j);
                beta(i, j) = std::exp(x(d + d * d + i * d + j));
            }
        }
        if (!(spectral_radius(branching) < options.max_branching)) return std::nullopt;
        return HawkesParams(base, ExponentialKernel(branching.cwiseProduct(beta), beta));
    }

    // Negative scaled log-likelihood and its gradient; +inf outside the stationary region.
    double evaluate(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const {
        const auto params = params_of(x);
        if (!params) return std::numeric_limits<double>::infinity();
        const auto lg = hawkes_log_likelihood_gradient(stream, *params);
        if (grad) {
            const auto d = static_cast<Eigen::Index>(dim);
            grad->resize(size());
            const auto& beta = params->kernel().beta();
            const auto& branching = params->branching();
            for (Eigen::Index i = 0; i < d; ++i) {
                (*grad)(i) = -scale * params->lambda_inf()(i) * lg.d_lambda(i);
                for (Eigen::Index j = 0; j < d; ++j) {
                    const double b = beta(i, j);
                    (*grad)(d + i * d + j) = -scale * b * lg.d_alpha(i, j);
                    (*grad)(d + d * d + i * d + j) = -scale * b * (lg.d_beta(i, j) + branching(i, j) * lg.d_alpha(i, j));
                }
            }
        }
        return -scale * lg.value;
    }
};

Eigen::VectorXd project(const Eigen::VectorXd& x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    return x.cwiseMax(lo).cwiseMin(hi);
}

Eigen::VectorXd projected_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& g, const Eigen::VectorXd& lo,
                                   const Eigen::VectorXd& hi) {
    Eigen::VectorXd pg = g;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        if ((x(k) <= lo(k) && g(k) > 0.0) || (x(k) >= hi(k) && g(k) < 0.0)) pg(k) = 0.0;
    }
    return pg;
}

} // namespace

MleResult fit_hawkes_mle_detailed(const EventStream& stream, std::size_t dim, const MleOptions& options) {
    if (dim == 0) throw ArgumentError("dimension must be >= 1");
    if (!(stream.horizon > 0.0)) throw ArgumentError("event stream horizon must be > 0");
    for (std::size_t i = 0; i < dim; ++i) {
        if (stream.count(i) == 0) throw DataError("dimension " + std::to_string(i) + " has no events");
    }

    const MleProblem problem{stream, dim, options, 1.0 / std::max<double>(1.0, static_cast<double>(stream.events.size()))};
    const auto d = static_cast<Eigen::Index>(dim);
    const Eigen::Index n = problem.size();

    Eigen::VectorXd lo(n);
    Eigen::VectorXd hi(n);
    lo.head(d).setConstant(-std::numeric_limits<double>::infinity());
    hi.head(d).setConstant(std::numeric_limits<double>::infinity());
    lo.segment(d, d * d).setZero();
    hi.segment(d, d * d).setConstant(options.max_branching);
    lo.tail(d * d).setConstant(std::log(options.min_beta));
    hi.tail(d * d).setConstant(std::log(options.max_beta));

    // Start: half the observed rate from the background, weak excitation decaying at the event rate.
    Eigen::VectorXd x(n);
    const double total_rate = static_cast<double>(stream.events.size()) / stream.horizon;
    for (Eigen::Index i = 0; i < d; ++i) {
        x(i) = std::log(0.5 * static_cast<double>(stream.count(static_cast<std::size_t>(i))) / stream.horizon);
    }
    x.segment(d, d * d).setConstant(0.5 / static_cast<double>(dim));
    x.tail(d * d).setConstant(std::clamp(std::log(total_rate), lo(n - 1), hi(n - 1)));

    Eigen::VectorXd g;
    double f = problem.evaluate(x, &g);
    if (!std::isfinite(f)) throw NumericalError("initial point of the likelihood search is infeasible");

    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
    bool h_is_identity = true;
    std::size_t small_steps = 0;
    double gnorm = projected_gradient(x, g, lo, hi).lpNorm<Eigen::Infinity>();

    for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
        const Eigen::VectorXd pg = projected_gradient(x, g, lo, hi);
        gnorm = pg.lpNorm<Eigen::Infinity>();
        if (gnorm < options.gradient_tolerance || small_steps >= 3) {
            return {*problem.params_of(x), -f / problem.scale, iter, gnorm};
        }

        // Variables held at a bound by the gradient are frozen for this step.
        std::vector<char> active(static_cast<std::size_t>(n), 0);
        for (Eigen::Index k = 0; k < n; ++k) active[static_cast<std::size_t>(k)] = (pg(k) == 0.0 && g(k) != 0.0);
        Eigen::VectorXd dir = -(h * pg);
        for (Eigen::Index k = 0; k < n; ++k) {
            if (active[static_cast<std::size_t>(k)]) dir(k) = 0.0;
        }
        if (!(dir.dot(pg) < 0.0)) {
            h.setIdentity();
            h_is_identity = true;
            dir = -pg;
        }

        double step = h_is_identity ? std::min(1.0, 0.1 / std::max(gnorm, 1e-12)) : 1.0;
        Eigen::VectorXd x_new;
        Eigen::VectorXd g_new;
        double f_new = std::numeric_limits<double>::infinity();
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            x_new = project(x + step * dir, lo, hi);
            f_new = problem.evaluate(x_new, &g_new);
            if (std::isfinite(f_new) && f_new <= f + 1e-4 * g.dot(x_new - x)) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (!h_is_identity) {
                h.setIdentity();
                h_is_identity = true;
                continue;
            }
            break;
        }

        const Eigen::VectorXd s = x_new - x;
        const Eigen::VectorXd y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd left = Eigen::MatrixXd::Identity(n, n) - rho * s * y.transpose();
            h = left * h * left.transpose() + rho * s * s.transpose();
            h_is_identity = false;
        }
        small_steps = (std::abs(f - f_new) <= 1e-15 * std::max(1.0, std::abs(f))) ? small_steps + 1 : 0;
        x = x_new;
        g = g_new;
        f = f_new;
    }
    gnorm = projected_gradient(x, g, lo, hi).lpNorm<Eigen::Infinity>();
    if (gnorm < 1e3 * options.gradient_tolerance) return {*problem.params_of(x), -f / problem.scale, options.max_iterations, gnorm};
    std::ostringstream msg;
    msg << "Hawkes MLE did not converge (projected gradient norm " << gnorm << ")";
    throw ConvergenceError(msg.str(), gnorm);
}

HawkesParams fit_hawkes_mle(const EventStream& stream, std::size_t dim, const MleOptions& options) {
    return fit_hawkes_mle_detailed(stream, dim, options).params;
}

MarkovChainSpec fit_chain(std::span<const double> marks, double smoothing) {
    if (!(smoothing >= 0.0)) throw ArgumentError("smoothing must be >= 0");
    std::map<double, std::size_t> index;
    for (double m : marks) index.emplace(m, 0);
    if (index.size() < 2) throw DegenerateError("chain fit needs at least two distinct observed values");
    Eigen::VectorXd values(static_cast<Eigen::Index>(index.size()));
    std::size_t k = 0;
    for (auto& [value, slot] : index) {
        slot = k;
        values(static_cast<Eigen::Index>(k++)) = value;
    }
    const auto n = values.size();
    Eigen::MatrixXd counts = Eigen::MatrixXd::Constant(n, n, smoothing);
    for (std::size_t t = 1; t < marks.size(); ++t) {
        counts(static_cast<Eigen::Index>(index[marks[t - 1]]), static_cast<Eigen::Index>(index[marks[t]])) += 1.0;
    }
    for (Eigen::Index r = 0; r < n; ++r) {
        const double total = counts.row(r).sum();
        if (total > 0.0) {
            counts.row(r) /= total;
        } else {
            counts.row(r).setConstant(1.0 / static_cast<double>(n));
        }
    }
    return MarkovChainSpec(counts, values);
}

MarkovChainSpec fit_chain(const TickData& data, std::size_t dim, double smoothing) {
    const auto marks = data.marks_of(dim);
    return fit_chain(std::span<const double>(marks), smoothing);
}

} // namespace hlob
