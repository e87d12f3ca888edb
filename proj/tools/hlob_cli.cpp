#include "hlob/calibration.hpp"
#include "hlob/emgchp.hpp"
#include "hlob/errors.hpp"
#include "hlob/european.hpp"
#include "hlob/hawkes.hpp"
#include "hlob/implied.hpp"
#include "hlob/markov_chain.hpp"
#include "hlob/monte_carlo.hpp"
#include "hlob/spread_basket.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using nlohmann::json;

constexpr int kUsageExit = 2;

hlob::EmgchpParams load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw hlob::ArgumentError("cannot open model file '" + path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw hlob::ParseError("model file '" + path + "' is not valid JSON: " + e.what());
    }
    try {
        return hlob::emgchp_from_json(doc);
    } catch (const json::exception& e) {
        throw hlob::ParseError("model file '" + path + "': " + e.what());
    }
}

// start:step:stop, inclusive of stop up to rounding; a bare number is a one-point grid.
std::vector<double> parse_grid(const std::string& text, const std::string& flag) {
    const auto bad = [&](const std::string& why) {
        return hlob::ArgumentError("invalid grid " + flag + " '" + text + "': " + why);
    };
    std::vector<double> parts;
    std::stringstream ss(text);
    std::string piece;
    while (std::getline(ss, piece, ':')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(piece, &used);
        } catch (const std::exception&) {
            throw bad("expected start:step:stop");
        }
        if (used != piece.size() || !std::isfinite(v)) throw bad("expected start:step:stop");
        parts.push_back(v);
    }
    if (parts.size() == 1) return parts;
    if (parts.size() != 3) throw bad("expected start:step:stop");
    const double start = parts[0];
    const double step = parts[1];
    const double stop = parts[2];
    if (!(step > 0.0)) throw bad("step must be > 0");
    if (stop < start) throw bad("stop must be >= start");
    const double span = (stop - start) / step;
    if (span > 1e7) throw bad("too many points");
    const auto count = static_cast<std::size_t>(std::floor(span + 1e-9)) + 1;
    std::vector<double> grid(count);
    for (std::size_t k = 0; k < count; ++k) grid[k] = start + static_cast<double>(k) * step;
    return grid;
}

std::vector<double> parse_list(const std::string& text, const std::string& flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string piece;
    while (std::getline(ss, piece, ',')) {
        std::size_t used = 0;
        try {
            out.push_back(std::stod(piece, &used));
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != piece.size() || used == 0) throw hlob::ArgumentError("invalid list " + flag + " '" + text + "'");
    }
    return out;
}

void set_precision(std::ostream& out) { out << std::setprecision(std::numeric_limits<double>::max_digits10); }

void check_asset(const hlob::EmgchpParams& params, std::size_t asset) {
    if (asset >= params.dim()) {
        throw hlob::ArgumentError("asset " + std::to_string(asset) + " out of range for d = " + std::to_string(params.dim()));
    }
}

struct EuroArgs {
    std::string model;
    std::size_t asset = 0;
    std::optional<double> spot;
    double strike = 0.0;
    double rate = 0.0;
    double maturity = 1.0;
    double t = 0.0;
    bool put = false;
};

void add_euro_flags(CLI::App* app, EuroArgs& a, bool with_spot) {
    app->add_option("--model", a.model, "model JSON file")->required();
    app->add_option("--asset", a.asset, "asset index (0-based)");
    if (with_spot) app->add_option("--spot", a.spot, "spot price (default: model spot)");
    app->add_option("--strike", a.strike, "strike K")->required();
    app->add_option("--rate", a.rate, "interest rate r");
    app->add_option("--maturity", a.maturity, "maturity T");
}

hlob::EuroContract contract_of(const EuroArgs& a) {
    hlob::EuroContract c{a.strike, a.maturity, a.rate, a.put ? hlob::OptionKind::put : hlob::OptionKind::call};
    c.validate();
    return c;
}

double spot_of(const EuroArgs& a, const hlob::EmgchpParams& params) {
    return a.spot.value_or(params.spots()(static_cast<Eigen::Index>(a.asset)));
}

int run_price(const EuroArgs& a) {
    const auto params = load_model(a.model);
    check_asset(params, a.asset);
    const auto contract = contract_of(a);
    const auto model = hlob::HawkesBsModel::from_params(params, a.asset);
    const double sigma = model.sigma_hat();
    const double spot = spot_of(a, params);
    json out{{"price", hlob::option_price(a.t, spot, contract, sigma)},
             {"sigma_hat", sigma},
             {"kind", a.put ? "put" : "call"},
             {"spot", spot},
             {"strike", a.strike},
             {"rate", a.rate},
             {"maturity", a.maturity},
             {"t", a.t}};
    std::cout << out.dump(2) << '\n';
    return 0;
}

int run_surface(const EuroArgs& a, const std::string& x_grid, const std::string& t_grid) {
    const auto params = load_model(a.model);
    check_asset(params, a.asset);
    const auto contract = contract_of(a);
    const double sigma = hlob::HawkesBsModel::from_params(params, a.asset).sigma_hat();
    const auto xs = parse_grid(x_grid, "--x-grid");
    const auto ts = parse_grid(t_grid, "--t-grid");
    for (double t : ts) {
        if (t > a.maturity) throw hlob::ArgumentError("--t-grid exceeds maturity");
    }
    const auto surface = hlob::price_surface(contract, sigma, xs, ts);
    std::ostringstream out;
    set_precision(out);
    out << "t,x,price\n";
    for (const auto& p : surface) out << p.t << ',' << p.x << ',' << p.price << '\n';
    std::cout << out.str();
    return 0;
}

int run_greeks(const EuroArgs& a, const std::string& x_grid) {
    const auto params = load_model(a.model);
    check_asset(params, a.asset);
    const auto contract = contract_of(a);
    const auto model = hlob::HawkesBsModel::from_params(params, a.asset);
    const auto xs = parse_grid(x_grid, "--x-grid");
    std::ostringstream out;
    set_precision(out);
    out << "x,delta,theta,c_sigma_star,c_a_star,c_mu_hat\n";
    for (double x : xs) {
        const auto g = hlob::greeks(a.t, x, contract, model);
        out << x << ',' << g.delta << ',' << g.theta << ',' << g.greek_sigma_star << ',' << g.greek_a_star << ','
            << g.greek_mu_hat << '\n';
    }
    std::cout << out.str();
    return 0;
}

int run_implied(const EuroArgs& a, const std::string& t_grid, std::optional<double> observed) {
    const auto params = load_model(a.model);
    check_asset(params, a.asset);
    const auto model = hlob::HawkesBsModel::from_params(params, a.asset);
    const double spot = spot_of(a, params);
    const auto taus = parse_grid(t_grid, "--t-grid");
    std::ostringstream out;
    set_precision(out);
    out << "T,implied_vol,e_implied,var_implied\n";
    for (double tau : taus) {
        const hlob::EuroContract contract{a.strike, tau, a.rate, hlob::OptionKind::call};
        const double price = observed.value_or(hlob::call_price(0.0, spot, contract, model.sigma_hat()));
        const double vol = hlob::implied_vol({price, spot, a.strike, a.rate, tau});
        const auto flow = hlob::implied_order_flow(vol, model.sigma_star, model.a_star, model.mu_hat);
        out << tau << ',' << vol << ',' << flow.e_implied << ',' << flow.var_implied << '\n';
    }
    std::cout << out.str();
    return 0;
}

int run_implied_flow(const std::string& model_path, std::size_t asset, double sigma_implied) {
    const auto params = load_model(model_path);
    check_asset(params, asset);
    const auto model = hlob::HawkesBsModel::from_params(params, asset);
    const auto flow = hlob::implied_order_flow(sigma_implied, model.sigma_star, model.a_star, model.mu_hat);
    json out{{"sigma_implied", sigma_implied},
             {"e_implied", flow.e_implied},
             {"var_implied", flow.var_implied},
             {"sigma_star", model.sigma_star},
             {"a_star", model.a_star},
             {"mu_hat", model.mu_hat}};
    std::cout << out.dump(2) << '\n';
    return 0;
}

int run_spread(const std::string& model_path, const std::string& rho_grid, const std::string& t_grid) {
    const auto params = load_model(model_path);
    if (params.dim() != 2) throw hlob::DimensionError("spread needs a two-asset model, got d = " + std::to_string(params.dim()));
    const Eigen::VectorXd spots = params.spots();
    const hlob::AssetDiffusion a1{spots(0), hlob::hawkes_bs_vol(params, 0)};
    const hlob::AssetDiffusion a2{spots(1), hlob::hawkes_bs_vol(params, 1)};
    const auto rhos = parse_grid(rho_grid, "--rho-grid");
    const auto ts = parse_grid(t_grid, "--t-grid");
    std::ostringstream out;
    set_precision(out);
    out << "T,rho,price\n";
    for (double T : ts) {
        for (double rho : rhos) out << T << ',' << rho << ',' << hlob::margrabe_price(a1, a2, T, rho) << '\n';
    }
    std::cout << out.str();
    return 0;
}

int run_spread2d(const std::string& model_path, const std::string& t_grid) {
    const auto params = load_model(model_path);
    const auto ts = parse_grid(t_grid, "--t-grid");
    std::ostringstream out;
    set_precision(out);
    out << "T,price\n";
    for (double T : ts) out << T << ',' << hlob::spread_2d_emgchp(params, T) << '\n';
    std::cout << out.str();
    return 0;
}

struct BasketArgs {
    std::string model;
    std::string weights;
    std::optional<double> strike;
    double rate = 0.06;
    int theta = 1;
    std::string t_grid = "1:1:100";
};

int run_basket(const BasketArgs& a) {
    const auto params = load_model(a.model);
    const auto weights = parse_list(a.weights, "--weights");
    if (weights.size() != params.dim()) throw hlob::DimensionError("--weights needs one weight per asset");
    const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size()));
    const Eigen::VectorXd spots = params.spots();
    const double strike = a.strike.value_or(w.dot(spots));
    const auto ts = parse_grid(a.t_grid, "--t-grid");
    const auto approx = hlob::diffusion_approx(params);
    std::ostringstream out;
    set_precision(out);
    out << "# strike=" << strike << (a.strike ? "" : " (default: weighted spot, not given by the model)") << '\n';
    out << "# theta=" << a.theta << " rate=" << a.rate << '\n';
    out << "T,price\n";
    std::size_t undefined = 0;
    for (double T : ts) {
        const hlob::BasketContract contract{w, strike, a.theta, T, a.rate};
        out << T << ',';
        try {
            out << hlob::basket_quote(approx, spots, contract).price << '\n';
        } catch (const hlob::NumericalError&) {
            out << "nan\n";
            ++undefined;
        }
    }
    std::cout << out.str();
    if (undefined > 0) std::cerr << "note: " << undefined << " maturities have adjusted strike K* <= 0, price written as nan\n";
    return 0;
}

int run_simulate(const std::string& model_path, double horizon, std::uint64_t seed, bool events) {
    const auto params = load_model(model_path);
    if (!(horizon > 0.0)) throw hlob::ArgumentError("--horizon must be > 0");
    std::ostringstream out;
    if (events) {
        auto marked = hlob::marked_events(params, horizon, seed);
        const hlob::TickData data{std::move(marked.stream), std::move(marked.jumps)};
        hlob::write_events(out, data);
    } else {
        hlob::write_path_csv(out, hlob::emgchp_path(params, horizon, seed));
    }
    std::cout << out.str();
    return 0;
}

int run_calibrate(const std::string& events_path, std::size_t dim, std::optional<double> horizon, double smoothing,
                  const std::string& spots) {
    const auto data = hlob::load_events(events_path, dim, horizon);
    const auto fit = hlob::fit_hawkes_mle_detailed(data.stream, dim);
    json doc;
    doc["hawkes"] = hlob::to_json(fit.params);
    json chains = json::array();
    bool have_chains = true;
    for (std::size_t i = 0; i < dim && have_chains; ++i) {
        try {
            chains.push_back(hlob::to_json(hlob::fit_chain(data, i, smoothing)));
        } catch (const hlob::DegenerateError& e) {
            std::cerr << "note: no jump chain fitted for dim " << i << ": " << e.what() << '\n';
            have_chains = false;
        }
    }
    if (have_chains) doc["chains"] = chains;
    if (!spots.empty()) {
        const auto s = parse_list(spots, "--spot");
        if (s.size() != dim) throw hlob::DimensionError("--spot needs one value per dimension");
        doc["spot"] = s;
    }
    std::cerr << "log-likelihood " << fit.log_likelihood << " after " << fit.iterations << " iterations\n";
    std::cout << doc.dump(2) << '\n';
    return 0;
}

int run_hedge(const EuroArgs& a, std::size_t steps, std::uint64_t seed) {
    const auto params = load_model(a.model);
    check_asset(params, a.asset);
    const auto contract = contract_of(a);
    const double sigma = hlob::HawkesBsModel::from_params(params, a.asset).sigma_hat();
    const auto rows = hlob::hedge_path(contract, sigma, spot_of(a, params), steps, seed);
    std::ostringstream out;
    set_precision(out);
    out << "t,S,alpha,beta,X,price\n";
    for (const auto& r : rows) {
        out << r.t << ',' << r.spot << ',' << r.portfolio.alpha << ',' << r.portfolio.beta << ',' << r.portfolio.capital
            << ',' << r.price << '\n';
    }
    std::cout << out.str();
    return 0;
}

struct McArgs {
    std::string model;
    std::string product = "euro";
    std::size_t asset = 0;
    double strike = 0.0;
    double rate = 0.0;
    double maturity = 1.0;
    bool put = false;
    std::optional<double> rho;
    std::string weights;
    int theta = 1;
    std::size_t paths = 1'000'000;
    std::uint64_t seed = 0;
    bool no_antithetic = false;
};

int run_mc(const McArgs& a) {
    const auto params = load_model(a.model);
    const hlob::McOptions opts{a.paths, a.seed, !a.no_antithetic};
    hlob::McEstimate est;
    if (a.product == "euro") {
        check_asset(params, a.asset);
        const hlob::EuroContract c{a.strike, a.maturity, a.rate, a.put ? hlob::OptionKind::put : hlob::OptionKind::call};
        const double sigma = hlob::hawkes_bs_vol(params, a.asset);
        est = hlob::mc_euro(sigma, c, params.spots()(static_cast<Eigen::Index>(a.asset)), opts);
    } else if (a.product == "exchange") {
        if (params.dim() != 2) throw hlob::DimensionError("exchange needs a two-asset model");
        const Eigen::VectorXd spots = params.spots();
        if (a.rho) {
            est = hlob::mc_exchange(spots(0), spots(1), hlob::hawkes_bs_vol(params, 0), hlob::hawkes_bs_vol(params, 1), *a.rho,
                                    a.maturity, opts);
        } else {
            const auto approx = hlob::diffusion_approx(params);
            est = hlob::mc_exchange(spots(0), spots(1), approx.asset_vol(0), approx.asset_vol(1), approx.corr(0, 1),
                                    a.maturity, opts);
        }
    } else if (a.product == "basket-arithmetic" || a.product == "basket-geometric") {
        const auto weights = parse_list(a.weights, "--weights");
        if (weights.size() != params.dim()) throw hlob::DimensionError("--weights needs one weight per asset");
        const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size()));
        const hlob::BasketContract c{w, a.strike, a.theta, a.maturity, a.rate};
        const auto mode = a.product == "basket-arithmetic" ? hlob::BasketAverage::arithmetic : hlob::BasketAverage::geometric;
        est = hlob::mc_basket(hlob::diffusion_approx(params), params.spots(), c, mode, opts);
    } else {
        throw hlob::ArgumentError("unknown --product '" + a.product +
                                  "' (euro, exchange, basket-arithmetic, basket-geometric)");
    }
    json out{{"price", est.price}, {"se", est.std_error}, {"paths", est.paths}, {"seed", est.seed}};
    std::cout << out.dump(2) << '\n';
    return 0;
}

int run_diffusion(const std::string& model_path) {
    const auto params = load_model(model_path);
    std::cout << hlob::to_json(hlob::diffusion_approx(params)).dump(2) << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hawkes-process limit order book option pricing"};
    app.require_subcommand(1);

    EuroArgs price_args;
    auto* price = app.add_subcommand("price", "European option price with the Hawkes-based volatility");
    add_euro_flags(price, price_args, true);
    price->add_option("--t", price_args.t, "valuation time");
    price->add_flag("--put", price_args.put, "price a put");

    EuroArgs surface_args;
    std::string surface_x;
    std::string surface_t;
    auto* surface = app.add_subcommand("surface", "price surface over (t, x), CSV t,x,price");
    add_euro_flags(surface, surface_args, false);
    surface->add_option("--x-grid", surface_x, "spot grid start:step:stop")->required();
    surface->add_option("--t-grid", surface_t, "time grid start:step:stop")->required();
    surface->add_flag("--put", surface_args.put, "price puts");

    EuroArgs greeks_args;
    std::string greeks_x;
    auto* greek = app.add_subcommand("greeks", "Greeks over a spot grid");
    add_euro_flags(greek, greeks_args, false);
    greek->add_option("--x-grid", greeks_x, "spot grid start:step:stop")->required();
    greek->add_option("--t", greeks_args.t, "valuation time");
    greek->add_flag("--put", greeks_args.put, "put Greeks");

    EuroArgs implied_args;
    std::string implied_t;
    std::optional<double> implied_price;
    auto* implied = app.add_subcommand("implied", "implied volatility and order flow over maturities");
    add_euro_flags(implied, implied_args, true);
    implied->add_option("--t-grid", implied_t, "time-to-expiry grid start:step:stop")->required();
    implied->add_option("--price", implied_price, "observed call price (default: the model price)");

    std::string flow_model;
    std::size_t flow_asset = 0;
    double flow_sigma = 0.0;
    auto* flow = app.add_subcommand("implied-flow", "implied order-flow expectation and variance");
    flow->add_option("--model", flow_model, "model JSON file")->required();
    flow->add_option("--asset", flow_asset, "asset index (0-based)");
    flow->add_option("--sigma-implied", flow_sigma, "implied volatility")->required();

    std::string spread_model;
    std::string spread_rho = "0:0.01:1";
    std::string spread_t = "1:1:100";
    auto* spread = app.add_subcommand("spread", "spread option on two one-dimensional assets, CSV T,rho,price");
    spread->add_option("--model", spread_model, "two-asset model JSON")->required();
    spread->add_option("--rho-grid", spread_rho, "correlation grid start:step:stop");
    spread->add_option("--t-grid", spread_t, "maturity grid start:step:stop");

    std::string spread2d_model;
    std::string spread2d_t = "1:1:100";
    auto* spread2d = app.add_subcommand("spread2d", "spread option on a two-dimensional model, CSV T,price");
    spread2d->add_option("--model", spread2d_model, "two-dimensional model JSON")->required();
    spread2d->add_option("--t-grid", spread2d_t, "maturity grid start:step:stop");

    BasketArgs basket_args;
    auto* basket = app.add_subcommand("basket", "basket option, CSV T,price");
    basket->add_option("--model", basket_args.model, "model JSON")->required();
    basket->add_option("--weights", basket_args.weights, "comma-separated weights summing to 1")->required();
    basket->add_option("--strike", basket_args.strike, "strike (default: weighted spot)");
    basket->add_option("--rate", basket_args.rate, "interest rate");
    basket->add_option("--theta", basket_args.theta, "+1 call, -1 put");
    basket->add_option("--t-grid", basket_args.t_grid, "maturity grid start:step:stop");

    std::string sim_model;
    double sim_horizon = 0.0;
    std::uint64_t sim_seed = 0;
    bool sim_events = false;
    auto* sim = app.add_subcommand("simulate", "simulate a price path (CSV time,asset,log_price,price)");
    sim->add_option("--model", sim_model, "model JSON")->required();
    sim->add_option("--horizon", sim_horizon, "time horizon")->required();
    sim->add_option("--seed", sim_seed, "random seed")->required();
    sim->add_flag("--events", sim_events, "emit time,dim,price_change instead");

    std::string cal_events;
    std::size_t cal_dim = 1;
    std::optional<double> cal_horizon;
    double cal_smoothing = 1e-6;
    std::string cal_spot;
    auto* cal = app.add_subcommand("calibrate", "fit Hawkes and jump chains to a time,dim,price_change CSV");
    cal->add_option("--events", cal_events, "event CSV")->required();
    cal->add_option("--dim", cal_dim, "number of dimensions");
    cal->add_option("--horizon", cal_horizon, "observation horizon (default: last event)");
    cal->add_option("--smoothing", cal_smoothing, "additive smoothing for transition counts");
    cal->add_option("--spot", cal_spot, "comma-separated spots to include in the model");

    EuroArgs hedge_args;
    std::size_t hedge_steps = 252;
    std::uint64_t hedge_seed = 0;
    auto* hedge = app.add_subcommand("hedge", "minimal hedge portfolio along a simulated path");
    add_euro_flags(hedge, hedge_args, true);
    hedge->add_option("--steps", hedge_steps, "rebalancing steps to maturity");
    hedge->add_option("--seed", hedge_seed, "random seed")->required();

    McArgs mc_args;
    auto* mc = app.add_subcommand("mc", "Monte Carlo oracle price, JSON {price, se, paths, seed}");
    mc->add_option("--model", mc_args.model, "model JSON")->required();
    mc->add_option("--product", mc_args.product, "euro, exchange, basket-arithmetic, basket-geometric");
    mc->add_option("--asset", mc_args.asset, "asset index for euro");
    mc->add_option("--strike", mc_args.strike, "strike");
    mc->add_option("--rate", mc_args.rate, "interest rate");
    mc->add_option("--maturity", mc_args.maturity, "maturity");
    mc->add_flag("--put", mc_args.put, "euro put");
    mc->add_option("--rho", mc_args.rho, "exchange: exogenous correlation (default: from the model)");
    mc->add_option("--weights", mc_args.weights, "basket weights");
    mc->add_option("--theta", mc_args.theta, "basket: +1 call, -1 put");
    mc->add_option("--paths", mc_args.paths, "number of paths (>= 10^4)");
    mc->add_option("--seed", mc_args.seed, "random seed")->required();
    mc->add_flag("--no-antithetic", mc_args.no_antithetic, "disable antithetic variates");

    std::string diff_model;
    auto* diff = app.add_subcommand("diffusion", "diffusion-limit constants as JSON");
    diff->add_option("--model", diff_model, "model JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsageExit;
    }

    try {
        if (*price) return run_price(price_args);
        if (*surface) return run_surface(surface_args, surface_x, surface_t);
        if (*greek) return run_greeks(greeks_args, greeks_x);
        if (*implied) return run_implied(implied_args, implied_t, implied_price);
        if (*flow) return run_implied_flow(flow_model, flow_asset, flow_sigma);
        if (*spread) return run_spread(spread_model, spread_rho, spread_t);
        if (*spread2d) return run_spread2d(spread2d_model, spread2d_t);
        if (*basket) return run_basket(basket_args);
        if (*sim) return run_simulate(sim_model, sim_horizon, sim_seed, sim_events);
        if (*cal) return run_calibrate(cal_events, cal_dim, cal_horizon, cal_smoothing, cal_spot);
        if (*hedge) return run_hedge(hedge_args, hedge_steps, hedge_seed);
        if (*mc) return run_mc(mc_args);
        if (*diff) return run_diffusion(diff_model);
    } catch (const hlob::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsageExit;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
