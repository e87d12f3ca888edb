#include "hlob/calibration.hpp"
#include "hlob/european.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

const std::string kModels = HLOB_MODELS_DIR;

Run run(const std::string& args) {
    const std::string err_path = std::string(HLOB_TEST_TMPDIR) + "/cli_stderr.txt";
    const std::string cmd = std::string(HLOB_CLI_PATH) + " " + args + " 2>" + err_path;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    char buf[4096];
    std::size_t n = 0;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
    const int status = pclose(pipe);
    std::ifstream ef(err_path);
    std::stringstream err;
    err << ef.rdbuf();
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out, err.str()};
}

std::vector<std::vector<double>> csv_rows(const std::string& text, std::string* header = nullptr) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::vector<double>> rows;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (first) {
            if (header) *header = line;
            first = false;
            continue;
        }
        std::vector<double> row;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(row);
    }
    return rows;
}

std::string model(const char* name) { return kModels + "/" + name; }

} // namespace

TEST_CASE("price on the base model") {
    const auto r = run("price --model " + model("base_1d.json") + " --strike 50 --rate 0.06 --maturity 1");
    REQUIRE(r.code == 0);
    const auto doc = nlohmann::json::parse(r.out);
    CHECK(doc.at("price").get<double>() == doctest::Approx(5.07).epsilon(2e-3));
    CHECK(doc.at("sigma_hat").get<double>() == doctest::Approx(0.17678).epsilon(1e-5));

    const auto p = run("price --model " + model("base_1d.json") + " --strike 50 --rate 0.06 --maturity 1 --put");
    REQUIRE(p.code == 0);
    const double put = nlohmann::json::parse(p.out).at("price").get<double>();
    CHECK(doc.at("price").get<double>() - put == doctest::Approx(50.0 - 50.0 * std::exp(-0.06)).epsilon(1e-12));
}

TEST_CASE("missing model file exits 2 naming the path") {
    const auto r = run("price --model /no/such/model.json --strike 50");
    CHECK(r.code == 2);
    CHECK(r.err.find("/no/such/model.json") != std::string::npos);
}

TEST_CASE("invalid grids and domain violations exit 2") {
    auto r = run("surface --model " + model("base_1d.json") + " --strike 50 --x-grid 10:-1:20 --t-grid 0:0.5:1");
    CHECK(r.code == 2);
    CHECK(r.err.find("step") != std::string::npos);
    r = run("surface --model " + model("base_1d.json") + " --strike 50 --x-grid 1:2 --t-grid 0:0.5:1");
    CHECK(r.code == 2);
    r = run("price --model " + model("base_1d.json") + " --strike -5");
    CHECK(r.code == 2);
    CHECK(r.err.find("strike") != std::string::npos);
    r = run("price --model " + model("base_1d.json"));
    CHECK(r.code == 2);
    r = run("simulate --model " + model("base_1d.json") + " --horizon 10");
    CHECK(r.code == 2);
    CHECK(r.err.find("seed") != std::string::npos);
    r = run("spread --model " + model("base_1d.json"));
    CHECK(r.code == 2);
    r = run("bogus");
    CHECK(r.code == 2);
}

TEST_CASE("surface and greeks CSV") {
    std::string header;
    const auto r = run("surface --model " + model("base_1d.json") + " --strike 50 --rate 0.06 --x-grid 30:1:70 --t-grid 0:0.25:1");
    REQUIRE(r.code == 0);
    const auto rows = csv_rows(r.out, &header);
    CHECK(header == "t,x,price");
    CHECK(rows.size() == 41 * 5);
    for (std::size_t k = 1; k < rows.size(); ++k) {
        if (rows[k][0] == rows[k - 1][0]) CHECK(rows[k][2] >= rows[k - 1][2]);
    }
    const auto g = run("greeks --model " + model("base_1d.json") + " --strike 50 --rate 0.06 --x-grid 40:5:60");
    REQUIRE(g.code == 0);
    const auto grows = csv_rows(g.out, &header);
    CHECK(header == "x,delta,theta,c_sigma_star,c_a_star,c_mu_hat");
    CHECK(grows.size() == 5);
}

TEST_CASE("implied and implied-flow") {
    std::string header;
    const auto r = run("implied --model " + model("base_1d.json") + " --strike 50 --rate 0.06 --spot 55 --t-grid 0.25:0.25:2");
    REQUIRE(r.code == 0);
    const auto rows = csv_rows(r.out, &header);
    CHECK(header == "T,implied_vol,e_implied,var_implied");
    REQUIRE(rows.size() == 8);
    for (const auto& row : rows) {
        CHECK(row[1] == doctest::Approx(std::sqrt(0.03125)).epsilon(1e-8));
        CHECK(row[2] == doctest::Approx(2.5).epsilon(1e-7));
    }
    const auto f = run("implied-flow --model " + model("base_1d.json") + " --sigma-implied 0.17677669529663687");
    REQUIRE(f.code == 0);
    CHECK(nlohmann::json::parse(f.out).at("e_implied").get<double>() == doctest::Approx(2.5).epsilon(1e-12));
    const auto bad = run("implied --model " + model("base_1d.json") + " --strike 50 --t-grid 1 --price 80");
    CHECK(bad.code == 2);
    CHECK(bad.err.find("upper bound") != std::string::npos);
}

TEST_CASE("spread grid is monotone in rho") {
    std::string header;
    const auto r = run("spread --model " + model("spread_two_1d.json") + " --rho-grid 0:0.01:1 --t-grid 1:1:100");
    REQUIRE(r.code == 0);
    const auto rows = csv_rows(r.out, &header);
    CHECK(header == "T,rho,price");
    REQUIRE(rows.size() == 101 * 100);
    std::map<double, std::vector<double>> by_t;
    for (const auto& row : rows) by_t[row[0]].push_back(row[2]);
    CHECK(by_t.size() == 100);
    for (const auto& [T, prices] : by_t) {
        CHECK(prices.size() == 101);
        for (std::size_t k = 1; k < prices.size(); ++k) CHECK(prices[k] <= prices[k - 1] + 1e-12);
    }
    CHECK(rows[0][2] == doctest::Approx(10.0383).epsilon(1e-5));
}

TEST_CASE("spread2d and basket") {
    std::string header;
    const auto s = run("spread2d --model " + model("spread_2d.json") + " --t-grid 1:1:10");
    REQUIRE(s.code == 0);
    CHECK(csv_rows(s.out, &header).size() == 10);
    CHECK(header == "T,price");
    const auto b = run("basket --model " + model("basket_3d.json") + " --weights 0.3,0.5,0.2 --t-grid 1:1:100");
    REQUIRE(b.code == 0);
    CHECK(b.out.find("# strike=") != std::string::npos);
    const auto rows = csv_rows(b.out, &header);
    CHECK(header == "T,price");
    REQUIRE(rows.size() == 100);
    CHECK(std::isfinite(rows[0][1]));
    const auto bad = run("basket --model " + model("basket_3d.json") + " --weights 0.5,0.5");
    CHECK(bad.code == 2);
}

TEST_CASE("simulate is deterministic and feeds calibrate") {
    const std::string args = "simulate --model " + model("base_1d.json") + " --horizon 1000 --seed 7";
    const auto a = run(args);
    const auto b = run(args);
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out.rfind("time,asset,log_price,price\n", 0) == 0);
    CHECK(run("simulate --model " + model("base_1d.json") + " --horizon 1000 --seed 8").out != a.out);

    const auto ev = run("simulate --model " + model("base_1d.json") + " --horizon 20000 --seed 3 --events");
    REQUIRE(ev.code == 0);
    CHECK(ev.out.rfind("time,dim,price_change\n", 0) == 0);
    const std::string path = std::string(HLOB_TEST_TMPDIR) + "/cli_events.csv";
    std::ofstream(path) << ev.out;
    const auto cal = run("calibrate --events " + path + " --horizon 20000 --spot 50");
    REQUIRE(cal.code == 0);
    const auto doc = nlohmann::json::parse(cal.out);
    CHECK(doc.contains("hawkes"));
    CHECK(doc.contains("chains"));
    CHECK(doc.at("hawkes").at("alpha")[0].get<double>() == doctest::Approx(0.7).epsilon(0.25));
    const std::string model_path = std::string(HLOB_TEST_TMPDIR) + "/cli_fitted.json";
    std::ofstream(model_path) << cal.out;
    CHECK(run("price --model " + model_path + " --strike 50 --rate 0.06").code == 0);

    const std::string broken = std::string(HLOB_TEST_TMPDIR) + "/cli_broken.csv";
    std::ofstream(broken) << "time,dim,price_change\n0.1,0,1\n0.2,5,1\n";
    const auto bad = run("calibrate --events " + broken);
    CHECK(bad.code == 2);
    CHECK(bad.err.find("line 3") != std::string::npos);
}

TEST_CASE("hedge path columns") {
    std::string header;
    const auto r = run("hedge --model " + model("base_1d.json") + " --strike 50 --rate 0.06 --steps 100 --seed 11");
    REQUIRE(r.code == 0);
    const auto rows = csv_rows(r.out, &header);
    CHECK(header == "t,S,alpha,beta,X,price");
    REQUIRE(rows.size() == 101);
    const hlob::EuroContract c{50.0, 1.0, 0.06, hlob::OptionKind::call};
    const double sigma = std::sqrt(0.03125);
    for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
        CHECK(rows[k][4] == rows[k][5]);
        CHECK(std::abs(rows[k][5] - hlob::call_price(rows[k][0], rows[k][1], c, sigma)) <= 1e-12 * std::max(1.0, rows[k][5]));
    }
    CHECK(rows.back()[0] == 1.0);
}

TEST_CASE("mc and diffusion JSON") {
    const auto r = run("mc --model " + model("base_1d.json") + " --strike 50 --rate 0.06 --paths 100000 --seed 5");
    REQUIRE(r.code == 0);
    const auto doc = nlohmann::json::parse(r.out);
    for (const char* key : {"price", "se", "paths", "seed"}) CHECK(doc.contains(key));
    CHECK(std::abs(doc.at("price").get<double>() - 5.0694) < 4.0 * doc.at("se").get<double>() + 1e-3);
    CHECK(run("mc --model " + model("base_1d.json") + " --strike 50 --paths 100 --seed 5").code == 2);
    const auto x = run("mc --model " + model("spread_2d.json") + " --product exchange --paths 20000 --seed 1");
    CHECK(x.code == 0);
    const auto d = run("diffusion --model " + model("basket_3d.json"));
    REQUIRE(d.code == 0);
    CHECK(nlohmann::json::parse(d.out).at("asset_vol").size() == 3);
}
