#include "z2neck/error.hpp"
#include "z2neck/experiments.hpp"
#include "z2neck/parallel.hpp"
#include "z2neck/rate_fit.hpp"

#include <doctest.h>

#include <atomic>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

using namespace z2neck;

TEST_CASE("rate fit recovers exact exponentials, in both sample forms")
{
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> rate(0.1, 2.0), amp(-3.0, 3.0);
    for (int trial = 0; trial < 10; ++trial) {
        double a = rate(rng), c = amp(rng);
        std::vector<std::pair<double, double>> pairs;
        std::vector<double> s, logs;
        for (double x = 10; x <= 40; x += 5) {
            pairs.emplace_back(x, std::exp(c - a * x));
            s.push_back(x);
            logs.push_back(c - a * x);
        }
        CHECK(fit_rate(pairs).rate() == doctest::Approx(a).epsilon(1e-12));
        RateFit f = fit_log_rate(s, logs);
        CHECK(f.rate() == doctest::Approx(a).epsilon(1e-12));
        CHECK(f.intercept == doctest::Approx(c).epsilon(1e-10));
        CHECK(f.residual < 1e-12);
    }
}

TEST_CASE("parallel_for visits each index once, including nested calls")
{
    std::vector<std::atomic<int>> hits(500);
    parallel_for(50, [&](std::size_t i) {
        parallel_for(10, [&](std::size_t j) { hits[i * 10 + j]++; });
    });
    for (auto& h : hits) CHECK(h.load() == 1);
    CHECK_THROWS_AS(parallel_for(20, [](std::size_t i) {
                        if (i == 7) throw std::runtime_error("boom");
                    }),
                    std::runtime_error);
}

TEST_CASE("config parsing accepts lists and ranges and rejects bad input")
{
    std::istringstream in("experiment = decay_scan\n# comment\ns_grid = 10:30:5\nmodes = 1:0, 3:-1  # trailing\nR0 = 4.5\n");
    ExperimentConfig c = make_config(read_key_values(in, "test"));
    CHECK(c.s_grid == std::vector<double>{10, 15, 20, 25, 30});
    REQUIRE(c.modes.size() == 2);
    CHECK(c.modes[1].m == -1);
    CHECK(c.geometry.R0 == 4.5);

    auto bad = [](const std::string& text) {
        std::istringstream s(text);
        return make_config(read_key_values(s, "bad"));
    };
    CHECK_THROWS_AS(bad("experiment = decay_scan\nbogus = 1\n"), ConfigError);
    CHECK_THROWS_AS(bad("experiment = nope\n"), ConfigError);
    CHECK_THROWS_AS(bad("experiment = decay_scan\nmodes = 2:0\n"), ConfigError);
    CHECK_THROWS_AS(bad("experiment = decay_scan\ns_grid = 10, 20, 15, 30, 40\n"), ConfigError);
    CHECK_THROWS_AS(bad("experiment = decay_scan\ns_grid = 10, 20, 30\n"), ConfigError);
    CHECK_THROWS_AS(bad("experiment = decay_scan\nh = abc\n"), ConfigError);
    CHECK_THROWS_AS(bad("experiment = decay_scan\nr_a = 0.5\n"), ConfigError);
    CHECK_THROWS_AS(bad("s_grid = 1\n"), ConfigError);
    CHECK_THROWS_AS(bad("experiment = decay_scan\nno equals sign\n"), ConfigError);
    CHECK_NOTHROW(bad("experiment = ratio_bound\ns_grid = 5, 10\n"));
    CHECK_THROWS_AS(load_config("/nonexistent/file.cfg"), ConfigError);
}

TEST_CASE("every registered experiment has a valid default config")
{
    for (const auto& e : experiment_list()) CHECK_NOTHROW(default_config(e.name).validate());
}

TEST_CASE("numbers format as shortest round-trip text")
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> d(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        double v = d(rng) * std::pow(10.0, double(int(rng() % 40)) - 20.0);
        CHECK(std::stod(format_number(v)) == v);
    }
    CHECK(format_number(0.25) == "0.25");
    CHECK(format_number(std::nan("")) == "nan");
}

TEST_CASE("criterion comparison rules")
{
    CHECK(make_criterion("a", 0.245, 0.25, 0.01, Comparison::at_least, "x").pass);
    CHECK_FALSE(make_criterion("a", 0.23, 0.25, 0.01, Comparison::at_least, "x").pass);
    CHECK(make_criterion("b", 2.0, 2.0, 0.0, Comparison::at_most, "x").pass);
    CHECK(make_criterion("c", -0.257, -0.25, 0.03, Comparison::rel_within, "x").pass);
    CHECK_FALSE(make_criterion("c", -0.26, -0.25, 0.03, Comparison::rel_within, "x").pass);
    CHECK_FALSE(make_criterion("d", std::nan(""), 0.0, 1.0, Comparison::abs_within, "x").pass);
}

TEST_CASE("experiment output is deterministic and carries citations")
{
    std::istringstream in("experiment = ratio_bound\nn_values = 1, 3\nm_max = 1\ns_grid = 5, 10\n");
    ExperimentConfig c = make_config(read_key_values(in, "t"));
    ExperimentResult a = run_experiment(c), b = run_experiment(c);
    CHECK(csv_text(a) == csv_text(b));
    CHECK(a.rows.size() == 2 * 2 * 3);
    CHECK(csv_text(a).rfind("s,n,m,ratio\n", 0) == 0);
    for (const auto& k : a.criteria) CHECK_FALSE(k.citation.empty());
    std::string json = summary_json(a, c);
    CHECK(json.find("\"tolerance\"") != std::string::npos);
    CHECK(json.find("\"citation\"") != std::string::npos);
}
