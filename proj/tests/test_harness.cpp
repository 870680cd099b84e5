#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "sdet/errors.hpp"
#include "sdet/harness.hpp"
#include "sdet/version.hpp"

using namespace sdet;
namespace fs = std::filesystem;
constexpr double kPi = std::numbers::pi;

namespace {

SweepSpec small_spec(SweepVariable v) {
    SweepSpec s;
    s.variable = v;
    s.pair.a = {6.009, 2.0, 1.0, 1.0, 0.0};
    s.pair.b = {8.0, 2.0, 1.0, 1.0, 12.0};
    s.pair.gamma = 2.0;
    s.states = {FieldState::boulware, FieldState::hartle_hawking};
    s.controls.ell_cut = 5;
    s.from = 0.5;
    s.to = 3.0;
    s.points = 6;
    return s;
}

std::string csv_of(const SweepResult& r) {
    std::ostringstream os;
    write_sweep_csv(r, testing::small_table(), os);
    return os.str();
}

}  // namespace

TEST_CASE("sweep values") {
    SweepSpec s;
    s.from = 1.0;
    s.to = 2.0;
    s.points = 5;
    CHECK(s.sweep_values() == std::vector<double>{1.0, 1.25, 1.5, 1.75, 2.0});
    s.values = {3.0, 1.0};
    CHECK(s.sweep_values() == std::vector<double>{3.0, 1.0});
    s.values.clear();
    s.points = 0;
    CHECK_THROWS_AS(s.validate(), DomainError);
    s.points = 2;
    s.to = 4.0;
    CHECK_THROWS_AS(s.validate(), DomainError);
    s.variable = SweepVariable::radius;
    s.from = 1.9;
    CHECK_THROWS_AS(s.validate(), DomainError);
}

TEST_CASE("config round trip and overrides") {
    SweepSpec s = small_spec(SweepVariable::delay);
    s.values = {0.0, 4.5, 9.0};
    s.proper_width = 1.0;
    s.controls.pairwise = false;
    s.controls.ordering = InTermOrdering::printed;
    s.table = "modes.bin";
    s.output = "out.csv";
    s.json_mirror = true;
    s.workers = 3;
    const SweepSpec back = parse_sweep_config(sweep_config_json(s));
    CHECK(sweep_config_json(back) == sweep_config_json(s));
    CHECK(back.variable == SweepVariable::delay);
    CHECK(back.values == s.values);
    CHECK(back.pair.b.center == 12.0);
    CHECK(back.states == s.states);
    CHECK(back.controls.ordering == InTermOrdering::printed);

    const SweepSpec partial = parse_sweep_config(R"({"gamma": 1.5, "detectors": {"a": {"r": 7.0}}})");
    CHECK(partial.pair.gamma == 1.5);
    CHECK(partial.pair.a.r == 7.0);
    CHECK(partial.pair.a.gap == DetectorSpec{}.gap);

    CHECK_THROWS_AS(parse_sweep_config("{not json"), DomainError);
    CHECK_THROWS_AS(parse_sweep_config(R"({"gamma": "wide"})"), DomainError);
    CHECK_THROWS_AS(parse_sweep_config(R"({"states": ["vacuum"]})"), DomainError);
    CHECK_THROWS_AS(parse_sweep_config(R"({"sweep": {"variable": "mass"}})"), DomainError);
}

TEST_CASE("gamma sweep matches direct pair evaluation and is deterministic") {
    const ModeTable& t = testing::small_table();
    const SweepSpec s = small_spec(SweepVariable::gamma);
    const SweepResult r = run_sweep(s, t);
    REQUIRE(r.rows.size() == 12);
    CHECK(r.rows[0].state == FieldState::boulware);
    CHECK(r.rows[6].state == FieldState::hartle_hawking);
    for (std::size_t i : {0u, 3u, 11u}) {
        DetectorPairSpec pr = s.pair;
        pr.gamma = r.rows[i].x;
        pr.state = r.rows[i].state;
        const PairResponse d = evaluate_pair(SpacetimeParams{}, pr, t, s.controls);
        const PairResponse& g = r.rows[i].response;
        CHECK(std::abs(g.M - d.M) <= 1e-13 * std::abs(d.M));
        CHECK(std::abs(g.M_minus - d.M_minus) <= 1e-13 * std::abs(d.M_minus));
        CHECK(std::abs(g.L_ab - d.L_ab) <= 1e-13 * std::abs(d.L_ab));
        CHECK(g.L_aa == doctest::Approx(d.L_aa).epsilon(1e-13));
        CHECK(g.N2 == doctest::Approx(d.N2).epsilon(1e-12));
    }
    CHECK(csv_of(r) == csv_of(run_sweep(s, t)));
}

TEST_CASE("delay sweep output order does not depend on the worker count") {
    const ModeTable& t = testing::small_table();
    SweepSpec s = small_spec(SweepVariable::delay);
    s.from = 0.0;
    s.to = 20.0;
    s.points = 5;
    const SweepResult one = run_sweep(s, t);
    s.workers = 3;
    const SweepResult three = run_sweep(s, t);
    s.workers = 1;
    CHECK(csv_of(one) == csv_of(SweepResult{s, three.rows}));
    DetectorPairSpec pr = s.pair;
    pr.b.center = pr.a.center + 10.0;
    const PairResponse d = evaluate_pair(SpacetimeParams{}, pr, t, s.controls);
    CHECK(std::abs(one.rows[2].response.M - d.M) <= 1e-13 * std::abs(d.M));
}

TEST_CASE("radius sweep applies the proper-width rule") {
    const ModeTable& t = testing::small_table();
    SweepSpec s = small_spec(SweepVariable::radius);
    s.values = {6.009, 8.0};
    s.pair.gamma = kPi;
    s.pair.b.center = 0.0;
    s.proper_width = 1.0;
    s.states = {FieldState::unruh};
    const SweepResult r = run_sweep(s, t);
    REQUIRE(r.rows.size() == 2);
    DetectorPairSpec pr = s.pair;
    pr.state = FieldState::unruh;
    pr.a.r = pr.b.r = 8.0;
    pr.a.width = pr.b.width = proper_width(SpacetimeParams{}, 8.0, 1.0);
    const PairResponse d = evaluate_pair(SpacetimeParams{}, pr, t, s.controls);
    CHECK(r.rows[1].response.L_aa == doctest::Approx(d.L_aa).epsilon(1e-14));
    CHECK(std::abs(r.rows[1].response.M - d.M) <= 1e-14 * std::abs(d.M));
    s.values = {7.0};
    CHECK_THROWS_AS(run_sweep(s, t), CoverageError);
}

TEST_CASE("peak finder") {
    std::vector<double> x, y;
    for (int i = 0; i <= 600; ++i) {
        const double t = 0.1 * i;
        x.push_back(t);
        y.push_back(3.0 * std::exp(-std::pow(t - 5.0, 2)) + 0.2 * std::exp(-std::pow(t - 34.0, 2)) +
                    0.1 * std::exp(-std::pow(t - 41.0, 2)) + 0.01 * std::exp(-t / 10.0) +
                    1e-4 * std::sin(7.0 * t) * std::exp(-std::pow(t - 20.0, 2)) + 0.002 * t / 60.0);
    }
    const std::vector<Peak> peaks = find_peaks(x, y);
    REQUIRE(peaks.size() == 3);
    CHECK(peaks[0].x == doctest::Approx(5.0));
    CHECK(peaks[1].x == doctest::Approx(34.0));
    CHECK(peaks[2].x == doctest::Approx(41.0));
    CHECK(peaks[0].prominence > peaks[1].prominence);
    CHECK(find_peaks({0, 1, 2}, {3, 2, 1}).empty());
    CHECK_THROWS_AS(find_peaks({0, 1}, {1}), DomainError);
}

TEST_CASE("geodesic curve") {
    const SpacetimeParams p;
    std::vector<double> radii;
    for (int i = 0; i <= 40; ++i) radii.push_back(2.2 + 0.1 * i);
    const std::vector<GeodesicRow> rows = run_geodesic_curve(p, radii, kPi, GeodesicBranch::primary);
    std::size_t best = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        REQUIRE(std::isfinite(rows[i].time));
        if (rows[i].time < rows[best].time) best = i;
    }
    CHECK(rows[best].r == doctest::Approx(3.0));
    CHECK(rows[best].time == doctest::Approx(3.0 * std::sqrt(3.0) * kPi).epsilon(1e-6));
    CHECK(rows.front().time > rows[best].time);
    CHECK(rows.back().time > rows[best].time);
    std::ostringstream os;
    write_geodesic_csv(rows, kPi, GeodesicBranch::primary, os);
    CHECK(os.str().find("r,time\n") != std::string::npos);
}

TEST_CASE("sweep files carry provenance and an effective config") {
    const ModeTable& t = testing::small_table();
    SweepSpec s = small_spec(SweepVariable::gamma);
    s.points = 2;
    const fs::path dir = fs::temp_directory_path() / "sdet_test_sweep";
    fs::create_directories(dir);
    s.output = dir / "g.csv";
    s.json_mirror = true;
    const SweepResult r = run_sweep(s, t);
    save_sweep(r, t);
    std::ifstream csv(s.output);
    std::string first, second;
    std::getline(csv, first);
    std::getline(csv, second);
    CHECK(first == std::string("# sdet ") + kVersion);
    CHECK(second.find("checksum 0x") != std::string::npos);
    CHECK(fs::exists(dir / "g.json"));
    std::ifstream cfg(dir / "g.csv.config.json");
    const std::string text((std::istreambuf_iterator<char>(cfg)), {});
    CHECK(sweep_config_json(parse_sweep_config(text)) == sweep_config_json(s));
    fs::remove_all(dir);
    s.output.clear();
    CHECK_THROWS_AS(save_sweep(r, t), IoError);
}

TEST_CASE("table lifecycle") {
    const SpacetimeParams p;
    const fs::path path = fs::temp_directory_path() / "sdet_test_lifecycle.bin";
    fs::remove(path);
    TableRequest req;
    req.grid.ell_max = 1;
    req.grid.omega_min = 0.1;
    req.grid.omega_step = 0.1;
    req.grid.omega_max = 0.3;
    req.grid.radii = {7.0};
    req.path = path;
    const ModeTable built = obtain_table(p, req);
    CHECK(fs::exists(path));
    CHECK_FALSE(fs::exists(path.string() + ".partial"));
    CHECK(obtain_table(p, req) == built);
    CHECK(table_covers(built, req.grid));

    TableRequest wider = req;
    wider.grid.ell_max = 2;
    CHECK_FALSE(table_covers(built, wider.grid));
    CHECK_THROWS_AS(obtain_table(p, wider), CoverageError);
    wider.rebuild_if_mismatch = true;
    CHECK(obtain_table(p, wider).grid.ell_max == 2);
    CHECK(load(path).grid.ell_max == 2);
    fs::remove(path);
}
