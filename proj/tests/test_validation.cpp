#include <cmath>

#include "doctest.h"
#include "sdet/validation.hpp"

using namespace sdet;

namespace {

void check_all(const std::vector<OracleReport>& reports) {
    for (const OracleReport& r : reports) {
        INFO(format_report(r));
        CHECK(r.passed);
    }
}

}  // namespace

TEST_CASE("window integral oracle") {
    const std::vector<WindowSample> samples = window_samples(100, 2024);
    REQUIRE(samples.size() == 100);
    CHECK(samples.front().nu == 0.0);
    CHECK(samples.front().mu == 0.0);
    int wide = 0;
    for (const WindowSample& s : samples) {
        CHECK(std::abs(s.nu) * s.T <= 20.0);
        CHECK(std::abs(s.mu) * s.Tp <= 20.0);
        if (std::abs(std::log10(s.Tp / s.T)) > 0.99) ++wide;
    }
    CHECK(wide >= 10);
    const std::vector<OracleReport> reports = oracle_window_integrals(samples);
    CHECK(reports.front().rel_error < 1e-15);
    check_all(reports);
}

TEST_CASE("window oracle detects a wrong closed form") {
    WindowSample s{2.0, -1.0, 1.0, 1.0, 0.0, 3.0, true};
    const cplx ref = window_nested_quadrature(s.nu, s.mu, s.T, s.Tp, s.t0, s.t0p);
    const cplx shifted = window_integral_nested(s.nu, s.mu, s.T, s.Tp, s.t0 + 1e-6, s.t0p);
    CHECK(std::abs(shifted - ref) > 1e-10 * std::abs(ref));
}

TEST_CASE("partial transpose negativity oracle") {
    const std::vector<NegativitySample> samples = negativity_samples(1000, 99);
    CHECK(partial_transpose_negativity(samples[0]) == 0.0);
    int entangled = 0;
    for (const NegativitySample& s : samples) entangled += partial_transpose_negativity(s) > 0.0;
    CHECK(entangled > 100);
    CHECK(entangled < 900);
    check_all(oracle_partial_transpose(samples));
}

TEST_CASE("mode consistency oracle") {
    const std::vector<ModeIndex> modes = default_mode_sample();
    CHECK(modes.size() >= 20);
    const std::vector<OracleReport> reports = oracle_mode_consistency(SpacetimeParams{}, modes);
    CHECK(reports.size() == modes.size() * 8 + 2);
    check_all(reports);
}

TEST_CASE("coarse M against time-domain quadrature") {
    const std::vector<OracleReport> reports = oracle_coarse_m(SpacetimeParams{}, default_coarse_m());
    CHECK(reports.size() == 3);
    check_all(reports);
}
