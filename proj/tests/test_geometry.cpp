#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"
#include "sdet/errors.hpp"
#include "sdet/geometry.hpp"

using namespace sdet;
constexpr double kPi = std::numbers::pi;

namespace {

// Plain bisection on r + 2 ln(r/2 - 1) = target, M = 1.
double tortoise_bisect(double target) {
    double lo = 2.0 + 1e-300, hi = std::max(4.0, target + 10.0);
    for (int i = 0; i < 4000 && hi - lo > 1e-15 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid + 2.0 * std::log(mid / 2.0 - 1.0) < target) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("lapse and redshift") {
    const SpacetimeParams p;
    CHECK(lapse(p, 4.0) == 0.5);
    CHECK(lapse(p, 1e12) == doctest::Approx(1.0).epsilon(1e-11));
    CHECK(lapse(p, 6.009) == 1.0 - 2.0 / 6.009);
    CHECK(redshift_factor(p, 4.0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
    CHECK(redshift_factor(p, 3.0) == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-15));
    CHECK(redshift_factor(p, 1e12) == doctest::Approx(1.0).epsilon(1e-11));
    CHECK_THROWS_AS(lapse(p, 2.0), DomainError);
    CHECK_THROWS_AS(redshift_factor(p, 1.0), DomainError);
    CHECK(p.surface_gravity() * 4.0 * p.mass == 1.0);
}

TEST_CASE("tortoise coordinate") {
    const SpacetimeParams p;
    CHECK(tortoise(p, 4.0) == 4.0);
    // r* = r + 2M ln(r/2M - 1) gives about -34.8M at 1e-8 M outside the horizon.
    CHECK(tortoise(p, 2.0 + 1e-8) == doctest::Approx(2.0 + 2.0 * std::log(0.5e-8)).epsilon(1e-9));
    CHECK(tortoise(p, 2.0 + 1e-12) < -50.0);
    CHECK_THROWS_AS(tortoise(p, 2.0), DomainError);
    double prev = -1e300;
    for (double r = 2.0001; r < 100.0; r *= 1.01) {
        const double s = tortoise(p, r);
        CHECK(s > prev);
        prev = s;
    }
}

TEST_CASE("tortoise inverse") {
    const SpacetimeParams p;
    CHECK(tortoise_inverse(p, 4.0) == doctest::Approx(4.0).epsilon(1e-14));
    const double r13 = tortoise_inverse(p, 13.0);
    CHECK(std::abs(r13 - tortoise_bisect(13.0)) < 1e-12 * r13);
    const double rm4 = tortoise_inverse(p, -4.0);
    CHECK(rm4 > 2.0);
    CHECK(rm4 < 4.0);
    CHECK(std::abs(rm4 - tortoise_bisect(-4.0)) < 1e-12 * rm4);

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(std::log(1e-10), std::log(1e5));
    for (int i = 0; i < 300; ++i) {
        const double r = 2.0 + std::exp(u(rng));
        CHECK(std::abs(tortoise_inverse(p, tortoise(p, r)) - r) < 1e-12 * r);
    }
    CHECK(tortoise_inverse(p, 5000.0) > 2.0);
    CHECK(tortoise_inverse(p, -60.0) > 2.0);
    // Mass scaling: inputs and outputs are lengths.
    const SpacetimeParams p2{2.5};
    CHECK(tortoise_inverse(p2, tortoise(p2, 9.0)) == doctest::Approx(9.0).epsilon(1e-13));
}

TEST_CASE("photon-sphere null alignment") {
    const SpacetimeParams p;
    const double t = null_propagation_time(p, 3.0, 3.0, kPi, GeodesicBranch::primary);
    CHECK(std::abs(t - 3.0 * std::sqrt(3.0) * kPi) < 1e-6 * t);
}

TEST_CASE("antipodal propagation time at r = 6.009M") {
    const SpacetimeParams p;
    const double t = null_propagation_time(p, 6.009, 6.009, kPi, GeodesicBranch::primary);
    CHECK(std::abs(t - 20.7386) < 1e-3);
}

TEST_CASE("coincident endpoints give vanishing time") {
    const SpacetimeParams p;
    CHECK(null_propagation_time(p, 6.0, 6.0, 1e-9, GeodesicBranch::primary) < 1e-7);
    CHECK(null_propagation_time(p, 2.5, 2.5, 1e-9, GeodesicBranch::primary) < 1e-7);
}

TEST_CASE("radial rays follow the tortoise coordinate") {
    const SpacetimeParams p;
    const double t = null_propagation_time(p, 4.0, 30.0, 1e-12, GeodesicBranch::primary);
    CHECK(t == doctest::Approx(tortoise(p, 30.0) - tortoise(p, 4.0)).epsilon(1e-8));
}

TEST_CASE("propagation time is symmetric in the endpoints") {
    const SpacetimeParams p;
    const std::vector<std::pair<double, double>> pairs = {{6.009, 9.0}, {2.4, 2.9}, {2.5, 7.0}, {3.0, 5.0}};
    for (auto [a, b] : pairs) {
        for (auto br : {GeodesicBranch::primary, GeodesicBranch::secondary, GeodesicBranch::tertiary}) {
            const double t1 = null_propagation_time(p, a, b, 2.0, br);
            const double t2 = null_propagation_time(p, b, a, 2.0, br);
            CHECK(std::abs(t1 - t2) <= 1e-9 * t1);
        }
    }
}

TEST_CASE("antipodal time is minimal at the photon sphere") {
    const SpacetimeParams p;
    std::vector<double> radii, times;
    for (double r = 2.2; r <= 5.0 + 1e-9; r += 0.05) {
        radii.push_back(r);
        times.push_back(null_propagation_time(p, r, r, kPi, GeodesicBranch::primary));
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (times[i] < times[best]) best = i;
    }
    CHECK(radii[best] == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(times.front() > times[best]);
    CHECK(times.back() > times[best]);
}

TEST_CASE("branch ordering and monotonicity in gamma") {
    const SpacetimeParams p;
    for (double r : {2.6, 6.009}) {
        double prev = 0.0;
        for (double g = 0.1; g <= kPi + 1e-12; g += 0.1) {
            const double prim = null_propagation_time(p, r, r, std::min(g, kPi), GeodesicBranch::primary);
            const double sec = null_propagation_time(p, r, r, std::min(g, kPi), GeodesicBranch::secondary);
            const double ter = null_propagation_time(p, r, r, std::min(g, kPi), GeodesicBranch::tertiary);
            CHECK(prim > prev);
            CHECK(sec >= prim);
            CHECK(ter > sec);
            prev = prim;
        }
        const double a = null_propagation_time(p, r, r, kPi, GeodesicBranch::primary);
        const double b = null_propagation_time(p, r, r, kPi, GeodesicBranch::secondary);
        CHECK(std::abs(a - b) < 1e-10 * a);
    }
}

TEST_CASE("propagation time rejects invalid input") {
    const SpacetimeParams p;
    CHECK_THROWS_AS(null_propagation_time(p, 1.9, 5.0, 1.0, GeodesicBranch::primary), DomainError);
    CHECK_THROWS_AS(null_propagation_time(p, 4.0, 5.0, 0.0, GeodesicBranch::primary), DomainError);
    CHECK_THROWS_AS(null_propagation_time(p, 4.0, 5.0, 3.5, GeodesicBranch::primary), DomainError);
}

TEST_CASE("mass scaling of propagation times") {
    const SpacetimeParams p1, p3{3.0};
    const double t1 = null_propagation_time(p1, 5.0, 8.0, 2.0, GeodesicBranch::secondary);
    const double t3 = null_propagation_time(p3, 15.0, 24.0, 2.0, GeodesicBranch::secondary);
    CHECK(t3 == doctest::Approx(3.0 * t1).epsilon(1e-12));
}

TEST_CASE("wavefront basics") {
    const SpacetimeParams p;
    const Wavefront early = wavefront(p, 6.009, 1e-6, 9);
    for (const auto& pt : early.points) {
        CHECK(std::abs(pt.r - 6.009) < 1e-5);
        CHECK(pt.gamma < 1e-5);
    }
    const double dt = 7.5;
    const Wavefront front = wavefront(p, 6.009, dt, 41);
    REQUIRE(!front.points.empty());
    const auto& radial = front.points.front();
    CHECK(radial.direction == 0);
    CHECK(tortoise(p, radial.r) - tortoise(p, 6.009) == doctest::Approx(dt).epsilon(1e-9));
    CHECK(radial.gamma == 0.0);
}

TEST_CASE("wavefront flags captured rays") {
    const SpacetimeParams p;
    const Wavefront front = wavefront(p, 6.009, 40.0, 31);
    CHECK(!front.captured.empty());
    CHECK(front.captured.back() == 30);
    CHECK(front.points.size() + front.captured.size() == 31);
}

TEST_CASE("caustic arrival from affine shooting matches the quadrature route") {
    const SpacetimeParams p;
    const double t_shoot = caustic_arrival_time(p, 6.009, 6.009);
    CHECK(std::abs(t_shoot - 20.7386) < 1e-3);
    const double t_quad = null_propagation_time(p, 6.009, 6.009, kPi, GeodesicBranch::primary);
    CHECK(std::abs(t_shoot - t_quad) < 1e-7 * t_quad);

    // The front at that time reaches the antipodal axis near r = 6.009M from both sides.
    const Wavefront front = wavefront(p, 6.009, t_shoot, 721);
    double closest = 1e9;
    for (const auto& pt : front.points) {
        if (std::abs(pt.gamma - kPi) < 0.02) closest = std::min(closest, std::abs(pt.r - 6.009));
    }
    CHECK(closest < 0.05);
}
