#include <cmath>
#include <complex>
#include <random>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_complex.hpp>

#include "doctest.h"
#include "sdet/errors.hpp"
#include "sdet/specfun.hpp"

using sdet::cplx;
namespace mp = boost::multiprecision;

namespace {

using mp_real = mp::cpp_bin_float_100;
using mp_cplx = mp::cpp_complex_100;

// erf by its Maclaurin series in 100-digit arithmetic.
cplx erf_reference(cplx z) {
    const mp_cplx zz(mp_real(z.real()), mp_real(z.imag()));
    const mp_cplx z2 = zz * zz;
    mp_cplx term = zz;
    mp_cplx sum = zz;
    for (int n = 1; n < 4000; ++n) {
        term *= -z2 / mp_real(n);
        const mp_cplx c = term / mp_real(2 * n + 1);
        sum += c;
        if (n > 10 && abs(c) < mp_real("1e-60") * abs(sum)) break;
    }
    sum *= mp_real(2) / sqrt(boost::math::constants::pi<mp_real>());
    return {static_cast<double>(sum.real()), static_cast<double>(sum.imag())};
}

double rel_err(cplx a, cplx b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("erf and erfi vanish at the origin") {
    CHECK(sdet::erf_complex({0.0, 0.0}) == cplx(0.0, 0.0));
    CHECK(sdet::erfi_complex({0.0, 0.0}) == cplx(0.0, 0.0));
}

TEST_CASE("erf at 1.5 + 0.5i matches the extended-precision series") {
    const cplx z(1.5, 0.5);
    CHECK(rel_err(sdet::erf_complex(z), erf_reference(z)) < 1e-13);
}

TEST_CASE("erf matches the extended-precision series over |z| <= 6") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> mag(0.0, 6.0), ang(-M_PI, M_PI);
    double worst = 0.0;
    int used = 0;
    for (int i = 0; i < 400; ++i) {
        const cplx z = std::polar(mag(rng), ang(rng));
        const cplx ref = erf_reference(z);
        // Relative accuracy is meaningless next to a zero of erf.
        if (std::abs(ref) < 1e-2 * std::max(1.0, std::abs(z))) continue;
        if (!std::isfinite(std::abs(ref))) continue;
        worst = std::max(worst, rel_err(sdet::erf_complex(z), ref));
        ++used;
    }
    CHECK(used > 350);
    CHECK(worst < 1e-13);
}

TEST_CASE("erf at large arguments matches frozen arbitrary-precision values") {
    struct Case {
        cplx z, value;
    };
    const Case cases[] = {
        {{10, 10}, {0.96164937427247485984, -0.01098768460819398838}},
        {{500, 10}, {1.0, 1.1440483254631367793e-46}},
        {{-30, 20}, {-1.0, -2.4450429803398673412e-45}},
        {{0.5, 25}, {-7.2706431021121934105e+268, 4.72210550999028755e+269}},
        {{3, -8}, {-2.5054570509939420053e+22, 4.4507408319910922852e+22}},
        {{800, -600}, {1.0, -2.0346760571053087574e-45}},
        {{40, 0.5}, {1.0, -4.970316742630632335e-47}},
    };
    for (const auto& c : cases) {
        CAPTURE(c.z);
        CHECK(rel_err(sdet::erf_complex(c.z), c.value) < 1e-13);
    }
}

TEST_CASE("erf symmetries") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-8.0, 8.0);
    for (int i = 0; i < 500; ++i) {
        const cplx z(u(rng), 0.5 * u(rng));
        const cplx e = sdet::erf_complex(z);
        CHECK(std::abs(sdet::erf_complex(std::conj(z)) - std::conj(e)) <= 1e-14 * std::abs(e));
        CHECK(std::abs(sdet::erf_complex(-z) + e) <= 1e-14 * std::abs(e));
    }
}

TEST_CASE("erfi identity and real axis") {
    const cplx z(0.7, -1.2);
    const cplx iz(-z.imag(), z.real());
    CHECK(std::abs(sdet::erfi_complex(z) + cplx(0, 1) * sdet::erf_complex(iz)) < 1e-13);
    for (double x = -5.0; x <= 5.0; x += 0.37) {
        CHECK(sdet::erfi_complex({x, 0.0}).imag() == 0.0);
    }
}

TEST_CASE("erf plus erfc is one") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-6.0, 6.0);
    for (int i = 0; i < 500; ++i) {
        const cplx z(u(rng), u(rng));
        const cplx e = sdet::erf_complex(z);
        const cplx c = sdet::erfc_complex(z);
        CHECK(std::abs(e + c - 1.0) <= 1e-12 * std::max(1.0, std::abs(e)));
    }
}

TEST_CASE("erf on the real axis agrees with std::erf") {
    for (double x = -7.0; x <= 7.0; x += 0.013) {
        const double ref = std::erf(x);
        const cplx v = sdet::erf_complex({x, 0.0});
        CHECK(std::abs(v.real() - ref) <= 1e-14 * std::max(std::abs(ref), 1e-300));
        CHECK(v.imag() == 0.0);
    }
}

TEST_CASE("scaled erfc combines exponents") {
    const cplx z(-3.0, 9.0);
    const cplx s(-50.0, 0.3);
    const cplx direct = std::exp(s) * sdet::erfc_complex(z);
    CHECK(rel_err(sdet::scaled_erfc(z, s), direct) < 1e-12);
    // erfc(-i 30) alone overflows; the scaled form does not.
    CHECK_THROWS_AS(sdet::erfc_complex({0.0, -30.0}), sdet::RangeError);
    CHECK(std::isfinite(std::abs(sdet::scaled_erfc({0.0, -30.0}, {-900.0, 0.0}))));
}

TEST_CASE("error functions reject bad input") {
    CHECK_THROWS_AS(sdet::erf_complex({NAN, 0.0}), sdet::DomainError);
    CHECK_THROWS_AS(sdet::erf_complex({1e4, 0.0}), sdet::DomainError);
    CHECK_THROWS_AS(sdet::erfi_complex({40.0, 0.0}), sdet::RangeError);
}

TEST_CASE("Faddeeva function in the lower half plane") {
    const cplx z(1.2, -0.7);
    const cplx expect = 2.0 * std::exp(-z * z) - sdet::faddeeva_w(-z);
    CHECK(rel_err(sdet::faddeeva_w(z), expect) < 1e-15);
    // w(iy) = exp(y^2) erfc(y) on the imaginary axis.
    for (double y : {0.1, 0.9, 1.5, 4.0, 12.0}) {
        const double ref = std::exp(y * y) * std::erfc(y);
        CHECK(std::abs(sdet::faddeeva_w({0.0, y}).real() - ref) < 2e-15 * ref);
    }
}

TEST_CASE("Legendre polynomials") {
    for (int l = 0; l <= 200; ++l) CHECK(sdet::legendre_p(l, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
    for (double x = -1.0; x <= 1.0; x += 0.1) CHECK(sdet::legendre_p(1, x) == x);

    // 50-digit recurrence oracle.
    using mp50 = mp::cpp_bin_float_50;
    auto reference = [](int l, double xd) {
        const mp50 x(xd);
        mp50 p0 = 1, p1 = x;
        if (l == 0) return 1.0;
        for (int k = 1; k < l; ++k) {
            mp50 p2 = ((2 * k + 1) * x * p1 - k * p0) / (k + 1);
            p0 = p1;
            p1 = p2;
        }
        return static_cast<double>(p1);
    };
    const double p100 = reference(100, 0.3);
    CHECK(std::abs(sdet::legendre_p(100, 0.3) - p100) <= 1e-12 * std::abs(p100));

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 50; ++i) {
        const double x = u(rng);
        const auto p = sdet::legendre_p_all(200, x);
        for (int l = 1; l < 200; ++l) {
            const double res = (l + 1) * p[l + 1] - (2 * l + 1) * x * p[l] + l * p[l - 1];
            CHECK(std::abs(res) < 1e-12);
            CHECK(std::abs(p[l]) <= 1.0);
        }
        for (int l : {7, 40, 150}) {
            const double ref = reference(l, x);
            CHECK(std::abs(p[l] - ref) <= 1e-12 * std::max(std::abs(ref), 1e-3));
        }
    }
    CHECK_THROWS_AS(sdet::legendre_p(3, 1.0000001), sdet::DomainError);
    CHECK_THROWS_AS(sdet::legendre_p(201, 0.5), sdet::DomainError);
}
