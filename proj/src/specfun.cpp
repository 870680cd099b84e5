#include "sdet/specfun.hpp"

#include <cmath>
#include <numbers>

#include "sdet/errors.hpp"

namespace sdet {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kMaxArg = 1e3;

// Trapezoid nodes for the Faddeeva integral. Discretization error is
// exp(-pi^2/h^2) ~ 1e-17; nodes beyond |t| = 7 carry weights below 1e-21.
constexpr double kStep = 0.5;
constexpr int kNodes = 14;

void require_finite(cplx z, const char* name) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
        throw DomainError(std::string(name) + ": non-finite argument");
    }
}

void require_bounded(cplx z, const char* name) {
    require_finite(z, name);
    if (std::abs(z) > kMaxArg) {
        throw DomainError(std::string(name) + ": |z| exceeds 1e3");
    }
}

cplx checked(cplx v, const char* name) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
        throw RangeError(std::string(name) + ": result overflows double precision");
    }
    return v;
}

// w(z) = sum_n (iz)^n / Gamma(n/2 + 1), used for |z| < 1.
cplx faddeeva_series(cplx z) {
    const cplx iz(-z.imag(), z.real());
    cplx sum(0.0, 0.0);
    cplx power(1.0, 0.0);
    for (int n = 0; n < 80; ++n) {
        const cplx term = power / std::tgamma(0.5 * n + 1.0);
        sum += term;
        if (n > 4 && std::abs(term) < 1e-18 * std::abs(sum)) break;
        power *= iz;
    }
    return sum;
}

// Trapezoid rule on w(z) = (i z / pi) int exp(-t^2) / (z^2 - t^2) dt with the
// residue correction from the poles at t = +-z. The node set (integer or
// half-integer multiples of h) is chosen to keep Re z away from a node.
cplx faddeeva_trapezoid(cplx z) {
    const double frac = z.real() / kStep - std::floor(z.real() / kStep);
    const bool shifted = std::min(frac, 1.0 - frac) < 0.25;
    const double offset = shifted ? 0.5 : 0.0;
    const cplx z2 = z * z;

    cplx sum(0.0, 0.0);
    for (int n = kNodes; n >= 0; --n) {
        const double t = (n + offset) * kStep;
        const double weight = std::exp(-t * t);
        if (!shifted && n == 0) {
            sum += weight / z2;
        } else {
            sum += 2.0 * weight / (z2 - t * t);
        }
    }
    cplx result = cplx(0.0, kStep / kPi) * z * sum;

    if (z.imag() < kPi / kStep) {
        const cplx phase = std::exp(cplx(0.0, -2.0 * kPi / kStep) * z);
        const cplx denom = shifted ? 1.0 + phase : 1.0 - phase;
        result += 2.0 * std::exp(-z2) / denom;
    }
    return result;
}

cplx faddeeva_upper(cplx z) {
    if (std::abs(z) < 1.0) return faddeeva_series(z);
    return faddeeva_trapezoid(z);
}

// erf(z) = 2/sqrt(pi) sum (-1)^n z^(2n+1) / (n! (2n+1)).
cplx erf_series(cplx z) {
    const cplx z2 = z * z;
    cplx term = z;
    cplx sum = z;
    for (int n = 1; n < 200; ++n) {
        term *= -z2 / static_cast<double>(n);
        const cplx contrib = term / static_cast<double>(2 * n + 1);
        sum += contrib;
        if (std::abs(contrib) < 1e-18 * std::abs(sum)) break;
    }
    return sum * (2.0 / std::sqrt(kPi));
}

// erfc for Re z >= 0.
cplx erfc_right(cplx z) { return std::exp(-z * z) * faddeeva_upper(cplx(-z.imag(), z.real())); }

}  // namespace

cplx faddeeva_w(cplx z) {
    require_finite(z, "faddeeva_w");
    if (z.imag() >= 0.0) return faddeeva_upper(z);
    return checked(2.0 * std::exp(-z * z) - faddeeva_upper(-z), "faddeeva_w");
}

cplx erfc_complex(cplx z) {
    require_bounded(z, "erfc_complex");
    if (z.real() >= 0.0) return checked(erfc_right(z), "erfc_complex");
    return checked(2.0 - erfc_right(-z), "erfc_complex");
}

cplx erf_complex(cplx z) {
    require_bounded(z, "erf_complex");
    if (std::abs(z) <= 2.0) return erf_series(z);
    cplx v = z.real() >= 0.0 ? 1.0 - erfc_right(z) : erfc_right(-z) - 1.0;
    // erf maps the real and imaginary axes onto themselves.
    if (z.imag() == 0.0) v.imag(0.0);
    if (z.real() == 0.0) v.real(0.0);
    return checked(v, "erf_complex");
}

cplx erfi_complex(cplx z) {
    require_bounded(z, "erfi_complex");
    const cplx iz(-z.imag(), z.real());
    const cplx e = erf_complex(iz);
    return cplx(e.imag(), -e.real());
}

cplx scaled_erfc(cplx z, cplx log_scale) {
    require_bounded(z, "scaled_erfc");
    require_finite(log_scale, "scaled_erfc");
    if (z.real() >= 0.0) {
        return checked(std::exp(log_scale - z * z) * faddeeva_upper(cplx(-z.imag(), z.real())),
                       "scaled_erfc");
    }
    const cplx mz = -z;
    return checked(2.0 * std::exp(log_scale) -
                       std::exp(log_scale - mz * mz) * faddeeva_upper(cplx(-mz.imag(), mz.real())),
                   "scaled_erfc");
}

std::vector<double> legendre_p_all(int lmax, double x) {
    if (lmax < 0 || lmax > 200) throw DomainError("legendre_p: degree outside [0, 200]");
    if (!(std::abs(x) <= 1.0)) throw DomainError("legendre_p: |x| > 1");
    std::vector<double> p(static_cast<std::size_t>(lmax) + 1);
    p[0] = 1.0;
    if (lmax >= 1) p[1] = x;
    for (int l = 1; l < lmax; ++l) {
        p[l + 1] = ((2 * l + 1) * x * p[l] - l * p[l - 1]) / (l + 1);
    }
    return p;
}

double legendre_p(int ell, double x) { return legendre_p_all(ell, x).back(); }

}  // namespace sdet
