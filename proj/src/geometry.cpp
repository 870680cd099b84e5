#include "sdet/geometry.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/lambert_w.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>

#include "sdet/errors.hpp"

namespace sdet {

namespace {

constexpr double kPi = std::numbers::pi;
const double kCriticalImpact = 3.0 * std::sqrt(3.0);
constexpr double kThird = 1.0 / 3.0;

void check_params(const SpacetimeParams& p) {
    if (!(p.mass > 0.0) || !std::isfinite(p.mass)) throw DomainError("mass must be positive");
}

// Everything below works in units of M.

double lapse_u(double u) { return 1.0 - 2.0 * u; }

// 1 - b^2 u^2 (1 - 2u), written around the photon sphere so that it stays
// accurate when b is close to 3 sqrt(3).
double radial_discriminant(double b, double u) {
    const double delta = 1.0 - b * b / 27.0;
    const double d = u - kThird;
    return delta + b * b * d * d * (2.0 * u + kThird);
}

double tangent_impact(double r) { return r / std::sqrt(1.0 - 2.0 / r); }

struct PhiTime {
    double phi = 0.0;
    double t = 0.0;
};

template <class F>
double integrate(F f, double a, double b) {
    if (!(b > a)) return 0.0;
    static thread_local boost::math::quadrature::tanh_sinh<double> quad(12);
    return quad.integrate(f, a, b, 1e-14);
}

// Path without a radial turning point between u1 < u2. `anchor` selects the
// end where the discriminant may approach zero: +1 for u2, -1 for u1, 0 for a
// possible near-double root at the photon sphere.
PhiTime monotone_path(double b, double u1, double u2, int anchor) {
    PhiTime out;
    if (anchor == 0) {
        auto dphi = [b](double u) { return b / std::sqrt(radial_discriminant(b, u)); };
        auto dt = [b](double u) {
            return 1.0 / (u * u * lapse_u(u) * std::sqrt(radial_discriminant(b, u)));
        };
        if (u1 < kThird && kThird < u2) {
            out.phi = integrate(dphi, u1, kThird) + integrate(dphi, kThird, u2);
            out.t = integrate(dt, u1, kThird) + integrate(dt, kThird, u2);
        } else {
            out.phi = integrate(dphi, u1, u2);
            out.t = integrate(dt, u1, u2);
        }
        return out;
    }
    // u = end -+ q^2 removes the inverse square root at the anchored end.
    const double end = anchor > 0 ? u2 : u1;
    const double sign = anchor > 0 ? -1.0 : 1.0;
    const double qmax = std::sqrt(u2 - u1);
    auto dphi = [=](double q) {
        const double u = end + sign * q * q;
        return 2.0 * q * b / std::sqrt(radial_discriminant(b, u));
    };
    auto dt = [=](double q) {
        const double u = end + sign * q * q;
        return 2.0 * q / (u * u * lapse_u(u) * std::sqrt(radial_discriminant(b, u)));
    };
    out.phi = integrate(dphi, 0.0, qmax);
    out.t = integrate(dt, 0.0, qmax);
    return out;
}

// Turning point u_t = 1/3 + e3/3 with e3 = 3 u_t - 1 carried separately so
// that paths skimming the photon sphere keep their accuracy.
struct TurningPoint {
    double ut;
    double e3;
};

// One leg from the turning point to a detector at distance d = |u_t - u_x| in
// u, on side sign (-1 towards smaller u). The cubic 2u^3 - u^2 + 1/b^2 factors
// as (u - u_t) S(u); with u = u_t + sign q^2 the integrands are smooth.
PhiTime turning_leg(const TurningPoint& tp, double d, double sign) {
    const double ut = tp.ut;
    const double b = 1.0 / (ut * std::sqrt(1.0 - 2.0 * ut));
    const double s0 = 2.0 * ut * tp.e3;
    const double s1 = 6.0 * ut - 1.0;
    const double qmax = std::sqrt(d);
    auto s_abs = [=](double q2) { return std::abs(s0 + sign * s1 * q2 + 2.0 * q2 * q2); };
    auto dphi = [=](double q) { return 2.0 / std::sqrt(s_abs(q * q)); };
    auto dt = [=](double q) {
        const double u = ut + sign * q * q;
        return 2.0 / (b * u * u * lapse_u(u) * std::sqrt(s_abs(q * q)));
    };
    PhiTime out;
    out.phi = integrate(dphi, 0.0, qmax);
    out.t = integrate(dt, 0.0, qmax);
    return out;
}

// Both legs of a path with one turning point. `near` is the detector u value
// closest to the turning point and `far` the other one; tau = 0 puts the
// turning point at `near` and tau -> infinity moves it onto the photon sphere.
PhiTime turning_path(double near, double far, double tau) {
    const double gap = kThird - near;           // signed distance to the photon sphere
    const double shift = gap * -std::expm1(-tau);  // u_t - near
    const double sign = gap > 0.0 ? -1.0 : 1.0;    // direction of travel in u away from u_t
    TurningPoint tp;
    if (tau < 1.0) {
        tp.ut = near + shift;
        tp.e3 = 3.0 * tp.ut - 1.0;
    } else {
        const double rest = gap * std::exp(-tau);  // 1/3 - u_t
        tp.ut = kThird - rest;
        tp.e3 = -3.0 * rest;
    }
    const double d_near = std::abs(shift);
    const double d_far = std::abs(shift) + std::abs(near - far);
    const PhiTime a = turning_leg(tp, d_near, sign);
    const PhiTime c = turning_leg(tp, d_far, sign);
    return {a.phi + c.phi, a.t + c.t};
}

template <class F>
double solve_root(F f, double lo, double hi) {
    boost::uintmax_t iters = 200;
    auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(52),
                                                    iters);
    return 0.5 * (a + b);
}

double snap_photon_sphere(double r) { return std::abs(r - 3.0) < 1e-9 ? 3.0 : r; }

double propagation_time_unit(double ra, double rb, double target) {
    const double r_lo = snap_photon_sphere(std::min(ra, rb));
    const double r_hi = snap_photon_sphere(std::max(ra, rb));
    const double u1 = 1.0 / r_hi;
    const double u2 = 1.0 / r_lo;

    if (r_lo == 3.0 && r_hi == 3.0) return kCriticalImpact * target;

    const double tau_cap = 40.0;
    auto expand = [&](auto phi_of) {
        double hi = 1.0;
        while (phi_of(hi) < 0.0) {
            hi *= 2.0;
            if (hi > tau_cap) throw NoSolutionError("no null geodesic reaches the requested swept angle");
        }
        return hi;
    };

    if (r_lo <= 3.0 && r_hi >= 3.0) {
        // Only rays with b < 3 sqrt(3); the swept angle diverges as b -> 3 sqrt(3).
        auto impact = [](double tau) { return std::sqrt(27.0 * -std::expm1(-tau)); };
        auto phi_of = [&](double tau) { return monotone_path(impact(tau), u1, u2, 0).phi - target; };
        const double tau = solve_root(phi_of, 0.0, expand(phi_of));
        return monotone_path(impact(tau), u1, u2, 0).t;
    }

    // Both outside (periapsis paths) or both inside (apoapsis paths) the photon sphere.
    const bool outside = r_lo > 3.0;
    const double near = outside ? u2 : u1;
    const double far = outside ? u1 : u2;
    const double b_end = tangent_impact(outside ? r_lo : r_hi);
    const int anchor = outside ? 1 : -1;

    const PhiTime edge = turning_path(near, far, 0.0);
    if (target <= edge.phi) {
        auto phi_of = [&](double b) {
            if (b >= b_end) return edge.phi - target;
            return monotone_path(b, u1, u2, anchor).phi - target;
        };
        if (phi_of(0.0) >= 0.0) return monotone_path(0.0, u1, u2, anchor).t;
        const double b = solve_root(phi_of, 0.0, b_end);
        if (b >= b_end) return edge.t;
        return monotone_path(b, u1, u2, anchor).t;
    }

    auto phi_of = [&](double tau) { return turning_path(near, far, tau).phi - target; };
    const double tau = solve_root(phi_of, 0.0, expand(phi_of));
    return turning_path(near, far, tau).t;
}

// Affine-parameter null geodesic with E = 1: state (t, r, dr/dlambda, phi).
using RayState = std::array<double, 4>;

struct RayRhs {
    double b;
    void operator()(const RayState& s, RayState& d, double) const {
        const double r = s[1];
        d[0] = 1.0 / (1.0 - 2.0 / r);
        d[1] = s[2];
        d[2] = b * b * (r - 3.0) / (r * r * r * r);
        d[3] = b / (r * r);
    }
};

enum class RayOutcome { event, captured, escaped };

struct RayResult {
    RayOutcome outcome;
    RayState state;
};

// Integrates a ray from r_emit at emission angle psi until event(state)
// changes sign from negative to non-negative.
template <class Event>
RayResult trace_ray(double r_emit, double psi, Event event) {
    using namespace boost::numeric::odeint;
    const double f = 1.0 - 2.0 / r_emit;
    const double b = r_emit * std::sin(psi) / std::sqrt(f);
    RayState s{0.0, r_emit, std::cos(psi), 0.0};
    if (event(s) >= 0.0) return {RayOutcome::event, s};

    auto stepper = make_dense_output(1e-13, 1e-13, runge_kutta_dopri5<RayState>());
    const RayRhs rhs{b};
    stepper.initialize(s, 0.0, 1e-3 * r_emit);
    for (int step = 0; step < 200000; ++step) {
        stepper.do_step(rhs);
        const RayState& cur = stepper.current_state();
        if (event(cur) >= 0.0) {
            double lo = stepper.previous_time();
            double hi = stepper.current_time();
            RayState mid;
            for (int it = 0; it < 80 && hi - lo > 1e-15 * std::abs(hi); ++it) {
                const double m = 0.5 * (lo + hi);
                stepper.calc_state(m, mid);
                if (event(mid) >= 0.0) {
                    hi = m;
                } else {
                    lo = m;
                }
            }
            stepper.calc_state(hi, mid);
            return {RayOutcome::event, mid};
        }
        const double r = cur[1];
        if (r < 3.0 && cur[2] < 0.0 && b < kCriticalImpact) return {RayOutcome::captured, cur};
        if (r > 1e6) return {RayOutcome::escaped, cur};
    }
    throw ConvergenceError("ray integration exceeded its step budget");
}

double fold_angle(double phi) {
    double a = std::fmod(phi, 2.0 * kPi);
    if (a < 0.0) a += 2.0 * kPi;
    return a > kPi ? 2.0 * kPi - a : a;
}

}  // namespace

const char* to_string(GeodesicBranch branch) {
    switch (branch) {
        case GeodesicBranch::primary: return "primary";
        case GeodesicBranch::secondary: return "secondary";
        case GeodesicBranch::tertiary: return "tertiary";
    }
    return "unknown";
}

double branch_angle(GeodesicBranch branch, double gamma) {
    switch (branch) {
        case GeodesicBranch::primary: return gamma;
        case GeodesicBranch::secondary: return 2.0 * kPi - gamma;
        case GeodesicBranch::tertiary: return 2.0 * kPi + gamma;
    }
    return gamma;
}

double lapse(const SpacetimeParams& p, double r) {
    check_params(p);
    if (!(r > p.horizon_radius())) throw DomainError("lapse: radius at or inside the horizon");
    return 1.0 - 2.0 * p.mass / r;
}

double redshift_factor(const SpacetimeParams& p, double r) { return std::sqrt(lapse(p, r)); }

double tortoise(const SpacetimeParams& p, double r) {
    check_params(p);
    if (!(r > p.horizon_radius())) throw DomainError("tortoise: radius at or inside the horizon");
    const double m = p.mass;
    return r + 2.0 * m * std::log(r / (2.0 * m) - 1.0);
}

double tortoise_inverse(const SpacetimeParams& p, double rstar) {
    check_params(p);
    if (!std::isfinite(rstar)) throw DomainError("tortoise_inverse: non-finite argument");
    // With y = r/2M - 1 the relation reads y + ln y = r*/2M - 1.
    const double c = rstar / (2.0 * p.mass) - 1.0;
    double y;
    if (c < 700.0) {
        y = boost::math::lambert_w0(std::exp(c));
    } else {
        y = c - std::log(c);
    }
    for (int i = 0; i < 3; ++i) {
        y -= (y + std::log(y) - c) / (1.0 + 1.0 / y);
    }
    return 2.0 * p.mass * (1.0 + y);
}

double null_propagation_time(const SpacetimeParams& p, double r_a, double r_b, double gamma,
                             GeodesicBranch branch) {
    check_params(p);
    const double m = p.mass;
    if (!(r_a > 2.0 * m) || !(r_b > 2.0 * m)) {
        throw DomainError("null_propagation_time: radius at or inside the horizon");
    }
    if (!(gamma > 0.0) || gamma > kPi) throw DomainError("null_propagation_time: gamma outside (0, pi]");
    return m * propagation_time_unit(r_a / m, r_b / m, branch_angle(branch, gamma));
}

Wavefront wavefront(const SpacetimeParams& p, double r_emit, double dt, int n_directions) {
    check_params(p);
    const double m = p.mass;
    if (!(r_emit > 2.0 * m)) throw DomainError("wavefront: emission radius at or inside the horizon");
    if (!(dt > 0.0)) throw DomainError("wavefront: time must be positive");
    if (n_directions < 2) throw DomainError("wavefront: need at least two directions");

    const double re = r_emit / m;
    const double horizon_time = dt / m;
    Wavefront front;
    for (int k = 0; k < n_directions; ++k) {
        const double psi = kPi * k / (n_directions - 1);
        const RayResult res = trace_ray(re, psi, [horizon_time](const RayState& s) { return s[0] - horizon_time; });
        if (res.outcome == RayOutcome::captured) {
            front.captured.push_back(k);
            continue;
        }
        if (res.outcome == RayOutcome::escaped) {
            throw ConvergenceError("wavefront: ray escaped before the requested time");
        }
        const double b = re * std::sin(psi) / std::sqrt(1.0 - 2.0 / re);
        front.points.push_back({k, psi, b * m, res.state[1] * m, res.state[3], fold_angle(res.state[3])});
    }
    return front;
}

double caustic_arrival_time(const SpacetimeParams& p, double r_emit, double r_target) {
    check_params(p);
    const double m = p.mass;
    if (!(r_emit > 2.0 * m) || !(r_target > 2.0 * m)) {
        throw DomainError("caustic_arrival_time: radius at or inside the horizon");
    }
    const double re = r_emit / m;
    const double rt = r_target / m;

    // Radius at which the ray crosses phi = pi, or nullopt if it never does.
    auto crossing = [re](double psi) -> std::optional<RayState> {
        const RayResult res = trace_ray(re, psi, [](const RayState& s) { return s[3] - kPi; });
        if (res.outcome != RayOutcome::event) return std::nullopt;
        return res.state;
    };
    auto miss = [&](double psi) {
        const auto s = crossing(psi);
        return s ? s->at(1) - rt : std::numeric_limits<double>::infinity();
    };

    const int n_scan = 240;
    std::optional<double> best;
    double prev_psi = 1e-6;
    double prev = miss(prev_psi);
    for (int k = 1; k <= n_scan; ++k) {
        const double psi = kPi * k / (n_scan + 1);
        const double cur = miss(psi);
        const bool bracket = std::isfinite(cur) && (std::isfinite(prev) ? (prev > 0.0) != (cur > 0.0) : cur < 0.0);
        if (bracket) {
            double lo = prev_psi;
            double hi = psi;
            const bool lo_positive = !std::isfinite(prev) || prev > 0.0;
            for (int it = 0; it < 100 && hi - lo > 1e-15; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double v = miss(mid);
                if ((!std::isfinite(v) || v > 0.0) == lo_positive) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            const auto s = crossing(0.5 * (lo + hi));
            if (s && (!best || s->at(0) < *best)) best = s->at(0);
        }
        prev_psi = psi;
        prev = cur;
    }
    if (!best) throw NoSolutionError("caustic_arrival_time: no ray reaches the antipodal point");
    return *best * m;
}

}  // namespace sdet
