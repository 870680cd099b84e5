#include "sdet/states.hpp"

#include <cmath>
#include <numbers>

#include "sdet/errors.hpp"

namespace sdet {

std::string to_string(FieldState s) {
    switch (s) {
        case FieldState::boulware: return "boulware";
        case FieldState::unruh: return "unruh";
        case FieldState::hartle_hawking: return "hartle_hawking";
    }
    return "unknown";
}

FieldState parse_field_state(const std::string& s) {
    if (s == "boulware" || s == "B") return FieldState::boulware;
    if (s == "unruh" || s == "U") return FieldState::unruh;
    if (s == "hartle_hawking" || s == "H") return FieldState::hartle_hawking;
    throw DomainError("unknown field state '" + s + "'");
}

double bose_factor(const SpacetimeParams& p, double omega) {
    if (omega == 0.0) throw DomainError("bose_factor: omega = 0 is excluded");
    const double beta = 2.0 * std::numbers::pi / p.surface_gravity();
    return -1.0 / std::expm1(-beta * omega);
}

WeightPair kernel_weights(FieldState state, const ModeTable& t, int ell, std::size_t k, std::size_t j,
                          std::size_t jp, InTermOrdering ordering) {
    if (ell < 0 || ell > t.grid.ell_max) throw CoverageError("l = " + std::to_string(ell) + " is not in the table");
    const ModeRecord& a = t.record(ell, k, j);
    const ModeRecord& b = t.record(ell, k, jp);
    const double w = t.grid.omega_at(k) / t.mass;
    const SpacetimeParams p{t.mass};

    // Products at +omega; the -omega products follow from Rbar(-omega) = conj(Rbar(omega)).
    const cplx up = a.rbar_up * std::conj(b.rbar_up);
    const cplx in = a.rbar_in * std::conj(b.rbar_in);
    const cplx in_printed = std::conj(a.rbar_in) * b.rbar_in;
    const bool printed = ordering == InTermOrdering::printed;

    WeightPair out{};
    switch (state) {
        case FieldState::boulware:
            out.pos = (up + in) / w;
            out.neg = 0.0;
            break;
        case FieldState::unruh: {
            const double n = bose_factor(p, w);
            out.pos = (n * up + in) / w;
            // n(w) - 1 = -n(-w), free of cancellation at large beta w.
            out.neg = -bose_factor(p, -w) * std::conj(up) / w;
            break;
        }
        case FieldState::hartle_hawking: {
            const double n = bose_factor(p, w);
            const cplx in_pos = printed ? in_printed : in;
            out.pos = n * (up + in_pos) / w;
            out.neg = -bose_factor(p, -w) * (std::conj(up) + std::conj(in_pos)) / w;
            break;
        }
    }
    return out;
}

cplx kernel(FieldState state, const ModeTable& t, int ell, double omega, double r, double rp,
            InTermOrdering ordering) {
    if (omega == 0.0) throw DomainError("kernel: omega = 0 is excluded");
    const std::size_t k = omega_index(t, omega);
    const WeightPair wp = kernel_weights(state, t, ell, k, radius_index(t, r), radius_index(t, rp), ordering);
    return omega > 0.0 ? wp.pos * omega : wp.neg * omega;
}

SplitKernel kernel_split(FieldState state, const ModeTable& t, int ell, double omega, double r, double rp,
                         InTermOrdering ordering) {
    if (omega == 0.0) throw DomainError("kernel_split: omega = 0 is excluded");
    const std::size_t k = omega_index(t, omega);
    const WeightPair wp = kernel_weights(state, t, ell, k, radius_index(t, r), radius_index(t, rp), ordering);
    const cplx h = omega > 0.0 ? wp.pos : wp.neg;
    const cplx h_mirror = omega > 0.0 ? wp.neg : wp.pos;
    const cplx i(0.0, 1.0);
    return {(h + std::conj(h_mirror)) / 2.0, (h - std::conj(h_mirror)) / (2.0 * i)};
}

}  // namespace sdet
