#pragma once

#include <string>

#include "sdet/modecache.hpp"

namespace sdet {

enum class FieldState { boulware, unruh, hartle_hawking };

std::string to_string(FieldState s);
FieldState parse_field_state(const std::string& s);

// Hartle-Hawking in-term: standard = Rbar_in(r) conj(Rbar_in(r')) as in the
// Boulware and Unruh kernels; printed = conj(Rbar_in(r)) Rbar_in(r').
enum class InTermOrdering { standard, printed };

// 1 / (1 - exp(-2 pi omega / kappa)) for omega != 0.
double bose_factor(const SpacetimeParams& p, double omega);

// G_{l omega}(r, r'); omega of either sign, on the table grid.
cplx kernel(FieldState state, const ModeTable& table, int ell, double omega, double r, double rp,
            InTermOrdering ordering = InTermOrdering::standard);

// Split of the mode-sum weight H = G / omega into its anticommutator and
// commutator parts: H = symmetric + i antisymmetric.
struct SplitKernel {
    cplx symmetric;
    cplx antisymmetric;
};
SplitKernel kernel_split(FieldState state, const ModeTable& table, int ell, double omega, double r, double rp,
                         InTermOrdering ordering = InTermOrdering::standard);

// Weights H at +omega_k and -omega_k from grid indices, the form used by the
// response sums.
struct WeightPair {
    cplx pos;
    cplx neg;
};
WeightPair kernel_weights(FieldState state, const ModeTable& table, int ell, std::size_t k, std::size_t j,
                          std::size_t jp, InTermOrdering ordering = InTermOrdering::standard);

}  // namespace sdet
