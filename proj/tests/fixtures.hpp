#pragma once

#include "sdet/modecache.hpp"

namespace sdet::testing {

// Two radii, l <= 5, omega = 0.01 .. 1.0 in steps of 0.01: 1200 mode entries.
inline const ModeTable& small_table() {
    static const ModeTable table = [] {
        GridSpec g;
        g.ell_max = 5;
        g.omega_min = 0.01;
        g.omega_step = 0.01;
        g.omega_max = 1.0;
        g.radii = {6.009, 8.0};
        return build(g, SpacetimeParams{});
    }();
    return table;
}

}  // namespace sdet::testing
