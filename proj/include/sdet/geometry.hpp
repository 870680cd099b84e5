#pragma once

#include <vector>

namespace sdet {

// Black-hole mass in geometric units. Radii and times passed to the geometry
// functions are lengths in the same units as `mass`.
struct SpacetimeParams {
    double mass = 1.0;

    double horizon_radius() const { return 2.0 * mass; }
    double surface_gravity() const { return 1.0 / (4.0 * mass); }
    double photon_sphere_radius() const { return 3.0 * mass; }
};

// Swept angle gamma, 2 pi - gamma, 2 pi + gamma.
enum class GeodesicBranch { primary, secondary, tertiary };

const char* to_string(GeodesicBranch branch);
double branch_angle(GeodesicBranch branch, double gamma);

double lapse(const SpacetimeParams& p, double r);
double redshift_factor(const SpacetimeParams& p, double r);
double tortoise(const SpacetimeParams& p, double r);
double tortoise_inverse(const SpacetimeParams& p, double rstar);

// Coordinate time along the null geodesic from r_a to r_b sweeping the branch
// angle. Throws NoSolutionError if no such geodesic exists.
double null_propagation_time(const SpacetimeParams& p, double r_a, double r_b, double gamma,
                             GeodesicBranch branch);

struct WavefrontPoint {
    int direction;    // emission direction index
    double psi;       // emission angle from the outward radial direction, static frame
    double impact;    // impact parameter b
    double r;
    double phi;       // unfolded swept angle
    double gamma;     // phi folded into [0, pi]
};

struct Wavefront {
    std::vector<WavefrontPoint> points;  // ordered by direction index
    std::vector<int> captured;           // directions omitted as captured
};

// Spatial points reached at coordinate time dt by null rays leaving r_emit in
// n_directions emission angles spread uniformly over [0, pi]. Rays already
// inside the photon sphere on a plunging orbit are reported as captured.
Wavefront wavefront(const SpacetimeParams& p, double r_emit, double dt, int n_directions);

// Coordinate time at which the front emitted at r_emit reaches the point
// (r_target, gamma = pi). Shoots the emission angle with an affine-parameter
// integrator, independent of null_propagation_time.
double caustic_arrival_time(const SpacetimeParams& p, double r_emit, double r_target);

}  // namespace sdet
