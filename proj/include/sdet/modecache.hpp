#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "sdet/geometry.hpp"
#include "sdet/radial.hpp"

namespace sdet {

struct GridSpec {
    int ell_max = 100;
    double omega_min = 1e-3;  // 1/M
    double omega_max = 10.0;
    double omega_step = 1e-3;
    std::vector<double> radii;  // units of M

    std::size_t omega_count() const;
    double omega_at(std::size_t k) const;
    void validate() const;
};

struct FormatVersion {
    std::uint32_t major = 1, minor = 0, patch = 0;
    std::string str() const;
};
inline constexpr FormatVersion kTableFormat{1, 0, 0};

// Per (l, omega, radius): rescaled in/up modes and their r*-derivatives.
struct ModeRecord {
    cplx rbar_in, rbar_in_deriv, rbar_up, rbar_up_deriv;
};

struct ModeTable {
    GridSpec grid;
    double mass = 1.0;
    std::string provenance;
    std::vector<ScatteringCoeffs> coeffs;  // index ell * n_omega + k
    std::vector<ModeRecord> records;      // index (ell * n_omega + k) * n_radii + j

    std::size_t n_omega() const { return grid.omega_count(); }
    std::size_t n_radii() const { return grid.radii.size(); }
    std::size_t mode_index(int ell, std::size_t k) const { return static_cast<std::size_t>(ell) * n_omega() + k; }
    const ModeRecord& record(int ell, std::size_t k, std::size_t j) const {
        return records[mode_index(ell, k) * n_radii() + j];
    }
    std::uint32_t checksum() const;
    bool operator==(const ModeTable& o) const;
};

struct BuildOptions {
    unsigned workers = 1;
    SolverOptions solver;
    // Per-l chunks are appended here as they finish; an existing file is resumed.
    std::filesystem::path partial_path;
    std::function<void(std::size_t done, std::size_t total)> progress;
};

ModeTable build(const GridSpec& grid, const SpacetimeParams& p, const BuildOptions& opt = {});

void save(const ModeTable& table, const std::filesystem::path& path);
// Reads, verifies the checksum and runs the sampled audit unless disabled.
ModeTable load(const std::filesystem::path& path, bool audit = true);

struct AuditReport {
    std::size_t checked = 0;
    std::size_t skipped = 0;  // modes whose |I| is too large for a meaningful identity check
    double worst_wronskian = 0.0;
    double worst_flux = 0.0;
    bool passed = true;
};
// Checks r^2 I W(Rbar_in, Rbar_up) = 2 i omega and both flux identities on an
// evenly strided sample of the modes.
AuditReport audit(const ModeTable& table, double fraction = 0.01, double tol = 1e-8);

// Exact grid lookup; negative omega returns the conjugate of the positive entry.
cplx lookup(const ModeTable& table, ModeKind kind, int ell, double omega, double r);
// Grid index of |omega| and of r, throwing CoverageError off grid.
std::size_t omega_index(const ModeTable& table, double omega);
std::size_t radius_index(const ModeTable& table, double r);

}  // namespace sdet
