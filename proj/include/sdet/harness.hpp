#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "sdet/response.hpp"

namespace sdet {

enum class SweepVariable { gamma, delay, radius };

std::string to_string(SweepVariable v);
SweepVariable parse_sweep_variable(const std::string& s);

struct SweepSpec {
    double mass = 1.0;
    SweepVariable variable = SweepVariable::gamma;
    double from = 0.0, to = 0.0;
    int points = 0;
    std::vector<double> values;  // explicit sweep values; override from/to/points when set
    // Fixed detector fields. The swept quantity replaces gamma, b.center - a.center
    // or both radii.
    DetectorPairSpec pair;
    std::vector<FieldState> states{FieldState::boulware};
    double proper_width = 0.0;  // radius sweep: T(r) = proper_width / sqrt(f(r)) when positive
    ConvergenceControls controls;
    unsigned workers = 1;
    std::filesystem::path table;
    std::filesystem::path output;
    bool json_mirror = false;

    std::vector<double> sweep_values() const;
    void validate() const;
};

// JSON config mirroring SweepSpec; absent fields keep their defaults.
SweepSpec parse_sweep_config(const std::string& json_text);
std::string sweep_config_json(const SweepSpec& spec);

struct SweepRow {
    double x = 0.0;
    FieldState state = FieldState::boulware;
    PairResponse response;
    bool entangled = false;  // N2 > 0
};

struct SweepResult {
    SweepSpec spec;
    std::vector<SweepRow> rows;  // grouped by state in spec order, then in sweep order

    std::vector<SweepRow> rows_for(FieldState s) const;
};

SweepResult run_gamma_sweep(const SweepSpec& spec, const ModeTable& table);
SweepResult run_delay_sweep(const SweepSpec& spec, const ModeTable& table);
SweepResult run_radius_sweep(const SweepSpec& spec, const ModeTable& table);
SweepResult run_sweep(const SweepSpec& spec, const ModeTable& table);

struct Peak {
    std::size_t index = 0;
    double x = 0.0;
    double value = 0.0;
    double prominence = 0.0;  // height above the higher of the two bounding minima
};

// Interior local maxima whose prominence is at least min_rel_prominence of
// their own height, in ascending x.
std::vector<Peak> find_peaks(const std::vector<double>& x, const std::vector<double>& y,
                             double min_rel_prominence = 0.2);

struct GeodesicRow {
    double r = 0.0;
    double time = 0.0;  // NaN where no geodesic of the branch exists
};

// Light travel time between two points at equal radius r separated by gamma.
std::vector<GeodesicRow> run_geodesic_curve(const SpacetimeParams& p, const std::vector<double>& radii, double gamma,
                                            GeodesicBranch branch);

// CSV with a comment header: code version, table checksum, controls and the
// effective config. Numbers are printed with 17 significant digits.
void write_sweep_csv(const SweepResult& result, const ModeTable& table, std::ostream& out);
void write_sweep_json(const SweepResult& result, const ModeTable& table, std::ostream& out);
void write_geodesic_csv(const std::vector<GeodesicRow>& rows, double gamma, GeodesicBranch branch,
                        std::ostream& out);

// Writes spec.output, its JSON mirror when requested, and the effective
// config next to it as <output>.config.json.
void save_sweep(const SweepResult& result, const ModeTable& table);

// Mode-table lifecycle: load the file if it covers the grid, otherwise build
// it (resuming from <path>.partial) and save it.
struct TableRequest {
    GridSpec grid;
    std::filesystem::path path;
    BuildOptions build;
    bool rebuild_if_mismatch = false;
};

bool table_covers(const ModeTable& table, const GridSpec& grid);
ModeTable obtain_table(const SpacetimeParams& p, const TableRequest& req);

}  // namespace sdet
