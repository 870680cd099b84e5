#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sdet/errors.hpp"
#include "sdet/harness.hpp"
#include "sdet/validation.hpp"
#include "sdet/version.hpp"

using namespace sdet;

namespace {

enum Exit { ok = 0, failure = 1, validation_failed = 2, coverage = 3, io = 4 };

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void print_pair(const std::string& label, const PairResponse& r) {
    std::printf("%s L_aa=%.10e L_bb=%.10e L_ab=(%.10e,%.10e) M=(%.10e,%.10e) |M|=%.10e |M+|=%.10e |M-|=%.10e "
                "N2=%.10e tail_warning=%d\n",
                label.c_str(), r.L_aa, r.L_bb, r.L_ab.real(), r.L_ab.imag(), r.M.real(), r.M.imag(), std::abs(r.M),
                std::abs(r.M_plus), std::abs(r.M_minus), r.N2, r.diag.tail_warning ? 1 : 0);
    for (const std::string& w : r.diag.warnings) std::printf("  warning: %s\n", w.c_str());
}

struct ModesArgs {
    int lmax = 40;
    double omega_min = 1e-3, omega_max = 10.0, omega_step = 1e-3;
    std::vector<double> radii;
    std::string out;
    unsigned workers = 1;
    bool resume = false;
    double mass = 1.0;
};

int run_modes(const ModesArgs& a) {
    GridSpec g;
    g.ell_max = a.lmax;
    g.omega_min = a.omega_min;
    g.omega_max = a.omega_max;
    g.omega_step = a.omega_step;
    g.radii = a.radii;
    BuildOptions opt;
    opt.workers = a.workers;
    if (a.resume) opt.partial_path = a.out + ".partial";
    std::size_t last_pct = 101;
    opt.progress = [&](std::size_t done, std::size_t total) {
        const std::size_t pct = total ? 100 * done / total : 100;
        if (pct / 10 != last_pct / 10) std::fprintf(stderr, "modes: %zu%%\n", pct);
        last_pct = pct;
    };
    const ModeTable t = build(g, SpacetimeParams{a.mass}, opt);
    save(t, a.out);
    if (a.resume) std::filesystem::remove(opt.partial_path);
    const AuditReport rep = audit(t);
    std::printf("table %s checksum 0x%08x modes %zu records %zu\n", a.out.c_str(), t.checksum(), t.coeffs.size(),
                t.records.size());
    std::printf("audit checked=%zu skipped=%zu worst_wronskian=%.3e worst_flux=%.3e %s\n", rep.checked, rep.skipped,
                rep.worst_wronskian, rep.worst_flux, rep.passed ? "PASS" : "FAIL");
    return rep.passed ? ok : validation_failed;
}

struct ResponseArgs {
    std::string table;
    double mass = 1.0;
    DetectorPairSpec pair;
    std::vector<std::string> states{"boulware"};
    int lcut = 40;
    bool kahan = false;
    std::string ordering = "standard";
    double delay = std::nan("");
};

int run_response(ResponseArgs a) {
    const ModeTable t = load(a.table);
    ConvergenceControls c;
    c.ell_cut = a.lcut;
    c.pairwise = !a.kahan;
    c.ordering = a.ordering == "printed" ? InTermOrdering::printed : InTermOrdering::standard;
    if (!std::isnan(a.delay)) a.pair.b.center = a.pair.a.center + a.delay;
    for (const std::string& s : a.states) {
        DetectorPairSpec pr = a.pair;
        pr.state = parse_field_state(s);
        print_pair(to_string(pr.state), evaluate_pair(SpacetimeParams{a.mass}, pr, t, c));
    }
    return ok;
}

struct SweepArgs {
    std::string config;
    std::string variable, table, out;
    double from = std::nan(""), to = std::nan("");
    int points = -1, lcut = -1;
    unsigned workers = 0;
    std::vector<double> values;
    std::vector<std::string> states;
    bool json = false;
};

int run_sweep_cmd(const SweepArgs& a) {
    SweepSpec s = a.config.empty() ? SweepSpec{} : parse_sweep_config(read_text(a.config));
    if (!a.variable.empty()) s.variable = parse_sweep_variable(a.variable);
    if (!std::isnan(a.from)) s.from = a.from;
    if (!std::isnan(a.to)) s.to = a.to;
    if (a.points >= 0) s.points = a.points;
    if (!a.values.empty()) s.values = a.values;
    if (a.lcut >= 0) s.controls.ell_cut = a.lcut;
    if (a.workers > 0) s.workers = a.workers;
    if (!a.table.empty()) s.table = a.table;
    if (!a.out.empty()) s.output = a.out;
    if (a.json) s.json_mirror = true;
    if (!a.states.empty()) {
        s.states.clear();
        for (const std::string& x : a.states) s.states.push_back(parse_field_state(x));
    }
    if (s.table.empty()) throw IoError("sweep needs a mode table (--table or \"table\" in the config)");
    if (s.output.empty()) throw IoError("sweep needs an output path (--out or \"output\" in the config)");
    const ModeTable t = load(s.table);
    const SweepResult r = run_sweep(s, t);
    save_sweep(r, t);
    for (FieldState st : s.states) {
        std::vector<double> x, m;
        std::size_t flagged = 0;
        for (const SweepRow& row : r.rows_for(st)) {
            x.push_back(row.x);
            m.push_back(std::abs(row.response.M));
            flagged += row.response.diag.tail_warning ? 1 : 0;
        }
        std::printf("%s rows=%zu tail_warnings=%zu", to_string(st).c_str(), x.size(), flagged);
        for (const Peak& p : find_peaks(x, m)) std::printf(" peak(%s=%.6g |M|=%.6e)", to_string(s.variable).c_str(), p.x, p.value);
        std::printf("\n");
    }
    std::printf("wrote %s\n", s.output.string().c_str());
    return ok;
}

struct GeodesicArgs {
    double rmin = 2.1, rmax = 10.0, gamma = std::numbers::pi, mass = 1.0;
    int points = 200;
    std::string branch = "primary", out;
};

int run_geodesic(const GeodesicArgs& a) {
    GeodesicBranch b = GeodesicBranch::primary;
    if (a.branch == "secondary") b = GeodesicBranch::secondary;
    else if (a.branch == "tertiary") b = GeodesicBranch::tertiary;
    else if (a.branch != "primary") throw DomainError("branch must be primary, secondary or tertiary");
    if (a.points < 2) throw DomainError("geodesic needs at least two points");
    std::vector<double> radii;
    for (int i = 0; i < a.points; ++i) radii.push_back(a.rmin + (a.rmax - a.rmin) * i / (a.points - 1));
    const std::vector<GeodesicRow> rows = run_geodesic_curve(SpacetimeParams{a.mass}, radii, a.gamma, b);
    if (a.out.empty()) {
        write_geodesic_csv(rows, a.gamma, b, std::cout);
    } else {
        std::ofstream f(a.out);
        if (!f) throw IoError("cannot write " + a.out);
        write_geodesic_csv(rows, a.gamma, b, f);
    }
    return ok;
}

struct ValidateArgs {
    std::string suite = "all";
    std::size_t samples = 100, neg_samples = 1000;
    std::uint64_t seed = 1;
};

int run_validate(const ValidateArgs& a) {
    const SpacetimeParams p;
    std::vector<OracleReport> all;
    const auto emit = [&](const std::vector<OracleReport>& rs) {
        for (const OracleReport& r : rs) std::printf("%s\n", format_report(r).c_str());
        all.insert(all.end(), rs.begin(), rs.end());
    };
    const bool every = a.suite == "all";
    if (!every && a.suite != "windows" && a.suite != "negativity" && a.suite != "modes" && a.suite != "coarse-m") {
        throw DomainError("suite must be windows, negativity, modes, coarse-m or all");
    }
    if (every || a.suite == "windows") emit(oracle_window_integrals(window_samples(a.samples, a.seed)));
    if (every || a.suite == "negativity") emit(oracle_partial_transpose(negativity_samples(a.neg_samples, a.seed)));
    if (every || a.suite == "modes") emit(oracle_mode_consistency(p, default_mode_sample()));
    if (every || a.suite == "coarse-m") emit(oracle_coarse_m(p, default_coarse_m()));
    std::size_t failed = 0;
    for (const OracleReport& r : all) failed += r.passed ? 0 : 1;
    std::printf("summary checks=%zu failed=%zu %s\n", all.size(), failed, failed ? "FAIL" : "PASS");
    return failed ? validation_failed : ok;
}

void add_detector(CLI::App* cmd, DetectorSpec& d, const std::string& tag) {
    cmd->add_option("--r" + tag, d.r, "radius of detector " + tag + " in M");
    cmd->add_option("--gap-" + tag, d.gap, "energy gap of detector " + tag + " in 1/M");
    cmd->add_option("--width-" + tag, d.width, "switching width of detector " + tag + " in M");
    cmd->add_option("--t0" + tag, d.center, "switching center of detector " + tag + " in M");
    cmd->add_option("--coupling-" + tag, d.coupling, "coupling of detector " + tag);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-detector response near a Schwarzschild black hole"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    ModesArgs ma;
    CLI::App* modes = app.add_subcommand("modes", "build and save a mode table");
    modes->add_option("--lmax", ma.lmax, "largest multipole");
    modes->add_option("--omega-min", ma.omega_min, "smallest frequency in 1/M");
    modes->add_option("--omega-max", ma.omega_max, "largest frequency in 1/M");
    modes->add_option("--omega-step", ma.omega_step, "frequency step in 1/M");
    modes->add_option("--radii", ma.radii, "detector radii in M")->required()->delimiter(',');
    modes->add_option("--out", ma.out, "table file")->required();
    modes->add_option("--workers", ma.workers, "worker threads");
    modes->add_flag("--resume", ma.resume, "keep per-l progress in <out>.partial and resume from it");
    modes->add_option("--mass", ma.mass, "black hole mass");

    ResponseArgs ra;
    ra.pair.a = {6.009, 5.0, 1.0, 1.0, 0.0};
    ra.pair.b = ra.pair.a;
    CLI::App* response = app.add_subcommand("response", "evaluate L, M and the negativity for one detector pair");
    response->add_option("--table", ra.table, "mode table file")->required();
    add_detector(response, ra.pair.a, "a");
    add_detector(response, ra.pair.b, "b");
    response->add_option("--delay", ra.delay, "sets t0b = t0a + delay");
    response->add_option("--gamma", ra.pair.gamma, "angular separation");
    response->add_option("--state", ra.states, "boulware, unruh, hartle_hawking (repeatable)");
    response->add_option("--lcut", ra.lcut, "multipole cutoff");
    response->add_flag("--kahan", ra.kahan, "Kahan instead of pairwise summation");
    response->add_option("--ordering", ra.ordering, "Hartle-Hawking in-term ordering")
        ->check(CLI::IsMember({"standard", "printed"}));
    response->add_option("--mass", ra.mass, "black hole mass");

    SweepArgs sa;
    CLI::App* sweep = app.add_subcommand("sweep", "run a gamma, delay or radius sweep");
    sweep->add_option("--config", sa.config, "JSON sweep config");
    sweep->add_option("--variable", sa.variable, "gamma, delay or radius");
    sweep->add_option("--from", sa.from, "first sweep value");
    sweep->add_option("--to", sa.to, "last sweep value");
    sweep->add_option("--points", sa.points, "number of sweep points");
    sweep->add_option("--values", sa.values, "explicit sweep values")->delimiter(',');
    sweep->add_option("--state", sa.states, "field states (repeatable)");
    sweep->add_option("--lcut", sa.lcut, "multipole cutoff");
    sweep->add_option("--workers", sa.workers, "worker threads");
    sweep->add_option("--table", sa.table, "mode table file");
    sweep->add_option("--out", sa.out, "CSV output path");
    sweep->add_flag("--json", sa.json, "also write a JSON mirror");

    GeodesicArgs ga;
    CLI::App* geodesic = app.add_subcommand("geodesic", "light travel time between equal radii");
    geodesic->add_option("--rmin", ga.rmin, "smallest radius in M");
    geodesic->add_option("--rmax", ga.rmax, "largest radius in M");
    geodesic->add_option("--points", ga.points, "number of radii");
    geodesic->add_option("--gamma", ga.gamma, "angular separation");
    geodesic->add_option("--branch", ga.branch, "primary, secondary or tertiary");
    geodesic->add_option("--out", ga.out, "CSV output path (default stdout)");
    geodesic->add_option("--mass", ga.mass, "black hole mass");

    ValidateArgs va;
    CLI::App* validate = app.add_subcommand("validate", "run the oracle suites");
    validate->add_option("--suite", va.suite, "windows, negativity, modes, coarse-m or all");
    validate->add_option("--samples", va.samples, "window samples");
    validate->add_option("--negativity-samples", va.neg_samples, "negativity samples");
    validate->add_option("--seed", va.seed, "random seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*modes) return run_modes(ma);
        if (*response) return run_response(ra);
        if (*sweep) return run_sweep_cmd(sa);
        if (*geodesic) return run_geodesic(ga);
        if (*validate) return run_validate(va);
    } catch (const AuditError& e) {
        std::fprintf(stderr, "audit failed: %s\n", e.what());
        return validation_failed;
    } catch (const CoverageError& e) {
        std::fprintf(stderr, "coverage error: %s\n", e.what());
        return coverage;
    } catch (const IoError& e) {
        std::fprintf(stderr, "i/o error: %s\n", e.what());
        return io;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return failure;
    }
    return ok;
}
