#include "sdet/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "sdet/errors.hpp"
#include "sdet/version.hpp"

namespace sdet {

namespace {

using json = nlohmann::json;
const cplx kI(0.0, 1.0);

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string hex32(std::uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08x", v);
    return buf;
}

// Runs fn(i) for i in [0, n) on up to `workers` threads; rethrows the first failure.
template <class F>
void parallel_for(std::size_t n, unsigned workers, const F& fn) {
    const unsigned w = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
    if (w <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex mu;
    const auto run = [&] {
        while (!failed) {
            const std::size_t i = next++;
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!error) error = std::current_exception();
                failed = true;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < w; ++k) pool.emplace_back(run);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

struct Parts {
    TermResult laa, lbb, lab, m, mp, mm;
};

PairResponse assemble(const DetectorPairSpec& pair, const Parts& x) {
    PairResponse r;
    r.lambda_a = pair.a.coupling;
    r.lambda_b = pair.b.coupling;
    r.L_aa = x.laa.value.real();
    r.L_bb = x.lbb.value.real();
    r.L_ab = x.lab.value;
    r.M = x.m.value;
    r.M_plus = x.mp.value;
    r.M_minus = x.mm.value;
    r.N2 = negativity(std::max(r.L_aa, 0.0), std::max(r.L_bb, 0.0), r.M);
    const double mag = std::abs(r.M);
    r.recombination_error = mag > 0.0 ? std::abs(r.M - (r.M_plus + kI * r.M_minus)) / mag : 0.0;
    r.diag.merge(x.laa.diag, "L_aa");
    r.diag.merge(x.lbb.diag, "L_bb");
    r.diag.merge(x.lab.diag, "L_ab");
    r.diag.merge(x.m.diag, "M");
    r.diag.merge(x.mp.diag, "M+");
    r.diag.merge(x.mm.diag, "M-");
    return r;
}

TermResult resummed(const EllSeries& s, double gamma, const ConvergenceControls& c) {
    TermResult t;
    t.value = resum(s, gamma, c, &t.diag);
    return t;
}

SweepRow make_row(double x, FieldState s, PairResponse r) {
    SweepRow row;
    row.x = x;
    row.state = s;
    row.entangled = r.N2 > 0.0;
    row.response = std::move(r);
    return row;
}

SpacetimeParams params_of(const SweepSpec& spec) { return SpacetimeParams{spec.mass}; }

json detector_json(const DetectorSpec& d) {
    return {{"r", d.r}, {"gap", d.gap}, {"coupling", d.coupling}, {"width", d.width}, {"center", d.center}};
}

DetectorSpec detector_from(const json& j, DetectorSpec d) {
    d.r = j.value("r", d.r);
    d.gap = j.value("gap", d.gap);
    d.coupling = j.value("coupling", d.coupling);
    d.width = j.value("width", d.width);
    d.center = j.value("center", d.center);
    return d;
}

const char* ordering_name(InTermOrdering o) { return o == InTermOrdering::standard ? "standard" : "printed"; }

std::string controls_line(const ConvergenceControls& c) {
    return "ell_cut=" + std::to_string(c.ell_cut) + " summation=" + (c.pairwise ? "pairwise" : "kahan") +
           " ordering=" + ordering_name(c.ordering) + " tail_threshold=" + num(c.tail_threshold);
}

void write_header(const SweepResult& res, const ModeTable& table, std::ostream& out) {
    out << "# sdet " << kVersion << '\n';
    out << "# table checksum " << hex32(table.checksum()) << '\n';
    out << "# table " << table.provenance << '\n';
    out << "# controls " << controls_line(res.spec.controls) << '\n';
    out << "# config " << json::parse(sweep_config_json(res.spec)).dump() << '\n';
}

}  // namespace

std::string to_string(SweepVariable v) {
    switch (v) {
        case SweepVariable::gamma: return "gamma";
        case SweepVariable::delay: return "delay";
        case SweepVariable::radius: return "radius";
    }
    return "gamma";
}

SweepVariable parse_sweep_variable(const std::string& s) {
    if (s == "gamma") return SweepVariable::gamma;
    if (s == "delay") return SweepVariable::delay;
    if (s == "radius") return SweepVariable::radius;
    throw DomainError("unknown sweep variable '" + s + "'");
}

std::vector<double> SweepSpec::sweep_values() const {
    if (!values.empty()) return values;
    std::vector<double> v;
    if (points <= 0) return v;
    if (points == 1) return {from};
    for (int i = 0; i < points; ++i) v.push_back(from + (to - from) * i / (points - 1));
    return v;
}

void SweepSpec::validate() const {
    if (!(mass > 0.0)) throw DomainError("mass must be positive");
    const std::vector<double> v = sweep_values();
    if (v.empty()) throw DomainError("sweep has no points");
    if (states.empty()) throw DomainError("sweep has no field states");
    const SpacetimeParams p{mass};
    for (double x : v) {
        if (!std::isfinite(x)) throw DomainError("non-finite sweep value");
        if (variable == SweepVariable::gamma && !(x >= 0.0 && x <= std::numbers::pi)) {
            throw DomainError("gamma sweep values must lie in [0, pi]");
        }
        if (variable == SweepVariable::radius && !(x > p.horizon_radius())) {
            throw DomainError("radius sweep values must exceed 2M");
        }
    }
    if (variable != SweepVariable::gamma && !(pair.gamma >= 0.0 && pair.gamma <= std::numbers::pi)) {
        throw DomainError("gamma must lie in [0, pi]");
    }
    if (variable != SweepVariable::radius) {
        pair.a.validate(p);
        pair.b.validate(p);
    }
}

SweepSpec parse_sweep_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw DomainError(std::string("config is not valid JSON: ") + e.what());
    }
    SweepSpec s;
    try {
        s.mass = j.value("mass", s.mass);
        if (j.contains("sweep")) {
            const json& w = j.at("sweep");
            if (w.contains("variable")) s.variable = parse_sweep_variable(w.at("variable").get<std::string>());
            s.from = w.value("from", s.from);
            s.to = w.value("to", s.to);
            s.points = w.value("points", s.points);
            if (w.contains("values")) s.values = w.at("values").get<std::vector<double>>();
        }
        if (j.contains("detectors")) {
            const json& d = j.at("detectors");
            if (d.contains("a")) s.pair.a = detector_from(d.at("a"), s.pair.a);
            if (d.contains("b")) s.pair.b = detector_from(d.at("b"), s.pair.b);
        }
        s.pair.gamma = j.value("gamma", s.pair.gamma);
        if (j.contains("states")) {
            s.states.clear();
            for (const auto& x : j.at("states")) s.states.push_back(parse_field_state(x.get<std::string>()));
        }
        s.proper_width = j.value("proper_width", s.proper_width);
        if (j.contains("controls")) {
            const json& c = j.at("controls");
            s.controls.ell_cut = c.value("ell_cut", s.controls.ell_cut);
            s.controls.tail_threshold = c.value("tail_threshold", s.controls.tail_threshold);
            const std::string sum = c.value("summation", std::string(s.controls.pairwise ? "pairwise" : "kahan"));
            if (sum != "pairwise" && sum != "kahan") throw DomainError("summation must be pairwise or kahan");
            s.controls.pairwise = sum == "pairwise";
            const std::string ord = c.value("ordering", std::string(ordering_name(s.controls.ordering)));
            if (ord != "standard" && ord != "printed") throw DomainError("ordering must be standard or printed");
            s.controls.ordering = ord == "standard" ? InTermOrdering::standard : InTermOrdering::printed;
        }
        s.workers = j.value("workers", s.workers);
        s.table = j.value("table", s.table.string());
        s.output = j.value("output", s.output.string());
        s.json_mirror = j.value("json_mirror", s.json_mirror);
    } catch (const json::exception& e) {
        throw DomainError(std::string("config field has the wrong type: ") + e.what());
    }
    return s;
}

std::string sweep_config_json(const SweepSpec& s) {
    json states = json::array();
    for (FieldState f : s.states) states.push_back(to_string(f));
    json sweep = {{"variable", to_string(s.variable)}, {"from", s.from}, {"to", s.to}, {"points", s.points}};
    if (!s.values.empty()) sweep["values"] = s.values;
    const json j = {
        {"mass", s.mass},
        {"sweep", sweep},
        {"detectors", {{"a", detector_json(s.pair.a)}, {"b", detector_json(s.pair.b)}}},
        {"gamma", s.pair.gamma},
        {"states", states},
        {"proper_width", s.proper_width},
        {"controls",
         {{"ell_cut", s.controls.ell_cut},
          {"summation", s.controls.pairwise ? "pairwise" : "kahan"},
          {"ordering", ordering_name(s.controls.ordering)},
          {"tail_threshold", s.controls.tail_threshold}}},
        {"workers", s.workers},
        {"table", s.table.string()},
        {"output", s.output.string()},
        {"json_mirror", s.json_mirror},
    };
    return j.dump(2);
}

std::vector<SweepRow> SweepResult::rows_for(FieldState s) const {
    std::vector<SweepRow> out;
    for (const SweepRow& r : rows) {
        if (r.state == s) out.push_back(r);
    }
    return out;
}

SweepResult run_gamma_sweep(const SweepSpec& spec, const ModeTable& table) {
    spec.validate();
    if (spec.variable != SweepVariable::gamma) throw DomainError("spec does not describe a gamma sweep");
    const SpacetimeParams p = params_of(spec);
    const std::vector<double> xs = spec.sweep_values();
    const ConvergenceControls& c = spec.controls;
    SweepResult res{spec, {}};
    res.rows.resize(spec.states.size() * xs.size());
    // Every term is a fixed l-series resummed at each gamma.
    for (std::size_t si = 0; si < spec.states.size(); ++si) {
        DetectorPairSpec pair = spec.pair;
        pair.state = spec.states[si];
        const EllSeries laa = L_series(p, pair, Which::a, Which::a, table, c);
        const EllSeries lbb = L_series(p, pair, Which::b, Which::b, table, c);
        const EllSeries lab = L_series(p, pair, Which::a, Which::b, table, c);
        const EllSeries m = M_series(p, pair, table, c);
        const EllSeries mp = M_series(p, pair, table, c, KernelPart::symmetric);
        const EllSeries mm = M_series(p, pair, table, c, KernelPart::antisymmetric);
        const Parts local{resummed(laa, 0.0, c), resummed(lbb, 0.0, c), {}, {}, {}, {}};
        for (std::size_t i = 0; i < xs.size(); ++i) {
            Parts x = local;
            x.lab = resummed(lab, xs[i], c);
            x.m = resummed(m, xs[i], c);
            x.mp = resummed(mp, xs[i], c);
            x.mm = resummed(mm, xs[i], c);
            DetectorPairSpec at = pair;
            at.gamma = xs[i];
            res.rows[si * xs.size() + i] = make_row(xs[i], pair.state, assemble(at, x));
        }
    }
    return res;
}

SweepResult run_delay_sweep(const SweepSpec& spec, const ModeTable& table) {
    spec.validate();
    if (spec.variable != SweepVariable::delay) throw DomainError("spec does not describe a delay sweep");
    const SpacetimeParams p = params_of(spec);
    const std::vector<double> xs = spec.sweep_values();
    const ConvergenceControls& c = spec.controls;
    SweepResult res{spec, {}};
    res.rows.resize(spec.states.size() * xs.size());
    for (std::size_t si = 0; si < spec.states.size(); ++si) {
        DetectorPairSpec pair = spec.pair;
        pair.state = spec.states[si];
        // Local terms do not depend on the delay.
        const TermResult laa = L_term(p, pair, Which::a, Which::a, table, c);
        const TermResult lbb = L_term(p, pair, Which::b, Which::b, table, c);
        parallel_for(xs.size(), spec.workers, [&](std::size_t i) {
            DetectorPairSpec at = pair;
            at.b.center = at.a.center + xs[i];
            Parts x{laa, lbb, {}, {}, {}, {}};
            x.lab = L_term(p, at, Which::a, Which::b, table, c);
            x.m = M_term(p, at, table, c);
            x.mp = resummed(M_series(p, at, table, c, KernelPart::symmetric), at.gamma, c);
            x.mm = resummed(M_series(p, at, table, c, KernelPart::antisymmetric), at.gamma, c);
            res.rows[si * xs.size() + i] = make_row(xs[i], pair.state, assemble(at, x));
        });
    }
    return res;
}

SweepResult run_radius_sweep(const SweepSpec& spec, const ModeTable& table) {
    spec.validate();
    if (spec.variable != SweepVariable::radius) throw DomainError("spec does not describe a radius sweep");
    const SpacetimeParams p = params_of(spec);
    const std::vector<double> xs = spec.sweep_values();
    SweepResult res{spec, {}};
    const std::size_t n = spec.states.size() * xs.size();
    res.rows.resize(n);
    parallel_for(n, spec.workers, [&](std::size_t k) {
        const std::size_t si = k / xs.size(), i = k % xs.size();
        DetectorPairSpec at = spec.pair;
        at.state = spec.states[si];
        at.a.r = at.b.r = xs[i];
        if (spec.proper_width > 0.0) at.a.width = at.b.width = proper_width(p, xs[i], spec.proper_width);
        res.rows[k] = make_row(xs[i], at.state, evaluate_pair(p, at, table, spec.controls));
    });
    return res;
}

SweepResult run_sweep(const SweepSpec& spec, const ModeTable& table) {
    switch (spec.variable) {
        case SweepVariable::gamma: return run_gamma_sweep(spec, table);
        case SweepVariable::delay: return run_delay_sweep(spec, table);
        case SweepVariable::radius: return run_radius_sweep(spec, table);
    }
    throw DomainError("unknown sweep variable");
}

std::vector<Peak> find_peaks(const std::vector<double>& x, const std::vector<double>& y, double min_rel_prominence) {
    if (x.size() != y.size()) throw DomainError("find_peaks: x and y differ in length");
    std::vector<Peak> out;
    const std::size_t n = y.size();
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(y[i] > y[i - 1] && y[i] >= y[i + 1])) continue;
        // Lowest point on each side before the curve climbs above y[i].
        double left = y[i], right = y[i];
        for (std::size_t k = i; k-- > 0 && y[k] <= y[i];) left = std::min(left, y[k]);
        for (std::size_t k = i + 1; k < n && y[k] <= y[i]; ++k) right = std::min(right, y[k]);
        const double prom = y[i] - std::max(left, right);
        if (prom >= min_rel_prominence * std::abs(y[i])) out.push_back({i, x[i], y[i], prom});
    }
    return out;
}

std::vector<GeodesicRow> run_geodesic_curve(const SpacetimeParams& p, const std::vector<double>& radii, double gamma,
                                            GeodesicBranch branch) {
    std::vector<GeodesicRow> out;
    for (double r : radii) {
        double t = std::numeric_limits<double>::quiet_NaN();
        try {
            t = null_propagation_time(p, r, r, gamma, branch);
        } catch (const NoSolutionError&) {
        }
        out.push_back({r, t});
    }
    return out;
}

void write_sweep_csv(const SweepResult& res, const ModeTable& table, std::ostream& out) {
    write_header(res, table, out);
    out << to_string(res.spec.variable)
        << ",state,abs_M,abs_M_plus,abs_M_minus,re_M,im_M,re_M_plus,im_M_plus,re_M_minus,im_M_minus,"
           "L_aa,L_bb,re_L_ab,im_L_ab,N2,entangled,last_ell_relative,last_omega_relative,sliver_bound,"
           "tail_warning\n";
    for (const SweepRow& row : res.rows) {
        const PairResponse& r = row.response;
        out << num(row.x) << ',' << to_string(row.state) << ',' << num(std::abs(r.M)) << ','
            << num(std::abs(r.M_plus)) << ',' << num(std::abs(r.M_minus)) << ',' << num(r.M.real()) << ','
            << num(r.M.imag()) << ',' << num(r.M_plus.real()) << ',' << num(r.M_plus.imag()) << ','
            << num(r.M_minus.real()) << ',' << num(r.M_minus.imag()) << ',' << num(r.L_aa) << ',' << num(r.L_bb)
            << ',' << num(r.L_ab.real()) << ',' << num(r.L_ab.imag()) << ',' << num(r.N2) << ','
            << (row.entangled ? 1 : 0) << ',' << num(r.diag.last_ell_relative) << ','
            << num(r.diag.last_omega_relative) << ',' << num(r.diag.sliver_bound) << ','
            << (r.diag.tail_warning ? 1 : 0) << '\n';
    }
}

void write_sweep_json(const SweepResult& res, const ModeTable& table, std::ostream& out) {
    json rows = json::array();
    for (const SweepRow& row : res.rows) {
        const PairResponse& r = row.response;
        rows.push_back({{"x", row.x},
                        {"state", to_string(row.state)},
                        {"M", {r.M.real(), r.M.imag()}},
                        {"M_plus", {r.M_plus.real(), r.M_plus.imag()}},
                        {"M_minus", {r.M_minus.real(), r.M_minus.imag()}},
                        {"L_aa", r.L_aa},
                        {"L_bb", r.L_bb},
                        {"L_ab", {r.L_ab.real(), r.L_ab.imag()}},
                        {"N2", r.N2},
                        {"entangled", row.entangled},
                        {"diagnostics",
                         {{"last_ell_relative", r.diag.last_ell_relative},
                          {"last_omega_relative", r.diag.last_omega_relative},
                          {"sliver_bound", r.diag.sliver_bound},
                          {"tail_warning", r.diag.tail_warning},
                          {"warnings", r.diag.warnings}}}});
    }
    const json doc = {{"version", kVersion},
                      {"table_checksum", hex32(table.checksum())},
                      {"table", table.provenance},
                      {"variable", to_string(res.spec.variable)},
                      {"config", json::parse(sweep_config_json(res.spec))},
                      {"rows", rows}};
    out << doc.dump(1) << '\n';
}

void write_geodesic_csv(const std::vector<GeodesicRow>& rows, double gamma, GeodesicBranch branch, std::ostream& out) {
    out << "# sdet " << kVersion << '\n';
    out << "# gamma " << num(gamma) << " branch " << to_string(branch) << '\n';
    out << "r,time\n";
    for (const GeodesicRow& g : rows) out << num(g.r) << ',' << (std::isnan(g.time) ? "nan" : num(g.time)) << '\n';
}

void save_sweep(const SweepResult& res, const ModeTable& table) {
    const std::filesystem::path& path = res.spec.output;
    if (path.empty()) throw IoError("sweep has no output path");
    const auto open = [](const std::filesystem::path& p) {
        std::ofstream f(p, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot write " + p.string());
        return f;
    };
    {
        std::ofstream f = open(path);
        write_sweep_csv(res, table, f);
        if (!f) throw IoError("write failed for " + path.string());
    }
    if (res.spec.json_mirror) {
        std::filesystem::path jp = path;
        jp.replace_extension(".json");
        std::ofstream f = open(jp);
        write_sweep_json(res, table, f);
        if (!f) throw IoError("write failed for " + jp.string());
    }
    std::ofstream f = open(path.string() + ".config.json");
    f << sweep_config_json(res.spec) << '\n';
    if (!f) throw IoError("write failed for " + path.string() + ".config.json");
}

bool table_covers(const ModeTable& t, const GridSpec& g) {
    if (t.grid.ell_max < g.ell_max) return false;
    if (t.grid.omega_min != g.omega_min || t.grid.omega_step != g.omega_step || t.grid.omega_max != g.omega_max) {
        return false;
    }
    return std::all_of(g.radii.begin(), g.radii.end(), [&](double r) {
        return std::find(t.grid.radii.begin(), t.grid.radii.end(), r) != t.grid.radii.end();
    });
}

ModeTable obtain_table(const SpacetimeParams& p, const TableRequest& req) {
    if (!req.path.empty() && std::filesystem::exists(req.path)) {
        ModeTable t = load(req.path);
        if (table_covers(t, req.grid) && t.mass == p.mass) return t;
        if (!req.rebuild_if_mismatch) {
            throw CoverageError("mode table " + req.path.string() + " does not cover the requested grid");
        }
    }
    BuildOptions opt = req.build;
    if (!req.path.empty() && opt.partial_path.empty()) opt.partial_path = req.path.string() + ".partial";
    ModeTable t = build(req.grid, p, opt);
    if (!req.path.empty()) {
        save(t, req.path);
        std::filesystem::remove(opt.partial_path);
    }
    return t;
}

}  // namespace sdet
