#include "sdet/modecache.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <boost/crc.hpp>

#include "sdet/errors.hpp"

namespace sdet {

namespace {

constexpr char kMagic[8] = {'S', 'D', 'E', 'T', 'M', 'O', 'D', 'E'};
constexpr char kPartialMagic[8] = {'S', 'D', 'E', 'T', 'P', 'A', 'R', 'T'};

// Little-endian byte writer and reader.
class Writer {
public:
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void c128(cplx v) {
        f64(v.real());
        f64(v.imag());
    }
    void str(const std::string& s) {
        u64(s.size());
        buf_.append(s);
    }
    void raw(const char* p, std::size_t n) { buf_.append(p, n); }
    const std::string& bytes() const { return buf_; }

private:
    std::string buf_;
};

class Reader {
public:
    Reader(const char* p, std::size_t n) : p_(p), n_(n) {}
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return v;
    }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    cplx c128() {
        const double re = f64();
        return {re, f64()};
    }
    std::string str() {
        const std::uint64_t len = u64();
        need(len);
        std::string s(p_ + pos_, len);
        pos_ += len;
        return s;
    }
    void skip(std::uint64_t k) {
        need(k);
        pos_ += k;
    }
    std::size_t remaining() const { return n_ - pos_; }

private:
    void need(std::uint64_t k) const {
        if (k > n_ - pos_) throw ChecksumError("mode table payload is truncated");
    }
    const char* p_;
    std::size_t n_;
    std::size_t pos_ = 0;
};

std::uint32_t crc32(const std::string& bytes) {
    boost::crc_32_type crc;
    crc.process_bytes(bytes.data(), bytes.size());
    return crc.checksum();
}

void write_grid(Writer& w, const GridSpec& g, double mass) {
    w.f64(mass);
    w.i32(g.ell_max);
    w.f64(g.omega_min);
    w.f64(g.omega_max);
    w.f64(g.omega_step);
    w.u64(g.radii.size());
    for (double r : g.radii) w.f64(r);
}

void write_coeffs(Writer& w, const ScatteringCoeffs& c) {
    w.f64(c.log_abs_incidence);
    w.f64(c.arg_incidence);
    w.c128(c.refl_in);
    w.c128(c.refl_up);
}

ScatteringCoeffs read_coeffs(Reader& r) {
    ScatteringCoeffs c;
    c.log_abs_incidence = r.f64();
    c.arg_incidence = r.f64();
    c.refl_in = r.c128();
    c.refl_up = r.c128();
    return c;
}

void write_record(Writer& w, const ModeRecord& m) {
    w.c128(m.rbar_in);
    w.c128(m.rbar_in_deriv);
    w.c128(m.rbar_up);
    w.c128(m.rbar_up_deriv);
}

ModeRecord read_record(Reader& r) {
    ModeRecord m;
    m.rbar_in = r.c128();
    m.rbar_in_deriv = r.c128();
    m.rbar_up = r.c128();
    m.rbar_up_deriv = r.c128();
    return m;
}

std::string serialize_payload(const ModeTable& t) {
    Writer w;
    write_grid(w, t.grid, t.mass);
    w.str(t.provenance);
    w.u64(t.coeffs.size());
    for (const auto& c : t.coeffs) write_coeffs(w, c);
    w.u64(t.records.size());
    for (const auto& m : t.records) write_record(w, m);
    return w.bytes();
}

std::string grid_fingerprint(const GridSpec& g, double mass, const SolverOptions& s) {
    Writer w;
    write_grid(w, g, mass);
    w.i32(s.taylor_order);
    w.f64(s.step_fraction);
    w.f64(s.phase_step);
    w.f64(s.max_step);
    w.u32(s.adaptive_order ? 1u : 0u);
    w.f64(s.r_max);
    return w.bytes();
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Chunk {
    int ell;
    std::vector<ScatteringCoeffs> coeffs;
    std::vector<ModeRecord> records;
};

std::string serialize_chunk(const Chunk& c) {
    Writer w;
    for (const auto& x : c.coeffs) write_coeffs(w, x);
    for (const auto& m : c.records) write_record(w, m);
    return w.bytes();
}

// Reads the complete chunks of a partial file; a torn tail is ignored.
std::vector<Chunk> read_partial(const std::filesystem::path& path, const std::string& fingerprint,
                                std::size_t n_omega, std::size_t n_radii, std::size_t& valid_bytes) {
    std::vector<Chunk> chunks;
    const std::string data = read_file(path);
    Reader r(data.data(), data.size());
    if (data.size() < 8 || std::memcmp(data.data(), kPartialMagic, 8) != 0) {
        throw IoError("partial file " + path.string() + " has a foreign header");
    }
    r.skip(8);
    for (int i = 0; i < 2; ++i) r.u32();
    if (r.str() != fingerprint) {
        throw IoError("partial file " + path.string() + " was written for a different grid or solver setup");
    }
    valid_bytes = data.size() - r.remaining();
    const std::size_t chunk_bytes = n_omega * (48 + n_radii * 64);
    while (r.remaining() >= 16) {
        const int ell = r.i32();
        const std::uint32_t crc = r.u32();
        const std::uint64_t len = r.u64();
        if (len != chunk_bytes || r.remaining() < len) break;
        const std::size_t start = data.size() - r.remaining();
        const std::string body = data.substr(start, len);
        if (crc32(body) != crc) break;
        Reader br(body.data(), body.size());
        Chunk c{ell, {}, {}};
        for (std::size_t k = 0; k < n_omega; ++k) c.coeffs.push_back(read_coeffs(br));
        for (std::size_t k = 0; k < n_omega * n_radii; ++k) c.records.push_back(read_record(br));
        chunks.push_back(std::move(c));
        r.skip(len);
        valid_bytes = data.size() - r.remaining();
    }
    return chunks;
}

Chunk solve_chunk(int ell, const GridSpec& grid, const SpacetimeParams& p, const SolverOptions& s) {
    Chunk c{ell, {}, {}};
    const std::size_t n = grid.omega_count();
    c.coeffs.reserve(n);
    c.records.reserve(n * grid.radii.size());
    for (std::size_t k = 0; k < n; ++k) {
        const ModeSolution m = solve_mode(p, {ell, grid.omega_at(k)}, grid.radii, s);
        c.coeffs.push_back(m.coeffs);
        for (std::size_t j = 0; j < grid.radii.size(); ++j) {
            c.records.push_back({m.rbar_in[j], m.rbar_in_deriv[j], m.rbar_up[j], m.rbar_up_deriv[j]});
        }
    }
    return c;
}

std::string provenance_for(const GridSpec& g, double mass, const SolverOptions& s) {
    std::ostringstream os;
    os.precision(17);
    os << "format " << kTableFormat.str() << "; mass " << mass << "; ell_max " << g.ell_max << "; omega "
       << g.omega_min << ":" << g.omega_step << ":" << g.omega_max << "; radii";
    for (double r : g.radii) os << " " << r;
    os << "; taylor_order " << s.taylor_order << "; step_fraction " << s.step_fraction << "; phase_step "
       << s.phase_step;
    return os.str();
}

}  // namespace

std::string FormatVersion::str() const {
    return std::to_string(major) + "." + std::to_string(minor) + "." + std::to_string(patch);
}

std::size_t GridSpec::omega_count() const {
    return static_cast<std::size_t>(std::llround((omega_max - omega_min) / omega_step)) + 1;
}

double GridSpec::omega_at(std::size_t k) const { return omega_min + static_cast<double>(k) * omega_step; }

void GridSpec::validate() const {
    if (ell_max < 0) throw DomainError("grid: ell_max must be non-negative");
    if (!(omega_min > 0.0)) throw DomainError("grid: omega_min must be positive");
    if (!(omega_step > 0.0)) throw DomainError("grid: omega_step must be positive");
    if (!(omega_max >= omega_min)) throw DomainError("grid: omega_max below omega_min");
    for (double r : radii) {
        if (!(r > 2.0)) throw DomainError("grid: radii must exceed 2M");
    }
}

std::uint32_t ModeTable::checksum() const { return crc32(serialize_payload(*this)); }

bool ModeTable::operator==(const ModeTable& o) const { return serialize_payload(*this) == serialize_payload(o); }

ModeTable build(const GridSpec& grid_in, const SpacetimeParams& p, const BuildOptions& opt) {
    grid_in.validate();
    ModeTable t;
    t.grid = grid_in;
    std::sort(t.grid.radii.begin(), t.grid.radii.end());
    t.grid.radii.erase(std::unique(t.grid.radii.begin(), t.grid.radii.end()), t.grid.radii.end());
    t.mass = p.mass;
    t.provenance = provenance_for(t.grid, p.mass, opt.solver);
    const std::size_t n_omega = t.grid.omega_count();
    const std::size_t n_radii = t.grid.radii.size();
    const std::size_t n_ell = static_cast<std::size_t>(t.grid.ell_max) + 1;
    if (n_radii == 0) return t;
    t.coeffs.assign(n_ell * n_omega, ScatteringCoeffs{});
    t.records.assign(n_ell * n_omega * n_radii, ModeRecord{});

    // Radii are stored in units of M; the solver takes lengths.
    GridSpec phys = t.grid;
    for (double& r : phys.radii) r *= p.mass;
    phys.omega_min /= p.mass;
    phys.omega_step /= p.mass;
    phys.omega_max /= p.mass;

    std::vector<char> done(n_ell, 0);
    const auto place = [&](const Chunk& c) {
        const std::size_t base = static_cast<std::size_t>(c.ell) * n_omega;
        std::copy(c.coeffs.begin(), c.coeffs.end(), t.coeffs.begin() + base);
        std::copy(c.records.begin(), c.records.end(), t.records.begin() + base * n_radii);
        done[c.ell] = 1;
    };

    const std::string fingerprint = grid_fingerprint(t.grid, p.mass, opt.solver);
    std::ofstream partial;
    if (!opt.partial_path.empty()) {
        std::size_t valid = 0;
        if (std::filesystem::exists(opt.partial_path)) {
            for (const Chunk& c : read_partial(opt.partial_path, fingerprint, n_omega, n_radii, valid)) {
                if (c.ell >= 0 && static_cast<std::size_t>(c.ell) < n_ell) place(c);
            }
            std::filesystem::resize_file(opt.partial_path, valid);
            partial.open(opt.partial_path, std::ios::binary | std::ios::app);
        } else {
            partial.open(opt.partial_path, std::ios::binary | std::ios::trunc);
            Writer w;
            w.raw(kPartialMagic, 8);
            w.u32(0);
            w.u32(0);
            w.str(fingerprint);
            partial.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
        }
        if (!partial) throw IoError("cannot write partial file " + opt.partial_path.string());
    }

    std::vector<int> todo;
    for (std::size_t l = 0; l < n_ell; ++l) {
        if (!done[l]) todo.push_back(static_cast<int>(l));
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::size_t finished = n_ell - todo.size();
    std::exception_ptr error;
    std::mutex mu;
    if (opt.progress) opt.progress(finished * n_omega, n_ell * n_omega);

    const auto worker = [&] {
        while (!failed) {
            const std::size_t i = next++;
            if (i >= todo.size()) return;
            try {
                Chunk c = solve_chunk(todo[i], phys, p, opt.solver);
                std::lock_guard<std::mutex> lock(mu);
                if (partial.is_open()) {
                    const std::string body = serialize_chunk(c);
                    Writer h;
                    h.i32(c.ell);
                    h.u32(crc32(body));
                    h.u64(body.size());
                    partial.write(h.bytes().data(), static_cast<std::streamsize>(h.bytes().size()));
                    partial.write(body.data(), static_cast<std::streamsize>(body.size()));
                    partial.flush();
                }
                place(c);
                ++finished;
                if (opt.progress) opt.progress(finished * n_omega, n_ell * n_omega);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!error) error = std::current_exception();
                failed = true;
            }
        }
    };
    const unsigned nw = std::max(1u, std::min<unsigned>(opt.workers, static_cast<unsigned>(todo.size())));
    if (nw <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < nw; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (error) std::rethrow_exception(error);
    return t;
}

void save(const ModeTable& table, const std::filesystem::path& path) {
    const std::string payload = serialize_payload(table);
    Writer h;
    h.raw(kMagic, 8);
    h.u32(kTableFormat.major);
    h.u32(kTableFormat.minor);
    h.u32(kTableFormat.patch);
    h.u64(payload.size());
    h.u32(crc32(payload));
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(h.bytes().data(), static_cast<std::streamsize>(h.bytes().size()));
        out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
        if (!out) throw IoError("write to " + tmp.string() + " failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move table into place at " + path.string() + ": " + ec.message());
}

ModeTable load(const std::filesystem::path& path, bool run_audit) {
    const std::string data = read_file(path);
    constexpr std::size_t header = 8 + 12 + 8 + 4;
    if (data.size() < 8 || std::memcmp(data.data(), kMagic, 8) != 0) {
        throw IoError(path.string() + " is not a mode table");
    }
    if (data.size() < header) throw ChecksumError(path.string() + ": header is truncated");
    Reader hr(data.data() + 8, header - 8);
    FormatVersion v;
    v.major = hr.u32();
    v.minor = hr.u32();
    v.patch = hr.u32();
    if (v.major != kTableFormat.major || v.minor > kTableFormat.minor) {
        throw VersionMismatchError(path.string() + ": file format " + v.str() + " is not readable by format " +
                                   kTableFormat.str());
    }
    const std::uint64_t size = hr.u64();
    const std::uint32_t crc = hr.u32();
    const std::string payload = data.substr(header);
    if (payload.size() != size || crc32(payload) != crc) {
        throw ChecksumError(path.string() + ": payload checksum does not match");
    }

    Reader r(payload.data(), payload.size());
    ModeTable t;
    t.mass = r.f64();
    t.grid.ell_max = r.i32();
    t.grid.omega_min = r.f64();
    t.grid.omega_max = r.f64();
    t.grid.omega_step = r.f64();
    const std::uint64_t nr = r.u64();
    for (std::uint64_t i = 0; i < nr; ++i) t.grid.radii.push_back(r.f64());
    t.provenance = r.str();
    const std::uint64_t nc = r.u64();
    const std::size_t expect_c =
        nr == 0 ? 0 : (static_cast<std::size_t>(t.grid.ell_max) + 1) * t.grid.omega_count();
    if (nc != expect_c) throw ChecksumError(path.string() + ": coefficient count does not match the grid");
    t.coeffs.reserve(nc);
    for (std::uint64_t i = 0; i < nc; ++i) t.coeffs.push_back(read_coeffs(r));
    const std::uint64_t nm = r.u64();
    if (nm != expect_c * nr) throw ChecksumError(path.string() + ": record count does not match the grid");
    t.records.reserve(nm);
    for (std::uint64_t i = 0; i < nm; ++i) t.records.push_back(read_record(r));

    if (run_audit) {
        const AuditReport rep = audit(t);
        if (!rep.passed) {
            throw AuditError(path.string() + ": audit failed (wronskian " + std::to_string(rep.worst_wronskian) +
                             ", flux " + std::to_string(rep.worst_flux) + ")");
        }
    }
    return t;
}

AuditReport audit(const ModeTable& t, double fraction, double tol) {
    AuditReport rep;
    const std::size_t total = t.coeffs.size();
    if (total == 0) return rep;
    const std::size_t stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(1.0 / fraction)));
    const std::size_t n_omega = t.n_omega();
    for (std::size_t idx = stride / 2 % total; idx < total; idx += stride) {
        const ScatteringCoeffs& c = t.coeffs[idx];
        rep.worst_flux = std::max({rep.worst_flux, c.flux_residual_in(), c.flux_residual_up()});
        const double w = t.grid.omega_at(idx % n_omega) / t.mass;
        if (c.log_abs_incidence > 600.0) {
            ++rep.skipped;
        } else {
            for (std::size_t j = 0; j < t.n_radii(); ++j) {
                const ModeRecord& m = t.records[idx * t.n_radii() + j];
                const double r = t.grid.radii[j] * t.mass;
                const cplx wr = m.rbar_in * m.rbar_up_deriv - m.rbar_up * m.rbar_in_deriv;
                const cplx lhs = r * r * c.incidence() * wr;
                rep.worst_wronskian = std::max(rep.worst_wronskian, std::abs(lhs - cplx(0.0, 2.0 * w)) / (2.0 * w));
            }
        }
        ++rep.checked;
    }
    rep.passed = rep.worst_flux < tol && rep.worst_wronskian < tol;
    return rep;
}

std::size_t omega_index(const ModeTable& t, double omega) {
    const double a = std::abs(omega) * t.mass;
    const double x = (a - t.grid.omega_min) / t.grid.omega_step;
    const double k = std::round(x);
    if (k < 0.0 || k >= static_cast<double>(t.n_omega()) || std::abs(a - t.grid.omega_at(static_cast<std::size_t>(k))) > 1e-12 * t.grid.omega_step) {
        throw CoverageError("omega = " + std::to_string(omega) + " is not on the table grid");
    }
    return static_cast<std::size_t>(k);
}

std::size_t radius_index(const ModeTable& t, double r) {
    const double ru = r / t.mass;
    for (std::size_t j = 0; j < t.grid.radii.size(); ++j) {
        if (std::abs(t.grid.radii[j] - ru) <= 1e-12 * ru) return j;
    }
    throw CoverageError("radius r = " + std::to_string(r) + " is not on the table grid");
}

cplx lookup(const ModeTable& t, ModeKind kind, int ell, double omega, double r) {
    if (ell < 0 || ell > t.grid.ell_max) throw CoverageError("l = " + std::to_string(ell) + " is not in the table");
    const std::size_t k = omega_index(t, omega);
    const std::size_t j = radius_index(t, r);
    const ModeRecord& m = t.record(ell, k, j);
    const cplx v = kind == ModeKind::in ? m.rbar_in : m.rbar_up;
    return omega < 0.0 ? std::conj(v) : v;
}

}  // namespace sdet
