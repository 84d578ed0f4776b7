#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "vns/diagnostics.hpp"
#include "vns/particles.hpp"
#include "vns/spectral_field.hpp"

namespace vns {

namespace detail {
inline std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
} // namespace detail

// ---------------------------------------------------------------------------
// EnergyRecord CSV, full double precision

inline void write_records_csv(const std::string& path, const std::vector<EnergyRecord>& recs) {
    std::ofstream out(path);
    if (!out) throw config_error("cannot open for writing: " + path);
    out << energy_record_header() << "\n";
    for (const EnergyRecord& r : recs) {
        const double cols[] = {r.t,        r.E0,          r.E1,       r.E2,
                               r.D0,       r.D1,          r.D2,       r.int_D0,
                               r.lip_budget, r.besov_neg32, r.besov_neg12, r.sobolev_half,
                               r.rho_max,  r.j_max,       r.m2_max,   r.w1_bound,
                               r.j_minus_rho_u_L1, r.loglip, r.script_E, r.script_D,
                               r.besov_neg_dhalf};
        for (std::size_t c = 0; c < std::size(cols); ++c)
            out << (c ? "," : "") << detail::fmt17(cols[c]);
        out << "\n";
    }
}

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::size_t column_index(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return i;
        throw usage_error("no such column: " + name);
    }

    std::vector<double> column(const std::string& name) const {
        const std::size_t ci = column_index(name);
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(r[ci]);
        return out;
    }
};

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open: " + path);
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw data_error("empty csv: " + path);
    std::size_t pos = 0;
    while (pos <= line.size()) {
        const auto comma = line.find(',', pos);
        table.columns.push_back(line.substr(pos, comma - pos));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        pos = 0;
        while (pos <= line.size()) {
            const auto comma = line.find(',', pos);
            row.push_back(std::stod(line.substr(pos, comma - pos)));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (row.size() != table.columns.size()) throw data_error("ragged csv row in " + path);
        table.rows.push_back(std::move(row));
    }
    return table;
}

// ---------------------------------------------------------------------------
// Spectral snapshots: NDJSON records and a raw binary dump with a 64-byte
// header (magic "VNSF", version, d, N, L, component count), little endian.

inline void write_field_ndjson(const std::string& path, const SpectralField& z, double t) {
    std::ofstream out(path);
    if (!out) throw config_error("cannot open for writing: " + path);
    const Grid& g = z.grid;
    std::array<int, 3> idx;
    char buf[256];
    for (int c = 0; c < z.ncomp; ++c)
        for (std::size_t i = 0; i < g.points(); ++i) {
            const cd v = z.at(c, i);
            if (v == cd(0.0)) continue; // sparse dump
            g.decode(i, idx);
            std::snprintf(buf, sizeof buf,
                          "{\"t\":%.17g,\"component\":%d,\"k\":[%d,%d,%d],\"re\":%.17g,"
                          "\"im\":%.17g}\n",
                          t, c, g.freq(idx[0]), g.freq(idx[1]), (g.d == 3) ? g.freq(idx[2]) : 0,
                          v.real(), v.imag());
            out << buf;
        }
}

namespace detail {
#pragma pack(push, 1)
struct FieldHeader {
    char magic[4];       // "VNSF"
    std::uint32_t version;
    std::uint32_t d;
    std::uint32_t N;
    double L;
    std::uint32_t ncomp;
    std::uint8_t pad[36];
};
struct ParticleHeader {
    char magic[4];       // "VNSP"
    std::uint32_t version;
    std::uint32_t d;
    std::uint64_t count;
    std::uint8_t pad[44];
};
#pragma pack(pop)
static_assert(sizeof(FieldHeader) == 64);
static_assert(sizeof(ParticleHeader) == 64);
} // namespace detail

inline void write_field_binary(const std::string& path, const SpectralField& z) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot open for writing: " + path);
    detail::FieldHeader h{};
    std::memcpy(h.magic, "VNSF", 4);
    h.version = 1;
    h.d = static_cast<std::uint32_t>(z.grid.d);
    h.N = static_cast<std::uint32_t>(z.grid.N);
    h.L = z.grid.L;
    h.ncomp = static_cast<std::uint32_t>(z.ncomp);
    out.write(reinterpret_cast<const char*>(&h), sizeof h);
    out.write(reinterpret_cast<const char*>(z.coeff.data()),
              static_cast<std::streamsize>(z.coeff.size() * sizeof(cd)));
}

inline SpectralField read_field_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open: " + path);
    detail::FieldHeader h{};
    in.read(reinterpret_cast<char*>(&h), sizeof h);
    if (!in || std::memcmp(h.magic, "VNSF", 4) != 0 || h.version != 1)
        throw data_error("bad field snapshot header in " + path);
    SpectralField z(Grid(static_cast<int>(h.d), static_cast<int>(h.N), h.L),
                    static_cast<int>(h.ncomp));
    in.read(reinterpret_cast<char*>(z.coeff.data()),
            static_cast<std::streamsize>(z.coeff.size() * sizeof(cd)));
    if (!in) throw data_error("truncated field snapshot: " + path);
    return z;
}

// ---------------------------------------------------------------------------
// Particle snapshots: NDJSON lines {i, x[], v[], w} and "VNSP" binary dumps.

inline void write_particles_ndjson(const std::string& path, const ParticleEnsemble& ens) {
    std::ofstream out(path);
    if (!out) throw config_error("cannot open for writing: " + path);
    char buf[384];
    for (std::size_t i = 0; i < ens.n; ++i) {
        const double* X = ens.pos(i);
        const double* V = ens.vel(i);
        if (ens.d == 2)
            std::snprintf(buf, sizeof buf,
                          "{\"i\":%zu,\"x\":[%.17g,%.17g],\"v\":[%.17g,%.17g],\"w\":%.17g}\n", i,
                          X[0], X[1], V[0], V[1], ens.w[i]);
        else
            std::snprintf(buf, sizeof buf,
                          "{\"i\":%zu,\"x\":[%.17g,%.17g,%.17g],\"v\":[%.17g,%.17g,%.17g],"
                          "\"w\":%.17g}\n",
                          i, X[0], X[1], X[2], V[0], V[1], V[2], ens.w[i]);
        out << buf;
    }
}

inline void write_particles_binary(const std::string& path, const ParticleEnsemble& ens) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot open for writing: " + path);
    detail::ParticleHeader h{};
    std::memcpy(h.magic, "VNSP", 4);
    h.version = 1;
    h.d = static_cast<std::uint32_t>(ens.d);
    h.count = ens.n;
    out.write(reinterpret_cast<const char*>(&h), sizeof h);
    auto dump = [&](const std::vector<double>& v) {
        out.write(reinterpret_cast<const char*>(v.data()),
                  static_cast<std::streamsize>(v.size() * sizeof(double)));
    };
    dump(ens.x);
    dump(ens.v);
    dump(ens.w);
}

inline void read_particles_binary(const std::string& path, ParticleEnsemble& ens) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open: " + path);
    detail::ParticleHeader h{};
    in.read(reinterpret_cast<char*>(&h), sizeof h);
    if (!in || std::memcmp(h.magic, "VNSP", 4) != 0 || h.version != 1)
        throw data_error("bad particle snapshot header in " + path);
    ens.d = static_cast<int>(h.d);
    ens.n = h.count;
    ens.x.resize(ens.n * ens.d);
    ens.v.resize(ens.n * ens.d);
    ens.w.resize(ens.n);
    auto slurp = [&](std::vector<double>& v) {
        in.read(reinterpret_cast<char*>(v.data()),
                static_cast<std::streamsize>(v.size() * sizeof(double)));
    };
    slurp(ens.x);
    slurp(ens.v);
    slurp(ens.w);
    if (!in) throw data_error("truncated particle snapshot: " + path);
}

inline void ensure_directory(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw config_error("cannot create output directory: " + dir);
}

} // namespace vns
