#include <catch2/catch_amalgamated.hpp>

#include <json.hpp>

#include "helpers.hpp"
#include "vns/io.hpp"

using namespace vns;

TEST_CASE("csv: records survive a write/read round trip exactly", "[io]") {
    std::vector<EnergyRecord> recs(3);
    Rng rng(43);
    for (auto& r : recs) {
        r.t = rng.uniform();
        r.E0 = rng.normal();
        r.E1 = rng.normal();
        r.D1 = rng.normal();
        r.besov_neg32 = rng.uniform();
        r.script_E = rng.normal() * 1e-17;
    }
    const std::string path = "/tmp/vns_test_records.csv";
    write_records_csv(path, recs);
    const CsvTable table = read_csv(path);
    REQUIRE(table.columns.size() == 21);
    CHECK(table.columns.front() == "t");
    CHECK(table.columns.back() == "besov_neg_dhalf");
    REQUIRE(table.rows.size() == 3);
    // %.17g round-trips doubles exactly
    const auto e0 = table.column("E0");
    const auto se = table.column("script_E");
    for (std::size_t i = 0; i < recs.size(); ++i) {
        CHECK(e0[i] == recs[i].E0);
        CHECK(se[i] == recs[i].script_E);
    }
    CHECK_THROWS_AS(table.column("no_such"), usage_error);
}

TEST_CASE("field snapshots: binary round trip and header validation", "[io]") {
    Grid g(2, 16, 5.0);
    Rng rng(47);
    PhysicalField s(g, 2);
    for (auto& v : s.data) v = rng.normal();
    SpectralField z = to_spectral(s);
    const std::string path = "/tmp/vns_test_field.vnsf";
    write_field_binary(path, z);
    SpectralField back = read_field_binary(path);
    CHECK(back.grid == g);
    CHECK(back.ncomp == 2);
    REQUIRE(back.coeff.size() == z.coeff.size());
    for (std::size_t i = 0; i < z.coeff.size(); ++i) CHECK(back.coeff[i] == z.coeff[i]);

    // corrupt the magic
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.write("XXXX", 4);
    }
    CHECK_THROWS_AS(read_field_binary(path), data_error);
}

TEST_CASE("field snapshots: ndjson lines carry the k-index triple", "[io]") {
    Grid g(2, 16, 2.0 * M_PI);
    SpectralField z = single_mode(g, {3, -2, 0}, 1.0);
    const std::string path = "/tmp/vns_test_field.ndjson";
    write_field_ndjson(path, z, 1.25);
    std::ifstream in(path);
    std::string line;
    int lines = 0;
    bool saw_positive = false;
    while (std::getline(in, line)) {
        ++lines;
        const auto j = nlohmann::json::parse(line);
        CHECK(j["t"] == 1.25);
        CHECK(j["component"] == 0);
        REQUIRE(j["k"].size() == 3);
        CHECK(j["k"][2] == 0);
        if (j["k"][0] == 3) {
            CHECK(j["k"][1] == -2);
            CHECK(std::abs(j["re"].get<double>() - 0.5) < 1e-14);
            saw_positive = true;
        }
    }
    CHECK(lines == 2); // sparse dump: one conjugate pair
    CHECK(saw_positive);
}

TEST_CASE("particle snapshots: binary and ndjson round trips", "[io]") {
    Grid g(3, 16, 8.0);
    KineticProfile p;
    p.family = ProfileFamily::maxwellian;
    p.d = 3;
    p.mass = 1.0;
    p.sigma_x = 0.6;
    p.sigma_v = 0.5;
    p.center = {4.0, 4.0, 4.0};
    ParticleEnsemble ens = sample_initial(p, g, 1200, 53, SamplingMethod::monte_carlo);
    const std::string path = "/tmp/vns_test_particles.vnsp";
    write_particles_binary(path, ens);
    ParticleEnsemble back;
    read_particles_binary(path, back);
    CHECK(back.n == ens.n);
    CHECK(back.d == 3);
    CHECK(back.x == ens.x);
    CHECK(back.v == ens.v);
    CHECK(back.w == ens.w);

    write_particles_ndjson("/tmp/vns_test_particles.ndjson", ens);
    std::ifstream in("/tmp/vns_test_particles.ndjson");
    std::string line;
    std::getline(in, line);
    const auto j = nlohmann::json::parse(line);
    CHECK(j["i"] == 0);
    REQUIRE(j["x"].size() == 3);
    CHECK(j["x"][0].get<double>() == ens.x[0]);
    CHECK(j["w"].get<double>() == ens.w[0]);
}
