#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "haptofv/config.hpp"
#include "haptofv/csv.hpp"

using namespace haptofv;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::MessageMatches;

namespace {

namespace fs = std::filesystem;

// Scratch directory under the test working directory, removed on destruction.
struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::path("unit_io_tmp") / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const {
        return (path / name).string();
    }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_CASE("empty config yields documented defaults") {
    const RunConfig cfg = parse_config_text("");
    CHECK(cfg.grid.dim == 1);
    CHECK(cfg.grid.lo0 == -5.0);
    CHECK(cfg.grid.hi0 == 5.0);
    CHECK(cfg.grid.n0 == 512);
    CHECK(cfg.model.alpha == 1.0);
    CHECK(cfg.model.D == 1.0);
    CHECK(cfg.model.R0 == 1.0);
    CHECK(cfg.model.gamma == 1.0);
    CHECK(cfg.model.delta == 0.0);
    CHECK(cfg.model.law.kind == SaturationLaw::Kind::quadratic);
    CHECK(cfg.ic.kind == IcSpec::Kind::homogeneous);
    CHECK(cfg.scheme.cfl_safety == 0.45);
    CHECK(cfg.scheme.t_end == 1.0);
    CHECK(cfg.scheme.max_dt == 0.05);
    CHECK(cfg.output.stride == 1);
    CHECK(cfg.output.dir == "out");
    CHECK(cfg.output.tail_tolerance == 1e-10);
    CHECK(cfg.sweep.deltas == std::vector<double>{1e-1, 1e-2, 1e-3, 1e-4});
    CHECK(cfg.sweep.epsilons == std::vector<double>{1e-1, 1e-2, 1e-3, 1e-4});
    CHECK(cfg.sweep.mode == SweepSpec::Mode::smooth_bump);
    CHECK(cfg.sweep.phi_cut == 1e-3);
    CHECK(cfg.refine.levels == 4);
    CHECK(cfg.seed == 0);
    // frozen FNV-1a offset basis for the empty string
    CHECK(cfg.config_hash == 14695981039346656037ULL);
    CHECK(hash_hex(cfg.config_hash) == "cbf29ce484222325");
}

TEST_CASE("every key round-trips through the parser") {
    const std::string text =
        "# full exercise\n"
        "grid.dim = 2\n"
        "grid.lo0 = -3\n"
        "grid.hi0 = 3\n"
        "grid.n0 = 24\n"
        "grid.lo1 = -1\n"
        "grid.hi1 = 2\n"
        "grid.n1 = 12\n"
        "model.alpha = 0.7\n"
        "model.D = 1.3\n"
        "model.R0 = 0.9\n"
        "model.gamma = 0.4\n"
        "model.delta = 0.02\n"
        "model.law = window\n"
        "model.phi_min = 0.05\n"
        "model.phi_th = 0.5\n"
        "ic.kind = gaussian_bump\n"
        "ic.amplitude = 0.6   # trailing comment\n"
        "ic.center = 0.25\n"
        "ic.center1 = -0.5\n"
        "ic.width = 0.4\n"
        "ic.phi_background = 0.3\n"
        "scheme.cfl_safety = 0.4\n"
        "scheme.t_end = 0.125\n"
        "scheme.max_dt = 0.004\n"
        "scheme.negativity_tolerance = 1e-12\n"
        "output.stride = 5\n"
        "output.dir = somewhere/else\n"
        "output.tail_tolerance = 1e-08\n"
        "output.snapshots = 0.05, 0.1\n"
        "sweep.deltas = 0.5, 0.05, 0.005\n"
        "sweep.epsilons = 0.2, 0.02, 0.002, 0\n"
        "sweep.mode = seeded_noise\n"
        "sweep.phi_cut = 0.01\n"
        "refine.levels = 5\n"
        "seed = 12345\n";
    const RunConfig cfg = parse_config_text(text, "inline");
    CHECK(cfg.grid.dim == 2);
    CHECK(cfg.grid.lo0 == -3.0);
    CHECK(cfg.grid.hi0 == 3.0);
    CHECK(cfg.grid.n0 == 24);
    CHECK(cfg.grid.lo1 == -1.0);
    CHECK(cfg.grid.hi1 == 2.0);
    CHECK(cfg.grid.n1 == 12);
    CHECK(cfg.model.alpha == 0.7);
    CHECK(cfg.model.D == 1.3);
    CHECK(cfg.model.R0 == 0.9);
    CHECK(cfg.model.gamma == 0.4);
    CHECK(cfg.model.delta == 0.02);
    CHECK(cfg.model.law.kind == SaturationLaw::Kind::window);
    CHECK(cfg.model.law.phi_min == 0.05);
    CHECK(cfg.model.law.phi_th == 0.5);
    CHECK(cfg.ic.kind == IcSpec::Kind::gaussian_bump);
    CHECK(cfg.ic.amplitude == 0.6);
    CHECK(cfg.ic.center == 0.25);
    CHECK(cfg.ic.center1 == -0.5);
    CHECK(cfg.ic.width == 0.4);
    CHECK(cfg.ic.phi_background == 0.3);
    CHECK(cfg.scheme.cfl_safety == 0.4);
    CHECK(cfg.scheme.t_end == 0.125);
    CHECK(cfg.scheme.max_dt == 0.004);
    CHECK(cfg.scheme.negativity_tolerance == 1e-12);
    CHECK(cfg.output.stride == 5);
    CHECK(cfg.output.dir == "somewhere/else");
    CHECK(cfg.output.tail_tolerance == 1e-8);
    CHECK(cfg.output.snapshots == std::vector<double>{0.05, 0.1});
    CHECK(cfg.sweep.deltas == std::vector<double>{0.5, 0.05, 0.005});
    CHECK(cfg.sweep.epsilons == std::vector<double>{0.2, 0.02, 0.002, 0.0});
    CHECK(cfg.sweep.mode == SweepSpec::Mode::seeded_noise);
    CHECK(cfg.sweep.phi_cut == 0.01);
    CHECK(cfg.refine.levels == 5);
    CHECK(cfg.seed == 12345);
    CHECK(cfg.config_hash == fnv1a_hash(text));
}

TEST_CASE("parser rejects malformed or inconsistent configs") {
    CHECK_THROWS_MATCHES(parse_config_text("grid.n0 = 1\ngrid.n0 = 2\n"),
                         ConfigError, MessageMatches(ContainsSubstring("duplicate key")));
    CHECK_THROWS_MATCHES(parse_config_text("grid.cells = 4\n"), ConfigError,
                         MessageMatches(ContainsSubstring("unknown key `grid.cells`")));
    CHECK_THROWS_MATCHES(parse_config_text("model.D = fast\n"), ConfigError,
                         MessageMatches(ContainsSubstring("not a number")));
    CHECK_THROWS_MATCHES(parse_config_text("just some words\n"), ConfigError,
                         MessageMatches(ContainsSubstring("expected `key = value`")));
    CHECK_THROWS_MATCHES(parse_config_text("grid.dim = 3\n"), ConfigError,
                         MessageMatches(ContainsSubstring("grid.dim must be 1 or 2")));
    CHECK_THROWS_MATCHES(parse_config_text("grid.n0 = 1\n"), ConfigError,
                         MessageMatches(ContainsSubstring("at least 2 cells")));
    CHECK_THROWS_MATCHES(parse_config_text("grid.lo0 = 2\ngrid.hi0 = -2\n"),
                         ConfigError, MessageMatches(ContainsSubstring("lo < hi")));
    CHECK_THROWS_MATCHES(parse_config_text("scheme.t_end = 0\n"), ConfigError,
                         MessageMatches(ContainsSubstring("t_end must be positive")));
    CHECK_THROWS_MATCHES(parse_config_text("scheme.cfl_safety = 1.5\n"),
                         ConfigError, MessageMatches(ContainsSubstring("(0, 1]")));
    CHECK_THROWS_MATCHES(parse_config_text("output.stride = 0\n"), ConfigError,
                         MessageMatches(ContainsSubstring("stride")));
    CHECK_THROWS_MATCHES(parse_config_text("refine.levels = 2\n"), ConfigError,
                         MessageMatches(ContainsSubstring("refine.levels must be >= 3")));
    CHECK_THROWS_MATCHES(parse_config_text("ic.kind = from_file\n"),
                         ConfigError, MessageMatches(ContainsSubstring("ic.path required")));
    CHECK_THROWS_MATCHES(parse_config_text("ic.kind = blob\n"), ConfigError,
                         MessageMatches(ContainsSubstring("unknown ic.kind")));
    CHECK_THROWS_MATCHES(parse_config_text("model.law = cubic\n"), ConfigError,
                         MessageMatches(ContainsSubstring("quadratic or window")));
    CHECK_THROWS_MATCHES(parse_config_text("sweep.mode = chaotic\n"),
                         ConfigError, MessageMatches(ContainsSubstring("unknown sweep.mode")));
    CHECK_THROWS_MATCHES(parse_config_text("seed = -4\n"), ConfigError,
                         MessageMatches(ContainsSubstring("not an unsigned integer")));
    // model-layer validation runs on the parsed parameters
    CHECK_THROWS_AS(parse_config_text("model.D = -1\n"), std::invalid_argument);
    CHECK_THROWS_AS(
        parse_config_text(
            "model.law = window\nmodel.phi_min = 0.9\nmodel.phi_th = 0.5\n"),
        std::invalid_argument);
}

TEST_CASE("config file loading reports the path when missing") {
    CHECK_THROWS_MATCHES(parse_config_file("does/not/exist.cfg"), ConfigError,
                         MessageMatches(ContainsSubstring("does/not/exist.cfg")));
    TempDir tmp("cfgfile");
    {
        std::ofstream out(tmp.file("a.cfg"), std::ios::binary);
        out << "grid.n0 = 32\nseed = 7\n";
    }
    const RunConfig cfg = parse_config_file(tmp.file("a.cfg"));
    CHECK(cfg.grid.n0 == 32);
    CHECK(cfg.seed == 7);
}

TEST_CASE("shortest round-trip double formatting is frozen") {
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(0.0) == "0");
    CHECK(format_double(-2.0) == "-2");
    CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
    // a full round trip through text restores the exact bits
    for (double v : {0.1 + 0.2, 1e300, 5e-324, -0.0, 123456.789}) {
        CHECK(parse_csv_double(format_double(v), "roundtrip") == v);
    }
}

TEST_CASE("field CSVs round-trip bitwise and are byte-deterministic") {
    TempDir tmp("fields");
    const Grid g = Grid::line(-1.0, 2.0, 7);
    GridFunction psi(g), phi(g);
    for (index_t c = 0; c < g.cell_count(); ++c) {
        psi[c] = std::sin(0.37 * static_cast<double>(c) + 0.1) * 0.43 + 0.5;
        phi[c] = 1.0 / (3.0 + static_cast<double>(c));
    }
    const Metadata meta{{"config", "deadbeefdeadbeef"}, {"seed", "9"}};
    write_fields_csv(tmp.file("f.csv"), psi, phi, meta);
    const std::string first = slurp(tmp.file("f.csv"));
    CHECK_THAT(first, ContainsSubstring("# config = deadbeefdeadbeef"));
    CHECK_THAT(first, ContainsSubstring("# seed = 9"));
    CHECK_THAT(first, ContainsSubstring("x,psi,phi"));

    auto [psi2, phi2] = read_fields_csv(tmp.file("f.csv"), g);
    for (index_t c = 0; c < g.cell_count(); ++c) {
        CHECK(psi2[c] == psi[c]);
        CHECK(phi2[c] == phi[c]);
    }

    write_fields_csv(tmp.file("g.csv"), psi, phi, meta);
    CHECK(slurp(tmp.file("g.csv")) == first);
}

TEST_CASE("2D field CSVs carry both coordinates") {
    TempDir tmp("fields2d");
    const Grid g = Grid::box(0.0, 1.0, 3, -1.0, 1.0, 2);
    GridFunction psi(g, 0.25), phi(g, 0.5);
    psi[g.flatten(2, 1)] = 0.75;
    write_fields_csv(tmp.file("f.csv"), psi, phi, {});
    CHECK_THAT(slurp(tmp.file("f.csv")), ContainsSubstring("x,y,psi,phi"));
    auto [psi2, phi2] = read_fields_csv(tmp.file("f.csv"), g);
    CHECK(psi2[g.flatten(2, 1)] == 0.75);
    CHECK(psi2[g.flatten(0, 0)] == 0.25);
    CHECK(phi2[g.flatten(0, 0)] == 0.5);
}

TEST_CASE("field CSV reader rejects shape mismatches") {
    TempDir tmp("fieldbad");
    const Grid g = Grid::line(0.0, 1.0, 4);
    write_fields_csv(tmp.file("f.csv"), GridFunction(g, 0.1),
                     GridFunction(g, 0.2), {});
    CHECK_THROWS_MATCHES(
        read_fields_csv(tmp.file("f.csv"), Grid::line(0.0, 1.0, 5)),
        std::runtime_error, MessageMatches(ContainsSubstring("row")));
    CHECK_THROWS_MATCHES(
        read_fields_csv(tmp.file("f.csv"), Grid::box(0.0, 1.0, 2, 0.0, 1.0, 2)),
        std::runtime_error, MessageMatches(ContainsSubstring("column")));
    CHECK_THROWS_AS(read_fields_csv(tmp.file("missing.csv"), g),
                    std::runtime_error);
    {
        std::ofstream out(tmp.file("junk.csv"), std::ios::binary);
        out << "x,psi,phi\n0.1,woof,0.2\n0.2,0.3,0.4\n0.3,0.1,0.2\n"
               "0.4,0.1,0.2\n";
    }
    CHECK_THROWS_MATCHES(read_fields_csv(tmp.file("junk.csv"), g),
                         std::runtime_error, MessageMatches(ContainsSubstring("woof")));
}

TEST_CASE("diagnostics CSVs round-trip every column bitwise") {
    TempDir tmp("diag");
    DiagnosticsRecord rec;
    for (int k = 0; k < 3; ++k) {
        DiagnosticsRow row;
        const double t = 0.125 * k;
        row.time = t;
        row.mass = 1.0 / (k + 3.0);
        row.l2 = 0.1 + k;
        row.l3 = 0.2 + k;
        row.second_moment = 0.3 + k;
        row.entropy_abs = 0.4 + k;
        row.energy = -0.5 + k;
        row.dissipation = 0.6 + k;
        row.grad_sqrt_phi = 0.7 + k;
        row.w_grad_psi = 0.8 + k;
        row.psi_grad_sqrt_phi = 0.9 + k;
        row.full_w_grad_psi = 1.1 + k;
        row.delta_dissipation = 1.2 + k;
        row.dt_sqrt_phi_l3 = 1.3 + k;
        row.compact_phi_grad_psi = 1.4 + k;
        row.compact_psi_grad_sqrt_phi = 1.5 + k;
        row.phi_max = 2.0 / (k + 3.0);
        row.phi_min = 1.0 / (k + 7.0);
        row.psi_min = 0.0;
        row.boundary_tail = 1e-300 * (k + 1);
        row.floored_cells = 41 + k;
        rec.append(row);
    }
    write_diagnostics_csv(tmp.file("d.csv"), rec, {{"config", "00"}});
    const DiagnosticsRecord back = read_diagnostics_csv(tmp.file("d.csv"));
    REQUIRE(back.size() == rec.size());
    for (std::size_t k = 0; k < rec.size(); ++k) {
        const auto a = numeric_fields(rec.rows[k]);
        const auto b = numeric_fields(back.rows[k]);
        for (std::size_t j = 0; j < a.size(); ++j) CHECK(a[j] == b[j]);
        CHECK(back.rows[k].floored_cells == rec.rows[k].floored_cells);
    }

    const std::string text = slurp(tmp.file("d.csv"));
    std::string header = text.substr(text.find("time,"));
    header = header.substr(0, header.find('\n'));
    std::string expected;
    for (const char* name : diagnostics_columns()) {
        if (!expected.empty()) expected += ',';
        expected += name;
    }
    CHECK(header == expected);
}

TEST_CASE("diagnostics CSV reader insists on the exact header") {
    TempDir tmp("diagbad");
    {
        std::ofstream out(tmp.file("d.csv"), std::ios::binary);
        out << "time,mass\n0,1\n";
    }
    CHECK_THROWS_MATCHES(read_diagnostics_csv(tmp.file("d.csv")),
                         std::runtime_error,
                         MessageMatches(ContainsSubstring("diagnostics columns")));
}

TEST_CASE("envelope CSVs list one row per check with metadata") {
    TempDir tmp("env");
    EnvelopeReport rep;
    rep.t_end = 0.5;
    rep.samples = 11;
    rep.eps_env = 1e-8;
    rep.total_floored = 3;
    rep.max_boundary_tail = 1e-12;
    rep.checks.push_back({"mass_gronwall", true, 0.25, 0.1, 1.0, 1.25});
    rep.checks.push_back({"sup_l2", false, -0.5, 0.3, 1.5, 1.0});
    write_envelopes_csv(tmp.file("e.csv"), rep, {{"config", "11"}});
    const std::string text = slurp(tmp.file("e.csv"));
    CHECK_THAT(text, ContainsSubstring("# samples = 11"));
    CHECK_THAT(text, ContainsSubstring("# t_end = 0.5"));
    CHECK_THAT(text, ContainsSubstring("# total_floored = 3"));
    CHECK_THAT(text,
               ContainsSubstring("check,pass,worst_margin,worst_time,"
                                 "observed,envelope"));
    CHECK_THAT(text, ContainsSubstring("mass_gronwall,1,0.25,0.1,1,1.25"));
    CHECK_THAT(text, ContainsSubstring("sup_l2,0,-0.5,0.3,1.5,1"));
}
