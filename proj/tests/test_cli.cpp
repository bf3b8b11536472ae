// End-to-end tests of the command-line tool: spawns the built binary against
// temporary spec files and inspects exit codes, CSV output, and reports.

#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "spinprop/io.hpp"
#include "spinprop/spinprop.hpp"

#ifndef SPINPROP_CLI_PATH
#error "SPINPROP_CLI_PATH must point at the built CLI binary"
#endif

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string temp_dir() {
    static std::string dir = [] {
        char tmpl[] = "/tmp/spinprop_cli_XXXXXX";
        const char* d = mkdtemp(tmpl);
        REQUIRE(d != nullptr);
        return std::string(d);
    }();
    return dir;
}

std::string write_file(const std::string& name, const std::string& content) {
    const std::string path = temp_dir() + "/" + name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

RunResult run_cli(const std::string& args, const std::string& env_prefix = "") {
    static int counter = 0;
    const std::string out_path = temp_dir() + "/stdout" + std::to_string(counter);
    const std::string err_path = temp_dir() + "/stderr" + std::to_string(counter);
    ++counter;
    const std::string cmd = env_prefix + std::string(SPINPROP_CLI_PATH) + " " + args + " > " +
                            out_path + " 2> " + err_path;
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out_path);
    r.err = slurp(err_path);
    return r;
}

std::map<std::string, std::string> parse_report(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto space = line.find(' ');
        if (space != std::string::npos) kv[line.substr(0, space)] = line.substr(space + 1);
    }
    return kv;
}

// parse a propagator CSV into (times, matrices)
std::pair<std::vector<double>, std::vector<spinprop::Matrix>> parse_csv(const std::string& text,
                                                                        int dim) {
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);  // header
    std::vector<double> times;
    std::vector<spinprop::Matrix> mats;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(ls, cell, ',')) vals.push_back(std::stod(cell));
        REQUIRE(static_cast<int>(vals.size()) == 1 + 2 * dim * dim);
        times.push_back(vals[0]);
        spinprop::Matrix u(dim, dim);
        int idx = 1;
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) {
                u(i, j) = spinprop::Complex(vals[idx], vals[idx + 1]);
                idx += 2;
            }
        mats.push_back(u);
    }
    return {times, mats};
}

const std::string kConeSpec =
    "kind cone\n"
    "duration 6.283185307179586\n"
    "theta0 1.0471975511965976\n"
    "omega0 1.0\n"
    "r 0.5\n";

}  // namespace

TEST_CASE("validate: passing curve exits 0") {
    const std::string spec = write_file("cone.spec", kConeSpec);
    const RunResult r = run_cli("validate " + spec);
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("result pass") != std::string::npos);
}

TEST_CASE("validate: origin crossing exits 1 and reports the time") {
    const std::string spec = write_file("origin.spec",
                                        "kind sampled\n"
                                        "data\n"
                                        "0.0 1.0 0.5 0.0\n"
                                        "0.5 0.5 0.5 0.5\n"
                                        "1.0 0.0 0.5 1.0\n"
                                        "1.5 0.5 0.5 1.5\n"
                                        "2.0 1.0 0.5 2.0\n");
    const RunResult r = run_cli("validate " + spec);
    CHECK(r.exit_code == 1);
    CHECK(r.out.find("violation") != std::string::npos);
    CHECK(r.out.find("result fail") != std::string::npos);
}

TEST_CASE("validate: malformed file exits 2 with a diagnostic") {
    const std::string spec = write_file("broken.spec", "kind cone\nkind cone\n");
    const RunResult r = run_cli("validate " + spec);
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("parse error") != std::string::npos);

    const RunResult missing = run_cli("validate " + temp_dir() + "/does_not_exist.spec");
    CHECK(missing.exit_code == 2);
}

TEST_CASE("evolve: auto method on a designed curve classifies lemma2 and matches the oracle") {
    using namespace spinprop;
    // design via the CLI, then evolve the emitted file twice
    const std::string dir_spec = write_file("direction.spec",
                                            "kind cone\n"
                                            "duration 6.283185307179586\n"
                                            "theta0 1.0471975511965976\n"
                                            "omega0 1.0\n"
                                            "r 1.0\n");
    const std::string designed = temp_dir() + "/designed.spec";
    const std::string design_report = temp_dir() + "/design_report.txt";
    const RunResult d = run_cli("design " + dir_spec + " --nu0 1.0 --out " + designed +
                                " --report " + design_report);
    CHECK(d.exit_code == 0);
    const auto drep = parse_report(slurp(design_report));
    CHECK(std::stod(drep.at("residual_rms")) <= 1e-9);

    const std::string auto_csv = temp_dir() + "/auto.csv";
    const std::string auto_rep = temp_dir() + "/auto_report.txt";
    const RunResult e1 = run_cli("evolve " + designed + " --j 1 --method auto --grid 9 --out " +
                                 auto_csv + " --report " + auto_rep);
    CHECK(e1.exit_code == 0);
    const auto rep1 = parse_report(slurp(auto_rep));
    CHECK(rep1.at("method") == "lemma2");
    CHECK(rep1.at("classification") == "lemma2");
    CHECK(std::abs(std::stod(rep1.at("nu0_fit")) - 1.0) <= 1e-7);

    const std::string oracle_csv = temp_dir() + "/oracle.csv";
    const RunResult e2 = run_cli("evolve " + designed + " --j 1 --method oracle --grid 9 --steps " +
                                 "100000 --out " + oracle_csv + " --report /dev/null");
    CHECK(e2.exit_code == 0);

    const auto [t1, m1] = parse_csv(slurp(auto_csv), 3);
    const auto [t2, m2] = parse_csv(slurp(oracle_csv), 3);
    REQUIRE(t1.size() == 9);
    REQUIRE(t2.size() == 9);
    double worst = 0.0;
    for (std::size_t k = 0; k < m1.size(); ++k) worst = std::max(worst, max_norm(m1[k] - m2[k]));
    CHECK(worst <= 1e-6);
}

TEST_CASE("evolve: lemma1 on an unsolvable curve fails without --force") {
    const std::string spec = write_file("fast.spec",
                                        "kind cone\n"
                                        "duration 6.283185307179586\n"
                                        "theta0 1.0471975511965976\n"
                                        "omega0 1.0\n"
                                        "r 2.0\n");
    const RunResult r = run_cli("evolve " + spec + " --j 1/2 --method lemma1 --out /dev/null");
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("--force") != std::string::npos);

    const std::string forced_rep = temp_dir() + "/forced_report.txt";
    const RunResult f = run_cli("evolve " + spec +
                                " --j 1/2 --method lemma1 --force --out /dev/null --report " +
                                forced_rep);
    CHECK(f.exit_code == 0);
    const auto rep = parse_report(slurp(forced_rep));
    // the reported Schroedinger residual exposes the breakage
    CHECK(std::stod(rep.at("schrodinger_residual")) > 1e-3);
}

TEST_CASE("evolve: stationary spin-1/2 matches the closed form") {
    using namespace spinprop;
    const std::string spec = write_file("still.spec",
                                        "kind stationary\n"
                                        "duration 4.0\n"
                                        "theta0 0.7\n"
                                        "phi0 0.3\n"
                                        "r 1.2\n");
    const std::string csv = temp_dir() + "/still.csv";
    const std::string rep_path = temp_dir() + "/still_report.txt";
    const RunResult r = run_cli("evolve " + spec + " --j 1/2 --method auto --grid 5 --out " + csv +
                                " --report " + rep_path);
    CHECK(r.exit_code == 0);
    CHECK(parse_report(slurp(rep_path)).at("method") == "adiabatic");

    const SpinRep rep = build_generators(0.5);
    const Matrix h = dipole_hamiltonian(rep, {1.2, 0.7, 0.3});
    const auto [times, mats] = parse_csv(slurp(csv), 2);
    for (std::size_t k = 0; k < times.size(); ++k)
        CHECK(max_norm(mats[k] - hermitian_exp(h, times[k])) <= 1e-9);
}

TEST_CASE("evolve: adiabatic report carries the coupling diagnostic") {
    const std::string spec = write_file("fastcone.spec", kConeSpec);
    const std::string rep_path = temp_dir() + "/adia_report.txt";
    const RunResult r = run_cli("evolve " + spec + " --j 1 --method adiabatic --out /dev/null" +
                                " --report " + rep_path);
    CHECK(r.exit_code == 0);
    const auto rep = parse_report(slurp(rep_path));
    CHECK(rep.count("adiabaticity_max_offdiag") == 1);
    CHECK(std::stod(rep.at("adiabaticity_max_offdiag")) > 0.1);  // this cone is not adiabatic
}

TEST_CASE("evolve: rejects a bad spin with exit 2") {
    const std::string spec = write_file("cone2.spec", kConeSpec);
    const RunResult r = run_cli("evolve " + spec + " --j 0.37 --out /dev/null");
    CHECK(r.exit_code == 2);
}

TEST_CASE("design: planar direction gives r = nu0 * omega and round trips") {
    const std::string dir_spec = write_file("planar.spec",
                                            "kind planar_wobble\n"
                                            "duration 6.283185307179586\n"
                                            "omega0 1.0\n"
                                            "amp 0.3\n"
                                            "freq 1.0\n"
                                            "r 1.0\n");
    const std::string designed = temp_dir() + "/planar_designed.spec";
    const RunResult d =
        run_cli("design " + dir_spec + " --nu0 1.0 --out " + designed + " --report /dev/null");
    CHECK(d.exit_code == 0);

    // emitted magnitude equals nu0 * phidot of the direction
    const spinprop::SpecFile spec = spinprop::load_spec(designed);
    const spinprop::FieldCurve curve = spinprop::curve_from_spec(spec);
    for (double t : {0.9, 3.3})
        CHECK(curve.at(t).r ==
              doctest::Approx(1.0 + 0.3 * std::cos(t)).epsilon(1e-6));

    const std::string rep_path = temp_dir() + "/planar_evolve_report.txt";
    const RunResult e = run_cli("evolve " + designed + " --j 1/2 --method auto --out /dev/null" +
                                " --report " + rep_path);
    CHECK(e.exit_code == 0);
    const auto rep = parse_report(slurp(rep_path));
    CHECK(rep.at("classification") == "lemma2");
    CHECK(std::abs(std::stod(rep.at("nu0_fit")) - 1.0) <= 1e-7);
}

TEST_CASE("design: stationary direction is rejected with exit 1") {
    const std::string spec = write_file("still_dir.spec",
                                        "kind stationary\n"
                                        "duration 2.0\n"
                                        "theta0 0.5\n"
                                        "r 1.0\n");
    const RunResult r = run_cli("design " + spec + " --nu0 1.0 --out /dev/null");
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("omega == 0") != std::string::npos);
}

TEST_CASE("phases: closed cone loop emits the solid-angle value and per-level table") {
    const std::string spec = write_file("cone3.spec", kConeSpec);
    const std::string csv = temp_dir() + "/phases.csv";
    const std::string rep_path = temp_dir() + "/phases_report.txt";
    const RunResult r =
        run_cli("phases " + spec + " --j 3/2 --out " + csv + " --report " + rep_path);
    CHECK(r.exit_code == 0);
    const auto rep = parse_report(slurp(rep_path));
    const double gamma = std::stod(rep.at("gamma_T"));
    CHECK(gamma == doctest::Approx(-spinprop::kTwoPi * 0.5).epsilon(1e-8));
    const double delta = std::stod(rep.at("delta_T"));
    CHECK(delta == doctest::Approx(-spinprop::kTwoPi * 0.5).epsilon(1e-10));
    const double alpha = std::stod(rep.at("alpha_T"));
    CHECK(std::stod(rep.at("alpha_n(1.5)")) == doctest::Approx(1.5 * alpha).epsilon(1e-12));
    CHECK(std::stod(rep.at("alpha_n(-0.5)")) == doctest::Approx(-0.5 * alpha).epsilon(1e-12));

    // CSV header and first row
    std::istringstream in(slurp(csv));
    std::string header, first;
    std::getline(in, header);
    std::getline(in, first);
    CHECK(header == "t,delta,gamma,alpha");
    CHECK(first.substr(0, 2) == "0,");
}

TEST_CASE("holonomy: flat potential and abelian loop") {
    const std::string pot = write_file("zero.pot", "kind zero\ndim 2\n");
    const std::string loop = write_file("loop.path",
                                        "kind circle\n"
                                        "radius 1.0\n"
                                        "duration 6.283185307179586\n");
    const RunResult r = run_cli("holonomy --potential " + pot + " --path " + loop +
                                " --j 3/2 --wilson --report /dev/null");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("re_tr,im_tr\n4,0") != std::string::npos);

    const std::string circ = write_file("circ.pot", "kind abelian_circulation\nc 0.7\n");
    const std::string rep_path = temp_dir() + "/wilson_report.txt";
    const RunResult w = run_cli("holonomy --potential " + circ + " --path " + loop +
                                " --j 1/2 --wilson --report " + rep_path);
    CHECK(w.exit_code == 0);
    const auto rep = parse_report(slurp(rep_path));
    CHECK(std::stod(rep.at("wilson_re")) ==
          doctest::Approx(2.0 * std::cos(spinprop::kPi * 0.7)).epsilon(1e-7));
}

TEST_CASE("holonomy: constant potential over a segment matches the closed form") {
    using namespace spinprop;
    const std::string pot = write_file("const.pot",
                                       "kind constant\n"
                                       "dim 2\n"
                                       "a1 0.4 -0.2\n"
                                       "a2 0.1 0.7\n"
                                       "a3 -0.3 0.5\n");
    const std::string seg = write_file("seg.path",
                                       "kind segment\n"
                                       "from -0.5 1.0\n"
                                       "to 1.5 0.2\n"
                                       "duration 1.0\n");
    const std::string csv = temp_dir() + "/holo.csv";
    const RunResult r = run_cli("holonomy --potential " + pot + " --path " + seg +
                                " --j 1/2 --out " + csv + " --report /dev/null");
    CHECK(r.exit_code == 0);
    const SpinRep rep = build_generators(0.5);
    Matrix3X a(3, 2);
    a << 0.4, -0.2, 0.1, 0.7, -0.3, 0.5;
    Eigen::Vector2d dx(2.0, -0.8);
    const Eigen::Vector3d rtot = a * dx;
    const Matrix expect =
        hermitian_exp(rtot[0] * rep.J1 + rtot[1] * rep.J2 + rtot[2] * rep.J3, 1.0);
    const auto [times, mats] = parse_csv(slurp(csv), 2);
    REQUIRE(mats.size() == 1);
    CHECK(max_norm(mats[0] - expect) <= 1e-9);
}

TEST_CASE("holonomy: --wilson on an open path exits 1") {
    const std::string pot = write_file("hh.pot", "kind hedgehog\nkappa 0.5\n");
    const std::string seg = write_file("open.path",
                                       "kind segment\n"
                                       "from 1 0 0\n"
                                       "to 0 1 0\n"
                                       "duration 1.0\n");
    const RunResult r = run_cli("holonomy --potential " + pot + " --path " + seg +
                                " --j 1/2 --wilson --out /dev/null --report /dev/null");
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("not closed") != std::string::npos);
}

TEST_CASE("identical inputs produce byte-identical CSV") {
    const std::string spec = write_file("cone4.spec", kConeSpec);
    const std::string c1 = temp_dir() + "/det1.csv";
    const std::string c2 = temp_dir() + "/det2.csv";
    CHECK(run_cli("evolve " + spec + " --j 1 --method oracle --steps 5000 --grid 7 --out " + c1 +
                  " --report /dev/null")
              .exit_code == 0);
    CHECK(run_cli("evolve " + spec + " --j 1 --method oracle --steps 5000 --grid 7 --out " + c2 +
                  " --report /dev/null")
              .exit_code == 0);
    const std::string a = slurp(c1), b = slurp(c2);
    CHECK(a == b);
    CHECK_FALSE(a.empty());

    // design output is a data file too
    const std::string d1 = temp_dir() + "/det1.spec";
    const std::string d2 = temp_dir() + "/det2.spec";
    CHECK(run_cli("design " + spec + " --nu0 0.5 --samples 501 --out " + d1 +
                  " --report /dev/null")
              .exit_code == 0);
    CHECK(run_cli("design " + spec + " --nu0 0.5 --samples 501 --out " + d2 +
                  " --report /dev/null")
              .exit_code == 0);
    CHECK(slurp(d1) == slurp(d2));
}

TEST_CASE("evolve: large-omega method runs and reports its error indicator") {
    const std::string spec = write_file("fastplanar.spec",
                                        "kind planar_circle\n"
                                        "duration 3.0\n"
                                        "omega0 4.0\n"
                                        "r 0.1\n");
    const std::string csv = temp_dir() + "/lo.csv";
    const RunResult r = run_cli("evolve " + spec + " --j 1/2 --method large-omega --grid 5" +
                                " --out " + csv + " --report /dev/null");
    CHECK(r.exit_code == 0);
    const std::string oracle_csv = temp_dir() + "/lo_oracle.csv";
    CHECK(run_cli("evolve " + spec + " --j 1/2 --method oracle --grid 5 --steps 50000 --out " +
                  oracle_csv + " --report /dev/null")
              .exit_code == 0);
    const auto [t1, m1] = parse_csv(slurp(csv), 2);
    const auto [t2, m2] = parse_csv(slurp(oracle_csv), 2);
    double worst = 0.0;
    for (std::size_t k = 0; k < m1.size(); ++k)
        worst = std::max(worst, spinprop::max_norm(m1[k] - m2[k]));
    CHECK(worst < 0.2);  // nu = r/omega = 0.025, error O(nu ell)
    CHECK(worst > 1e-8);
}

TEST_CASE("usage errors exit 2") {
    CHECK(run_cli("evolve").exit_code == 2);
    CHECK(run_cli("frobnicate x").exit_code == 2);
    const std::string spec = write_file("cone5.spec", kConeSpec);
    CHECK(run_cli("evolve " + spec + " --j 1 --method warp --out /dev/null").exit_code == 2);
}

TEST_CASE("SPINPROP_LEMMA_TOL loosens the classification threshold") {
    // magnitude off the solvable value by one part in 1e4: rejected at the
    // default tolerance, accepted when the env var loosens it
    const std::string spec = write_file("near.spec",
                                        "kind cone\n"
                                        "duration 6.283185307179586\n"
                                        "theta0 1.0471975511965976\n"
                                        "omega0 1.0\n"
                                        "r 0.50005\n");
    const RunResult strict = run_cli("evolve " + spec + " --j 1/2 --method lemma1 --out /dev/null");
    CHECK(strict.exit_code == 1);
    const RunResult loose = run_cli("evolve " + spec + " --j 1/2 --method lemma1 --out /dev/null",
                                    "SPINPROP_LEMMA_TOL=1e-2 ");
    CHECK(loose.exit_code == 0);
}
