// spinprop — command-line front end: curve validation, propagator
// computation, exactly solvable field design, phase evaluation, and holonomy.
//
// Exit codes: 0 success, 1 domain failure (validation, classification,
// geometry), 2 usage or spec-file parse failure.

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "spinprop/spinprop.hpp"

namespace {

using namespace spinprop;

double lemma_threshold_from_env() {
    if (const char* env = std::getenv("SPINPROP_LEMMA_TOL")) {
        try {
            const double v = std::stod(env);
            if (v > 0.0) return v;
        } catch (const std::exception&) {
        }
        std::cerr << "warning: ignoring malformed SPINPROP_LEMMA_TOL\n";
    }
    return kDefaultLemmaRelTol;
}

// Stream sink: file when a path is given, otherwise the fallback stream.
class OutputSink {
public:
    OutputSink(const std::string& path, std::ostream& fallback) {
        if (!path.empty() && path != "-") {
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
            if (!*file_) throw std::invalid_argument("cannot open output file '" + path + "'");
            out_ = file_.get();
        } else {
            out_ = &fallback;
        }
    }
    std::ostream& stream() { return *out_; }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* out_ = nullptr;
};

std::vector<double> time_grid(double duration, int points) {
    points = std::max(points, 2);
    std::vector<double> t(points);
    for (int k = 0; k < points; ++k) t[k] = duration * k / (points - 1);
    return t;
}

struct EvolveArgs {
    std::string curve_path;
    std::string j_text = "1/2";
    std::string method = "auto";
    int grid = 101;
    long steps = 100000;
    std::string out, report_path;
    bool force = false;
    double nu0_override = std::numeric_limits<double>::quiet_NaN();
};

int run_validate(const std::string& curve_path, double theta_margin) {
    std::string hash;
    const FieldCurve curve = load_curve(curve_path, &hash);
    const ValidationReport vr = validate(curve, theta_margin);
    std::cout << "input_hash " << hash << "\n";
    std::cout << "kind " << curve.kind() << "\n";
    std::cout << "min_r " << fmt17(vr.min_r) << " at_t " << fmt17(vr.t_min_r) << "\n";
    std::cout << "max_theta " << fmt17(vr.max_theta) << " at_t " << fmt17(vr.t_max_theta) << "\n";
    for (const auto& issue : vr.issues)
        std::cout << "violation \"" << issue.what << "\" t " << fmt17(issue.t) << " value "
                  << fmt17(issue.value) << "\n";
    std::cout << "result " << (vr.passed ? "pass" : "fail") << "\n";
    return vr.passed ? 0 : 1;
}

int run_evolve(const EvolveArgs& args) {
    const auto t_start = std::chrono::steady_clock::now();
    const double j = parse_half_integer(args.j_text);
    const SpinRep rep = build_generators(j);
    std::string hash;
    const FieldCurve curve = load_curve(args.curve_path, &hash);

    const ValidationReport vr = validate(curve);
    if (!vr.passed) {
        std::cerr << "error: curve fails validation";
        for (const auto& issue : vr.issues)
            std::cerr << "; " << issue.what << " at t=" << fmt17(issue.t);
        std::cerr << "\n";
        return 1;
    }

    const double rel_tol = lemma_threshold_from_env();
    Kinematics kin(curve);
    const SolvabilityReport sr = solvability_check(kin, rel_tol);

    std::string method = args.method;
    if (method == "auto") {
        switch (sr.classification) {
            case Solvability::adiabatic_exact: method = "adiabatic"; break;
            case Solvability::lemma1: method = "lemma1"; break;
            case Solvability::lemma2: method = "lemma2"; break;
            case Solvability::none: method = "oracle"; break;
        }
    }

    ExactOptions eopt;
    eopt.rel_threshold = rel_tol;
    eopt.force = args.force;
    const double nu0 = std::isnan(args.nu0_override) ? sr.nu0 : args.nu0_override;
    const std::vector<double> times = time_grid(curve.duration(), args.grid);

    std::vector<Matrix> mats;
    mats.reserve(times.size());
    Method method_tag = Method::oracle;
    double max_defect = 0.0;
    if (method == "oracle") {
        oracle::IntegrationConfig cfg;
        cfg.steps = args.steps;
        mats = oracle::integrate_snapshots(dipole_sampler(rep, curve), curve.duration(), times, cfg);
        method_tag = Method::oracle;
    } else {
        for (double t : times) {
            Propagator p;
            if (method == "adiabatic") {
                p = adiabatic_u0(rep, kin, t);
            } else if (method == "lemma1") {
                p = exact_u_lemma1(rep, kin, t, eopt);
            } else if (method == "lemma2") {
                p = exact_u_lemma2(rep, kin, nu0, t, eopt);
            } else if (method == "large-omega" || method == "large_omega") {
                p = approx_large_omega(rep, kin, t);
            } else {
                throw std::invalid_argument("unknown method '" + method + "'");
            }
            method_tag = p.method;
            mats.push_back(std::move(p.U));
        }
    }
    for (const Matrix& u : mats) max_defect = std::max(max_defect, unitarity_defect(u));

    OutputSink csv(args.out, std::cout);
    write_propagator_csv(csv.stream(), times, mats);

    RunReport rr;
    rr.add("input_hash", hash);
    rr.add("kind", curve.kind());
    rr.add("j", args.j_text);
    rr.add("method", method_name(method_tag));
    rr.add("classification", solvability_name(sr.classification));
    rr.add("nu0_fit", sr.nu0);
    rr.add("residual", sr.residual);
    rr.add("lemma1_residual", sr.lemma1_residual);
    rr.add("threshold", sr.threshold);
    rr.add("sigma0", kin.sigma0());
    rr.add("ell_T", kin.total_ell());
    const PhaseRecord ph = kin.phases(curve.duration());
    rr.add("delta_T", ph.delta);
    rr.add("gamma_T", ph.gamma);
    rr.add("alpha_T", ph.alpha);
    rr.add("max_unitarity_defect", max_defect);
    if (method == "adiabatic")
        rr.add("adiabaticity_max_offdiag", max_offdiagonal_coupling(rep, kin));
    if (method == "oracle") rr.add("oracle_steps", static_cast<double>(args.steps));
    if (args.force && (method == "lemma1" || method == "lemma2")) {
        // when forced past a failed classification, show the damage
        MatrixSampler hs = dipole_sampler(rep, curve);
        MatrixSampler us = [&](double t) {
            return method == "lemma1" ? exact_u_lemma1(rep, kin, t, eopt).U
                                      : exact_u_lemma2(rep, kin, nu0, t, eopt).U;
        };
        double worst = 0.0;
        for (int k = 1; k <= 7; ++k) {
            const double t = curve.duration() * k / 8.0;
            worst = std::max(worst, schrodinger_residual(hs, us, t, 1e-4 * curve.duration()));
        }
        rr.add("schrodinger_residual", worst);
    }
    const auto t_end = std::chrono::steady_clock::now();
    rr.add("wall_ms", std::chrono::duration<double, std::milli>(t_end - t_start).count());

    OutputSink rep_out(args.report_path, std::cerr);
    rr.write(rep_out.stream());
    return 0;
}

int run_design(const std::string& dir_path, double nu0, const std::string& out,
               const std::string& report_path, int samples) {
    const auto t_start = std::chrono::steady_clock::now();
    std::string hash;
    const FieldCurve direction = load_curve(dir_path, &hash);
    DesignReport dr;
    KinematicsOptions kopt;
    kopt.grid_points = samples;
    const FieldCurve designed = design_field(direction, nu0, &dr, kopt);

    OutputSink spec_out(out, std::cout);
    write_sampled_curve_spec(spec_out.stream(), designed, samples,
                             "designed from " + direction.kind() + ", nu0 = " + fmt17(nu0));

    RunReport rr;
    rr.add("input_hash", hash);
    rr.add("direction_kind", direction.kind());
    rr.add("nu0", dr.nu0);
    rr.add("min_r", dr.min_r);
    rr.add("residual_rms", dr.residual_rms);
    for (const auto& [a, b] : dr.nonpositive_r_intervals)
        rr.add("nonpositive_r_interval", fmt17(a) + " " + fmt17(b));
    if (!dr.note.empty()) rr.add("note", dr.note);
    const auto t_end = std::chrono::steady_clock::now();
    rr.add("wall_ms", std::chrono::duration<double, std::milli>(t_end - t_start).count());
    OutputSink rep_out(report_path, std::cerr);
    rr.write(rep_out.stream());
    return dr.nonpositive_r_intervals.empty() ? 0 : 1;
}

int run_phases(const std::string& curve_path, const std::string& j_text, int grid,
               const std::string& out, const std::string& report_path) {
    const double j = parse_half_integer(j_text);
    std::string hash;
    const FieldCurve curve = load_curve(curve_path, &hash);
    Kinematics kin(curve);

    const std::vector<double> times = time_grid(curve.duration(), grid);
    std::vector<PhaseRecord> recs;
    recs.reserve(times.size());
    for (double t : times) recs.push_back(kin.phases(t));

    OutputSink csv(out, std::cout);
    write_phases_csv(csv.stream(), times, recs);

    RunReport rr;
    rr.add("input_hash", hash);
    rr.add("kind", curve.kind());
    rr.add("j", j_text);
    const PhaseRecord ph = recs.back();
    rr.add("delta_T", ph.delta);
    rr.add("gamma_T", ph.gamma);
    rr.add("alpha_T", ph.alpha);
    // per-level phases alpha_n = n alpha
    const SpinRep rep = build_generators(j);
    for (int k = rep.dim - 1; k >= 0; --k) {
        const double n = -rep.j + k;
        std::ostringstream key;
        key << "alpha_n(" << fmt17(n) << ")";
        rr.add(key.str(), n * ph.alpha);
    }
    OutputSink rep_out(report_path, std::cerr);
    rr.write(rep_out.stream());
    return 0;
}

int run_holonomy(const std::string& pot_path, const std::string& path_path,
                 const std::string& j_text, bool wilson, int samples, long steps,
                 const std::string& out, const std::string& report_path) {
    const auto t_start = std::chrono::steady_clock::now();
    const double j = parse_half_integer(j_text);
    const SpinRep rep = build_generators(j);
    const SpecFile pot_spec = load_spec(pot_path);
    const SpecFile path_spec = load_spec(path_path);
    const GaugePotential pot = potential_from_spec(pot_spec);
    const BasePath path = path_from_spec(path_spec);

    TransportOptions topt;
    topt.curve_samples = samples;
    topt.oracle_steps = steps;
    topt.lemma_rel_threshold = lemma_threshold_from_env();

    RunReport rr;
    rr.add("potential_hash", fnv1a_hex(pot_spec.raw));
    rr.add("path_hash", fnv1a_hex(path_spec.raw));
    rr.add("potential_kind", pot.kind());
    rr.add("path_kind", path.kind());
    rr.add("j", j_text);
    rr.add("closed", path.closed() ? "true" : "false");

    OutputSink sink(out, std::cout);
    if (wilson) {
        const Complex tr = wilson_loop(rep, pot, path, topt);
        sink.stream() << "re_tr,im_tr\n" << fmt17(tr.real()) << "," << fmt17(tr.imag()) << "\n";
        rr.add("wilson_re", tr.real());
        rr.add("wilson_im", tr.imag());
    } else {
        const Propagator g = transport(rep, pot, path, topt);
        write_propagator_csv(sink.stream(), {path.duration()}, {g.U});
        rr.add("engine", g.meta.note);
        if (std::isfinite(g.meta.residual)) rr.add("residual", g.meta.residual);
        rr.add("unitarity_defect", g.meta.unitarity_defect);
    }
    const auto t_end = std::chrono::steady_clock::now();
    rr.add("wall_ms", std::chrono::duration<double, std::milli>(t_end - t_start).count());
    OutputSink rep_out(report_path, std::cerr);
    rr.write(rep_out.stream());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spin-j dipole propagators: exact, adiabatic, and brute-force"};
    app.require_subcommand(1);

    // validate
    std::string v_curve;
    double v_margin = 1e-6;
    auto* v = app.add_subcommand("validate", "check a curve spec against the patch assumptions");
    v->add_option("curve", v_curve, "curve spec file")->required();
    v->add_option("--theta-margin", v_margin, "exclusion margin below theta = pi");

    // evolve
    EvolveArgs ev;
    auto* e = app.add_subcommand("evolve", "compute U(t) on a time grid");
    e->add_option("curve", ev.curve_path, "curve spec file")->required();
    e->add_option("--j", ev.j_text, "spin (e.g. 1/2, 1, 3/2)")->required();
    e->add_option("--method", ev.method, "auto|adiabatic|lemma1|lemma2|oracle|large-omega")
        ->check(CLI::IsMember({"auto", "adiabatic", "lemma1", "lemma2", "oracle", "large-omega",
                               "large_omega"}));
    e->add_option("--grid", ev.grid, "output time grid points");
    e->add_option("--steps", ev.steps, "oracle integration steps");
    e->add_option("--out", ev.out, "CSV output file (default stdout)");
    e->add_option("--report", ev.report_path, "report file (default stderr)");
    e->add_flag("--force", ev.force, "run lemma methods despite failed classification");
    e->add_option("--nu0", ev.nu0_override, "override the fitted nu0 for lemma2");

    // design
    std::string d_dir, d_out, d_report;
    double d_nu0 = 0.0;
    int d_samples = 8001;
    auto* d = app.add_subcommand("design", "build r = r* + nu0*omega over a direction curve");
    d->add_option("direction", d_dir, "direction spec file (magnitude ignored)")->required();
    d->add_option("--nu0", d_nu0, "constant nu0")->required();
    d->add_option("--out", d_out, "output curve spec file (default stdout)");
    d->add_option("--report", d_report, "report file (default stderr)");
    d->add_option("--samples", d_samples, "rows in the emitted table");

    // phases
    std::string p_curve, p_j = "1/2", p_out, p_report;
    int p_grid = 101;
    auto* p = app.add_subcommand("phases", "dynamical/geometric/total phase angles");
    p->add_option("curve", p_curve, "curve spec file")->required();
    p->add_option("--j", p_j, "spin")->required();
    p->add_option("--grid", p_grid, "output time grid points");
    p->add_option("--out", p_out, "CSV output file (default stdout)");
    p->add_option("--report", p_report, "report file (default stderr)");

    // holonomy
    std::string h_pot, h_path, h_j = "1/2", h_out, h_report;
    bool h_wilson = false;
    int h_samples = 4001;
    long h_steps = 200000;
    auto* h = app.add_subcommand("holonomy", "parallel transport along a base path");
    h->add_option("--potential", h_pot, "gauge potential spec file")->required();
    h->add_option("--path", h_path, "base path spec file")->required();
    h->add_option("--j", h_j, "spin")->required();
    h->add_flag("--wilson", h_wilson, "emit the Wilson loop trace (closed paths only)");
    h->add_option("--samples", h_samples, "pullback sampling grid");
    h->add_option("--steps", h_steps, "oracle steps for the fallback engine");
    h->add_option("--out", h_out, "output file (default stdout)");
    h->add_option("--report", h_report, "report file (default stderr)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (v->parsed()) return run_validate(v_curve, v_margin);
        if (e->parsed()) return run_evolve(ev);
        if (d->parsed()) return run_design(d_dir, d_nu0, d_out, d_report, d_samples);
        if (p->parsed()) return run_phases(p_curve, p_j, p_grid, p_out, p_report);
        if (h->parsed()) return run_holonomy(h_pot, h_path, h_j, h_wilson, h_samples, h_steps,
                                             h_out, h_report);
    } catch (const spinprop::SpecParseError& ex) {
        std::cerr << "parse error: " << ex.what() << "\n";
        return 2;
    } catch (const spinprop::SolvabilityError& ex) {
        std::cerr << "error: " << ex.what() << " (rerun with --force to evaluate anyway)\n";
        return 1;
    } catch (const std::invalid_argument& ex) {
        std::cerr << "usage error: " << ex.what() << "\n";
        return 2;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}
