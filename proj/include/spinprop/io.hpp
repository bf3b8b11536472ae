// io.hpp — structured-text spec files for curves, paths and potentials,
// plus CSV/report writers for the command-line tool.
//
// Spec files are line-oriented `key value` pairs; `#` starts a comment. A
// `data` line switches to whitespace-delimited numeric rows (inline sampled
// tables); `table <path>` references an external table file instead. Angles
// are radians throughout and numbers round-trip at full double precision.

#pragma once

#include <Eigen/Dense>

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "spinprop/field_curve.hpp"
#include "spinprop/holonomy.hpp"
#include "spinprop/su2.hpp"

namespace spinprop {

class SpecParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Full-precision decimal formatting ("%.17g"), locale-independent enough for
// byte-identical reruns.
inline std::string fmt17(double x) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return std::string(buf);
}

// FNV-1a over a byte string; used to echo input files into reports.
inline std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

// Accepts "3/2", "1.5", "2".
inline double parse_half_integer(const std::string& text) {
    double j = 0.0;
    const auto slash = text.find('/');
    try {
        if (slash != std::string::npos) {
            const double num = std::stod(text.substr(0, slash));
            const double den = std::stod(text.substr(slash + 1));
            j = num / den;
        } else {
            j = std::stod(text);
        }
    } catch (const std::exception&) {
        throw SpecParseError("cannot parse spin value '" + text + "'");
    }
    if (!is_half_integer_spin(j))
        throw SpecParseError("spin must be a non-negative half-integer, got '" + text + "'");
    return j;
}

struct SpecFile {
    std::map<std::string, std::string> keys;
    std::vector<std::vector<double>> rows;  // inline `data` section
    std::string raw;                        // original bytes (for hashing)
    std::string source;                     // file name for diagnostics

    bool has(const std::string& k) const { return keys.count(k) > 0; }

    const std::string& get(const std::string& k) const {
        const auto it = keys.find(k);
        if (it == keys.end())
            throw SpecParseError(source + ": missing required key '" + k + "'");
        return it->second;
    }

    double get_num(const std::string& k) const {
        try {
            return std::stod(get(k));
        } catch (const SpecParseError&) {
            throw;
        } catch (const std::exception&) {
            throw SpecParseError(source + ": key '" + k + "' is not a number");
        }
    }

    double get_num_or(const std::string& k, double fallback) const {
        return has(k) ? get_num(k) : fallback;
    }
};

inline SpecFile parse_spec_text(const std::string& text, const std::string& source) {
    SpecFile spec;
    spec.raw = text;
    spec.source = source;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    bool in_data = false;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        if (in_data) {
            std::vector<double> row;
            double v;
            while (ls >> v) row.push_back(v);
            if (!ls.eof()) {
                ls.clear();
                std::string trailing;
                if (ls >> trailing)
                    throw SpecParseError(source + ":" + std::to_string(lineno) +
                                         ": non-numeric entry in data row");
            }
            if (!row.empty()) {
                if (!spec.rows.empty() && spec.rows.back().size() != row.size())
                    throw SpecParseError(source + ":" + std::to_string(lineno) +
                                         ": ragged data row");
                spec.rows.push_back(std::move(row));
            }
            continue;
        }
        std::string key;
        if (!(ls >> key)) continue;
        if (key == "data") {
            in_data = true;
            continue;
        }
        std::string value;
        std::getline(ls, value);
        const auto b = value.find_first_not_of(" \t\r");
        value = b == std::string::npos ? std::string() : value.substr(b);
        const auto e = value.find_last_not_of(" \t\r");
        if (e != std::string::npos) value = value.substr(0, e + 1);
        if (spec.keys.count(key))
            throw SpecParseError(source + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
        spec.keys[key] = value;
    }
    return spec;
}

inline SpecFile load_spec(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SpecParseError("cannot open spec file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_spec_text(buf.str(), path);
}

namespace detail {

inline std::vector<std::vector<double>> load_table_rows(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SpecParseError("cannot open table file '" + path + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::vector<double> row;
        double v;
        while (ls >> v) row.push_back(v);
        if (!ls.eof() && ls.fail()) {
            std::string word;
            ls.clear();
            if (ls >> word)
                throw SpecParseError(path + ":" + std::to_string(lineno) + ": non-numeric entry");
        }
        if (!row.empty()) {
            if (!rows.empty() && rows.back().size() != row.size())
                throw SpecParseError(path + ":" + std::to_string(lineno) + ": ragged row");
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

inline std::string sibling_path(const std::string& spec_path, const std::string& name) {
    if (!name.empty() && name.front() == '/') return name;
    const auto slash = spec_path.find_last_of('/');
    return slash == std::string::npos ? name : spec_path.substr(0, slash + 1) + name;
}

}  // namespace detail

// --- curve specs -----------------------------------------------------------

// Build a FieldCurve from a parsed spec. Recognized kinds: cone,
// planar_circle, planar_wobble, meridian, spiral, stationary, sampled.
// Presets take either a constant magnitude `r` or, where r* has a closed
// form (cone / planar / meridian), a `nu0` selecting r = r* + nu0 omega.
inline FieldCurve curve_from_spec(const SpecFile& spec) {
    const std::string kind = spec.get("kind");
    const int samples = static_cast<int>(spec.get_num_or("sample_count", kDefaultCurveSamples));
    const double phi0 = spec.get_num_or("phi0", 0.0);

    if (kind == "sampled") {
        std::vector<std::vector<double>> rows = spec.rows;
        if (spec.has("table"))
            rows = detail::load_table_rows(detail::sibling_path(spec.source, spec.get("table")));
        if (rows.empty()) throw SpecParseError(spec.source + ": sampled curve has no data rows");
        if (rows.front().size() != 4)
            throw SpecParseError(spec.source + ": sampled curve rows must be (t, r, theta, phi)");
        std::vector<double> t, r, th, ph;
        for (const auto& row : rows) {
            t.push_back(row[0]);
            r.push_back(row[1]);
            th.push_back(row[2]);
            ph.push_back(row[3]);
        }
        try {
            return FieldCurve::sampled(std::move(t), std::move(r), std::move(th), std::move(ph));
        } catch (const std::invalid_argument& e) {
            throw SpecParseError(spec.source + ": " + e.what());
        }
    }

    const double T = spec.get_num("duration");
    if (kind == "cone") {
        const double theta0 = spec.get_num("theta0");
        const double omega0 = spec.get_num("omega0");
        if (spec.has("nu0"))
            return FieldCurve::cone_solvable(theta0, omega0, spec.get_num("nu0"), T, phi0, samples);
        return FieldCurve::cone(theta0, omega0, spec.get_num("r"), T, phi0, samples);
    }
    if (kind == "planar_circle") {
        const double omega0 = spec.get_num("omega0");
        if (spec.has("nu0"))
            return FieldCurve::planar_wobble_proportional(omega0, 0.0, 1.0, spec.get_num("nu0"), T,
                                                          phi0, samples);
        return FieldCurve::planar_circle(omega0, spec.get_num("r"), T, phi0, samples);
    }
    if (kind == "planar_wobble") {
        const double omega0 = spec.get_num("omega0");
        const double amp = spec.get_num("amp");
        const double freq = spec.get_num("freq");
        if (spec.has("nu0"))
            return FieldCurve::planar_wobble_proportional(omega0, amp, freq, spec.get_num("nu0"), T,
                                                          phi0, samples);
        return FieldCurve::planar_wobble(omega0, amp, freq, spec.get_num("r"), T, phi0, samples);
    }
    if (kind == "meridian") {
        const double th0 = spec.get_num("theta_start");
        const double rate = spec.get_num("theta_rate");
        if (spec.has("nu0"))
            return FieldCurve::from_functions(
                "meridian", T, samples, [th0, rate, phi0, nu0 = spec.get_num("nu0")](double t) {
                    return CurveState{nu0 * std::abs(rate), th0 + rate * t, phi0, 0.0, rate, 0.0};
                });
        return FieldCurve::meridian(th0, rate, spec.get_num("r"), T, phi0, samples);
    }
    if (kind == "spiral")
        return FieldCurve::spiral(spec.get_num("theta0"), spec.get_num("theta_rate"),
                                  spec.get_num("omega0"), spec.get_num("r"), T, phi0, samples);
    if (kind == "stationary")
        return FieldCurve::stationary(spec.get_num("theta0"), phi0, spec.get_num("r"), T, samples);

    throw SpecParseError(spec.source + ": unknown curve kind '" + kind + "'");
}

inline FieldCurve load_curve(const std::string& path, std::string* hash = nullptr) {
    const SpecFile spec = load_spec(path);
    if (hash) *hash = fnv1a_hex(spec.raw);
    return curve_from_spec(spec);
}

// Write a curve as a self-contained sampled spec (inline data section).
inline void write_sampled_curve_spec(std::ostream& out, const FieldCurve& curve, int samples,
                                     const std::string& comment = {}) {
    if (!comment.empty()) out << "# " << comment << "\n";
    int n = std::max(samples, 3);
    out << "kind sampled\n";
    out << "sample_count " << n << "\n";
    out << "data\n";
    const double h = curve.duration() / (n - 1);
    for (int k = 0; k < n; ++k) {
        const double t = k * h;
        const CurveState s = curve.at(t);
        out << fmt17(t) << " " << fmt17(s.r) << " " << fmt17(s.theta) << " " << fmt17(s.phi)
            << "\n";
    }
}

// --- path and potential specs ------------------------------------------------

inline BasePath path_from_spec(const SpecFile& spec) {
    const std::string kind = spec.get("kind");
    if (kind == "segment") {
        std::istringstream fa(spec.get("from")), fb(spec.get("to"));
        std::vector<double> a, b;
        double v;
        while (fa >> v) a.push_back(v);
        while (fb >> v) b.push_back(v);
        if (a.empty() || a.size() != b.size())
            throw SpecParseError(spec.source + ": segment endpoints malformed");
        Eigen::VectorXd va = Eigen::Map<Eigen::VectorXd>(a.data(), a.size());
        Eigen::VectorXd vb = Eigen::Map<Eigen::VectorXd>(b.data(), b.size());
        return BasePath::segment(va, vb, spec.get_num("duration"));
    }
    if (kind == "circle") {
        Eigen::Vector2d c(spec.get_num_or("center_x", 0.0), spec.get_num_or("center_y", 0.0));
        return BasePath::circle(c, spec.get_num("radius"), spec.get_num("duration"),
                                static_cast<int>(spec.get_num_or("turns", 1)));
    }
    if (kind == "rectangle") {
        Eigen::Vector2d c(spec.get_num_or("corner_x", 0.0), spec.get_num_or("corner_y", 0.0));
        return BasePath::rectangle(c, spec.get_num("width"), spec.get_num("height"),
                                   spec.get_num("duration"));
    }
    if (kind == "sampled") {
        std::vector<std::vector<double>> rows = spec.rows;
        if (spec.has("table"))
            rows = detail::load_table_rows(detail::sibling_path(spec.source, spec.get("table")));
        if (rows.size() < 3 || rows.front().size() < 2)
            throw SpecParseError(spec.source + ": sampled path needs rows (t, x1..xD)");
        std::vector<double> t;
        std::vector<Eigen::VectorXd> pts;
        const int dim = static_cast<int>(rows.front().size()) - 1;
        for (const auto& row : rows) {
            t.push_back(row[0]);
            Eigen::VectorXd p(dim);
            for (int d = 0; d < dim; ++d) p[d] = row[d + 1];
            pts.push_back(std::move(p));
        }
        return BasePath::sampled(t, pts);
    }
    throw SpecParseError(spec.source + ": unknown path kind '" + kind + "'");
}

inline GaugePotential potential_from_spec(const SpecFile& spec) {
    const std::string kind = spec.get("kind");
    if (kind == "constant") {
        const int dim = static_cast<int>(spec.get_num("dim"));
        Matrix3X a(3, dim);
        const char* row_keys[3] = {"a1", "a2", "a3"};
        for (int i = 0; i < 3; ++i) {
            std::istringstream rs(spec.get(row_keys[i]));
            for (int d = 0; d < dim; ++d)
                if (!(rs >> a(i, d)))
                    throw SpecParseError(spec.source + ": row '" + row_keys[i] + "' needs " +
                                         std::to_string(dim) + " entries");
        }
        return GaugePotential::constant(a);
    }
    if (kind == "zero") return GaugePotential::zero(static_cast<int>(spec.get_num("dim")));
    if (kind == "abelian_circulation")
        return GaugePotential::abelian_circulation(spec.get_num("c"));
    if (kind == "hedgehog") return GaugePotential::hedgehog(spec.get_num("kappa"));
    throw SpecParseError(spec.source + ": unknown potential kind '" + kind + "'");
}

// --- CSV and report output ----------------------------------------------------

// Rows (t, Re U_11, Im U_11, ...) in row-major matrix order.
inline void write_propagator_csv(std::ostream& out, const std::vector<double>& times,
                                 const std::vector<Matrix>& mats) {
    if (times.size() != mats.size())
        throw std::invalid_argument("write_propagator_csv: size mismatch");
    if (times.empty()) return;
    const int d = static_cast<int>(mats.front().rows());
    out << "t";
    for (int i = 1; i <= d; ++i)
        for (int j = 1; j <= d; ++j)
            out << ",re_U_" << i << "_" << j << ",im_U_" << i << "_" << j;
    out << "\n";
    for (std::size_t k = 0; k < times.size(); ++k) {
        out << fmt17(times[k]);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                out << "," << fmt17(mats[k](i, j).real()) << "," << fmt17(mats[k](i, j).imag());
        out << "\n";
    }
}

inline void write_phases_csv(std::ostream& out, const std::vector<double>& times,
                             const std::vector<PhaseRecord>& recs) {
    out << "t,delta,gamma,alpha\n";
    for (std::size_t k = 0; k < times.size(); ++k)
        out << fmt17(times[k]) << "," << fmt17(recs[k].delta) << "," << fmt17(recs[k].gamma)
            << "," << fmt17(recs[k].alpha) << "\n";
}

// Ordered key/value report.
struct RunReport {
    std::vector<std::pair<std::string, std::string>> fields;
    void add(const std::string& key, const std::string& value) { fields.emplace_back(key, value); }
    void add(const std::string& key, double value) { fields.emplace_back(key, fmt17(value)); }
    void write(std::ostream& out) const {
        for (const auto& [k, v] : fields) out << k << " " << v << "\n";
    }
};

}  // namespace spinprop
