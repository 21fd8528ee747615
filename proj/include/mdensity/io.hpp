#pragma once

/**
 * @file io.hpp
 * @brief CSV and JSON readers/writers for Fourier grids, density grids,
 *        sample batches and Hecke eigenvalue records.
 *
 * CSV files start with one `# key=value, key=value` metadata line followed by
 * a column header. Every number is written with 17 significant digits, so a
 * write/read cycle reproduces the doubles exactly.
 */

#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mdensity/errors.hpp"
#include "mdensity/forms.hpp"
#include "mdensity/grids.hpp"
#include "mdensity/primes.hpp"
#include "mdensity/sampler.hpp"

namespace mdensity::io {

using json = nlohmann::json;

/// Shortest round-trip-safe rendering used in every output file.
inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string join_primes(const PrimeSet& ps) {
    std::string s;
    for (auto p : ps) s += (s.empty() ? "" : ";") + std::to_string(p);
    return s;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& s) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (trim(s.substr(used)).empty()) return v;
    } catch (const std::exception&) {
    }
    throw ValidationError("expected a number, got '" + s + "'");
}

inline std::int64_t parse_int(const std::string& s) {
    try {
        std::size_t used = 0;
        const auto v = std::stoll(s, &used);
        if (trim(s.substr(used)).empty()) return v;
    } catch (const std::exception&) {
    }
    throw ValidationError("expected an integer, got '" + s + "'");
}

inline PrimeSet parse_primes(const std::string& s, const std::string& excluded) {
    std::vector<std::int64_t> ps;
    for (const auto& t : split(s, ';'))
        if (!trim(t).empty()) ps.push_back(parse_int(trim(t)));
    std::optional<std::int64_t> ex;
    if (!trim(excluded).empty() && trim(excluded) != "none") ex = parse_int(trim(excluded));
    return PrimeSet(std::move(ps), ex);
}

inline std::string excluded_text(const PrimeSet& ps) {
    return ps.excluded() ? std::to_string(*ps.excluded()) : "none";
}

/// Parses `# a=1, b=2` into a map.
inline std::map<std::string, std::string> parse_meta(const std::string& line) {
    if (line.empty() || line[0] != '#') throw ValidationError("missing '# key=value' metadata line");
    std::map<std::string, std::string> meta;
    for (const auto& item : split(line.substr(1), ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) continue;
        meta[trim(item.substr(0, eq))] = trim(item.substr(eq + 1));
    }
    return meta;
}

inline const std::string& need(const std::map<std::string, std::string>& meta, const char* key) {
    const auto it = meta.find(key);
    if (it == meta.end()) throw ValidationError(std::string("metadata lacks '") + key + "'");
    return it->second;
}

inline void expect_header(std::istream& in, const std::string& header) {
    std::string line;
    if (!std::getline(in, line) || trim(line) != header)
        throw ValidationError("expected column header '" + header + "'");
}

inline std::vector<std::vector<std::string>> read_rows(std::istream& in, std::size_t columns) {
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto cells = split(trim(line), ',');
        if (cells.size() != columns)
            throw ValidationError("row '" + line + "' has " + std::to_string(cells.size()) +
                                  " columns, expected " + std::to_string(columns));
        rows.push_back(std::move(cells));
    }
    return rows;
}

// ---------------------------------------------------------------- Fourier grids

inline void write_csv(std::ostream& out, const FourierGrid& g) {
    std::string methods;
    for (const auto& m : g.methods) methods += (methods.empty() ? "" : ";") + m;
    out << "# sigma=" << num(g.sigma) << ", primes=" << join_primes(g.primes)
        << ", excluded=" << excluded_text(g.primes) << ", method=" << g.method
        << ", methods=" << methods << ", dx=" << num(g.dx) << "\n";
    out << "x,re,im\n";
    for (std::size_t i = 0; i < g.size(); ++i)
        out << num(g.x(i)) << ',' << num(g.values[i].real()) << ',' << num(g.values[i].imag())
            << '\n';
}

inline FourierGrid read_fourier_csv(std::istream& in) {
    std::string line;
    std::getline(in, line);
    const auto meta = parse_meta(line);
    expect_header(in, "x,re,im");
    FourierGrid g;
    g.sigma = parse_double(need(meta, "sigma"));
    g.primes = parse_primes(need(meta, "primes"), need(meta, "excluded"));
    g.method = need(meta, "method");
    g.methods = split(need(meta, "methods"), ';');
    g.dx = parse_double(need(meta, "dx"));
    for (const auto& r : read_rows(in, 3))
        g.values.emplace_back(parse_double(r[1]), parse_double(r[2]));
    if (g.values.size() % 2 == 0) throw ValidationError("Fourier grid must be symmetric about 0");
    g.half = static_cast<std::ptrdiff_t>(g.values.size() / 2);
    return g;
}

inline json to_json(const FourierGrid& g) {
    json j;
    j["kind"] = "fourier";
    j["sigma"] = g.sigma;
    j["primes"] = std::vector<std::int64_t>(g.primes.begin(), g.primes.end());
    j["excluded"] = g.primes.excluded() ? json(*g.primes.excluded()) : json(nullptr);
    j["method"] = g.method;
    j["methods"] = g.methods;
    j["dx"] = g.dx;
    j["half"] = g.half;
    json re = json::array(), im = json::array();
    for (const auto& v : g.values) {
        re.push_back(v.real());
        im.push_back(v.imag());
    }
    j["re"] = re;
    j["im"] = im;
    return j;
}

inline PrimeSet primes_from_json(const json& j) {
    std::optional<std::int64_t> ex;
    if (j.contains("excluded") && !j["excluded"].is_null()) ex = j["excluded"].get<std::int64_t>();
    return PrimeSet(j.at("primes").get<std::vector<std::int64_t>>(), ex);
}

inline FourierGrid fourier_from_json(const json& j) {
    if (j.value("kind", "") != "fourier") throw ValidationError("JSON is not a Fourier grid");
    FourierGrid g;
    g.sigma = j.at("sigma").get<double>();
    g.primes = primes_from_json(j);
    g.method = j.at("method").get<std::string>();
    g.methods = j.at("methods").get<std::vector<std::string>>();
    g.dx = j.at("dx").get<double>();
    g.half = j.at("half").get<std::ptrdiff_t>();
    const auto re = j.at("re").get<std::vector<double>>();
    const auto im = j.at("im").get<std::vector<double>>();
    if (re.size() != im.size() || re.size() != static_cast<std::size_t>(2 * g.half + 1))
        throw ValidationError("Fourier grid JSON has inconsistent lengths");
    for (std::size_t i = 0; i < re.size(); ++i) g.values.emplace_back(re[i], im[i]);
    return g;
}

// ---------------------------------------------------------------- density grids

/// Negative ringing is written as 0; the in-memory grid keeps raw values.
inline void write_csv(std::ostream& out, const DensityGrid& d) {
    out << "# sigma=" << num(d.sigma) << ", primes=" << join_primes(d.primes)
        << ", excluded=" << excluded_text(d.primes) << ", method=" << d.method
        << ", support=" << num(d.support.lo) << ';' << num(d.support.hi) << ", u0=" << num(d.u0)
        << ", du=" << num(d.du) << ", imag_residue=" << num(d.imag_residue) << "\n";
    out << "u,value\n";
    for (std::size_t i = 0; i < d.size(); ++i)
        out << num(d.u(i)) << ',' << num(std::max(d.values[i], 0.0)) << '\n';
}

inline DensityGrid read_density_csv(std::istream& in) {
    std::string line;
    std::getline(in, line);
    const auto meta = parse_meta(line);
    expect_header(in, "u,value");
    DensityGrid d;
    d.sigma = parse_double(need(meta, "sigma"));
    d.primes = parse_primes(need(meta, "primes"), need(meta, "excluded"));
    d.method = need(meta, "method");
    const auto sup = split(need(meta, "support"), ';');
    if (sup.size() != 2) throw ValidationError("support must be 'lo;hi'");
    d.support = {parse_double(sup[0]), parse_double(sup[1])};
    d.u0 = parse_double(need(meta, "u0"));
    d.du = parse_double(need(meta, "du"));
    d.imag_residue = parse_double(need(meta, "imag_residue"));
    for (const auto& r : read_rows(in, 2)) d.values.push_back(parse_double(r[1]));
    return d;
}

inline json to_json(const DensityGrid& d) {
    json j;
    j["kind"] = "density";
    j["sigma"] = d.sigma;
    j["primes"] = std::vector<std::int64_t>(d.primes.begin(), d.primes.end());
    j["excluded"] = d.primes.excluded() ? json(*d.primes.excluded()) : json(nullptr);
    j["method"] = d.method;
    j["support"] = {d.support.lo, d.support.hi};
    j["u0"] = d.u0;
    j["du"] = d.du;
    j["imag_residue"] = d.imag_residue;
    json v = json::array();
    for (double x : d.values) v.push_back(std::max(x, 0.0));
    j["values"] = v;
    return j;
}

inline DensityGrid density_from_json(const json& j) {
    if (j.value("kind", "") != "density") throw ValidationError("JSON is not a density grid");
    DensityGrid d;
    d.sigma = j.at("sigma").get<double>();
    d.primes = primes_from_json(j);
    d.method = j.at("method").get<std::string>();
    d.support = {j.at("support").at(0).get<double>(), j.at("support").at(1).get<double>()};
    d.u0 = j.at("u0").get<double>();
    d.du = j.at("du").get<double>();
    d.imag_residue = j.at("imag_residue").get<double>();
    d.values = j.at("values").get<std::vector<double>>();
    return d;
}

// ---------------------------------------------------------------- sample batches

inline json batch_metadata(const SampleBatch& b) {
    json j;
    j["kind"] = "samples";
    j["sigma"] = b.sigma;
    j["tau"] = b.tau;
    j["mu"] = b.mu;
    j["seed"] = b.seed;
    j["count"] = b.count;
    j["rng"] = b.rng;
    j["primes"] = std::vector<std::int64_t>(b.primes.begin(), b.primes.end());
    j["excluded"] = b.primes.excluded() ? json(*b.primes.excluded()) : json(nullptr);
    return j;
}

/// CSV rows `index,value` after a one-line JSON metadata comment.
inline void write_csv(std::ostream& out, const SampleBatch& b) {
    out << "# " << batch_metadata(b).dump() << "\n";
    out << "index,value\n";
    for (std::size_t i = 0; i < b.values.size(); ++i) out << i << ',' << num(b.values[i]) << '\n';
}

inline SampleBatch batch_from_metadata(const json& j) {
    if (j.value("kind", "") != "samples") throw ValidationError("JSON is not a sample batch");
    SampleBatch b;
    b.sigma = j.at("sigma").get<double>();
    b.tau = j.at("tau").get<double>();
    b.mu = j.at("mu").get<int>();
    b.seed = j.at("seed").get<std::uint64_t>();
    b.count = j.at("count").get<std::size_t>();
    b.rng = j.at("rng").get<std::string>();
    b.primes = primes_from_json(j);
    return b;
}

inline SampleBatch read_samples_csv(std::istream& in) {
    std::string line;
    std::getline(in, line);
    if (line.rfind("# ", 0) != 0) throw ValidationError("missing JSON metadata line");
    json meta;
    try {
        meta = json::parse(line.substr(2));
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad metadata JSON: ") + e.what());
    }
    auto b = batch_from_metadata(meta);
    expect_header(in, "index,value");
    for (const auto& r : read_rows(in, 2)) b.values.push_back(parse_double(r[1]));
    if (b.values.size() != b.count) throw ValidationError("sample count does not match metadata");
    return b;
}

inline json to_json(const SampleBatch& b) {
    json j = batch_metadata(b);
    j["values"] = b.values;
    return j;
}

inline SampleBatch samples_from_json(const json& j) {
    auto b = batch_from_metadata(j);
    b.values = j.at("values").get<std::vector<double>>();
    if (b.values.size() != b.count) throw ValidationError("sample count does not match metadata");
    return b;
}

// ---------------------------------------------------------------- Hecke records

/// Reads `label,k,q,m,weight` rows, then a `label,p,lambda` section.
inline std::vector<HeckeFormRecord> read_forms_csv(std::istream& in) {
    std::vector<HeckeFormRecord> records;
    std::map<std::string, std::size_t> index;
    std::string line;
    int section = 0;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t == "label,k,q,m,weight") {
            section = 1;
            continue;
        }
        if (t == "label,p,lambda") {
            section = 2;
            continue;
        }
        const auto c = split(t, ',');
        const auto where = "line " + std::to_string(lineno) + ": ";
        if (section == 1) {
            if (c.size() != 5) throw ValidationError(where + "expected label,k,q,m,weight");
            HeckeFormRecord r;
            r.label = trim(c[0]);
            r.k = static_cast<int>(parse_int(c[1]));
            r.q = parse_int(c[2]);
            r.m = static_cast<int>(parse_int(c[3]));
            r.weight = parse_double(c[4]);
            if (index.contains(r.label)) throw ValidationError(where + "duplicate label " + r.label);
            index[r.label] = records.size();
            records.push_back(std::move(r));
        } else if (section == 2) {
            if (c.size() != 3) throw ValidationError(where + "expected label,p,lambda");
            const auto it = index.find(trim(c[0]));
            if (it == index.end()) throw ValidationError(where + "unknown label " + trim(c[0]));
            records[it->second].lambda[parse_int(c[1])] = parse_double(c[2]);
        } else {
            throw ValidationError(where + "data before the 'label,k,q,m,weight' header");
        }
    }
    for (const auto& r : records) (void)r.validate();
    return records;
}

inline void write_forms_csv(std::ostream& out, const std::vector<HeckeFormRecord>& records) {
    out << "label,k,q,m,weight\n";
    for (const auto& r : records)
        out << r.label << ',' << r.k << ',' << r.q << ',' << r.m << ',' << num(r.weight) << '\n';
    out << "label,p,lambda\n";
    for (const auto& r : records)
        for (const auto& [p, lam] : r.lambda) out << r.label << ',' << p << ',' << num(lam) << '\n';
}

/// JSON mirror: {"forms": [{"label", "k", "q", "m", "weight", "lambda": {"2": ..}}]}.
inline std::vector<HeckeFormRecord> forms_from_json(const json& j) {
    std::vector<HeckeFormRecord> records;
    for (const auto& f : j.at("forms")) {
        HeckeFormRecord r;
        r.label = f.at("label").get<std::string>();
        r.k = f.at("k").get<int>();
        r.q = f.at("q").get<std::int64_t>();
        r.m = f.at("m").get<int>();
        r.weight = f.at("weight").get<double>();
        for (const auto& [p, lam] : f.at("lambda").items())
            r.lambda[parse_int(p)] = lam.get<double>();
        (void)r.validate();
        records.push_back(std::move(r));
    }
    return records;
}

inline json forms_to_json(const std::vector<HeckeFormRecord>& records) {
    json arr = json::array();
    for (const auto& r : records) {
        json lam = json::object();
        for (const auto& [p, v] : r.lambda) lam[std::to_string(p)] = v;
        arr.push_back({{"label", r.label}, {"k", r.k}, {"q", r.q}, {"m", r.m},
                       {"weight", r.weight}, {"lambda", lam}});
    }
    return json{{"forms", arr}};
}

}  // namespace mdensity::io
