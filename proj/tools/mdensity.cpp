// mdensity: batch front end for the density, Fourier, sampling, verification
// and Hecke-form pipelines.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "mdensity/mdensity.hpp"

#ifndef MDENSITY_VERSION
#define MDENSITY_VERSION "dev"
#endif

namespace fs = std::filesystem;
using namespace mdensity;

namespace {

struct Config {
    double sigma = 1.0;
    double tau = 0.0;
    int mu = 3;
    int nu = 1;
    std::int64_t y = 50;
    std::optional<std::int64_t> exclude_q;
    double x_max = 0.0;
    double dx = 0.0;
    std::optional<double> u_lo, u_hi;
    double du = 0.005;
    std::size_t n = 100'000;
    std::uint64_t seed = 42;
    double tol = 1e-12;
    int threads = 0;
    std::string format = "csv";
    std::string out;
    std::string against;
    std::string input;
    std::string psi = "char:1";
    std::string aggregate;
    double x_cut = 0.0;
    std::string preset;
    bool quick = false;
    bool timing = false;
};

std::string out_dir() {
    const char* env = std::getenv("MDENSITY_OUT_DIR");
    return env ? env : ".";
}

std::string out_path(const Config& c, const std::string& stem) {
    if (!c.out.empty()) return c.out;
    return (fs::path(out_dir()) / (stem + "." + c.format)).string();
}

std::ofstream open_out(const std::string& path) {
    const auto parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot open output file " + path);
    return f;
}

PrimeSet prime_set(const Config& c) {
    if (c.y < 2) throw ValidationError("--y must be >= 2");
    auto ps = primes_up_to(c.y);
    return c.exclude_q ? exclude(ps, *c.exclude_q) : ps;
}

/// "one", "char:<x>" or "indicator:<lo>:<hi>".
TestFunction parse_psi(const std::string& text) {
    const auto parts = io::split(text, ':');
    if (parts.size() == 1 && parts[0] == "one") return IndicatorFn{};
    if (parts.size() == 2 && parts[0] == "char") return CharacterFn{io::parse_double(parts[1])};
    if (parts.size() == 3 && parts[0] == "indicator")
        return IndicatorFn{io::parse_double(parts[1]), io::parse_double(parts[2])};
    throw ValidationError("--psi must be one, char:<x> or indicator:<lo>:<hi>");
}

std::string cnum(cplx v) { return io::num(v.real()) + "," + io::num(v.imag()); }

DensityOptions density_options(const Config& c) {
    DensityOptions o;
    o.tol = c.tol;
    o.x_max = c.x_max;
    o.dx = c.dx;
    o.du = c.du;
    if (c.u_lo) o.u_lo = *c.u_lo;
    if (c.u_hi) o.u_hi = *c.u_hi;
    o.threads = c.threads;
    return o;
}

int run_density(const Config& c) {
    const auto P = prime_set(c);
    const auto r = compute_density(c.sigma, P, density_options(c));
    const auto path = out_path(c, "density");
    auto f = open_out(path);
    if (c.format == "json")
        f << io::to_json(r.density).dump(1) << '\n';
    else
        io::write_csv(f, r.density);
    const auto m = moments(r.density);
    std::cout << "file=" << path << "\n"
              << "sigma=" << io::num(c.sigma) << "\n"
              << "primes=" << P.to_string() << "\n"
              << "method=" << r.density.method << "\n"
              << "x_max=" << io::num(r.fourier.x_max()) << "\n"
              << "dx=" << io::num(r.fourier.dx) << "\n"
              << "integral=" << io::num(m.mass) << "\n"
              << "mean=" << io::num(m.mean) << "\n"
              << "variance=" << io::num(m.variance) << "\n"
              << "analytic_variance=" << io::num(analytic_variance(c.sigma, P)) << "\n"
              << "variance_deficit=" << io::num(variance_deficit(c.sigma, P)) << "\n"
              << "imag_residue=" << io::num(r.density.imag_residue) << "\n";
    return 0;
}

int run_fourier(const Config& c) {
    const auto P = prime_set(c);
    const auto sup = support_of(c.sigma, P);
    const double x_max = c.x_max > 0 ? c.x_max : suggest_x_max(c.sigma, P, c.tol);
    const double dx = c.dx > 0 ? c.dx : std::min(0.5, 0.9 * std::numbers::pi / sup.width());
    const auto g = fourier_product(c.sigma, P, x_max, dx, {10.0 * c.tol, 1e-13, c.threads});
    const auto path = out_path(c, "fourier");
    auto f = open_out(path);
    if (c.format == "json")
        f << io::to_json(g).dump(1) << '\n';
    else
        io::write_csv(f, g);
    std::cout << "file=" << path << "\nmethod=" << g.method << "\nx_max=" << io::num(g.x_max())
              << "\ndx=" << io::num(dx) << "\nnodes=" << g.size() << "\n";
    return 0;
}

DensityGrid read_density_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read " + path);
    if (fs::path(path).extension() == ".json") return io::density_from_json(io::json::parse(in));
    return io::read_density_csv(in);
}

int run_sample(const Config& c) {
    const auto P = prime_set(c);
    const auto b = sample_values(c.sigma, c.tau, P, c.mu, c.n, c.seed, c.threads);
    const auto path = out_path(c, "samples");
    auto f = open_out(path);
    if (c.format == "json")
        f << io::to_json(b).dump(1) << '\n';
    else
        io::write_csv(f, b);
    std::cout << "file=" << path << "\nrng=" << b.rng << "\ncount=" << b.count << "\n";
    if (!c.against.empty()) {
        const auto d = read_density_file(c.against);
        std::cout << "ks=" << io::num(ks_distance(b, density_cdf(d))) << "\n";
    }
    return 0;
}

int run_verify(const Config& c) {
    verify::Options o;
    o.threads = c.threads;
    o.quick = c.quick;
    o.seed = c.seed;
    const auto t0 = std::chrono::steady_clock::now();
    const auto checks = verify::run(o);
    const auto report = verify::format_report(checks);
    std::cout << report;
    if (!c.out.empty()) open_out(c.out) << report;
    if (c.timing)
        std::cerr << "elapsed_seconds="
                  << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()
                  << "\n";
    if (!verify::all_pass(checks)) {
        std::cerr << "code=tolerance message=verify: at least one check failed\n";
        return 2;
    }
    return 0;
}

std::vector<HeckeFormRecord> read_forms_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read " + path);
    if (fs::path(path).extension() == ".json") return io::forms_from_json(io::json::parse(in));
    return io::read_forms_csv(in);
}

int run_forms(const Config& c) {
    if (c.input.empty()) throw ValidationError("forms: --input is required");
    const SymPowerPair pair(c.mu, c.nu);
    const auto psi = parse_psi(c.psi);
    const auto records = read_forms_file(c.input);
    for (const auto& r : records)
        for (const auto& w : r.validate()) std::cerr << "warning: " << w << "\n";
    const auto families = group_families(records);
    const auto base = primes_up_to(c.y);

    io::json report;
    report["provenance"] = {{"sigma", c.sigma}, {"mu", c.mu}, {"nu", c.nu}, {"y", c.y},
                            {"prime_set", "primes <= y excluding the level prime q"},
                            {"weight_mode", "raw and normalized"}, {"psi", c.psi},
                            {"input", c.input}};
    io::json forms = io::json::array(), fams = io::json::array();
    for (const auto& fam : families) {
        const auto P = exclude(base, fam.q);
        auto sorted = fam.records;
        std::sort(sorted.begin(), sorted.end(),
                  [](const auto& a, const auto& b) { return a.label < b.label; });
        for (const auto& r : sorted)
            forms.push_back({{"label", r.label}, {"k", r.k}, {"q", r.q}, {"m", r.m},
                             {"weight", r.weight},
                             {"value", log_partial_sym_diff(r, pair, c.sigma, P)}});
        const auto avg = family_average(fam.records, pair, c.sigma, P, psi);
        io::json entry{{"q", fam.q}, {"m", fam.m}, {"forms", avg.forms},
                       {"raw", {avg.raw.real(), avg.raw.imag()}},
                       {"normalized", {avg.normalized.real(), avg.normalized.imag()}},
                       {"total_weight", avg.total_weight}, {"primes", P.to_string()}};
        // model side of the comparison at the same truncation
        try {
            DensityOptions o = density_options(c);
            o.u_lo = std::numeric_limits<double>::quiet_NaN();
            o.u_hi = std::numeric_limits<double>::quiet_NaN();
            const auto d = compute_density(c.sigma, P, o).density;
            const auto model = integrate_against(d, psi);
            entry["model"] = {model.real(), model.imag()};
        } catch (const std::exception& e) {
            entry["model"] = nullptr;
            entry["model_error"] = e.what();
        }
        fams.push_back(entry);
    }
    report["forms"] = forms;
    report["families"] = fams;
    if (!c.aggregate.empty()) {
        const auto mode = c.aggregate == "primesum"        ? AggregateMode::primesum
                          : c.aggregate == "primepowersum" ? AggregateMode::primepowersum
                                                           : throw ValidationError(
                                                                 "--aggregate must be primesum or "
                                                                 "primepowersum");
        const auto agg = corollary_aggregate(families, pair, c.sigma, psi, mode, c.x_cut, c.y);
        io::json inc = io::json::array(), miss = io::json::array();
        for (auto [q, m] : agg.included) inc.push_back({q, m});
        for (auto [q, m] : agg.missing) miss.push_back({q, m});
        report["aggregate"] = {{"mode", c.aggregate}, {"X", c.x_cut},
                               {"value", {agg.value.real(), agg.value.imag()}},
                               {"denominator", agg.denominator}, {"included", inc},
                               {"missing", miss}};
    }

    const auto path = out_path(c, "forms_report");
    auto f = open_out(path);
    if (c.format == "json") {
        f << report.dump(1) << '\n';
    } else {
        f << "# sigma=" << io::num(c.sigma) << ", mu=" << c.mu << ", nu=" << c.nu << ", y=" << c.y
          << ", psi=" << c.psi << ", weight_mode=raw+normalized\n";
        f << "label,k,q,m,weight,value\n";
        for (const auto& r : forms)
            f << r["label"].get<std::string>() << ',' << r["k"] << ',' << r["q"] << ',' << r["m"]
              << ',' << io::num(r["weight"].get<double>()) << ','
              << io::num(r["value"].get<double>()) << '\n';
        f << "q,m,forms,raw_re,raw_im,normalized_re,normalized_im,model_re,model_im\n";
        for (const auto& e : fams) {
            f << e["q"] << ',' << e["m"] << ',' << e["forms"] << ','
              << cnum({e["raw"][0].get<double>(), e["raw"][1].get<double>()}) << ','
              << cnum({e["normalized"][0].get<double>(), e["normalized"][1].get<double>()}) << ',';
            if (e["model"].is_null())
                f << "nan,nan\n";
            else
                f << cnum({e["model"][0].get<double>(), e["model"][1].get<double>()}) << '\n';
        }
        if (report.contains("aggregate")) {
            const auto& a = report["aggregate"];
            f << "aggregate_mode,X,value_re,value_im,denominator,included,missing\n";
            f << c.aggregate << ',' << io::num(c.x_cut) << ','
              << cnum({a["value"][0].get<double>(), a["value"][1].get<double>()}) << ','
              << a["denominator"] << ',' << a["included"].size() << ',' << a["missing"].size()
              << '\n';
        }
    }
    std::cout << "file=" << path << "\nforms=" << records.size()
              << "\nfamilies=" << families.size() << "\n";
    return 0;
}

void add_common(CLI::App* s, Config& c) {
    s->add_option("--sigma", c.sigma, "abscissa sigma > 1/2")->capture_default_str();
    s->add_option("--y", c.y, "prime bound: use the primes p <= y")->capture_default_str();
    s->add_option("--exclude-q", c.exclude_q, "level prime q removed from the prime set");
    s->add_option("--threads", c.threads, "worker threads (0 = all cores)")->capture_default_str();
    s->add_option("--format", c.format, "output format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    s->add_option("--out", c.out, "output file (default: $MDENSITY_OUT_DIR/<kind>.<format>)");
    s->add_option("--tol", c.tol, "target |Mt| at the end of the Fourier grid")
        ->capture_default_str();
}

void add_grid(CLI::App* s, Config& c) {
    s->add_option("--x-max", c.x_max, "Fourier grid extent (0 = automatic)");
    s->add_option("--dx", c.dx, "Fourier grid spacing (0 = automatic)");
    s->add_option("--u-lo", c.u_lo, "left end of the density grid");
    s->add_option("--u-hi", c.u_hi, "right end of the density grid");
    s->add_option("--du", c.du, "density grid spacing")->capture_default_str();
}

std::string version_text() {
    std::ostringstream os;
    os << "mdensity " << MDENSITY_VERSION << "\n"
       << "rng=" << kRngName << "\n"
       << "fourier_boundary_tol=1e-10\n"
       << "local_transform_tol=1e-13\n"
       << "inversion_imag_tol=1e-8\n"
       << "inversion_negativity_tol=1e-9\n"
       << "density_target_tol=1e-12\n"
       << "coefficient_order_cap=" << kMaxCoeffOrder << "\n";
    return os.str();
}

}  // namespace

int main(int argc, char** argv) {
    Config c;
    CLI::App app{"Value-distribution densities of log L(Sym^mu f, sigma) - log L(Sym^nu f, sigma)"};
    app.set_version_flag("--version", version_text());
    app.set_config("--config", "", "TOML-style configuration file; flags override its values");
    app.add_option("--preset", c.preset, "theorem-check: run the full verification suite")
        ->check(CLI::IsMember({"theorem-check"}));
    app.footer(
        "Truncation sets P_{log q^m} use the natural logarithm m ln q.\n"
        "Exit codes: 0 success, 1 invalid input, 2 tolerance failure.");

    auto* density = app.add_subcommand("density", "invert the Euler product to a density grid");
    add_common(density, c);
    add_grid(density, c);

    auto* fourier = app.add_subcommand("fourier", "tabulate the Fourier transform Mt");
    add_common(fourier, c);
    add_grid(fourier, c);

    auto* sample = app.add_subcommand("sample", "draw random Euler product values");
    add_common(sample, c);
    sample->add_option("--tau", c.tau, "vertical shift tau")->capture_default_str();
    sample->add_option("--mu", c.mu, "power applied to t_p")->capture_default_str();
    sample->add_option("--n", c.n, "number of samples")->capture_default_str();
    sample->add_option("--seed", c.seed, "generator seed")->capture_default_str();
    sample->add_option("--against", c.against, "density file for a KS comparison");

    auto* ver = app.add_subcommand("verify", "run the self-check suite");
    ver->add_flag("--quick", c.quick, "run only the quick subset");
    ver->add_option("--threads", c.threads, "worker threads (0 = all cores)");
    ver->add_option("--seed", c.seed, "generator seed")->capture_default_str();
    ver->add_option("--out", c.out, "also write the report to this file");
    ver->add_flag("--timing", c.timing, "print elapsed time to stderr");

    auto* forms = app.add_subcommand("forms", "log-differences and family averages from data");
    add_common(forms, c);
    add_grid(forms, c);
    forms->add_option("--input", c.input, "records (.csv or .json)")->required();
    forms->add_option("--mu", c.mu, "symmetric power mu")->capture_default_str();
    forms->add_option("--nu", c.nu, "symmetric power nu = mu - 2")->capture_default_str();
    forms->add_option("--psi", c.psi, "test function: one, char:<x>, indicator:<lo>:<hi>")
        ->capture_default_str();
    forms->add_option("--aggregate", c.aggregate, "primesum or primepowersum");
    forms->add_option("--X", c.x_cut, "cut for the aggregate");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "code=validation message=" << e.what() << "\n";
        return 1;
    }

    try {
        if (!(c.sigma > 0.5)) throw ValidationError("--sigma must be > 1/2");
        if (!(c.du > 0)) throw ValidationError("--du must be positive");
        if (c.dx < 0 || c.x_max < 0) throw ValidationError("--dx and --x-max must be >= 0");
        if (density->parsed()) return run_density(c);
        if (fourier->parsed()) return run_fourier(c);
        if (sample->parsed()) return run_sample(c);
        if (forms->parsed()) return run_forms(c);
        if (ver->parsed() || c.preset == "theorem-check") return run_verify(c);
        std::cerr << "code=validation message=no subcommand given\n" << app.help();
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "code=validation message=" << e.what() << "\n";
        return 1;
    } catch (const ToleranceError& e) {
        std::cerr << "code=tolerance message=" << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "code=validation message=" << e.what() << "\n";
        return 1;
    }
}
