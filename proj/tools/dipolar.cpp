// Command-line driver for the dipolar SLE laboratory.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dipolar/analytic.hpp"
#include "dipolar/io.hpp"
#include "dipolar/ising.hpp"
#include "dipolar/loewner.hpp"
#include "dipolar/stats.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace dipolar;

namespace {

constexpr const char* kVersion = "1.0.0";
constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitArgs = 2;
constexpr int kExitDomain = 3;
constexpr int kExitAcceptance = 4;

struct Common
{
    std::uint64_t seed = 0;
    std::string out = ".";
    unsigned threads = 1;
    bool paper_scale = false;
};

std::uint64_t default_seed()
{
    if (const char* s = std::getenv("DIPOLAR_SEED")) {
        try {
            return std::stoull(s);
        } catch (const std::exception&) {
            throw InvalidArgument("DIPOLAR_SEED is not an unsigned integer");
        }
    }
    return 20061031;
}

std::string now_utc()
{
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

fs::path out_file(const Common& c, const std::string& name)
{
    fs::create_directories(c.out);
    return fs::path(c.out) / name;
}

void write_json(const fs::path& path, const json& j)
{
    std::ofstream f(path);
    if (!f) {
        throw io::IoError("cannot open " + path.string() + " for writing");
    }
    f << j.dump(2) << '\n';
}

void write_manifest(const Common& c, const std::string& command, const json& config,
                    std::vector<std::string> outputs)
{
    const auto path = out_file(c, command + ".manifest.json");
    outputs.push_back(path.string());
    json m;
    m["command"] = command;
    m["config"] = config;
    m["seed"] = c.seed;
    m["tool_version"] = kVersion;
    m["outputs"] = outputs;
    m["timestamp"] = now_utc();
    write_json(path, m);
}

json report_json(const stats::ComparisonReport& r)
{
    json j;
    j["delta"] = r.delta;
    j["n"] = r.n;
    j["L"] = r.L ? json(*r.L) : json(nullptr);
    j["dk_critical"] = r.dk_critical;
    j["pass"] = r.pass;
    return j;
}

SleParams sle_params(double kappa, double step, double t_max, const Common& c)
{
    SleParams p;
    p.kappa = kappa;
    p.step = step;
    p.t_max = t_max;
    p.seed = c.seed;
    p.validate();
    return p;
}

json sle_config(const SleParams& p)
{
    return {{"kappa", p.kappa},
            {"delta", p.delta},
            {"step", p.step},
            {"t_max", p.t_max},
            {"eps_tip", p.eps_tip},
            {"eps_swallow", p.eps_swallow},
            {"escape_threshold", p.escape_threshold},
            {"refine_depth", p.refine_depth},
            {"refine_radius", p.refine_radius},
            {"swallow_ratio", p.swallow_ratio}};
}

// ---- trace ----------------------------------------------------------------

struct TraceOpts
{
    double kappa = 2.0;
    double step = 1e-3;
    double t_max = 5.0;
    double delta = 1.0;
    std::size_t stride = 10;
    bool constant = false;
};

int cmd_trace(const TraceOpts& o, const Common& c)
{
    SleParams p = sle_params(o.kappa, o.step, o.t_max, c);
    p.delta = o.delta;
    p.validate();
    const std::size_t n = p.steps_for_horizon();
    MapChain chain;
    if (o.constant) {
        chain = MapChain::constant(0.0, p.step, n, p.delta);
    } else {
        RandomStream rng(StreamKey(c.seed, 0));
        chain = MapChain::from_path(sample_driving(p, n, rng), p.delta);
    }
    const Trace tr = trace(chain, p, o.stride);
    const auto path = out_file(c, "trace.csv");
    io::CsvWriter csv(path.string(), {"t", "re", "im"});
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
        csv.row(tr.times[k], tr.points[k].real(), tr.points[k].imag());
    }
    csv.close();
    json cfg = sle_config(p);
    cfg["stride"] = o.stride;
    cfg["constant_driving"] = o.constant;
    write_manifest(c, "trace", cfg, {path.string()});
    std::cout << "wrote " << tr.times.size() << " trace points to " << path.string() << '\n';
    return kExitOk;
}

// ---- field ----------------------------------------------------------------

struct FieldOpts
{
    double kappa = 6.0;
    std::string grid = "41x19";
    double x_min = -4.0;
    double x_max = 4.0;
};

int cmd_field(const FieldOpts& o, const Common& c)
{
    if (o.kappa < 4.0) {
        throw RegimeError("field: p_left and p_in have no closed form for kappa < 4; "
                          "only the upper-boundary law p_up (see 'constants') is available");
    }
    unsigned nx = 0;
    unsigned ny = 0;
    char sep = 0;
    std::istringstream gs(o.grid);
    if (!(gs >> nx >> sep >> ny) || sep != 'x' || nx < 1 || ny < 1) {
        throw InvalidArgument("field: --grid must look like NXxNY, e.g. 41x19");
    }
    detail::require(o.x_max > o.x_min || nx == 1, "field: x-max must exceed x-min");
    const ProbField field(o.kappa);
    const auto path = out_file(c, "field.csv");
    io::CsvWriter csv(path.string(), {"re", "im", "p_left", "p_right", "p_in"});
    for (unsigned j = 1; j <= ny; ++j) {
        const double y = std::numbers::pi * j / (ny + 1);
        for (unsigned i = 0; i < nx; ++i) {
            const double x = nx == 1 ? o.x_min : o.x_min + (o.x_max - o.x_min) * i / (nx - 1);
            const Complex z(x, y);
            csv.row(x, y, field.p_left(z), field.p_right(z), field.p_in(z));
        }
    }
    csv.close();
    write_manifest(c, "field", {{"kappa", o.kappa}, {"grid", o.grid}, {"x_min", o.x_min}, {"x_max", o.x_max}},
                   {path.string()});
    std::cout << "wrote " << nx * ny << " grid points to " << path.string() << '\n';
    return kExitOk;
}

// ---- constants ------------------------------------------------------------

int cmd_constants(double kappa, const Common& c)
{
    const ProbField field(kappa);
    const auto cft = cft_constants(kappa);
    json j;
    j["kappa"] = kappa;
    j["I"] = field.I();
    j["J"] = kappa > 4.0 ? json(field.J()) : json(nullptr);
    j["c"] = cft.c;
    j["h12"] = cft.h12;
    j["h0half"] = cft.h0half;
    const auto path = out_file(c, "constants.json");
    write_json(path, j);
    write_manifest(c, "constants", {{"kappa", kappa}}, {path.string()});
    std::cout << j.dump(2) << '\n';
    return kExitOk;
}

// ---- sle-endpoints ----------------------------------------------------------

struct EndpointOpts
{
    double kappa = 6.0;
    double step = 1e-3;
    double t_max = 25.0;
    std::size_t n = 1000;
    bool mirrored = false;
    double allowance = 0.01;
};

int cmd_sle_endpoints(EndpointOpts o, const Common& c)
{
    if (c.paper_scale) {
        o.n = 5000;
    }
    const SleParams p = sle_params(o.kappa, o.step, o.t_max, c);
    const auto xs = sample_endpoints(p, o.n, c.threads, o.mirrored);
    const auto csv_path = out_file(c, "endpoints.csv");
    io::CsvWriter csv(csv_path.string(), {"seed", "x_star"});
    for (std::size_t k = 0; k < xs.size(); ++k) {
        csv.row(k, xs[k]);
    }
    csv.close();
    const ProbField field(o.kappa);
    const double d = p.delta;
    const auto rep = stats::max_cdf_distance(
        stats::empirical_cdf(xs), [&](double x) { return 1.0 - field.p_up(x / d); }, o.allowance);
    const auto rep_path = out_file(c, "endpoints_report.json");
    write_json(rep_path, report_json(rep));
    json cfg = sle_config(p);
    cfg["n_traces"] = o.n;
    cfg["mirrored"] = o.mirrored;
    cfg["allowance"] = o.allowance;
    cfg["stream_rule"] = "trace k uses stream (seed, k)";
    write_manifest(c, "sle-endpoints", cfg, {csv_path.string(), rep_path.string()});
    std::cout << "delta = " << rep.delta << " (critical " << rep.dk_critical << " + " << o.allowance
              << "), " << (rep.pass ? "pass" : "FAIL") << '\n';
    return rep.pass ? kExitOk : kExitAcceptance;
}

// ---- ising ----------------------------------------------------------------

struct IsingOpts
{
    std::vector<int> sizes;
    long n = 2000;
    long equilibration = 0;
    long decorrelation = 0;
    int replicas = 1;
    double tolerance = 0.05;
    double band_lo = -1.5;
    double band_hi = -0.5;
};

struct IsingRun
{
    stats::ComparisonReport report;
    ising::RunResult result;
};

IsingRun run_ising(int L, const IsingOpts& o, const Common& c)
{
    ising::RunConfig cfg;
    cfg.L = L;
    cfg.n_samples = o.n;
    cfg.n_equilibration_sweeps = o.equilibration;
    cfg.n_decorrelation_sweeps = o.decorrelation;
    cfg.seed = c.seed;
    cfg.replicas = o.replicas;
    cfg.threads = c.threads;
    IsingRun run;
    run.result = ising::run_experiment(cfg);
    run.report = stats::max_cdf_distance(stats::empirical_cdf(run.result.displacements()),
                                         stats::ising_theory_cdf(L));
    run.report.L = L;
    run.report.allowance = o.tolerance;
    run.report.pass = run.report.delta < o.tolerance;
    return run;
}

std::vector<std::string> write_ising_run(const IsingRun& run, int L, const IsingOpts& o, const Common& c)
{
    const std::string tag = "ising_L" + std::to_string(L);
    const auto csv_path = out_file(c, tag + "_samples.csv");
    io::CsvWriter csv(csv_path.string(), {"replica", "sample_index", "displacement", "wrapped"});
    for (const auto& s : run.result.samples) {
        csv.row(s.replica, s.sample_index, s.sample.displacement, s.sample.wrapped);
    }
    csv.close();
    json seeds = json::array();
    for (int r = 0; r < o.replicas; ++r) {
        seeds.push_back({{"seed", c.seed}, {"replica", r}});
    }
    json meta;
    meta["L"] = L;
    meta["n_samples"] = o.n;
    meta["seeds"] = seeds;
    meta["wrapped_rate"] = run.result.wrapped_rate();
    meta["autocorrelation_estimate"] = run.result.autocorrelation;
    const auto meta_path = out_file(c, tag + "_meta.json");
    write_json(meta_path, meta);
    const auto rep_path = out_file(c, tag + "_report.json");
    write_json(rep_path, report_json(run.report));
    return {csv_path.string(), meta_path.string(), rep_path.string()};
}

json ising_config(const IsingOpts& o)
{
    return {{"sizes", o.sizes},
            {"n_samples", o.n},
            {"n_equilibration_sweeps", o.equilibration},
            {"n_decorrelation_sweeps", o.decorrelation},
            {"replicas", o.replicas},
            {"tolerance", o.tolerance},
            {"beta", ising::critical_beta()}};
}

int cmd_ising(IsingOpts o, const Common& c)
{
    if (c.paper_scale) {
        o.n = 320000;
    }
    detail::require(o.sizes.size() == 1, "ising: pass exactly one --L");
    const int L = o.sizes.front();
    const auto run = run_ising(L, o, c);
    write_manifest(c, "ising", ising_config(o), write_ising_run(run, L, o, c));
    std::cout << "L = " << L << ": delta = " << run.report.delta << ", wrapped rate "
              << run.result.wrapped_rate() << ", " << (run.report.pass ? "pass" : "FAIL") << '\n';
    return run.report.pass ? kExitOk : kExitAcceptance;
}

int cmd_ising_scaling(IsingOpts o, const Common& c)
{
    if (c.paper_scale) {
        o.n = 320000;
    }
    detail::require(o.sizes.size() >= 3, "ising-scaling: at least three sizes are required");
    std::vector<double> sizes;
    std::vector<double> deltas;
    std::vector<std::string> outputs;
    for (int L : o.sizes) {
        const auto run = run_ising(L, o, c);
        auto files = write_ising_run(run, L, o, c);
        outputs.insert(outputs.end(), files.begin(), files.end());
        sizes.push_back(L);
        deltas.push_back(run.report.delta);
        std::cout << "L = " << L << ": delta = " << run.report.delta << '\n';
    }
    const auto fit = stats::scaling_fit(sizes, deltas);
    bool decreasing = true;
    for (std::size_t k = 1; k < deltas.size(); ++k) {
        decreasing = decreasing && deltas[k] < deltas[k - 1];
    }
    const bool pass = decreasing && fit.within(o.band_lo, o.band_hi);
    json j;
    j["sizes"] = sizes;
    j["deltas"] = deltas;
    j["exponent"] = fit.exponent;
    j["quality"] = fit.quality;
    j["decreasing"] = decreasing;
    j["pass"] = pass;
    const auto path = out_file(c, "scaling.json");
    write_json(path, j);
    outputs.push_back(path.string());
    write_manifest(c, "ising-scaling", ising_config(o), outputs);
    std::cout << "exponent = " << fit.exponent << ", " << (pass ? "pass" : "FAIL") << '\n';
    return pass ? kExitOk : kExitAcceptance;
}

void add_common(CLI::App* sub, Common& c)
{
    sub->add_option("--seed", c.seed, "Master seed (default: $DIPOLAR_SEED or 20061031)");
    sub->add_option("--out", c.out, "Output directory")->capture_default_str();
    sub->add_option("--threads", c.threads, "Worker threads (0 = all cores)")->capture_default_str();
    sub->add_flag("--paper-scale", c.paper_scale, "Use the sample counts of the original experiment");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Dipolar SLE simulation and verification"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    Common common;
    TraceOpts trace_o;
    FieldOpts field_o;
    double const_kappa = 3.0;
    EndpointOpts end_o;
    IsingOpts ising_o;
    IsingOpts scaling_o;
    scaling_o.sizes = {10, 14, 20, 26, 40};

    try {
        common.seed = default_seed();
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitArgs;
    }

    auto* t = app.add_subcommand("trace", "Sample one trace and write t,re,im");
    t->add_option("--kappa", trace_o.kappa)->capture_default_str();
    t->add_option("--step", trace_o.step)->capture_default_str();
    t->add_option("--t-max", trace_o.t_max)->capture_default_str();
    t->add_option("--delta", trace_o.delta, "Strip width over pi")->capture_default_str();
    t->add_option("--stride", trace_o.stride, "Write every stride-th step")->capture_default_str();
    t->add_flag("--constant", trace_o.constant, "Use constant driving xi = 0");
    add_common(t, common);

    auto* f = app.add_subcommand("field", "Tabulate p_left, p_right, p_in on a grid");
    f->add_option("--kappa", field_o.kappa)->capture_default_str();
    f->add_option("--grid", field_o.grid, "NXxNY interior grid")->capture_default_str();
    f->add_option("--x-min", field_o.x_min)->capture_default_str();
    f->add_option("--x-max", field_o.x_max)->capture_default_str();
    add_common(f, common);

    auto* k = app.add_subcommand("constants", "Write I, J and CFT constants as JSON");
    k->add_option("--kappa", const_kappa)->capture_default_str();
    add_common(k, common);

    auto* e = app.add_subcommand("sle-endpoints", "Upper-boundary hitting points vs p_up");
    e->add_option("--kappa", end_o.kappa)->capture_default_str();
    e->add_option("--step", end_o.step)->capture_default_str();
    e->add_option("--t-max", end_o.t_max)->capture_default_str();
    e->add_option("--n-samples", end_o.n, "Number of traces")->capture_default_str();
    e->add_option("--allowance", end_o.allowance, "Added to the critical value")->capture_default_str();
    e->add_flag("--mirrored", end_o.mirrored, "Negate every driving increment");
    add_common(e, common);

    auto* i = app.add_subcommand("ising", "Ising interface endpoints at one size");
    i->add_option("--L", ising_o.sizes, "Strip height")->required()->expected(1);
    i->add_option("--n-samples", ising_o.n)->capture_default_str();
    i->add_option("--equilibration", ising_o.equilibration, "Sweeps (0 = 50 L)")->capture_default_str();
    i->add_option("--decorrelation", ising_o.decorrelation, "Sweeps (0 = 2 L)")->capture_default_str();
    i->add_option("--replicas", ising_o.replicas)->capture_default_str();
    i->add_option("--tolerance", ising_o.tolerance, "Pass threshold on delta")->capture_default_str();
    add_common(i, common);

    auto* s = app.add_subcommand("ising-scaling", "delta(L) over several sizes and the log-log fit");
    s->add_option("--L", scaling_o.sizes, "Strip heights")->capture_default_str();
    s->add_option("--n-samples", scaling_o.n)->capture_default_str();
    s->add_option("--equilibration", scaling_o.equilibration)->capture_default_str();
    s->add_option("--decorrelation", scaling_o.decorrelation)->capture_default_str();
    s->add_option("--replicas", scaling_o.replicas)->capture_default_str();
    s->add_option("--band-lo", scaling_o.band_lo)->capture_default_str();
    s->add_option("--band-hi", scaling_o.band_hi)->capture_default_str();
    add_common(s, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int rc = app.exit(err);
        return rc == 0 ? kExitOk : kExitArgs;
    }

    try {
        if (*t) {
            return cmd_trace(trace_o, common);
        }
        if (*f) {
            return cmd_field(field_o, common);
        }
        if (*k) {
            return cmd_constants(const_kappa, common);
        }
        if (*e) {
            return cmd_sle_endpoints(end_o, common);
        }
        if (*i) {
            return cmd_ising(ising_o, common);
        }
        if (*s) {
            return cmd_ising_scaling(scaling_o, common);
        }
    } catch (const InvalidArgument& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kExitArgs;
    } catch (const RegimeError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kExitDomain;
    } catch (const DomainError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kExitDomain;
    } catch (const HorizonError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kExitDomain;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kExitIo;
    }
    return kExitArgs;
}
