#include "critmix/cli.hpp"

#include "critmix/error.hpp"
#include "critmix/induced.hpp"
#include "critmix/orbit.hpp"
#include "critmix/parallel.hpp"
#include "critmix/rng.hpp"
#include "critmix/stats.hpp"
#include "critmix/tails.hpp"
#include "critmix/transfer.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>

namespace critmix {

namespace {

using nlohmann::json;

std::string num(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json finite_or_null(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

std::string join_word(const Word& w)
{
    std::string s;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (i)
            s += '.';
        s += std::to_string(w[i]);
    }
    return s;
}

json constants_json(const MapFamily& family)
{
    const FamilyConstants& c = family.constants();
    json pi = json::array();
    for (std::size_t j = 0; j < family.size(); ++j)
        pi.push_back(finite_or_null(c.pi[j]));
    const RegimeChecks rc = regime_checks(family);
    return json{{"theta", c.theta},
                {"gamma1", finite_or_null(c.gamma1)},
                {"gamma2", finite_or_null(c.gamma2)},
                {"pi_b", pi},
                {"s", c.s},
                {"has_acs", c.has_acs},
                {"thm14_applicable", c.thm14_applicable},
                {"strong_clt", c.strong_clt},
                {"regime_examples",
                 {{"single_bad_exponent", rc.single_bad_exponent},
                  {"narrow_band", rc.narrow_band},
                  {"heavy_top", rc.heavy_top}}}};
}

void csv_header(std::ostream& out, const std::string& command, const ExperimentConfig& cfg)
{
    const json h{{"command", command}, {"config", cfg.to_json()}, {"rng", rng_algorithm}};
    out << "# " << h.dump() << '\n';
}

struct Context {
    const std::string& command;
    const ExperimentConfig& cfg;
    const MapFamily& family;
    unsigned workers;
    std::ostream& data;
    json summary;
    RngSeed seed() const { return RngSeed{cfg.seed, 0}; }
};

void cmd_family(Context& ctx)
{
    ctx.summary["family"] = ctx.family.to_json();
}

void cmd_orbit(Context& ctx)
{
    const OrbitParams& p = ctx.cfg.orbit;
    const SymbolStream omega(ctx.family, ctx.seed());
    const Trajectory tr = iterate(ctx.family, omega, p.x0, p.steps);
    csv_header(ctx.data, ctx.command, ctx.cfg);
    ctx.data << "step,symbol,x\n";
    ctx.data << "0,," << num(tr.points[0]) << '\n';
    for (std::size_t k = 0; k < tr.symbols.size(); ++k)
        ctx.data << k + 1 << ',' << tr.symbols[k] << ',' << num(tr.points[k + 1]) << '\n';
    ctx.summary["steps"] = tr.symbols.size();
    ctx.summary["censored"] = tr.censored;
}

void cmd_return_times(Context& ctx)
{
    const ReturnTimesParams& p = ctx.cfg.return_times;
    if (p.samples < 1)
        throw Error(ErrorKind::Validation, "invalid_config", "samples must be positive");
    const auto total = static_cast<std::size_t>(p.samples);
    std::vector<ReturnDecomposition> rows(total);
    constexpr std::size_t chunks = 64;
    parallel_chunks(chunks, ctx.workers, [&](std::size_t c) {
        for (std::size_t i = total * c / chunks; i < total * (c + 1) / chunks; ++i) {
            const SymbolStream om(ctx.family, ctx.seed().substream(i));
            rows[i] = first_return(ctx.family, om, window_start(om, 0), p.budget);
        }
    });
    csv_header(ctx.data, ctx.command, ctx.cfg);
    ctx.data << "sample_id,m,kappa,l,phi,censored\n";
    std::int64_t censored = 0;
    double sum_phi = 0.0;
    for (std::size_t i = 0; i < total; ++i) {
        const auto& r = rows[i];
        const bool bad = !r.ok();
        censored += bad;
        if (!bad)
            sum_phi += static_cast<double>(r.phi);
        ctx.data << i << ',' << r.m << ',' << r.kappa << ',' << r.l << ',' << r.phi << ','
                 << (bad ? 1 : 0) << '\n';
    }
    ctx.summary["samples"] = p.samples;
    ctx.summary["censored"] = censored;
    ctx.summary["mean_phi_uncensored"] =
        censored < p.samples ? json(sum_phi / static_cast<double>(p.samples - censored)) : json(nullptr);
}

void cmd_partition(Context& ctx)
{
    const PartitionParams& p = ctx.cfg.partition;
    const auto cells = enumerate_cells(ctx.family, p.phi_max, p.include_u, p.max_cells);
    csv_header(ctx.data, ctx.command, ctx.cfg);
    ctx.data << "u,v,b,g,wlen,lo,hi,measure\n";
    double total = 0.0;
    for (const auto& c : cells) {
        total += c.measure;
        ctx.data << (c.u ? std::to_string(*c.u) : std::string()) << ',' << join_word(c.v) << ','
                 << join_word(c.b) << ',' << c.g << ',' << c.wlen << ',' << num(c.x.lo) << ','
                 << num(c.x.hi) << ',' << num(c.measure) << '\n';
    }
    ctx.summary["cells"] = cells.size();
    ctx.summary["total_measure"] = total;
    ctx.summary["window_measure"] = 0.25;
}

void cmd_tails(Context& ctx)
{
    const TailsParams& p = ctx.cfg.tails;
    if (p.n_max < 2)
        throw Error(ErrorKind::Validation, "invalid_config", "n_max must be at least 2");
    std::vector<std::int64_t> ns;
    for (std::int64_t n = 2; n <= p.n_max; ++n)
        ns.push_back(n);
    const auto exact = tail_exact_table(ctx.family, p.n_max);
    std::optional<TailMc> mc;
    if (p.samples > 0)
        mc = tail_mc(ctx.family, ns, p.samples, ctx.seed(), ctx.workers, p.budget);
    csv_header(ctx.data, ctx.command, ctx.cfg);
    ctx.data << "n,exact,lower,upper,mc,mc_stderr,trunc_err\n";
    bool sandwich = true;
    bool mc_agrees = true;
    for (std::size_t k = 0; k < ns.size(); ++k) {
        const std::int64_t n = ns[k];
        const SeriesValue lo = tail_lower(ctx.family, n, p.k_max);
        const SeriesValue up = tail_upper(ctx.family, n, p.j_max, p.k_max);
        const double ex = exact[static_cast<std::size_t>(n)];
        sandwich = sandwich && lo.value <= ex && ex <= up.value;
        ctx.data << n << ',' << num(ex) << ',' << num(lo.value) << ',' << num(up.value) << ',';
        if (mc) {
            const double v = 0.25 * mc->survival[k];
            const double se = 0.25 * mc->stderr_[k];
            mc_agrees = mc_agrees && std::abs(v - ex) <= 3.0 * se + 1e-15;
            ctx.data << num(v) << ',' << num(se);
        } else {
            ctx.data << ',';
        }
        ctx.data << ',' << num(std::max(lo.truncation_error, up.truncation_error)) << '\n';
    }
    ctx.summary["j_max"] = p.j_max < 0 ? default_j_max(ctx.family) : p.j_max;
    ctx.summary["verdicts"] = {{"sandwich", sandwich},
                               {"mc_within_3sigma", mc ? json(mc_agrees) : json(nullptr)}};
    if (mc)
        ctx.summary["mc"] = {{"samples", mc->samples},
                             {"censored", mc->censored},
                             {"boundary", mc->boundary}};
}

DensityGrid ulam_density(const MapFamily& family, std::uint64_t grid, unsigned workers,
                         double tol, std::int64_t iter_max, json* report)
{
    const UlamMatrix m = build_ulam(family, grid, workers);
    const StationaryResult st = stationary_density(m, tol, iter_max, true);
    if (report) {
        (*report)["iterations"] = st.iterations;
        (*report)["converged"] = st.converged;
        (*report)["last_change"] = st.last_change;
        (*report)["stationarity_residual"] = stationarity_residual(m, st.density);
    }
    return st.density;
}

void cmd_density(Context& ctx)
{
    const DensityParams& p = ctx.cfg.density;
    if (p.grid_size < 4 || p.grid_size % 4 != 0)
        throw Error(ErrorKind::Validation, "invalid_config", "grid_size must be a positive multiple of 4");
    json rep;
    const DensityGrid ulam = ulam_density(ctx.family, p.grid_size, ctx.workers, p.tol, p.iter_max, &rep);
    const DensityGrid orbit =
        density_from_orbit(ctx.family, ctx.seed(), p.orbit_steps, p.grid_size, p.burn_in, ctx.workers);
    csv_header(ctx.data, ctx.command, ctx.cfg);
    ctx.data << "cell_lo,cell_hi,density_ulam,density_orbit\n";
    double min_window = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < p.grid_size; ++i) {
        ctx.data << num(ulam.cell_lo(i)) << ',' << num(ulam.cell_hi(i)) << ',' << num(ulam.density(i))
                 << ',' << num(orbit.density(i)) << '\n';
        if (i >= p.grid_size / 2 && i < 3 * p.grid_size / 4)
            min_window = std::min(min_window, ulam.density(i));
    }
    const std::size_t half = p.grid_size / 2;
    rep["l1_ulam_orbit"] = ulam.l1_distance(orbit);
    rep["min_density_window"] = min_window;
    rep["mass_adjacent_half"] = ulam.masses[half - 1] + ulam.masses[half];
    rep["mass_last_cell"] = ulam.masses[p.grid_size - 1];
    ctx.summary["density"] = rep;
    ctx.summary["regime"] = ctx.family.constants().theta < 1.0 ? "acs" : "no_acs";
}

Observable centered(const MapFamily& family, const Observable& h, const json& center,
                    RngSeed seed, unsigned workers, json& report)
{
    if (center.is_null())
        return h;
    const Observable comp = Observable::from_json(family, center.at("compensator"));
    const std::uint64_t steps = center.value("steps", std::uint64_t{100'000'000});
    const Observable out = center_observable(family, h, comp, seed, steps, workers);
    report["centered"] = out.to_json();
    return out;
}

RngSeed center_seed(std::uint64_t master)
{
    return RngSeed{master, std::uint64_t{1} << 52};
}

void cmd_correlate(Context& ctx)
{
    const CorrelateParams& p = ctx.cfg.correlate;
    CorrelationOptions opts;
    opts.method = correlation_method_from_string(p.method);
    opts.budget = p.budget;
    opts.burn_in = p.burn_in;
    opts.batches = p.batches;
    opts.workers = ctx.workers;
    if (opts.method == CorrelationMethod::Ensemble && !(ctx.family.constants().theta < 1.0))
        throw Error(ErrorKind::Regime, "no_stationary_density", "ensemble sampling needs theta < 1");
    const Observable f = Observable::from_json(ctx.family, p.f);
    json obs_report;
    const Observable h = centered(ctx.family, Observable::from_json(ctx.family, p.h), p.center,
                                  center_seed(ctx.cfg.seed), ctx.workers, obs_report);
    std::optional<DensityGrid> density;
    if (opts.method == CorrelationMethod::Ensemble) {
        if (p.density_source == "orbit")
            density = density_from_orbit(ctx.family, ctx.seed().substream(std::uint64_t{1} << 50),
                                         100'000'000, p.grid_size, 10'000, ctx.workers);
        else if (p.density_source == "ulam")
            density = ulam_density(ctx.family, p.grid_size, ctx.workers, 1e-12, 100'000, nullptr);
        else
            throw Error(ErrorKind::Validation, "invalid_config", "density_source must be ulam or orbit");
    }
    const auto lags = p.lags();
    const CorrelationSeries cs =
        correlation_series(ctx.family, f, h, lags, opts, ctx.seed(), density ? &*density : nullptr);
    csv_header(ctx.data, ctx.command, ctx.cfg);
    ctx.data << "n,cor,stderr\n";
    for (std::size_t k = 0; k < lags.size(); ++k)
        ctx.data << lags[k] << ',' << num(cs.estimates[k]) << ',' << num(cs.stderrs[k]) << '\n';

    const ModelComparison mc = compare_models(cs, p.fit_lo, p.fit_hi);
    auto fit_json = [](const DecayFit& d) {
        return json{{"model", to_string(d.model)},
                    {"status", d.status},
                    {"exponent", finite_or_null(d.exponent)},
                    {"exponent_stderr", finite_or_null(d.exponent_stderr)},
                    {"rss", d.rss},
                    {"aicc", finite_or_null(d.aicc)},
                    {"envelope", finite_or_null(d.envelope)},
                    {"points", d.used.size()}};
    };
    const FamilyConstants& c = ctx.family.constants();
    const bool compatible = f.thm14_compatible() && h.thm14_compatible();
    const bool positive = cs.mean_f > 0.0 && cs.mean_h > 0.0 && p.center.is_null();
    json verdicts{{"preferred_model", mc.preferred}, {"thm14_compatible", compatible}};
    if (mc.poly.ok() && compatible && positive && c.thm14_applicable)
        verdicts["in_decay_bracket"] = mc.poly.exponent >= c.gamma2 - 0.2 && mc.poly.exponent <= c.gamma1 + 0.2;
    if (mc.poly.ok() && !p.center.is_null())
        verdicts["zero_mean_speedup"] = mc.poly.exponent <= c.gamma1 - 0.5;
    ctx.summary["correlation"] = {{"method", to_string(cs.method)},
                                  {"induced", cs.induced},
                                  {"mean_f", cs.mean_f},
                                  {"mean_h", cs.mean_h},
                                  {"budget", cs.budget},
                                  {"observables", obs_report}};
    ctx.summary["fits"] = json::array({fit_json(mc.poly), fit_json(mc.exp)});
    ctx.summary["verdicts"] = verdicts;
}

void cmd_clt(Context& ctx)
{
    const CltParams& p = ctx.cfg.clt;
    if (!(ctx.family.constants().theta < 1.0))
        throw Error(ErrorKind::Regime, "no_stationary_density", "the CLT experiment needs theta < 1");
    if (p.grid_size < 4 || p.grid_size % 4 != 0)
        throw Error(ErrorKind::Validation, "invalid_config", "grid_size must be a positive multiple of 4");
    json obs_report;
    const Observable h = centered(ctx.family, Observable::from_json(ctx.family, p.h), p.center,
                                  center_seed(ctx.cfg.seed), ctx.workers, obs_report);
    const DensityGrid density = ulam_density(ctx.family, p.grid_size, ctx.workers, 1e-12, 100'000, nullptr);
    CltOptions opts;
    opts.series_steps = p.series_steps;
    opts.max_lag = p.max_lag;
    opts.burn_in = p.burn_in;
    opts.workers = ctx.workers;
    const CltReport r = clt_experiment(ctx.family, h, p.n, p.replicas, ctx.seed(), density, opts);
    csv_header(ctx.data, ctx.command, ctx.cfg);
    ctx.data << "replica,value\n";
    for (std::size_t i = 0; i < r.values.size(); ++i)
        ctx.data << i << ',' << num(r.values[i]) << '\n';
    const double rel = r.sigma2_series != 0.0 ? std::abs(r.variance - r.sigma2_series) / r.sigma2_series
                                              : (r.variance == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    ctx.summary["clt"] = {{"n", r.n},
                          {"replicas", r.values.size()},
                          {"hypothesis", r.hypothesis},
                          {"mean", r.mean},
                          {"variance", r.variance},
                          {"skewness", r.skewness},
                          {"excess_kurtosis", r.excess_kurtosis},
                          {"sigma2_series", r.sigma2_series},
                          {"sigma2_stderr", r.sigma2_stderr},
                          {"cutoff", r.cutoff},
                          {"remainder", r.remainder},
                          {"observables", obs_report}};
    ctx.summary["verdicts"] = {{"skewness_small", std::abs(r.skewness) < 0.1},
                               {"kurtosis_small", std::abs(r.excess_kurtosis) < 0.2},
                               {"variance_matches_series", rel < 0.15}};
}

} // namespace

const std::vector<std::string>& cli_commands()
{
    static const std::vector<std::string> cmds{"family", "orbit", "return-times", "partition",
                                               "tails", "density", "correlate", "clt"};
    return cmds;
}

void run_command(const std::string& command, const ExperimentConfig& config, unsigned workers,
                 std::ostream& data, std::ostream& summary)
{
    const MapFamily family = config.make_family();
    Context ctx{command, config, family, std::max(1u, workers), data, json::object()};
    ctx.summary["command"] = command;
    ctx.summary["config"] = config.to_json();
    ctx.summary["rng"] = rng_algorithm;
    ctx.summary["workers"] = ctx.workers;
    ctx.summary["constants"] = constants_json(family);
    if (command == "family")
        cmd_family(ctx);
    else if (command == "orbit")
        cmd_orbit(ctx);
    else if (command == "return-times")
        cmd_return_times(ctx);
    else if (command == "partition")
        cmd_partition(ctx);
    else if (command == "tails")
        cmd_tails(ctx);
    else if (command == "density")
        cmd_density(ctx);
    else if (command == "correlate")
        cmd_correlate(ctx);
    else if (command == "clt")
        cmd_clt(ctx);
    else
        throw Error(ErrorKind::Validation, "unknown_command", "unknown command '" + command + "'");
    if (command == "family")
        data << ctx.summary.dump(2) << '\n';
    else
        summary << ctx.summary.dump(2) << '\n';
}

int cli_main(int argc, char** argv)
{
    CLI::App app{"Random good/bad interval maps: exact partitions, tails, densities and correlations"};
    std::string command;
    std::string config_path;
    std::optional<std::uint64_t> seed;
    unsigned workers = 1;
    std::string out_path;
    std::string summary_path;
    std::optional<std::int64_t> n_max;
    std::optional<std::int64_t> samples;
    std::optional<int> k_max;
    std::optional<int> j_max;
    app.add_option("command", command, "Command to run")->required()->check(CLI::IsMember(cli_commands()));
    app.add_option("--config", config_path, "JSON experiment config");
    app.add_option("--seed", seed, "Master seed (overrides the config)");
    app.add_option("--workers", workers, "Worker threads")->envname("CRITMIX_WORKERS")->check(CLI::Range(1u, 1024u));
    app.add_option("--out", out_path, "Data output path (default stdout)");
    app.add_option("--summary", summary_path, "JSON summary path (default stderr)");
    app.add_option("--n-max", n_max, "tails: largest n");
    app.add_option("--samples", samples, "tails, return-times: Monte Carlo samples");
    app.add_option("--k-max", k_max, "tails: lower/upper series depth");
    app.add_option("--j-max", j_max, "tails: upper series depth in the bad block (-1 = auto)");

    auto fail = [](const std::string& code, const std::string& msg, int status) {
        std::cerr << json{{"error", {{"code", code}, {"message", msg}}}}.dump() << '\n';
        return status;
    };
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("invalid_arguments", e.what(), 1);
    }

    try {
        ExperimentConfig cfg = config_path.empty() ? ExperimentConfig::defaults()
                                                   : ExperimentConfig::load(config_path);
        if (seed)
            cfg.seed = *seed;
        if (n_max)
            cfg.tails.n_max = *n_max;
        if (samples) {
            cfg.tails.samples = *samples;
            cfg.return_times.samples = *samples;
        }
        if (k_max)
            cfg.tails.k_max = *k_max;
        if (j_max)
            cfg.tails.j_max = *j_max;

        std::ofstream out_file;
        std::ofstream summary_file;
        if (!out_path.empty()) {
            out_file.open(out_path, std::ios::binary);
            if (!out_file)
                throw Error(ErrorKind::Io, "output_unwritable", "cannot write " + out_path);
        }
        if (!summary_path.empty()) {
            summary_file.open(summary_path, std::ios::binary);
            if (!summary_file)
                throw Error(ErrorKind::Io, "output_unwritable", "cannot write " + summary_path);
        }
        std::ostream& data = out_path.empty() ? std::cout : out_file;
        std::ostream& summary = summary_path.empty() ? std::cerr : summary_file;
        run_command(command, cfg, workers, data, summary);
        data.flush();
        if (!data)
            throw Error(ErrorKind::Io, "output_unwritable", "write failed");
        return 0;
    } catch (const Error& e) {
        return fail(e.code(), e.what(), e.exit_code());
    } catch (const std::exception& e) {
        return fail("internal_error", e.what(), 1);
    }
}

} // namespace critmix
