#include "critmix/config.hpp"

#include "critmix/error.hpp"

#include <cmath>
#include <fstream>

namespace critmix {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(OrbitParams, steps, x0)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ReturnTimesParams, samples, budget)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(PartitionParams, phi_max, include_u, max_cells)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TailsParams, n_max, samples, k_max, j_max, budget)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DensityParams, grid_size, orbit_steps, burn_in, tol,
                                                iter_max)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(CorrelateParams, method, budget, burn_in, batches,
                                                n_values, n_min, n_max, n_points, fit_lo, fit_hi, f,
                                                h, center, grid_size, density_source)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(CltParams, n, replicas, series_steps, max_lag,
                                                burn_in, h, center, grid_size)

nlohmann::json reference_family_json()
{
    return nlohmann::json::parse(R"({"maps":[{"kind":"good","exponent":2},{"kind":"bad","exponent":2}],"probs":[0.6,0.4]})");
}

nlohmann::json default_bump_json()
{
    return nlohmann::json{{"kind", "bump_x"}, {"lo", 0.5625}, {"hi", 0.6875}};
}

nlohmann::json default_compensator_json()
{
    return nlohmann::json{{"kind", "bump_x"}, {"lo", 0.52}, {"hi", 0.73}};
}

std::vector<std::int64_t> CorrelateParams::lags() const
{
    if (!n_values.empty())
        return n_values;
    if (n_min < 0 || n_max < n_min || n_points < 1)
        throw Error(ErrorKind::Validation, "invalid_config", "lag range must satisfy 0 <= n_min <= n_max");
    std::vector<std::int64_t> out;
    if (n_points == 1 || n_min == n_max)
        return {n_min};
    const double lo = std::log(static_cast<double>(std::max<std::int64_t>(n_min, 1)));
    const double hi = std::log(static_cast<double>(n_max));
    if (n_min == 0)
        out.push_back(0);
    for (int i = 0; i < n_points; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(n_points - 1);
        const auto n = static_cast<std::int64_t>(std::llround(std::exp(lo + t * (hi - lo))));
        if (out.empty() || out.back() < n)
            out.push_back(n);
    }
    return out;
}

ExperimentConfig ExperimentConfig::defaults()
{
    ExperimentConfig c;
    c.family = reference_family_json();
    c.correlate.f = default_bump_json();
    c.correlate.h = default_bump_json();
    c.clt.h = default_bump_json();
    c.clt.center = nlohmann::json{{"compensator", default_compensator_json()}, {"steps", 200'000'000}};
    return c;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j)
{
    if (!j.is_object())
        throw Error(ErrorKind::Validation, "invalid_config", "config must be a JSON object");
    static const char* known[] = {"family", "seed", "orbit", "return_times", "partition",
                                  "tails", "density", "correlate", "clt", "rng"};
    for (const auto& [k, v] : j.items()) {
        bool ok = false;
        for (const char* name : known)
            ok = ok || k == name;
        if (!ok)
            throw Error(ErrorKind::Validation, "invalid_config", "unknown config key '" + k + "'");
    }
    ExperimentConfig c = defaults();
    try {
        if (j.contains("family"))
            c.family = j.at("family");
        c.seed = j.value("seed", c.seed);
        auto section = [&](const char* key, auto& target) {
            if (j.contains(key))
                j.at(key).get_to(target);
        };
        section("orbit", c.orbit);
        section("return_times", c.return_times);
        section("partition", c.partition);
        section("tails", c.tails);
        section("density", c.density);
        section("correlate", c.correlate);
        section("clt", c.clt);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Validation, "invalid_config", e.what());
    }
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorKind::Io, "config_unreadable", "cannot open " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Validation, "invalid_config", e.what());
    }
    return from_json(j);
}

nlohmann::json ExperimentConfig::to_json() const
{
    return nlohmann::json{{"family", family},
                          {"seed", seed},
                          {"orbit", orbit},
                          {"return_times", return_times},
                          {"partition", partition},
                          {"tails", tails},
                          {"density", density},
                          {"correlate", correlate},
                          {"clt", clt}};
}

} // namespace critmix
