#ifndef CRITMIX_CONFIG_HPP
#define CRITMIX_CONFIG_HPP

#include "critmix/maps.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace critmix {

struct OrbitParams {
    std::uint64_t steps = 1000;
    double x0 = 0.3;
};

struct ReturnTimesParams {
    std::int64_t samples = 1000;
    std::int64_t budget = 1'000'000;
};

struct PartitionParams {
    std::int64_t phi_max = 10;
    bool include_u = false;
    std::uint64_t max_cells = 2'000'000;
};

struct TailsParams {
    std::int64_t n_max = 12;
    std::int64_t samples = 100'000;
    int k_max = 60;
    /// -1 selects the depth from the constant s.
    int j_max = -1;
    std::int64_t budget = 1'000'000;
};

struct DensityParams {
    std::uint64_t grid_size = 512;
    std::uint64_t orbit_steps = 10'000'000;
    std::uint64_t burn_in = 10'000;
    double tol = 1e-12;
    std::int64_t iter_max = 100'000;
};

struct CorrelateParams {
    std::string method = "timeseries";
    std::uint64_t budget = 100'000'000;
    std::uint64_t burn_in = 100'000;
    unsigned batches = 32;
    /// Explicit lags; when empty, n_points geometric lags in [n_min, n_max].
    std::vector<std::int64_t> n_values;
    std::int64_t n_min = 10;
    std::int64_t n_max = 500;
    int n_points = 25;
    std::int64_t fit_lo = 10;
    std::int64_t fit_hi = 500;
    nlohmann::json f;
    nlohmann::json h;
    /// null, or {"compensator": observable, "steps": N} to center h.
    nlohmann::json center;
    std::uint64_t grid_size = 512;
    /// "ulam" or "orbit".
    std::string density_source = "ulam";

    std::vector<std::int64_t> lags() const;
};

struct CltParams {
    std::int64_t n = 10'000;
    std::int64_t replicas = 10'000;
    std::uint64_t series_steps = 200'000'000;
    std::int64_t max_lag = 2000;
    std::uint64_t burn_in = 100'000;
    nlohmann::json h;
    nlohmann::json center;
    std::uint64_t grid_size = 256;
};

struct ExperimentConfig {
    nlohmann::json family;
    std::uint64_t seed = 1;
    OrbitParams orbit;
    ReturnTimesParams return_times;
    PartitionParams partition;
    TailsParams tails;
    DensityParams density;
    CorrelateParams correlate;
    CltParams clt;

    static ExperimentConfig defaults();
    /// Missing keys take their defaults; wrong types raise "invalid_config".
    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig load(const std::string& path);
    nlohmann::json to_json() const;

    MapFamily make_family() const { return MapFamily::from_json(family); }
};

nlohmann::json reference_family_json();
nlohmann::json default_bump_json();
nlohmann::json default_compensator_json();

} // namespace critmix

#endif
