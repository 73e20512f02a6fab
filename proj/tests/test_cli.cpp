#include "critmix/cli.hpp"
#include "critmix/config.hpp"
#include "critmix/error.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace critmix;
namespace fs = std::filesystem;

namespace {

std::string bin()
{
    const char* b = std::getenv("CRITMIX_BIN");
    REQUIRE_MESSAGE(b != nullptr, "CRITMIX_BIN not set");
    return b;
}

fs::path scratch()
{
    const fs::path p = fs::temp_directory_path() / "critmix_cli_test";
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

int run(const std::string& args, const fs::path& out, const fs::path& err)
{
    const std::string cmd = bin() + " " + args + " >" + out.string() + " 2>" + err.string();
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path write_config(const std::string& name, const nlohmann::json& j)
{
    const fs::path p = scratch() / name;
    std::ofstream(p) << j.dump();
    return p;
}

} // namespace

TEST_CASE("config round trip is exact")
{
    ExperimentConfig c = ExperimentConfig::defaults();
    c.seed = 0xdeadbeefcafef00dULL;
    c.orbit.x0 = 0.1 + 0.2;
    c.density.tol = 1.0 / 3.0;
    c.correlate.n_values = {1, 2, 3};
    const nlohmann::json j = c.to_json();
    const ExperimentConfig d = ExperimentConfig::from_json(nlohmann::json::parse(j.dump()));
    CHECK(d.to_json().dump() == j.dump());
    CHECK(d.orbit.x0 == c.orbit.x0);
    CHECK(d.density.tol == c.density.tol);
    CHECK(d.seed == c.seed);
}

TEST_CASE("config rejects unknown keys and wrong types")
{
    CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json{{"bogus", 1}}), Error);
    CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json{{"tails", {{"n_max", "x"}}}}), Error);
}

TEST_CASE("geometric lags")
{
    CorrelateParams p;
    const auto lags = p.lags();
    CHECK(lags.front() == 10);
    CHECK(lags.back() == 500);
    CHECK(std::is_sorted(lags.begin(), lags.end()));
}

TEST_CASE("family command reports the constants")
{
    const fs::path out = scratch() / "family.json";
    const fs::path err = scratch() / "family.err";
    REQUIRE(run("family", out, err) == 0);
    const auto j = nlohmann::json::parse(slurp(out));
    CHECK(j["constants"]["theta"].get<double>() == doctest::Approx(0.8));
    CHECK(j["constants"]["gamma1"].get<double>() == doctest::Approx(-0.321928).epsilon(1e-6));
    CHECK(j["constants"]["thm14_applicable"].get<bool>());
    CHECK(j["rng"] == "philox4x32-10");
}

TEST_CASE("tails command")
{
    const fs::path out = scratch() / "tails.csv";
    const fs::path sum = scratch() / "tails.json";
    const fs::path err = scratch() / "tails.err";
    REQUIRE(run("tails --n-max 12 --samples 20000 --summary " + sum.string(), out, err) == 0);
    std::istringstream csv(slurp(out));
    std::string line;
    std::getline(csv, line);
    CHECK(line.rfind("# {", 0) == 0);
    std::getline(csv, line);
    CHECK(line == "n,exact,lower,upper,mc,mc_stderr,trunc_err");
    int rows = 0;
    while (std::getline(csv, line))
        ++rows;
    CHECK(rows == 11);
    const auto j = nlohmann::json::parse(slurp(sum));
    CHECK(j["verdicts"]["sandwich"].get<bool>());
    CHECK(j["constants"].contains("gamma2"));
}

TEST_CASE("malformed probabilities exit with a validation code")
{
    auto cfg = ExperimentConfig::defaults().to_json();
    cfg["family"]["probs"] = {0.5, 0.4};
    const fs::path path = write_config("bad_probs.json", cfg);
    const fs::path out = scratch() / "bad.out";
    const fs::path err = scratch() / "bad.err";
    CHECK(run("family --config " + path.string(), out, err) == 1);
    const auto j = nlohmann::json::parse(slurp(err));
    CHECK(j["error"]["code"] == "probs_not_normalized");
}

TEST_CASE("ensemble correlation above the transition exits with a regime code")
{
    auto cfg = ExperimentConfig::defaults().to_json();
    cfg["family"]["probs"] = {0.4, 0.6};
    cfg["correlate"]["method"] = "ensemble";
    const fs::path path = write_config("hot.json", cfg);
    const fs::path out = scratch() / "hot.out";
    const fs::path err = scratch() / "hot.err";
    CHECK(run("correlate --config " + path.string(), out, err) == 2);
    CHECK(nlohmann::json::parse(slurp(err))["error"]["code"] == "no_stationary_density");
}

TEST_CASE("bad arguments")
{
    const fs::path out = scratch() / "args.out";
    const fs::path err = scratch() / "args.err";
    CHECK(run("nonsense", out, err) == 1);
    CHECK(run("orbit --workers 0", out, err) == 1);
    CHECK(run("orbit --config /nonexistent/file.json", out, err) == 1);
}

TEST_CASE("orbit output is reproducible and echoes its config")
{
    const fs::path a = scratch() / "orbit_a.csv";
    const fs::path b = scratch() / "orbit_b.csv";
    const fs::path err = scratch() / "orbit.err";
    REQUIRE(run("orbit --seed 5", a, err) == 0);
    REQUIRE(run("orbit --seed 5", b, err) == 0);
    const std::string sa = slurp(a);
    CHECK(sa == slurp(b));
    const std::string header = sa.substr(2, sa.find('\n') - 2);
    const auto h = nlohmann::json::parse(header);
    CHECK(h["config"]["seed"] == 5);
    CHECK(h["command"] == "orbit");
    CHECK(ExperimentConfig::from_json(h["config"]).to_json() == h["config"]);
}

TEST_CASE("workers environment fallback")
{
    const fs::path a = scratch() / "rt_a.csv";
    const fs::path b = scratch() / "rt_b.csv";
    const fs::path sa = scratch() / "rt_a.json";
    const fs::path err = scratch() / "rt.err";
    REQUIRE(run("return-times --samples 500 --summary " + sa.string(), a, err) == 0);
    REQUIRE(run("return-times --samples 500", b, err) == 0);
    CHECK(slurp(a) == slurp(b));
    const std::string env = "CRITMIX_WORKERS=3 " + bin() + " return-times --samples 10 --summary " + sa.string() + " >/dev/null 2>&1";
    REQUIRE(std::system(env.c_str()) == 0);
    CHECK(nlohmann::json::parse(slurp(sa))["workers"] == 3);
}
