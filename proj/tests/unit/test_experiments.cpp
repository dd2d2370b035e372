#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cbayes/experiments.hpp"

using namespace cbayes;
using json = nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CBAYES_CLI_PATH) + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config parsing") {
  CHECK_THROWS_WITH_AS(ExperimentConfig::from_json(json{{"experiment", "audit"}}), "config needs a seed",
                       std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"seed", 1}}), std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"experiment", "audit"}, {"seed", 1}}, std::string("map_demo")),
                  std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"seed", 1}}, std::string("nonsense")), std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json::array(), std::string("audit"), 1), std::invalid_argument);

  const auto c = ExperimentConfig::from_json(json{{"experiment", "map_demo"}, {"seed", 3}, {"instances", 2}}, std::nullopt, 9);
  CHECK(c.seed == 9);
  CHECK(c.params.at("instances") == 2);
  CHECK(c.params.at("sigma") == default_parameters("map_demo").at("sigma"));
  CHECK_FALSE(c.params.contains("seed"));
  const auto again = ExperimentConfig::from_json(c.to_json());
  CHECK(again.params == c.params);
  CHECK(again.seed == c.seed);
  CHECK(config_hash(c.to_json()) == config_hash(again.to_json()));
  CHECK(config_hash(c.to_json()) != config_hash(ExperimentConfig::from_json(c.to_json(), std::nullopt, 10).to_json()));
  for (const auto& name : experiment_names()) CHECK(default_parameters(name).is_object());
}

TEST_CASE("log-log fit") {
  const std::vector<double> x{2, 4, 8, 16, 32};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * std::pow(v, -1.5));
  const auto f = fit_loglog(x, y);
  CHECK(f.slope == doctest::Approx(-1.5).epsilon(1e-12));
  CHECK(std::exp(f.intercept) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(f.slope_std_error < 1e-12);
  CHECK(f.points == 5);

  // Perturbed points: the interval brackets the estimate and widens.
  std::vector<double> noisy = y;
  noisy[1] *= 1.2;
  noisy[3] *= 0.85;
  const auto g = fit_loglog(x, noisy);
  CHECK(g.ci_lower < g.slope);
  CHECK(g.slope < g.ci_upper);
  CHECK(g.ci_upper - g.ci_lower > 0.0);
  // Student t with 3 degrees of freedom: 97.5% quantile 3.182446.
  CHECK((g.ci_upper - g.slope) / g.slope_std_error == doctest::Approx(3.182446).epsilon(1e-5));

  const std::vector<double> two{1, 2};
  CHECK_THROWS_AS(fit_loglog(two, two), std::invalid_argument);
  const std::vector<double> bad{1, 2, 3, 4};
  const std::vector<double> nonpos{1, 0, -1, 2};
  CHECK_THROWS_AS(fit_loglog(bad, nonpos), std::invalid_argument);
}

TEST_CASE("reports are reproducible to the byte") {
  for (const char* name : {"map_demo", "audit"}) {
    const auto c = ExperimentConfig::from_json(json::object(), std::string(name), 42);
    const auto a = run_experiment(c).to_json().dump();
    const auto b = run_experiment(c).to_json().dump();
    CHECK(a == b);
  }
  const auto report = run_experiment(ExperimentConfig::from_json(json::object(), std::string("map_demo"), 42));
  CHECK(report.all_pass());
  const auto j = report.to_json();
  CHECK(j.at("provenance").at("version") == kVersion);
  CHECK(j.contains("verdicts"));
  std::ostringstream csv;
  report.write_csv(csv);
  CHECK(csv.str().rfind("x,value,stderr,method,effort\n", 0) == 0);
}

TEST_CASE("CLI exit codes") {
  const auto dir = std::filesystem::temp_directory_path() / "cbayes_cli_test";
  std::filesystem::create_directories(dir);
  const auto out = (dir / "r.json").string(), csv = (dir / "p.csv").string(), cfg = (dir / "c.json").string();

  CHECK(run_cli("run map_demo --seed 1 --out " + out + " --csv " + csv) == 0);
  CHECK(json::parse(slurp(out)).at("config").at("seed") == 1);
  CHECK(slurp(csv).rfind("x,value,stderr,method,effort\n", 0) == 0);

  // A failing verdict exits 1: demand an impossible closed-form tolerance.
  std::ofstream(cfg) << R"({"closed_form_tolerance": -1})";
  CHECK(run_cli("run map_demo --seed 1 --config " + cfg + " --out " + out) == 1);

  CHECK(run_cli("run map_demo --out " + out) == 2);  // no seed anywhere
  std::ofstream(cfg) << "{not json";
  CHECK(run_cli("run map_demo --seed 1 --config " + cfg + " --out " + out) == 2);
  CHECK(run_cli("run nonsense --seed 1 --out " + out) != 0);

  CHECK(run_cli("sample-prior --seed 3 --truncation 4 --out " + csv) == 0);
  CHECK(slurp(csv).rfind("index,coefficient\n", 0) == 0);
  std::ofstream(cfg) << R"({"A": [[1]], "y": [2], "sigma": 1, "lambda": 1})";
  CHECK(run_cli("map --config " + cfg + " --out " + out) == 0);
  CHECK(json::parse(slurp(out)).at("minimizer")[0].get<double>() == doctest::Approx(1.0));
  std::ofstream(cfg) << R"({"prior": {"product": [{"kind": "gaussian", "params": {"m": 0, "sigma": 1}}]},
    "potential1": {"model": {"kind": "linear", "matrix": [[1]]}, "noise": {"sigma2": 1}, "y": [0]},
    "potential2": {"model": {"kind": "linear", "matrix": [[1]]}, "noise": {"sigma2": 1}, "y": [1]}})";
  CHECK(run_cli("hellinger --config " + cfg + " --method quadrature --effort 400 --seed 1 --out " + out) == 0);
  // Posteriors N(0, 1/2) and N(1/2, 1/2): d_H^2 = 1 - exp(-1/16).
  CHECK(json::parse(slurp(out)).at("hellinger").at("value").get<double>() ==
        doctest::Approx(std::sqrt(1.0 - std::exp(-1.0 / 16.0))).epsilon(1e-6));
  std::filesystem::remove_all(dir);
}
