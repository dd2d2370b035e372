#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "cbayes/experiments.hpp"
#include "cbayes/likelihood.hpp"
#include "cbayes/map_l1.hpp"
#include "cbayes/posterior.hpp"
#include "cbayes/series_prior.hpp"

namespace {

using json = nlohmann::json;

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return json::parse(in);
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

cbayes::PriorModel prior_model_from(const json& j) {
  if (j.contains("product")) {
    std::vector<cbayes::Distribution1D> factors;
    for (const auto& f : j.at("product")) factors.push_back(cbayes::distribution_from_json(f));
    return cbayes::PriorModel::product(std::move(factors));
  }
  return cbayes::PriorModel::series(cbayes::prior_from_json(j.at("series")), j.at("truncation").get<std::size_t>());
}

Eigen::MatrixXd matrix_from(const json& rows) {
  const auto r = rows.get<std::vector<std::vector<double>>>();
  if (r.empty()) throw std::invalid_argument("empty matrix");
  Eigen::MatrixXd a(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r[0].size()));
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i].size() != r[0].size()) throw std::invalid_argument("ragged matrix");
    for (std::size_t k = 0; k < r[i].size(); ++k) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = r[i][k];
  }
  return a;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian inverse problems with convex priors: verification suites and tools"};
  app.require_subcommand(1);

  std::string experiment, config_path, out_path, csv_path;
  std::optional<std::uint64_t> seed;
  auto* run = app.add_subcommand("run", "Run a verification experiment and write its report");
  run->add_option("experiment", experiment, "stability | consistency | convexity | metrics | audit | map_demo")
      ->required()
      ->check(CLI::IsMember(cbayes::experiment_names()));
  run->add_option("--config", config_path, "JSON config merged over the built-in defaults");
  run->add_option("--out", out_path, "report JSON path")->required();
  run->add_option("--csv", csv_path, "points CSV path (x, value, stderr, method, effort)");
  run->add_option("--seed", seed, "overrides the config seed");

  std::string prior_path, sample_out;
  std::size_t truncation = 16, grid = 0;
  std::uint64_t sample_seed = 0;
  auto* sample = app.add_subcommand("sample-prior", "Draw one truncated prior field");
  sample->add_option("--prior", prior_path, "series prior JSON (default: Laplace, s = 5/4)");
  sample->add_option("--truncation", truncation, "truncation level N");
  sample->add_option("--seed", sample_seed, "random seed")->required();
  sample->add_option("--grid", grid, "if > 0, write field values on this many equispaced points instead");
  sample->add_option("--out", sample_out, "CSV path (default stdout)");

  std::string pair_path, method = "prior_mc", pair_out;
  std::size_t effort = 100000;
  std::uint64_t pair_seed = 0;
  auto* hell = app.add_subcommand("hellinger", "Hellinger and total-variation distance between two posteriors");
  hell->add_option("--config", pair_path,
                   "JSON {prior: {series, truncation} | {product}, potential1, potential2}")
      ->required();
  hell->add_option("--method", method, "prior_mc | quadrature")->check(CLI::IsMember({"prior_mc", "quadrature"}));
  hell->add_option("--effort", effort, "samples (prior_mc) or nodes per dimension (quadrature)");
  hell->add_option("--seed", pair_seed, "random seed")->required();
  hell->add_option("--out", pair_out, "JSON path (default stdout)");

  std::string map_path, map_out;
  auto* map = app.add_subcommand("map", "l1-regularized MAP estimate by iterative soft thresholding");
  map->add_option("--config", map_path, "JSON {A, y, sigma, lambda[, tol]}")->required();
  map->add_option("--out", map_out, "JSON path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      json cfg = config_path.empty() ? json::object() : read_json(config_path);
      const auto config = cbayes::ExperimentConfig::from_json(cfg, experiment, seed);
      const auto report = cbayes::run_experiment(config);
      write_text(out_path, report.to_json().dump(2) + "\n");
      if (!csv_path.empty()) {
        std::ostringstream csv;
        report.write_csv(csv);
        write_text(csv_path, csv.str());
      }
      for (const auto& v : report.verdicts) {
        std::cerr << (v.pass ? "PASS " : "FAIL ") << v.name << "  [" << v.tolerance << "]\n";
      }
      return report.all_pass() ? 0 : 1;
    }
    if (*sample) {
      const auto prior = prior_path.empty() ? cbayes::SeriesPrior{} : cbayes::prior_from_json(read_json(prior_path));
      const auto field = cbayes::sample_field(prior, truncation, sample_seed);
      std::ostringstream out;
      if (grid > 0) {
        out << "x,value\n";
        out.precision(17);
        for (std::size_t j = 0; j < grid; ++j) {
          const double x = static_cast<double>(j) / static_cast<double>(grid);
          out << x << ',' << cbayes::evaluate_field(prior.basis, field, x) << '\n';
        }
      } else {
        cbayes::write_field_csv(out, prior.basis, field);
      }
      write_text(sample_out, out.str());
      return 0;
    }
    if (*hell) {
      const json j = read_json(pair_path);
      const auto prior = prior_model_from(j.at("prior"));
      const cbayes::PosteriorSpec s1(prior, cbayes::potential_from_json(j.at("potential1")));
      const cbayes::PosteriorSpec s2(prior, cbayes::potential_from_json(j.at("potential2")));
      const auto m = cbayes::method_from_string(method);
      const json out{{"hellinger", cbayes::estimate_to_json(cbayes::hellinger(s1, s2, m, effort, pair_seed))},
                     {"total_variation", cbayes::estimate_to_json(cbayes::total_variation(s1, s2, m, effort, pair_seed))}};
      write_text(pair_out, out.dump(2) + "\n");
      return 0;
    }
    if (*map) {
      const json j = read_json(map_path);
      const auto a = matrix_from(j.at("A"));
      const auto yv = j.at("y").get<std::vector<double>>();
      const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(yv.data(), static_cast<Eigen::Index>(yv.size()));
      const auto r = cbayes::map_estimate_l1(a, y, j.at("sigma").get<double>(), j.at("lambda").get<double>(),
                                             j.value("tol", 1e-12));
      const json out{{"minimizer", std::vector<double>(r.minimizer.data(), r.minimizer.data() + r.minimizer.size())},
                     {"objective", r.objective},
                     {"iterations", r.iterations}};
      write_text(map_out, out.dump(2) + "\n");
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
