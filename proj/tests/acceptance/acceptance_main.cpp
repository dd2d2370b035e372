// One line per acceptance criterion. Criterion 4 as stated is unattainable
// (the lower bound 2 d_H <= d_TV is false for 1/2-normalized metrics); it is
// reported as FAIL next to the corrected chain and is the only failure the
// exit status tolerates.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "cbayes/distribution.hpp"
#include "cbayes/experiments.hpp"
#include "cbayes/posterior.hpp"
#include "cbayes/series_prior.hpp"

using namespace cbayes;
using json = nlohmann::json;

namespace {

constexpr std::uint64_t kSeed = 42;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::map<std::string, ExperimentReport> reports;

const ExperimentReport& run(const std::string& name) {
  auto it = reports.find(name);
  if (it == reports.end()) {
    it = reports.emplace(name, run_experiment(ExperimentConfig::from_json(json::object(), name, kSeed))).first;
  }
  return it->second;
}

const Verdict& verdict(const ExperimentReport& r, const std::string& name) {
  for (const auto& v : r.verdicts)
    if (v.name == name) return v;
  throw std::runtime_error("missing verdict " + name);
}

Outcome all_verdicts(const ExperimentReport& r) {
  std::size_t failed = 0;
  std::string first;
  for (const auto& v : r.verdicts) {
    if (!v.pass && failed++ == 0) first = v.name;
  }
  Outcome o{failed == 0, std::to_string(r.verdicts.size() - failed) + "/" + std::to_string(r.verdicts.size()) +
                             " verdicts pass"};
  if (failed) o.detail += ", first failure " + first;
  return o;
}

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

Outcome log_concavity() {
  const std::vector<std::pair<std::string, std::vector<Distribution1D>>> kinds{
      {"gaussian", {Distribution1D::gaussian(0, 1), Distribution1D::gaussian(-2, 0.1), Distribution1D::gaussian(3, 5),
                    Distribution1D::gaussian(0.5, 0.01), Distribution1D::gaussian(-10, 100)}},
      {"exponential", {Distribution1D::exponential(1), Distribution1D::exponential(0.1), Distribution1D::exponential(10),
                       Distribution1D::exponential(2.5), Distribution1D::exponential(0.01)}},
      {"laplace", {Distribution1D::laplace(0, 1), Distribution1D::laplace(1, 0.2), Distribution1D::laplace(-3, 4),
                   Distribution1D::laplace(0.5, 0.05), Distribution1D::laplace(10, 10)}},
      {"logistic", {Distribution1D::logistic(0, 1), Distribution1D::logistic(2, 0.3), Distribution1D::logistic(-1, 3),
                    Distribution1D::logistic(0, 0.05), Distribution1D::logistic(5, 10)}},
      {"gamma", {Distribution1D::gamma(1, 1), Distribution1D::gamma(2, 1), Distribution1D::gamma(5, 0.5),
                 Distribution1D::gamma(70.3, 0.2), Distribution1D::gamma(1.5, 3)}},
      {"uniform", {Distribution1D::uniform(0, 1), Distribution1D::uniform(-1, 1), Distribution1D::uniform(2, 2.1),
                   Distribution1D::uniform(-50, 50), Distribution1D::uniform(0.3, 0.7)}}};
  std::size_t checked = 0, passed = 0;
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& [kind, laws] : kinds) {
    for (const auto& d : laws) {
      std::vector<double> grid(200);
      const double lo = d.quantile(1e-3), hi = d.quantile(1 - 1e-3);
      for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = lo + (hi - lo) * static_cast<double>(i) / 199.0;
      const auto r = check_log_concavity(d, grid, 1e-8);
      ++checked;
      passed += r.pass ? 1 : 0;
      worst = std::max(worst, r.max_second_difference);
    }
  }
  return {passed == checked, std::to_string(passed) + "/" + std::to_string(checked) +
                                 " laws pass on 200-point grids, max second difference " + fmt(worst)};
}

Outcome convexity() {
  const auto& r = run("convexity");
  auto o = all_verdicts(r);
  const auto& s = verdict(r, "laplace_strict_lhs_oracle").measured;
  const auto& t = verdict(r, "laplace_strict_rhs_oracle").measured;
  const auto& e = verdict(r, "laplace_equality_lhs_oracle").measured;
  o.detail += "; strict lhs " + fmt(s.at("estimate")) + " rhs " + fmt(t.at("estimate")) + ", equality " +
              fmt(e.at("estimate"));
  return o;
}

Outcome hellinger_oracle() {
  const auto prior = PriorModel::product({Distribution1D::gaussian(0, 1)});
  const auto zero = Potential::custom([](std::span<const double>, const Eigen::VectorXd&) { return 0.0; }, 1);
  const auto shift = Potential::custom([](std::span<const double> u, const Eigen::VectorXd&) { return 0.5 - u[0]; }, 1);
  const PosteriorSpec s1(prior, zero), s2(prior, shift);
  const double exact = std::sqrt(1.0 - std::exp(-0.125));
  const auto q = hellinger(s1, s2, EstimatorMethod::quadrature, 2000, kSeed);
  const auto m = hellinger(s1, s2, EstimatorMethod::prior_mc, 100000, kSeed);
  const bool ok = std::abs(q.value - exact) <= 1e-4 && std::abs(m.value - exact) <= 3.0 * m.std_error;
  return {ok, "exact " + fmt(exact, 7) + ", quadrature " + fmt(q.value, 7) + ", MC " + fmt(m.value, 7) + " +/- " +
                  fmt(m.std_error, 2)};
}

Outcome metric_sandwich() {
  const auto& r = run("metrics");
  const auto& st = verdict(r, "random_pairs_chain_as_stated");
  const auto& co = verdict(r, "random_pairs_chain_corrected");
  const bool stated = st.pass && verdict(r, "gaussian_chain_as_stated").pass;
  const auto count = [](const Verdict& v) {
    return std::to_string(v.measured.at("satisfied").get<std::size_t>()) + "/" +
           std::to_string(v.measured.at("pairs").get<std::size_t>());
  };
  const std::string d = "stated chain 2 d_H <= d_TV <= sqrt8 d_H holds on " + count(st) + " pairs" +
                        (verdict(r, "gaussian_chain_as_stated").pass ? "" : " and fails on the Gaussian pair") +
                        "; corrected chain d_H^2 <= d_TV <= sqrt2 d_H holds on " + count(co) + " pairs" +
                        (verdict(r, "gaussian_chain_corrected").pass ? " and on the Gaussian pair" : "");
  return {stated, d};
}

Outcome stability() {
  const auto& r = run("stability");
  auto o = all_verdicts(r);
  if (r.fit) o.detail += "; slope " + fmt(r.fit->slope, 4);
  return o;
}

Outcome consistency() {
  const auto& r = run("consistency");
  auto o = all_verdicts(r);
  if (r.fit) o.detail += "; Hellinger slope " + fmt(r.fit->slope, 4);
  o.detail += "; projection slope " + fmt(verdict(r, "projection_error_slope").measured.get<double>(), 4);
  return o;
}

Outcome exp_moment() {
  const auto r = estimate_exp_moment(SeriesPrior{}, 0.1, 64, 100000, kSeed);
  SeriesPrior single;
  single.schedule = CoefficientSchedule::explicit_list({1.0});
  const auto d = estimate_exp_moment(single, 2.0, 1, 100000, kSeed);
  const bool ok = r.doubling_drift < 0.02 && !d.stable;
  return {ok, "Laplace series prior drift " + fmt(r.doubling_drift, 3) + "; divergent case drift " + fmt(d.doubling_drift, 3) +
                  (d.stable ? " (not flagged)" : " (flagged)")};
}

Outcome reproducibility() {
  std::size_t same = 0;
  std::string bad;
  for (const auto& name : experiment_names()) {
    const auto first = run(name).to_json().dump();
    const auto again = run_experiment(ExperimentConfig::from_json(json::object(), name, kSeed)).to_json().dump();
    if (first == again) {
      ++same;
    } else {
      bad += " " + name;
    }
  }
  return {bad.empty(), std::to_string(same) + "/" + std::to_string(experiment_names().size()) +
                           " suites byte-identical on rerun" + (bad.empty() ? "" : ", differing:" + bad)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* title;
    double limit_s;  // 0: no limit
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria{
      {1, "log-concavity of the 1-D laws", 10, log_concavity},
      {2, "convexity inequality", 60, convexity},
      {3, "Hellinger closed-form oracle", 30, hellinger_oracle},
      {4, "metric sandwich on 20 pairs", 120, metric_sandwich},
      {5, "stability in the data", 300, stability},
      {6, "consistency rate", 300, consistency},
      {7, "assumption audit", 30, [] { return all_verdicts(run("audit")); }},
      {8, "MAP and l1 link", 30, [] { return all_verdicts(run("map_demo")); }},
      {9, "exponential-moment diagnostic", 60, exp_moment},
      {10, "reproducibility", 0, reproducibility},
  };
  const std::set<int> known_unattainable{4};

  int unexpected = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.limit_s <= 0 || secs < c.limit_s;
    const bool pass = o.pass && in_time;
    std::string timing = fmt(secs, 3) + " s";
    if (c.limit_s > 0) timing += " / limit " + fmt(c.limit_s, 3) + " s";
    std::printf("criterion %2d %s  %-32s [%s] %s\n", c.id, pass ? "PASS" : "FAIL", c.title, timing.c_str(),
                o.detail.c_str());
    if (!pass && !known_unattainable.count(c.id)) ++unexpected;
    if (!pass && known_unattainable.count(c.id))
      std::printf("             known unattainable as stated; see README, section on the metric chain\n");
  }
  std::fflush(stdout);
  return unexpected == 0 ? 0 : 1;
}
