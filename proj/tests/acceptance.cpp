// Acceptance run: one PASS/FAIL line per criterion. Exit status is the number
// of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "hwall/capacity.hpp"
#include "hwall/experiment.hpp"
#include "hwall/green.hpp"
#include "hwall/observables.hpp"
#include "hwall/sampler.hpp"

using namespace hwall;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string f(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

fs::path work_dir() {
  const fs::path p = fs::temp_directory_path() / "hwall_acceptance";
  return p;
}

Json run(const std::string& name, const Json& config) {
  const fs::path out = work_dir() / name;
  fs::remove_all(out);
  run_experiment(config, work_dir(), out);
  return read_json(out / "summary.json")["results"];
}

Json base(const std::string& kind) {
  Json c;
  c["schema_version"] = kSchemaVersion;
  c["kind"] = kind;
  return c;
}

Verdict green_sampler() {
  Json c = base("green_validation");
  c["N"] = Json::array({6});
  c["padding"] = 1;
  c["samples"] = 100000;
  c["schedule"] = Json{{"burn_in", 1000}, {"thinning", 1}, {"samples", 100000}};
  c["seed"] = 11;
  const Json r = run("c1_green", c)["green_validation"][0];
  bool ok = r["entries_over_4se"].get<int>() == 0 && r["green_finite_max_deviation"].get<double>() < 1e-10;
  double worst = 0.0;
  for (const Json& m : r["moments"]) worst = std::max(worst, std::abs(m["z_vs_exact"].get<double>()));
  ok = ok && worst <= 4.0;
  return {ok, "sites=" + std::to_string(r["sites"].get<int>()) + " max|z| cov=" +
                  f(r["max_abs_z"].get<double>()) + " over4se=" +
                  std::to_string(r["entries_over_4se"].get<int>()) + "/" +
                  std::to_string(r["entries"].get<int>()) + " (null expectation " +
                  f(r["entries"].get<double>() * std::erfc(4.0 / std::sqrt(2.0)), 2) + ") |G_finite-C|=" +
                  f(r["green_finite_max_deviation"].get<double>(), 2) +
                  " max|z| moments=" + f(worst)};
}

Verdict conditioned_oracle() {
  const LatticeDomain domain = build_domain(ShapeSpec::cube(3), 4, 3, 1);
  const Index n = domain.size();
  const BoundaryCondition bc = BoundaryCondition::affine(1.0, Eigen::VectorXd::Zero(3));
  const WallField wall{WallSpec::flat(0.0), Eigen::VectorXd::Zero(n)};

  const ExactSampler exact(domain, bc);
  std::vector<Index> rows;
  for (Index i = 0; i < n; ++i) {
    rows.push_back(std::lower_bound(exact.interior().begin(), exact.interior().end(),
                                    domain.flat_of(i)) -
                   exact.interior().begin());
  }
  std::vector<std::vector<double>> accepted(static_cast<std::size_t>(n));
  Index draws = 0;
  for (Index first = 0; first < 2'000'000; first += 8192) {
    const Eigen::MatrixXd x = exact.interior_samples(77, first, 8192);
    for (Index k = 0; k < x.cols(); ++k) {
      bool above = true;
      for (Index i = 0; i < n && above; ++i) above = x(rows[static_cast<std::size_t>(i)], k) >= 0.0;
      if (!above) continue;
      for (Index i = 0; i < n; ++i) {
        accepted[static_cast<std::size_t>(i)].push_back(x(rows[static_cast<std::size_t>(i)], k));
      }
    }
    draws += x.cols();
  }

  Schedule sched;
  sched.burn_in = 2000;
  sched.thinning = 1;
  sched.samples = 400000;
  std::vector<std::vector<double>> chain(static_cast<std::size_t>(n));
  sample_conditioned(domain, wall, bc, sched, 78, 1.0, [&](Index, const SamplerState& st) {
    const Eigen::VectorXd v = site_values(st.field, domain);
    for (Index i = 0; i < n; ++i) chain[static_cast<std::size_t>(i)].push_back(v[i]);
  });

  double worst = 0.0;
  for (Index i = 0; i < n; ++i) {
    const Summary a = iid_summary(accepted[static_cast<std::size_t>(i)]);
    const Summary b = batch_summary(chain[static_cast<std::size_t>(i)]);
    worst = std::max(worst, std::abs(a.mean - b.mean) / std::hypot(a.se, b.se));
  }
  const double rate = static_cast<double>(accepted[0].size()) / static_cast<double>(draws);
  return {worst <= 4.0, "sites=" + std::to_string(n) + " acceptance=" + f(rate) +
                            " accepted=" + std::to_string(accepted[0].size()) +
                            " max|z|=" + f(worst)};
}

Verdict green_constants() {
  const DiagonalSeries a = green_infinite_diag_at(3, 20000);
  const DiagonalSeries b = green_infinite_diag_at(3, 40000);
  const double gap = std::abs(a.value - b.value);
  std::vector<double> gl;
  for (int L : {2, 4, 8, 16}) gl.push_back(conditional_variance_box(L, 3));
  bool ok = gap <= 1e-4 && gl[0] == 1.0;
  for (std::size_t i = 1; i < gl.size(); ++i) ok = ok && gl[i] > gl[i - 1];
  ok = ok && gl.back() < b.value;
  return {ok, "G=" + f(b.value, 10) + " gap=" + f(gap, 2) + " G_L=" + f(gl[0]) + "," + f(gl[1]) +
                  "," + f(gl[2]) + "," + f(gl[3])};
}

Verdict rd_plateau() {
  const TailConstants tc = fit_Rd(3, 20, 40);
  return {tc.plateau_ratio <= 1.05,
          "R_d=" + f(tc.R_d, 6) + " plateau=" + f(tc.plateau_ratio, 6) +
              " points=" + std::to_string(tc.points)};
}

Verdict capacity() {
  const double R = rd_asymptotic(3);
  const ShapeSpec ball = ShapeSpec::ball(3, 1.0);
  const ShapeSpec cube = ShapeSpec::cube(3);
  const CapacityEstimate bp = capacity_primal_study(ball, 5.0, {0.25, 0.125, 0.0625});
  const CapacityEstimate bd = capacity_dual_study(ball, {1.0 / 6, 1.0 / 8, 1.0 / 10}, R);
  const CapacityEstimate cp = capacity_primal_study(cube, 5.0, {0.25, 0.125, 0.0625});
  const CapacityEstimate cd = capacity_dual_study(cube, {1.0 / 8, 1.0 / 12, 1.0 / 16}, R);
  const double ball_dev = std::abs(bp.value / bd.value - 1.0);
  const double cube_dev = std::abs(cp.value / cd.value - 1.0);

  const CapacityEstimate c1 = capacity_dual(cube, 0.125, R);
  const CapacityEstimate c2 = capacity_dual(ShapeSpec::cube(3, 2.0), 0.125, R);
  const double scaling = c2.value / c1.value;
  const double scaling_dev = std::abs(scaling / 2.0 - 1.0);

  const CapacityEstimate disc = capacity_discrete(cube, 32, 3, 400000, 5);
  const double disc_dev = std::abs(disc.value / cd.value - 1.0);
  const bool ok = ball_dev <= 0.05 && cube_dev <= 0.05 && scaling_dev <= 0.05 && disc_dev <= 0.10;
  return {ok, "ball primal/dual=" + f(bp.value) + "/" + f(bd.value) + " cube primal/dual=" +
                  f(cp.value) + "/" + f(cd.value) + " scaling=" + f(scaling) +
                  " discrete cube=" + f(disc.value) + "+-" + f(disc.se, 2) +
                  " (dev " + f(disc_dev, 2) + ")"};
}

Verdict repulsion() {
  Json c = base("repulsion_scaling");
  c["N"] = Json::array({8, 16, 24, 32});
  c["padding_factor"] = 0.5;
  c["walls"] = Json::array({Json{{"family", "gaussian"}, {"Q", 1.0}},
                            Json{{"family", "flat"}, {"c", 0.0}}});
  c["replications"] = 10;
  c["schedule"] = Json{{"burn_in", 1000}, {"thinning", 1}, {"samples", 400}};
  c["epsilon"] = Json::array({0.3});
  c["seed"] = 21;
  const Json r = run("c6_repulsion", c)["repulsion_scaling"];
  const Json& ratio = r["ratios"][0];
  const double rho = ratio["fitted_ratio"].get<double>();
  const double target = ratio["predicted_ratio"].get<double>();
  bool ok = std::abs(rho / target - 1.0) <= 0.15;
  std::string eps;
  double prev = INFINITY;
  for (const Json& row : r["per_N"]) {
    const double e = row["walls"][0]["eps_fraction"][0]["mean"].get<double>();
    ok = ok && e < prev;
    prev = e;
    eps += (eps.empty() ? "" : ",") + f(e, 3);
  }
  return {ok, "fitted ratio=" + f(rho) + "+-" + f(ratio["fitted_ratio_se"].get<double>(), 2) +
                  " target=" + f(target) + " eps_fraction(0.3) by N=" + eps};
}

Verdict regimes() {
  Json c = base("regime_comparison");
  c["N"] = Json::array({32});
  c["padding_factor"] = 0.5;
  c["walls"] = Json::array({Json{{"family", "bounded"}, {"lo", -0.5}, {"hi", 0.5}},
                            Json{{"family", "flat"}, {"c", 0.0}},
                            Json{{"family", "gaussian"}, {"Q", 1.0}},
                            Json{{"family", "stretched"}, {"beta", 0.5}, {"Q", 1.0}}});
  c["replications"] = 4;
  c["schedule"] = Json{{"burn_in", 1000}, {"thinning", 1}, {"samples", 400}};
  c["seed"] = 31;
  const Json row = run("c7_regimes", c)["regime_comparison"]["per_N"][0];
  std::vector<double> m, se;
  for (const Json& w : row["walls"]) {
    m.push_back(w["block_mean"].get<double>());
    se.push_back(w["block_mean_se"].get<double>());
  }
  auto z = [&](std::size_t i, std::size_t j) { return (m[j] - m[i]) / std::hypot(se[i], se[j]); };
  const double close = std::abs(m[0] / m[1] - 1.0);
  const bool ok = close <= 0.15 && z(1, 2) >= 3.0 && z(2, 3) >= 3.0 && z(0, 2) >= 3.0;
  return {ok, "means bounded/flat/gaussian/stretched=" + f(m[0]) + "/" + f(m[1]) + "/" + f(m[2]) +
                  "/" + f(m[3]) + " |bounded/flat-1|=" + f(close, 2) + " z(flat,gauss)=" +
                  f(z(1, 2), 3) + " z(gauss,stretched)=" + f(z(2, 3), 3)};
}

Verdict hitting() {
  Json c = base("hitting_validation");
  c["N"] = Json::array({8, 16, 32});
  c["epsilon"] = Json::array({0.125, 0.25});
  const Json r = run("c8_hitting", c)["hitting_validation"];
  double row_dev = 0.0, lip_max = 0.0;
  for (const Json& n : r["per_n"]) {
    row_dev = std::max(row_dev, n["row_sum_deviation"].get<double>());
    for (const Json& l : n["lipschitz"]) lip_max = std::max(lip_max, l["defect"].get<double>());
  }
  const double lo = r["band_lo_variation"].get<double>();
  const double hi = r["band_hi_variation"].get<double>();
  const bool ok = lo < 0.30 && hi < 0.30 && row_dev <= 1e-12 && std::isfinite(lip_max) && lip_max < 1.0;
  return {ok, "band variation lo/hi=" + f(lo, 3) + "/" + f(hi, 3) + " row sum dev=" +
                  f(row_dev, 2) + " max lipschitz defect=" + f(lip_max)};
}

Verdict bounds() {
  Json c = base("bounds_validation");
  c["N"] = Json::array({6});
  c["padding"] = 1;
  c["boundary"] = Json{{"kind", "affine"}, {"a", 3.0}};
  c["walls"] = Json::array({Json{{"family", "flat"}, {"c", 1.0}}});
  c["thresholds"] = Json::array({0.5, 1.0, 2.0});
  c["samples"] = 100000;
  c["trials"] = 100000;
  c["shift"] = Json{{"height", 0.2}};
  const Json r = run("c9_bounds", c)["bounds_validation"];
  bool ok = true;
  int checks = 0;
  for (const Json& b : r["bennett"]) ok = ok && b["dominates"].get<bool>(), ++checks;
  for (const Json& e : r["entropy"]) ok = ok && e["holds"].get<bool>(), ++checks;
  for (const Json& j : r["jensen"]) ok = ok && j["dominates"].get<bool>(), ++checks;
  return {ok, std::to_string(checks) + " bound checks (bennett " +
                  std::to_string(r["bennett"].size()) + ", entropy " +
                  std::to_string(r["entropy"].size()) + ", jensen " +
                  std::to_string(r["jensen"].size()) + ")"};
}

Verdict rare_event() {
  Json c = base("rare_event_validation");
  c["N"] = Json::array({6});
  c["padding"] = 1;
  c["boundary"] = Json{{"kind", "affine"}, {"a", 3.0}};
  c["walls"] = Json::array({Json{{"family", "flat"}, {"c", 1.0}}});
  c["thresholds"] = Json::array({0.0, 1.0, 2.0});
  c["samples"] = 100000;
  c["shift"] = Json{{"height", 0.2}};
  const Json r = run("c10_rare_event", c)["rare_event_validation"];
  const Json& d = r["domains"][0];
  const double z = d["z"].get<double>();
  bool ok = std::abs(z) <= 4.0 && d["sandwich"]["holds"].get<bool>();
  double single = 0.0;
  for (const Json& s : r["single_site"]) single = std::max(single, std::abs(s["z"].get<double>()));
  ok = ok && single <= 4.0;
  return {ok, "log P direct/IS=" + f(d["direct"]["log_prob"].get<double>()) + "/" +
                  f(d["importance"]["log_prob"].get<double>()) + " z=" + f(z, 3) +
                  " ESS=" + f(d["importance"]["ess"].get<double>()) + " lower bound=" +
                  f(d["sandwich"]["lower_bound"].get<double>()) +
                  " single-site max|z|=" + f(single, 3)};
}

Verdict reproducibility() {
  const Json flat = Json{{"family", "flat"}, {"c", 0.0}};
  const Json gauss = Json{{"family", "gaussian"}, {"Q", 1.0}};
  std::vector<std::pair<std::string, Json>> configs;
  {
    Json c = base("green_validation");
    c["N"] = Json::array({4});
    c["padding"] = 2;
    c["samples"] = 2000;
    c["schedule"] = Json{{"burn_in", 50}, {"thinning", 1}, {"samples", 200}};
    configs.emplace_back("green", c);
  }
  {
    Json c = base("capacity_study");
    c["shapes"] = Json::array({Json{{"kind", "ball"}, {"radius", 1.0}, {"label", "ball"},
                                    {"primal_meshes", {0.5, 0.25}}, {"dual_meshes", {0.5, 0.25}}}});
    c["box_radius"] = 3.0;
    c["discrete_N"] = Json::array({4});
    c["walkers"] = 2000;
    configs.emplace_back("capacity", c);
  }
  {
    Json c = base("repulsion_scaling");
    c["N"] = Json::array({4, 6});
    c["padding"] = 2;
    c["walls"] = Json::array({gauss, flat});
    c["replications"] = 2;
    c["schedule"] = Json{{"burn_in", 20}, {"thinning", 1}, {"samples", 30}};
    configs.emplace_back("repulsion", c);
  }
  {
    Json c = base("regime_comparison");
    c["N"] = Json::array({6});
    c["padding"] = 2;
    c["walls"] = Json::array({flat, gauss, Json{{"family", "stretched"}, {"beta", 0.5}, {"Q", 1.0}}});
    c["replications"] = 2;
    c["schedule"] = Json{{"burn_in", 20}, {"thinning", 1}, {"samples", 30}};
    configs.emplace_back("regime", c);
  }
  {
    Json c = base("hitting_validation");
    c["N"] = Json::array({4, 8});
    c["epsilon"] = Json::array({0.25});
    configs.emplace_back("hitting", c);
  }
  {
    Json c = base("bounds_validation");
    c["N"] = Json::array({4});
    c["padding"] = 1;
    c["thresholds"] = Json::array({1.0});
    c["samples"] = 2000;
    c["trials"] = 5000;
    configs.emplace_back("bounds", c);
  }
  {
    Json c = base("rare_event_validation");
    c["N"] = Json::array({4});
    c["padding"] = 1;
    c["boundary"] = Json{{"kind", "affine"}, {"a", 2.0}};
    c["walls"] = Json::array({gauss});
    c["thresholds"] = Json::array({1.0});
    c["samples"] = 4000;
    c["shift"] = Json{{"height", 0.2}};
    configs.emplace_back("rare_event", c);
  }
  bool ok = true;
  std::string failures;
  for (const auto& [name, c] : configs) {
    const fs::path out = work_dir() / ("c11_" + name);
    fs::remove_all(out);
    RunOptions one;
    one.threads = 1;
    run_experiment(c, work_dir(), out, one);
    for (int t : {1, 2, 8}) {
      RunOptions o;
      o.threads = t;
      const fs::path rep = work_dir() / ("c11_" + name + "_t" + std::to_string(t));
      fs::remove_all(rep);
      const ReplayReport r = replay(out / "manifest.json", rep, o);
      if (!r.identical) {
        ok = false;
        failures += " " + name + "@" + std::to_string(t);
      }
    }
  }
  return {ok, std::to_string(configs.size()) + " kinds replayed at threads 1,2,8" +
                  (failures.empty() ? std::string() : "; mismatches:" + failures)};
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  const std::vector<std::function<Verdict()>> criteria = {
      green_sampler, conditioned_oracle, green_constants, rd_plateau, capacity, repulsion,
      regimes,       hitting,            bounds,          rare_event, reproducibility};
  fs::create_directories(work_dir());
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[k]();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %d: %s %s [%.0f s]\n", id, v.pass ? "PASS" : "FAIL", v.detail.c_str(),
                secs);
    std::fflush(stdout);
    failed += v.pass ? 0 : 1;
  }
  return failed;
}
