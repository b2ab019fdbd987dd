#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "hwall/bounds.hpp"
#include "hwall/capacity.hpp"
#include "hwall/experiment.hpp"
#include "hwall/green.hpp"
#include "hwall/io.hpp"
#include "hwall/observables.hpp"
#include "hwall/rare_event.hpp"
#include "hwall/sampler.hpp"
#include "hwall/wall.hpp"

namespace fs = std::filesystem;
using namespace hwall;

namespace {

struct Common {
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out_dir = "out";
  bool seed_set = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "Master seed")->each([&c](const std::string&) { c.seed_set = true; });
  app->add_option("--threads", c.threads, "Worker threads (outputs do not depend on it)")
      ->check(CLI::PositiveNumber);
  app->add_option("--out-dir", c.out_dir, "Output directory");
}

struct ShapeOptions {
  std::string kind = "cube";
  double size = 1.0;
  int d = 3;

  ShapeSpec build() const {
    if (kind == "ball") return ShapeSpec::ball(d, size);
    if (kind == "cube") return ShapeSpec::cube(d, size);
    throw InvalidArgument("--shape: expected ball or cube");
  }
};

void add_shape(CLI::App* app, ShapeOptions& s) {
  app->add_option("--shape", s.kind, "ball or cube")->check(CLI::IsMember({"ball", "cube"}));
  app->add_option("--size", s.size, "Ball radius or cube side");
  app->add_option("--dim", s.d, "Dimension")->check(CLI::Range(3, 8));
}

struct WallOptions {
  std::string family = "flat";
  double Q = 1.0, beta = 0.5, lo = -0.5, hi = 0.5, c = 0.0;

  WallSpec build(std::uint64_t seed) const {
    Json j{{"family", family}};
    if (family == "gaussian" || family == "half_gaussian") j["Q"] = Q;
    if (family == "stretched") {
      j["beta"] = beta;
      j["Q"] = Q;
    }
    if (family == "bounded") {
      j["lo"] = lo;
      j["hi"] = hi;
    }
    if (family == "flat") j["c"] = c;
    WallSpec w = wall_from_json(j, "--wall");
    w.seed = derive_seed(seed, "wall");
    return w;
  }
};

void add_wall(CLI::App* app, WallOptions& w) {
  app->add_option("--wall", w.family, "gaussian, half_gaussian, bounded, stretched or flat");
  app->add_option("--Q", w.Q, "Tail scale");
  app->add_option("--beta", w.beta, "Stretched exponent");
  app->add_option("--lo", w.lo, "Bounded wall lower end");
  app->add_option("--hi", w.hi, "Bounded wall upper end");
  app->add_option("--level", w.c, "Flat wall height");
}

void prepare_dir(const fs::path& dir) { fs::create_directories(dir); }

int cmd_green(const Common& c, int d, double tol, const std::vector<int>& Ls, double r_min,
              double r_max) {
  set_threads(c.threads);
  const fs::path dir = c.out_dir;
  prepare_dir(dir);
  Json out;
  out["diagonal"] = to_json(green_infinite_diag(d, tol));
  Json gl = Json::array();
  LongTable table;
  for (int L : Ls) {
    const double v = conditional_variance_box(L, d);
    gl.push_back(Json{{"L", L}, {"G_L", v}});
    table.add(L, "d=" + std::to_string(d), "G_L", v);
  }
  out["conditional_variance"] = gl;
  out["tail"] = to_json(fit_Rd(d, r_min, r_max));
  out["rd_asymptotic"] = rd_asymptotic(d);
  table.add(0, "d=" + std::to_string(d), "G_diag", out["diagonal"]["value"].get<double>(),
            out["diagonal"]["error_bound"].get<double>());
  table.add(0, "d=" + std::to_string(d), "R_d", out["tail"]["R_d"].get<double>());
  table.write_csv(dir / "green.csv");
  write_json(dir / "green.json", out);
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_capacity(const Common& c, const ShapeOptions& so, const std::string& method,
                 std::vector<double> meshes, double box_radius, int N, Index walkers) {
  set_threads(c.threads);
  const ShapeSpec shape = so.build();
  CapacityEstimate est;
  if (method == "primal") {
    if (meshes.empty()) meshes = {0.25, 0.125};
    est = capacity_primal_study(shape, box_radius, meshes);
  } else if (method == "dual") {
    if (meshes.empty()) meshes = {1.0 / 6, 1.0 / 8};
    est = capacity_dual_study(shape, meshes, rd_asymptotic(so.d));
  } else {
    est = capacity_discrete(shape, N, so.d, walkers, derive_seed(c.seed, "discrete"));
  }
  const fs::path dir = c.out_dir;
  prepare_dir(dir);
  const Json j = to_json(est);
  write_json(dir / "capacity.json", j);
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_sample(const Common& c, const ShapeOptions& so, const WallOptions& wo, int N,
               std::optional<int> padding, const Schedule& schedule, double h0,
               const std::vector<double>& eps) {
  set_threads(c.threads);
  const LatticeDomain domain = build_domain(so.build(), N, so.d, padding.value_or(std::max(1, N / 2)));
  const WallField wall = sample_wall(wo.build(c.seed), domain);
  const double G = green_diag_value(so.d);
  RegimeSpec regime = RegimeSpec::sub_gaussian(G);
  if (wall.spec.family == WallSpec::Family::gaussian ||
      wall.spec.family == WallSpec::Family::half_gaussian) {
    regime = RegimeSpec::critical(G, wall.spec.Q);
  } else if (wall.spec.family == WallSpec::Family::stretched) {
    regime = RegimeSpec::super_gaussian(wall.spec.Q, wall.spec.beta);
  }
  const fs::path dir = c.out_dir;
  prepare_dir(dir);
  ObservableReport report({Interval::at_most(0.0)}, eps, regime, N, Histogram{});
  FrameWriter frames(dir / "frames.bin", static_cast<std::uint64_t>(domain.size()));
  const ConditionedRun run = sample_conditioned(
      domain, wall, BoundaryCondition::zero(), schedule, derive_seed(c.seed, "chain"), h0,
      [&](Index, const SamplerState& st) {
        const Eigen::VectorXd v = site_values(st.field, domain);
        report.add(v);
        frames.write(v);
      });
  LongTable table;
  Json obs = Json::object();
  for (const auto& [name, sm] : report.aggregate()) {
    table.add(N, family_name(wall.spec.family), name, sm.mean, sm.se);
    obs[name] = Json{{"mean", sm.mean}, {"se", sm.se}};
  }
  table.write_csv(dir / "observables.csv");
  save_wall_csv(dir / "wall.csv", domain, wall);
  Json j;
  j["N"] = N;
  j["sites"] = domain.size();
  j["padding"] = domain.padding();
  j["wall"] = to_json(wall.spec);
  j["predicted_height"] = predict_height(regime, N);
  j["tau"] = run.tau;
  j["burn_in_ok"] = run.burn_in_ok;
  j["observables"] = obs;
  j["warnings"] = run.warnings;
  write_json(dir / "summary.json", j);
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_prob(const Common& c, const ShapeOptions& so, const WallOptions& wo, int N, int padding,
             double bc_a, Index samples, const std::string& method, double height, int ramp) {
  set_threads(c.threads);
  const LatticeDomain domain = build_domain(so.build(), N, so.d, padding);
  const WallField wall = sample_wall(wo.build(c.seed), domain);
  const BoundaryCondition bc =
      bc_a == 0.0 ? BoundaryCondition::zero()
                  : BoundaryCondition::affine(bc_a, Eigen::VectorXd::Zero(so.d));
  Json j;
  if (method == "direct" || method == "both") {
    j["direct"] = to_json(direct_mc_prob(domain, wall, bc, samples, derive_seed(c.seed, "direct")));
  }
  if (method == "importance" || method == "both") {
    const Field psi = default_shift_profile(domain, height, ramp);
    j["importance"] = to_json(
        importance_log_prob(domain, wall, bc, psi, samples, derive_seed(c.seed, "importance")));
  }
  const fs::path dir = c.out_dir;
  prepare_dir(dir);
  write_json(dir / "prob.json", j);
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hard-wall repulsion toolkit for the lattice free field"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  Common run_c, replay_c, green_c, cap_c, sample_c, prob_c;

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run an experiment from a JSON config");
  run->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  add_common(run, run_c);

  std::string manifest_path;
  auto* rep = app.add_subcommand("replay", "Re-run a manifest and compare output hashes");
  rep->add_option("manifest", manifest_path, "manifest.json of a previous run")->required();
  add_common(rep, replay_c);

  int gd = 3;
  double gtol = 1e-6, r_min = 20, r_max = 40;
  std::vector<int> Ls{2, 4, 8, 16};
  auto* green = app.add_subcommand("green", "Green function constants");
  green->add_option("--dim", gd, "Dimension")->check(CLI::Range(3, 8));
  green->add_option("--tol", gtol, "Diagonal series tolerance");
  green->add_option("--L", Ls, "Box sizes for G_L");
  green->add_option("--r-min", r_min, "R_d window start");
  green->add_option("--r-max", r_max, "R_d window end");
  add_common(green, green_c);

  ShapeOptions cap_shape;
  std::string cap_method = "dual";
  std::vector<double> cap_meshes;
  double cap_box = 5.0;
  int cap_N = 16;
  Index cap_walkers = 100000;
  auto* cap = app.add_subcommand("capacity", "Newtonian capacity of a ball or cube");
  add_shape(cap, cap_shape);
  cap->add_option("--method", cap_method, "primal, dual or discrete")
      ->check(CLI::IsMember({"primal", "dual", "discrete"}));
  cap->add_option("--mesh", cap_meshes, "Meshes, coarse to fine");
  cap->add_option("--box-radius", cap_box, "Primal outer box half-width");
  cap->add_option("--N", cap_N, "Lattice scale (discrete)");
  cap->add_option("--walkers", cap_walkers, "Walkers (discrete)");
  add_common(cap, cap_c);

  ShapeOptions s_shape;
  WallOptions s_wall;
  int s_N = 16;
  std::optional<int> s_pad;
  Schedule s_sched;
  double s_h0 = 2.0;
  std::vector<double> s_eps{0.3};
  auto* sample = app.add_subcommand("sample", "Heat-bath sampling above a wall");
  add_shape(sample, s_shape);
  add_wall(sample, s_wall);
  sample->add_option("--N", s_N, "Lattice scale")->check(CLI::Range(3, 4096));
  sample->add_option("--padding", s_pad, "Padding in sites (default N/2)");
  sample->add_option("--burn-in", s_sched.burn_in, "Burn-in sweeps");
  sample->add_option("--thinning", s_sched.thinning, "Sweeps between samples");
  sample->add_option("--samples", s_sched.samples, "Samples");
  sample->add_option("--h0", s_h0, "Initial lift above the wall");
  sample->add_option("--eps", s_eps, "eps_count thresholds");
  add_common(sample, sample_c);

  ShapeOptions p_shape;
  WallOptions p_wall;
  int p_N = 6, p_pad = 1, p_ramp = 0;
  double p_bc = 0.0, p_height = 1.0;
  Index p_samples = 100000;
  std::string p_method = "both";
  auto* prob = app.add_subcommand("prob", "Probability of the hard-wall event");
  add_shape(prob, p_shape);
  add_wall(prob, p_wall);
  prob->add_option("--N", p_N, "Lattice scale");
  prob->add_option("--padding", p_pad, "Padding in sites");
  prob->add_option("--bc", p_bc, "Constant boundary value");
  prob->add_option("--samples", p_samples, "Samples");
  prob->add_option("--method", p_method, "direct, importance or both")
      ->check(CLI::IsMember({"direct", "importance", "both"}));
  prob->add_option("--shift-height", p_height, "Importance shift on the domain");
  prob->add_option("--ramp", p_ramp, "Shift taper width in lattice steps");
  add_common(prob, prob_c);

  CLI11_PARSE(app, argc, argv);

  auto options = [](const Common& c, bool threads_given) {
    RunOptions o;
    if (threads_given) o.threads = c.threads;
    if (c.seed_set) o.seed = c.seed;
    return o;
  };

  try {
    if (*run) {
      const Json m = run_config_file(config_path, run_c.out_dir,
                                     options(run_c, run->count("--threads") > 0));
      std::cout << "wrote " << fs::absolute(run_c.out_dir).string() << "\n";
      for (const Json& w : m["warnings"]) std::cerr << "warning: " << w.get<std::string>() << "\n";
      return 0;
    }
    if (*rep) {
      std::string out = replay_c.out_dir;
      if (rep->count("--out-dir") == 0) {
        const fs::path run_dir = fs::absolute(manifest_path).parent_path();
        out = (run_dir.parent_path() / (run_dir.filename().string() + "_replay")).string();
      }
      const ReplayReport r =
          replay(manifest_path, out, options(replay_c, rep->count("--threads") > 0));
      for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
      if (r.identical) {
        std::cout << "identical: all output hashes match\n";
        return 0;
      }
      std::cout << "mismatch:\n";
      for (const auto& line : r.diff) std::cout << "  " << line << "\n";
      return 3;
    }
    if (*green) return cmd_green(green_c, gd, gtol, Ls, r_min, r_max);
    if (*cap) {
      return cmd_capacity(cap_c, cap_shape, cap_method, cap_meshes, cap_box, cap_N, cap_walkers);
    }
    if (*sample) return cmd_sample(sample_c, s_shape, s_wall, s_N, s_pad, s_sched, s_h0, s_eps);
    if (*prob) {
      return cmd_prob(prob_c, p_shape, p_wall, p_N, p_pad, p_bc, p_samples, p_method, p_height,
                      p_ramp);
    }
  } catch (const IntegrityError& e) {
    std::cerr << "integrity error: " << e.what() << "\n";
    return 4;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
