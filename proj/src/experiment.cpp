#include "hwall/experiment.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "hwall/bounds.hpp"
#include "hwall/capacity.hpp"
#include "hwall/green.hpp"
#include "hwall/observables.hpp"
#include "hwall/rare_event.hpp"
#include "hwall/rng.hpp"
#include "hwall/walk.hpp"

namespace fs = std::filesystem;

namespace hwall {

std::uint64_t derive_seed(std::uint64_t master, const std::string& label) {
  const std::string hex = sha256_hex(std::to_string(master) + "/" + label);
  return std::stoull(hex.substr(0, 16), nullptr, 16);
}

int ExperimentSpec::padding_at(int n) const {
  if (padding) return *padding;
  return std::max(1, static_cast<int>(std::lround(padding_factor * n)));
}

namespace {

using Kind = ExperimentSpec::Kind;

const std::vector<std::pair<Kind, std::string>>& kind_names() {
  static const std::vector<std::pair<Kind, std::string>> names = {
      {Kind::green_validation, "green_validation"},
      {Kind::capacity_study, "capacity_study"},
      {Kind::repulsion_scaling, "repulsion_scaling"},
      {Kind::regime_comparison, "regime_comparison"},
      {Kind::hitting_validation, "hitting_validation"},
      {Kind::bounds_validation, "bounds_validation"},
      {Kind::rare_event_validation, "rare_event_validation"},
  };
  return names;
}

// ---- config parsing -------------------------------------------------------

std::string at(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

double get_number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw InvalidArgument(path + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw InvalidArgument(path + ": must be finite");
  return v;
}

long long get_integer(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) throw InvalidArgument(path + ": expected an integer");
  return j.get<long long>();
}

std::vector<double> get_numbers(const Json& j, const std::string& path) {
  if (!j.is_array()) throw InvalidArgument(path + ": expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(get_number(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::vector<int> get_integers(const Json& j, const std::string& path) {
  if (!j.is_array()) throw InvalidArgument(path + ": expected an array");
  std::vector<int> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(static_cast<int>(get_integer(j[i], path + "[" + std::to_string(i) + "]")));
  }
  return out;
}

void check_keys(const Json& j, const std::string& path, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw InvalidArgument(at(path, key) + ": unknown field");
  }
}

BoundaryCondition boundary_from_json(const Json& j, int d) {
  if (!j.is_object()) throw InvalidArgument("boundary: expected an object");
  check_keys(j, "boundary", {"kind", "a", "v"});
  const std::string kind = j.value("kind", "zero");
  if (kind == "zero") return BoundaryCondition::zero();
  if (kind != "affine") throw InvalidArgument("boundary.kind: unknown kind '" + kind + "'");
  const double a = j.contains("a") ? get_number(j["a"], "boundary.a") : 0.0;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
  if (j.contains("v")) {
    const auto vs = get_numbers(j["v"], "boundary.v");
    if (static_cast<int>(vs.size()) != d) {
      throw InvalidArgument("boundary.v: expected " + std::to_string(d) + " entries");
    }
    for (int i = 0; i < d; ++i) v[i] = vs[static_cast<std::size_t>(i)];
  }
  return BoundaryCondition::affine(a, v);
}

std::vector<double> default_dual_meshes(const ShapeSpec& s) {
  if (s.kind == ShapeSpec::Kind::ball) return {1.0 / 6, 1.0 / 8, 1.0 / 10};
  return {1.0 / 8, 1.0 / 12, 1.0 / 16};
}

}  // namespace

std::string kind_name(ExperimentSpec::Kind kind) {
  for (const auto& [k, name] : kind_names()) {
    if (k == kind) return name;
  }
  return "unknown";
}

ExperimentSpec parse_experiment(const Json& c, const fs::path& base_dir) {
  if (!c.is_object()) throw InvalidArgument("config: expected a JSON object");
  check_keys(c, "", {"schema_version", "kind", "dimension", "shape", "N", "padding",
                     "padding_factor", "walls", "replications", "schedule", "epsilon", "seed",
                     "threads", "boundary", "h0", "samples", "shapes", "box_radius", "discrete_N",
                     "walkers", "kill_factor", "thresholds", "trials", "rademacher_n", "bennett_t",
                     "shift"});
  ExperimentSpec s;
  if (!c.contains("schema_version")) throw InvalidArgument("schema_version: missing");
  if (get_integer(c["schema_version"], "schema_version") != kSchemaVersion) {
    throw InvalidArgument("schema_version: unsupported (expected " +
                          std::to_string(kSchemaVersion) + ")");
  }
  if (!c.contains("kind") || !c["kind"].is_string()) throw InvalidArgument("kind: missing");
  {
    const std::string kind = c["kind"];
    bool found = false;
    for (const auto& [k, name] : kind_names()) {
      if (name == kind) {
        s.kind = k;
        found = true;
      }
    }
    if (!found) throw InvalidArgument("kind: unknown experiment kind '" + kind + "'");
  }
  if (c.contains("dimension")) {
    s.dimension = static_cast<int>(get_integer(c["dimension"], "dimension"));
    if (s.dimension < 3) throw InvalidArgument("dimension: must be >= 3");
  }
  const int d = s.dimension;
  s.shape = c.contains("shape") ? shape_from_json(c["shape"], d, "shape") : ShapeSpec::cube(d);

  if (c.contains("N")) s.N = get_integers(c["N"], "N");
  const bool needs_n = s.kind != Kind::capacity_study && s.kind != Kind::bounds_validation;
  if (needs_n && s.N.empty()) throw InvalidArgument("N: grid must be nonempty");
  for (std::size_t i = 0; i < s.N.size(); ++i) {
    const int lo = s.kind == Kind::green_validation || s.kind == Kind::rare_event_validation ||
                           s.kind == Kind::bounds_validation
                       ? 1
                       : 3;
    if (s.N[i] < lo) {
      throw InvalidArgument("N[" + std::to_string(i) + "]: must be >= " + std::to_string(lo));
    }
  }
  if (c.contains("padding")) {
    s.padding = static_cast<int>(get_integer(c["padding"], "padding"));
    if (*s.padding < 1) throw InvalidArgument("padding: must be >= 1");
  }
  if (c.contains("padding_factor")) {
    s.padding_factor = get_number(c["padding_factor"], "padding_factor");
    if (s.padding_factor < 0) throw InvalidArgument("padding_factor: must be >= 0");
  }
  if (c.contains("walls")) {
    if (!c["walls"].is_array()) throw InvalidArgument("walls: expected an array");
    for (std::size_t i = 0; i < c["walls"].size(); ++i) {
      const std::string path = "walls[" + std::to_string(i) + "]";
      const Json& wj = c["walls"][i];
      Json spec_part = wj;
      WallEntry e;
      if (wj.is_object() && wj.contains("file")) {
        if (!wj["file"].is_string()) throw InvalidArgument(path + ".file: expected a path");
        fs::path p = wj["file"].get<std::string>();
        if (p.is_relative()) p = base_dir / p;
        e.file = fs::absolute(p).lexically_normal();
        spec_part.erase("file");
      }
      e.spec = wall_from_json(spec_part, path);
      s.walls.push_back(std::move(e));
    }
  }
  const bool needs_walls = s.kind == Kind::repulsion_scaling ||
                           s.kind == Kind::regime_comparison ||
                           s.kind == Kind::rare_event_validation;
  if (needs_walls && s.walls.empty()) throw InvalidArgument("walls: list must be nonempty");
  if (c.contains("replications")) {
    s.replications = static_cast<int>(get_integer(c["replications"], "replications"));
    if (s.replications < 1) throw InvalidArgument("replications: must be >= 1");
  }
  if (c.contains("schedule")) {
    const Json& sj = c["schedule"];
    if (!sj.is_object()) throw InvalidArgument("schedule: expected an object");
    check_keys(sj, "schedule", {"burn_in", "thinning", "samples"});
    if (sj.contains("burn_in")) s.schedule.burn_in = get_integer(sj["burn_in"], "schedule.burn_in");
    if (sj.contains("thinning")) {
      s.schedule.thinning = get_integer(sj["thinning"], "schedule.thinning");
    }
    if (sj.contains("samples")) s.schedule.samples = get_integer(sj["samples"], "schedule.samples");
    if (s.schedule.burn_in < 0) throw InvalidArgument("schedule.burn_in: must be >= 0");
    if (s.schedule.thinning < 1) throw InvalidArgument("schedule.thinning: must be >= 1");
    if (s.schedule.samples < 1) throw InvalidArgument("schedule.samples: must be >= 1");
  }
  if (c.contains("epsilon")) {
    s.epsilon = get_numbers(c["epsilon"], "epsilon");
    for (std::size_t i = 0; i < s.epsilon.size(); ++i) {
      if (!(s.epsilon[i] > 0)) {
        throw InvalidArgument("epsilon[" + std::to_string(i) + "]: must be > 0");
      }
    }
  }
  if (c.contains("seed")) {
    const Json& sj = c["seed"];
    if (!sj.is_number_integer() || (!sj.is_number_unsigned() && sj.get<std::int64_t>() < 0)) {
      throw InvalidArgument("seed: expected a non-negative integer");
    }
    s.seed = c["seed"].get<std::uint64_t>();
  }
  if (c.contains("threads")) {
    s.threads = static_cast<int>(get_integer(c["threads"], "threads"));
    if (s.threads < 1) throw InvalidArgument("threads: must be >= 1");
  }
  if (c.contains("boundary")) s.boundary = boundary_from_json(c["boundary"], d);
  if (c.contains("h0")) s.h0 = get_number(c["h0"], "h0");
  if (c.contains("samples")) {
    s.samples = get_integer(c["samples"], "samples");
    if (s.samples < 2) throw InvalidArgument("samples: must be >= 2");
  }
  if (c.contains("shapes")) {
    if (!c["shapes"].is_array() || c["shapes"].empty()) {
      throw InvalidArgument("shapes: expected a nonempty array");
    }
    for (std::size_t i = 0; i < c["shapes"].size(); ++i) {
      const std::string path = "shapes[" + std::to_string(i) + "]";
      Json sj = c["shapes"][i];
      CapacityShape cs;
      if (!sj.is_object()) throw InvalidArgument(path + ": expected an object");
      cs.label = sj.value("label", "shape" + std::to_string(i));
      Json geo = sj;
      geo.erase("label");
      geo.erase("primal_meshes");
      geo.erase("dual_meshes");
      cs.shape = shape_from_json(geo, d, path);
      cs.primal_meshes = sj.contains("primal_meshes")
                             ? get_numbers(sj["primal_meshes"], path + ".primal_meshes")
                             : std::vector<double>{0.25, 0.125, 0.0625};
      cs.dual_meshes = sj.contains("dual_meshes")
                           ? get_numbers(sj["dual_meshes"], path + ".dual_meshes")
                           : default_dual_meshes(cs.shape);
      s.shapes.push_back(std::move(cs));
    }
  } else if (s.kind == Kind::capacity_study) {
    CapacityShape ball{ShapeSpec::ball(d, 1.0), "ball", {0.25, 0.125, 0.0625}, {}};
    ball.dual_meshes = default_dual_meshes(ball.shape);
    CapacityShape cube{ShapeSpec::cube(d), "cube", {0.25, 0.125, 0.0625}, {}};
    cube.dual_meshes = default_dual_meshes(cube.shape);
    s.shapes = {ball, cube};
  }
  if (c.contains("box_radius")) s.box_radius = get_number(c["box_radius"], "box_radius");
  if (c.contains("discrete_N")) s.discrete_N = get_integers(c["discrete_N"], "discrete_N");
  if (c.contains("walkers")) {
    s.walkers = get_integer(c["walkers"], "walkers");
    if (s.walkers < 1) throw InvalidArgument("walkers: must be >= 1");
  }
  if (c.contains("kill_factor")) s.kill_factor = get_number(c["kill_factor"], "kill_factor");
  if (c.contains("thresholds")) s.thresholds = get_numbers(c["thresholds"], "thresholds");
  if (c.contains("trials")) {
    s.trials = get_integer(c["trials"], "trials");
    if (s.trials < 2) throw InvalidArgument("trials: must be >= 2");
  }
  if (c.contains("rademacher_n")) {
    s.rademacher_n = get_integer(c["rademacher_n"], "rademacher_n");
    if (s.rademacher_n < 1) throw InvalidArgument("rademacher_n: must be >= 1");
  }
  if (c.contains("bennett_t")) s.bennett_t = get_numbers(c["bennett_t"], "bennett_t");
  if (c.contains("shift")) {
    const Json& sj = c["shift"];
    if (!sj.is_object()) throw InvalidArgument("shift: expected an object");
    check_keys(sj, "shift", {"height", "ramp"});
    if (sj.contains("height")) s.shift_height = get_number(sj["height"], "shift.height");
    if (sj.contains("ramp")) {
      s.shift_ramp = static_cast<int>(get_integer(sj["ramp"], "shift.ramp"));
      if (*s.shift_ramp < 0) throw InvalidArgument("shift.ramp: must be >= 0");
    }
  }
  return s;
}

namespace {

// ---- execution ------------------------------------------------------------

struct Context {
  Context(const ExperimentSpec& s, fs::path d) : spec(s), dir(std::move(d)) {}

  const ExperimentSpec& spec;
  fs::path dir;
  LongTable table;
  Json summary = Json::object();
  std::vector<std::string> warnings;
  Json walls = Json::array();
  std::map<std::string, std::unique_ptr<FrameWriter>> frames;

  FrameWriter& frame_file(const std::string& name, std::uint64_t length) {
    auto it = frames.find(name);
    if (it == frames.end()) {
      it = frames.emplace(name, std::make_unique<FrameWriter>(dir / name, length)).first;
    }
    return *it->second;
  }
};

std::string fmt(double v) {
  std::ostringstream ss;
  ss << v;
  return ss.str();
}

std::string wall_label(const WallSpec& w) {
  switch (w.family) {
    case WallSpec::Family::gaussian:
      return "gaussian(Q=" + fmt(w.Q) + ")";
    case WallSpec::Family::half_gaussian:
      return "half_gaussian(Q=" + fmt(w.Q) + ")";
    case WallSpec::Family::bounded:
      return "bounded(" + fmt(w.lo) + "," + fmt(w.hi) + ")";
    case WallSpec::Family::stretched:
      return "stretched(beta=" + fmt(w.beta) + ",Q=" + fmt(w.Q) + ")";
    case WallSpec::Family::flat:
      return "flat(" + fmt(w.c) + ")";
  }
  return "wall";
}

RegimeSpec regime_for(const WallSpec& w, double G) {
  switch (w.family) {
    case WallSpec::Family::gaussian:
    case WallSpec::Family::half_gaussian:
      return RegimeSpec::critical(G, w.Q);
    case WallSpec::Family::stretched:
      return RegimeSpec::super_gaussian(w.Q, w.beta);
    default:
      return RegimeSpec::sub_gaussian(G);
  }
}

std::string values_hash(const Eigen::VectorXd& v) {
  return sha256_hex(std::string_view(reinterpret_cast<const char*>(v.data()),
                                     static_cast<std::size_t>(v.size()) * sizeof(double)));
}

WallField make_wall(Context& ctx, const LatticeDomain& domain, std::size_t index, int replicate,
                    int N) {
  const WallEntry& entry = ctx.spec.walls[index];
  WallField wall;
  Json rec;
  rec["N"] = N;
  rec["wall"] = index;
  rec["replicate"] = replicate;
  if (entry.file) {
    wall = load_wall_csv(*entry.file, domain, entry.spec);
    rec["file"] = entry.file->string();
  } else {
    WallSpec spec = entry.spec;
    spec.seed = derive_seed(ctx.spec.seed, "wall/" + std::to_string(index) + "/" +
                                               std::to_string(replicate));
    wall = sample_wall(spec, domain);
    rec["seed"] = spec.seed;
  }
  rec["sha256"] = values_hash(wall.values);
  ctx.walls.push_back(rec);
  return wall;
}

LatticeDomain domain_at(const ExperimentSpec& spec, int N) {
  return build_domain(spec.shape, N, spec.dimension, spec.padding_at(N));
}

// green_validation: exact-sample covariance against the Green function and
// heat-bath moments against exact sampling.
void exec_green(Context& ctx) {
  const ExperimentSpec& spec = ctx.spec;
  Json per_n = Json::array();
  for (int N : spec.N) {
    const LatticeDomain domain = domain_at(spec, N);
    const ExactSampler sampler(domain, spec.boundary);
    const auto& interior = sampler.interior();
    const Index nd = domain.size();
    std::vector<Index> rows(static_cast<std::size_t>(nd));
    for (Index i = 0; i < nd; ++i) {
      rows[static_cast<std::size_t>(i)] =
          std::lower_bound(interior.begin(), interior.end(), domain.flat_of(i)) - interior.begin();
    }
    Eigen::MatrixXd C(nd, nd);
    Eigen::VectorXd mu(nd);
    for (Index i = 0; i < nd; ++i) {
      mu[i] = sampler.mean()[rows[static_cast<std::size_t>(i)]];
      for (Index j = 0; j < nd; ++j) {
        C(i, j) = sampler.covariance()(rows[static_cast<std::size_t>(i)],
                                       rows[static_cast<std::size_t>(j)]);
      }
    }
    double finite_dev = std::numeric_limits<double>::quiet_NaN();
    if (nd <= kDenseSiteGuard) {
      const GreenTable gf = green_finite(domain);
      finite_dev = (gf.values - C).cwiseAbs().maxCoeff();
    }

    const std::uint64_t exact_seed = derive_seed(spec.seed, "exact/" + std::to_string(N));
    const Index n = spec.samples;
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(nd, nd);
    const Index center = nd / 2;
    std::vector<double> ex_center_sq, ex_block, ex_block_sq;
    constexpr Index kBatch = 4096;
    for (Index first = 0; first < n; first += kBatch) {
      const Index count = std::min(kBatch, n - first);
      const Eigen::MatrixXd x = sampler.interior_samples(exact_seed, first, count);
      Eigen::MatrixXd D(nd, count);
      for (Index i = 0; i < nd; ++i) D.row(i) = x.row(rows[static_cast<std::size_t>(i)]).array() - mu[i];
      S.noalias() += D * D.transpose();
      for (Index k = 0; k < count; ++k) {
        ex_center_sq.push_back(D(center, k) * D(center, k));
        const double m = D.col(k).mean();
        ex_block.push_back(m);
        ex_block_sq.push_back(m * m);
      }
    }
    S /= static_cast<double>(n);
    Eigen::MatrixXd Z(nd, nd);
    double max_z = 0.0;
    Index over = 0, entries = 0;
    for (Index i = 0; i < nd; ++i) {
      for (Index j = 0; j < nd; ++j) {
        const double se = std::sqrt((C(i, i) * C(j, j) + C(i, j) * C(i, j)) / static_cast<double>(n));
        Z(i, j) = (S(i, j) - C(i, j)) / se;
        if (j >= i) {
          ++entries;
          max_z = std::max(max_z, std::abs(Z(i, j)));
          if (std::abs(Z(i, j)) > 4.0) ++over;
        }
      }
    }
    ctx.frame_file("frames_N" + std::to_string(N) + ".bin", static_cast<std::uint64_t>(nd * nd))
        .write(Eigen::Map<const Eigen::VectorXd>(Z.data(), nd * nd));

    // heat-bath chain without a wall
    SamplerState state = make_state(domain, spec.boundary, derive_seed(spec.seed, "chain/" + std::to_string(N)));
    for (Index s = 0; s < spec.schedule.burn_in; ++s) heat_bath_sweep(state);
    std::vector<double> hb_center_sq, hb_block, hb_block_sq;
    for (Index k = 0; k < spec.schedule.samples; ++k) {
      for (Index t = 0; t < spec.schedule.thinning; ++t) heat_bath_sweep(state);
      const Eigen::VectorXd v = site_values(state.field, domain) - mu;
      hb_center_sq.push_back(v[center] * v[center]);
      const double m = v.mean();
      hb_block.push_back(m);
      hb_block_sq.push_back(m * m);
    }
    const double block_var = C.sum() / static_cast<double>(nd * nd);

    Json rec;
    rec["N"] = N;
    rec["sites"] = nd;
    rec["samples"] = n;
    rec["max_abs_z"] = max_z;
    rec["entries"] = entries;
    rec["entries_over_4se"] = over;
    rec["green_finite_max_deviation"] = finite_dev;
    const std::string param = "samples=" + std::to_string(n);
    ctx.table.add(N, param, "cov_max_abs_z", max_z);
    ctx.table.add(N, param, "cov_entries_over_4se", static_cast<double>(over));
    ctx.table.add(N, param, "cov_entries", static_cast<double>(entries));
    ctx.table.add(N, param, "field_vs_green_finite_max_dev", finite_dev);

    Json moments = Json::array();
    auto compare = [&](const std::string& name, const std::vector<double>& hb,
                       const std::vector<double>& ex, double theory) {
      const Summary h = batch_summary(hb);
      const Summary e = iid_summary(ex);
      const double z_exact = (h.mean - e.mean) / std::sqrt(h.se * h.se + e.se * e.se);
      const double z_theory = (h.mean - theory) / h.se;
      ctx.table.add(N, "heat_bath", name, h.mean, h.se);
      ctx.table.add(N, "exact", name, e.mean, e.se);
      ctx.table.add(N, "theory", name, theory);
      ctx.table.add(N, "heat_bath_vs_exact", name + "_z", z_exact);
      Json m;
      m["moment"] = name;
      m["heat_bath"] = h.mean;
      m["heat_bath_se"] = h.se;
      m["exact"] = e.mean;
      m["exact_se"] = e.se;
      m["theory"] = theory;
      m["z_vs_exact"] = z_exact;
      m["z_vs_theory"] = z_theory;
      moments.push_back(m);
    };
    compare("center_variance", hb_center_sq, ex_center_sq, C(center, center));
    compare("block_mean", hb_block, ex_block, 0.0);
    compare("block_mean_variance", hb_block_sq, ex_block_sq, block_var);
    rec["moments"] = moments;
    per_n.push_back(rec);
  }
  ctx.summary["green_validation"] = per_n;
}

void exec_capacity(Context& ctx) {
  const ExperimentSpec& spec = ctx.spec;
  const int d = spec.dimension;
  const double rd = rd_asymptotic(d);
  Json out = Json::array();
  for (const CapacityShape& cs : spec.shapes) {
    Json rec;
    rec["label"] = cs.label;
    rec["shape"] = to_json(cs.shape);
    const CapacityEstimate primal = capacity_primal_study(cs.shape, spec.box_radius, cs.primal_meshes);
    for (const auto& [h, v] : primal.refinement_history) {
      ctx.table.add(0, cs.label + ";h=" + fmt(h), "primal", v);
    }
    ctx.table.add(0, cs.label, "primal_extrapolated", primal.value);
    const CapacityEstimate dual = capacity_dual_study(cs.shape, cs.dual_meshes, rd);
    for (const auto& [h, v] : dual.refinement_history) {
      ctx.table.add(0, cs.label + ";h=" + fmt(h), "dual", v);
    }
    const double rel = std::abs(primal.value - dual.value) / dual.value;
    ctx.table.add(0, cs.label, "primal_dual_rel_diff", rel);

    const double coarse = *std::max_element(cs.dual_meshes.begin(), cs.dual_meshes.end());
    const CapacityEstimate small = capacity_dual(cs.shape, coarse, rd);
    const CapacityEstimate big = capacity_dual(cs.shape.scaled(2.0), coarse, rd);
    const double ratio = big.value / small.value;
    ctx.table.add(0, cs.label + ";h=" + fmt(coarse), "scaling_ratio", ratio);
    ctx.table.add(0, cs.label, "scaling_target", std::pow(2.0, d - 2));

    rec["primal"] = to_json(primal);
    rec["dual"] = to_json(dual);
    rec["primal_dual_rel_diff"] = rel;
    rec["scaling"] = Json{{"mesh", coarse},
                          {"cap_D", small.value},
                          {"cap_2D", big.value},
                          {"ratio", ratio},
                          {"target", std::pow(2.0, d - 2)}};
    Json discrete = Json::array();
    for (int N : spec.discrete_N) {
      const CapacityEstimate est = capacity_discrete(
          cs.shape, N, d, spec.walkers,
          derive_seed(spec.seed, "discrete/" + cs.label + "/" + std::to_string(N)),
          kDiscreteCalibration, spec.kill_factor);
      ctx.table.add(N, cs.label, "discrete", est.value, est.se);
      const double drel = std::abs(est.value - dual.value) / dual.value;
      ctx.table.add(N, cs.label, "discrete_dual_rel_diff", drel);
      Json dj = to_json(est);
      dj["dual_rel_diff"] = drel;
      discrete.push_back(dj);
    }
    rec["discrete"] = discrete;
    out.push_back(rec);
  }
  ctx.summary["capacity_study"] = out;
}

struct CellResult {
  std::string label;
  int N = 0;
  Summary block;
  std::vector<std::pair<double, Summary>> eps;
  double predicted = 0.0;
  int replicates = 0;
  double tau = 0.0;
  bool is_flat = false;
  bool has_q = false;
  double Q = 0.0;
};

// repulsion_scaling and regime_comparison: conditioned block means per wall.
void exec_conditioned(Context& ctx, bool regime_table) {
  const ExperimentSpec& spec = ctx.spec;
  const double G = green_diag_value(spec.dimension);
  std::vector<std::vector<CellResult>> cells;  // [N][wall]
  Json per_n = Json::array();
  for (int N : spec.N) {
    const LatticeDomain domain = domain_at(spec, N);
    std::vector<CellResult> row;
    Json nrec;
    nrec["N"] = N;
    nrec["sites"] = domain.size();
    nrec["padding"] = domain.padding();
    Json wrecs = Json::array();
    for (std::size_t w = 0; w < spec.walls.size(); ++w) {
      const WallEntry& entry = spec.walls[w];
      const bool deterministic = entry.spec.family == WallSpec::Family::flat || entry.file;
      const int reps = deterministic ? 1 : spec.replications;
      const RegimeSpec regime = regime_for(entry.spec, G);
      CellResult cell;
      cell.label = wall_label(entry.spec);
      cell.N = N;
      cell.replicates = reps;
      cell.predicted = predict_height(regime, N);
      cell.is_flat = entry.spec.family == WallSpec::Family::flat;
      cell.has_q = entry.spec.family == WallSpec::Family::gaussian;
      cell.Q = entry.spec.Q;
      std::vector<double> rep_means;
      std::vector<Summary> rep_summaries;
      std::vector<std::vector<double>> rep_eps(spec.epsilon.size());
      double tau_max = 0.0;
      Json reps_json = Json::array();
      for (int r = 0; r < reps; ++r) {
        const WallField wall = make_wall(ctx, domain, w, r, N);
        ObservableReport report({}, spec.epsilon, regime, N, Histogram{});
        Eigen::VectorXd last;
        const ConditionedRun run = sample_conditioned(
            domain, wall, spec.boundary, spec.schedule,
            derive_seed(spec.seed, "chain/" + std::to_string(N) + "/" + std::to_string(w) + "/" +
                                       std::to_string(r)),
            spec.h0, [&](Index, const SamplerState& st) {
              last = site_values(st.field, domain);
              report.add(last);
            });
        for (const std::string& msg : run.warnings) {
          ctx.warnings.push_back("N=" + std::to_string(N) + " " + cell.label + " rep " +
                                 std::to_string(r) + ": " + msg);
        }
        if (std::isfinite(run.tau)) tau_max = std::max(tau_max, run.tau);
        const auto agg = report.aggregate();
        const std::string param = cell.label + ";rep=" + std::to_string(r);
        Json rj;
        rj["replicate"] = r;
        rj["tau"] = run.tau;
        rj["burn_in_ok"] = run.burn_in_ok;
        for (const auto& [name, sm] : agg) {
          ctx.table.add(N, param, name, sm.mean, sm.se);
          rj[name] = Json{{"mean", sm.mean}, {"se", sm.se}};
          if (name == "block_mean") {
            rep_means.push_back(sm.mean);
            rep_summaries.push_back(sm);
          }
          for (std::size_t e = 0; e < spec.epsilon.size(); ++e) {
            char buf[48];
            std::snprintf(buf, sizeof buf, "eps_fraction(%g)", spec.epsilon[e]);
            if (name == buf) rep_eps[e].push_back(sm.mean);
          }
        }
        reps_json.push_back(rj);
        if (r == 0) {
          ctx.frame_file("frames_N" + std::to_string(N) + ".bin",
                         static_cast<std::uint64_t>(domain.size()))
              .write(last);
        }
      }
      if (reps > 1) {
        cell.block = iid_summary(rep_means);
      } else {
        cell.block = rep_summaries.front();
      }
      for (std::size_t e = 0; e < spec.epsilon.size(); ++e) {
        cell.eps.emplace_back(spec.epsilon[e], iid_summary(rep_eps[e]));
      }
      cell.tau = tau_max;
      ctx.table.add(N, cell.label, "block_mean_avg", cell.block.mean, cell.block.se);
      ctx.table.add(N, cell.label, "predicted_height", cell.predicted);
      ctx.table.add(N, cell.label, "height_ratio_to_prediction", cell.block.mean / cell.predicted);
      for (const auto& [e, sm] : cell.eps) {
        ctx.table.add(N, cell.label, "eps_fraction_avg(" + fmt(e) + ")", sm.mean, sm.se);
      }
      Json wj;
      wj["wall"] = to_json(entry.spec);
      wj["label"] = cell.label;
      wj["replicates"] = reps;
      wj["block_mean"] = cell.block.mean;
      wj["block_mean_se"] = cell.block.se;
      wj["predicted_height"] = cell.predicted;
      Json ej = Json::array();
      for (const auto& [e, sm] : cell.eps) ej.push_back(Json{{"eps", e}, {"mean", sm.mean}, {"se", sm.se}});
      wj["eps_fraction"] = ej;
      wj["runs"] = reps_json;
      wrecs.push_back(wj);
      row.push_back(cell);
    }
    nrec["walls"] = wrecs;

    if (regime_table) {
      Json seps = Json::array();
      for (std::size_t i = 0; i < row.size(); ++i) {
        for (std::size_t j = i + 1; j < row.size(); ++j) {
          const double diff = row[j].block.mean - row[i].block.mean;
          const double se = std::sqrt(row[i].block.se * row[i].block.se +
                                      row[j].block.se * row[j].block.se);
          ctx.table.add(N, row[i].label + "|" + row[j].label, "separation_se", diff / se);
          seps.push_back(Json{{"lower", row[i].label}, {"upper", row[j].label},
                              {"difference", diff}, {"se", se}, {"z", diff / se}});
        }
      }
      nrec["separations"] = seps;
    }
    per_n.push_back(nrec);
    cells.push_back(std::move(row));
  }

  // ratio of each gaussian wall to the flat reference
  Json ratios = Json::array();
  for (std::size_t w = 0; w < spec.walls.size(); ++w) {
    if (!cells.front()[w].has_q) continue;
    std::optional<std::size_t> ref;
    for (std::size_t f = 0; f < spec.walls.size(); ++f) {
      if (cells.front()[f].is_flat) ref = f;
    }
    if (!ref) break;
    double sab = 0.0, sbb = 0.0;
    for (const auto& row : cells) {
      const CellResult& a = row[w];
      const CellResult& b = row[*ref];
      const double r = a.block.mean / b.block.mean;
      const double rse = r * std::hypot(a.block.se / a.block.mean, b.block.se / b.block.mean);
      ctx.table.add(a.N, a.label, "ratio_to_flat", r, rse);
      sab += a.block.mean * b.block.mean;
      sbb += b.block.mean * b.block.mean;
    }
    const double rho = sab / sbb;
    double var = 0.0;
    for (const auto& row : cells) {
      const CellResult& a = row[w];
      const CellResult& b = row[*ref];
      const double da = b.block.mean / sbb;
      const double db = (a.block.mean * sbb - 2.0 * b.block.mean * sab) / (sbb * sbb);
      var += da * da * a.block.se * a.block.se + db * db * b.block.se * b.block.se;
    }
    const double target = std::sqrt((G + cells.front()[w].Q) / G);
    ctx.table.add(0, cells.front()[w].label, "fitted_ratio_to_flat", rho, std::sqrt(var));
    ctx.table.add(0, cells.front()[w].label, "predicted_ratio_to_flat", target);
    ratios.push_back(Json{{"wall", cells.front()[w].label},
                          {"fitted_ratio", rho},
                          {"fitted_ratio_se", std::sqrt(var)},
                          {"predicted_ratio", target},
                          {"relative_deviation", std::abs(rho / target - 1.0)}});
  }
  Json out;
  out["G"] = G;
  out["per_N"] = per_n;
  out["ratios"] = ratios;
  ctx.summary[regime_table ? "regime_comparison" : "repulsion_scaling"] = out;
}

void exec_hitting(Context& ctx) {
  const ExperimentSpec& spec = ctx.spec;
  const int d = spec.dimension;
  Json per_n = Json::array();
  double lo_min = INFINITY, lo_max = 0, hi_min = INFINITY, hi_max = 0;
  for (int n : spec.N) {
    const ShellGeometry geo = ShellGeometry::sphere(d, n);
    const HittingTable table = hitting_distribution(Site(static_cast<std::size_t>(d), 0), geo);
    const double scale = std::pow(static_cast<double>(n), d - 1);
    const double band_lo = table.prob.minCoeff() * scale;
    const double band_hi = table.prob.maxCoeff() * scale;
    const double row_sum_dev = std::abs(table.prob.sum() - 1.0);
    lo_min = std::min(lo_min, band_lo);
    lo_max = std::max(lo_max, band_lo);
    hi_min = std::min(hi_min, band_hi);
    hi_max = std::max(hi_max, band_hi);
    const std::string param = "sphere";
    ctx.table.add(n, param, "band_lo", band_lo);
    ctx.table.add(n, param, "band_hi", band_hi);
    ctx.table.add(n, param, "row_sum_deviation", row_sum_dev);
    ctx.table.add(n, param, "shell_sites", static_cast<double>(table.shell.size()));
    Json rec;
    rec["n"] = n;
    rec["shell_sites"] = table.shell.size();
    rec["band_lo"] = band_lo;
    rec["band_hi"] = band_hi;
    rec["row_sum_deviation"] = row_sum_dev;
    rec["residual"] = table.residual;
    Json lip = Json::array();
    for (double eps : spec.epsilon) {
      const int shift = static_cast<int>(std::lround(eps * n));
      if (eps > 0.25 || shift < 1) continue;
      Site xp(static_cast<std::size_t>(d), 0);
      xp[0] = shift;
      const double defect = lipschitz_defect(Site(static_cast<std::size_t>(d), 0), xp, geo);
      ctx.table.add(n, "eps=" + fmt(eps), "lipschitz_defect", defect);
      lip.push_back(Json{{"eps", eps}, {"shift", shift}, {"defect", defect}});
    }
    rec["lipschitz"] = lip;
    ctx.frame_file("frames_n" + std::to_string(n) + ".bin",
                   static_cast<std::uint64_t>(table.prob.size()))
        .write(table.prob);
    per_n.push_back(rec);
  }
  const double lo_var = (lo_max - lo_min) / lo_min;
  const double hi_var = (hi_max - hi_min) / hi_min;
  ctx.table.add(0, "sphere", "band_lo_variation", lo_var);
  ctx.table.add(0, "sphere", "band_hi_variation", hi_var);
  Json out;
  out["per_n"] = per_n;
  out["band_lo_variation"] = lo_var;
  out["band_hi_variation"] = hi_var;
  ctx.summary["hitting_validation"] = out;
}

double shift_height_for(const ExperimentSpec& spec, double fallback) {
  return spec.shift_height.value_or(fallback);
}

// One-site domain at the origin with zero boundary values.
LatticeDomain single_site(int d) {
  return domain_from_sites(d, {Site(static_cast<std::size_t>(d), 0)}, 1, 1);
}

Json sandwich(Context& ctx, double N, const std::string& param, const ProbEstimate& is,
              double log_p) {
  const double p_mu = is.tilted_hit_fraction;
  const double lb = p_mu > 0 ? std::log(p_mu) + entropy_lower_bound(is.shift_entropy, p_mu)
                             : -std::numeric_limits<double>::infinity();
  ctx.table.add(N, param, "entropy_lower_bound", lb);
  ctx.table.add(N, param, "tilted_event_probability", p_mu);
  ctx.table.add(N, param, "shift_entropy", is.shift_entropy);
  return Json{{"log_p", log_p},
              {"lower_bound", lb},
              {"tilted_event_probability", p_mu},
              {"shift_entropy", is.shift_entropy},
              {"holds", log_p >= lb}};
}

void exec_bounds(Context& ctx) {
  const ExperimentSpec& spec = ctx.spec;
  const int d = spec.dimension;
  Json out;

  // Bennett against Rademacher sums
  const std::uint64_t rs = derive_seed(spec.seed, "rademacher");
  std::vector<Index> sums(static_cast<std::size_t>(spec.trials));
#pragma omp parallel for schedule(static)
  for (Index k = 0; k < spec.trials; ++k) {
    CounterRng rng(rs, StreamTag::test, static_cast<std::uint64_t>(k), 0);
    Index s = 0;
    for (Index i = 0; i < spec.rademacher_n; ++i) s += (rng.next_u32() & 1u) ? 1 : -1;
    sums[static_cast<std::size_t>(k)] = s;
  }
  Json bennett = Json::array();
  for (double t : spec.bennett_t) {
    Index count = 0;
    for (Index s : sums) count += std::abs(static_cast<double>(s)) >= t;
    const double p = static_cast<double>(count) / static_cast<double>(spec.trials);
    const double se = std::sqrt(std::max(p * (1 - p), 1.0 / static_cast<double>(spec.trials)) /
                                static_cast<double>(spec.trials));
    const double bound = bennett_bound(spec.rademacher_n, 1.0, t);
    const std::string param = "t=" + fmt(t);
    ctx.table.add(static_cast<double>(spec.rademacher_n), param, "empirical_tail", p, se);
    ctx.table.add(static_cast<double>(spec.rademacher_n), param, "bennett_bound", bound);
    bennett.push_back(Json{{"t", t}, {"empirical", p}, {"se", se}, {"bound", bound},
                           {"dominates", bound >= p - 3 * se}});
  }
  out["bennett"] = bennett;

  // entropy inequality on one site
  Json entropy = Json::array();
  const LatticeDomain one = single_site(d);
  for (double a : spec.thresholds) {
    const WallField wall{WallSpec::flat(a), Eigen::VectorXd::Constant(1, a)};
    const Field psi = default_shift_profile(one, shift_height_for(spec, a), 0);
    const ProbEstimate is = importance_log_prob(one, wall, BoundaryCondition::zero(), psi,
                                                spec.samples,
                                                derive_seed(spec.seed, "entropy1/" + fmt(a)));
    const double exact = std::log(normal_upper_tail(a));
    Json rec = sandwich(ctx, 1, "single_site;a=" + fmt(a), is, exact);
    rec["domain"] = "single_site";
    rec["threshold"] = a;
    entropy.push_back(rec);
  }
  // entropy inequality on the configured domains
  for (int N : spec.N) {
    const LatticeDomain domain = domain_at(spec, N);
    const WallSpec ws = spec.walls.empty() ? WallSpec::flat(1.0) : spec.walls.front().spec;
    const WallField wall = spec.walls.empty() ? WallField{ws, Eigen::VectorXd::Constant(domain.size(), 1.0)}
                                              : make_wall(ctx, domain, 0, 0, N);
    const Field psi = default_shift_profile(domain, shift_height_for(spec, 1.0),
                                            spec.shift_ramp.value_or(domain.padding() - 1));
    const ProbEstimate is = importance_log_prob(domain, wall, spec.boundary, psi, spec.samples,
                                                derive_seed(spec.seed, "entropyN/" + std::to_string(N)));
    Json rec = sandwich(ctx, N, "domain;" + wall_label(ws), is, is.log_prob);
    rec["domain"] = "N=" + std::to_string(N);
    rec["log_p_se"] = is.log_se;
    entropy.push_back(rec);
  }
  out["entropy"] = entropy;

  // Jensen bound against exact truncated-normal conditional means
  Json jensen = Json::array();
  for (double a : spec.thresholds) {
    const double log_p = std::log(normal_upper_tail(a));
    const double exact = std::exp(-0.5 * a * a) / std::sqrt(2.0 * std::numbers::pi) /
                         normal_upper_tail(a);
    double best = std::numeric_limits<double>::infinity(), best_t = 0.0;
    for (int k = 1; k <= 400; ++k) {
      const double t = 0.025 * k;
      const double b = jensen_conditional_bound(0.5 * t * t, log_p, t);
      if (b < best) {
        best = b;
        best_t = t;
      }
    }
    const std::string param = "a=" + fmt(a);
    ctx.table.add(1, param, "conditional_mean_exact", exact);
    ctx.table.add(1, param, "jensen_bound", best);
    jensen.push_back(Json{{"threshold", a}, {"exact", exact}, {"bound", best}, {"t", best_t},
                          {"dominates", best >= exact}});
  }
  out["jensen"] = jensen;
  ctx.summary["bounds_validation"] = out;
}

void exec_rare_event(Context& ctx) {
  const ExperimentSpec& spec = ctx.spec;
  const int d = spec.dimension;
  Json out = Json::array();
  for (int N : spec.N) {
    const LatticeDomain domain = domain_at(spec, N);
    for (std::size_t w = 0; w < spec.walls.size(); ++w) {
      const WallField wall = make_wall(ctx, domain, w, 0, N);
      const std::string label = wall_label(wall.spec);
      const ProbEstimate direct = direct_mc_prob(
          domain, wall, spec.boundary, spec.samples,
          derive_seed(spec.seed, "direct/" + std::to_string(N) + "/" + std::to_string(w)));
      const Field psi = default_shift_profile(domain, shift_height_for(spec, 1.0),
                                              spec.shift_ramp.value_or(domain.padding() - 1));
      const ProbEstimate is = importance_log_prob(
          domain, wall, spec.boundary, psi, spec.samples,
          derive_seed(spec.seed, "importance/" + std::to_string(N) + "/" + std::to_string(w)));
      const double z = (is.prob - direct.prob) / std::hypot(is.se, direct.se);
      ctx.table.add(N, label, "direct_log_prob", direct.log_prob, direct.log_se);
      ctx.table.add(N, label, "importance_log_prob", is.log_prob, is.log_se);
      ctx.table.add(N, label, "direct_vs_importance_z", z);
      ctx.table.add(N, label, "importance_ess", is.ess);
      ctx.table.add(N, label, "weight_mean", is.weight_mean, is.weight_mean_se);
      if (direct.flagged) ctx.warnings.push_back("N=" + std::to_string(N) + " direct: " + direct.note);
      if (is.flagged) ctx.warnings.push_back("N=" + std::to_string(N) + " importance: " + is.note);
      Json rec;
      rec["N"] = N;
      rec["wall"] = to_json(wall.spec);
      rec["direct"] = to_json(direct);
      rec["importance"] = to_json(is);
      rec["z"] = z;
      rec["sandwich"] = sandwich(ctx, N, label, is, is.log_prob);
      ctx.frame_file("frames_N" + std::to_string(N) + ".bin",
                     static_cast<std::uint64_t>(psi.values.size()))
          .write(psi.values);
      out.push_back(rec);
    }
  }
  Json single = Json::array();
  const LatticeDomain one = single_site(d);
  for (double a : spec.thresholds) {
    const WallField wall{WallSpec::flat(a), Eigen::VectorXd::Constant(1, a)};
    const Field psi = default_shift_profile(one, shift_height_for(spec, a), 0);
    const ProbEstimate is = importance_log_prob(one, wall, BoundaryCondition::zero(), psi,
                                                spec.samples,
                                                derive_seed(spec.seed, "single/" + fmt(a)));
    const double exact = normal_upper_tail(a);
    const double z = (is.prob - exact) / is.se;
    const std::string param = "single_site;a=" + fmt(a);
    ctx.table.add(1, param, "importance_prob", is.prob, is.se);
    ctx.table.add(1, param, "exact_prob", exact);
    ctx.table.add(1, param, "z", z);
    Json rec = to_json(is);
    rec["threshold"] = a;
    rec["exact"] = exact;
    rec["z"] = z;
    single.push_back(rec);
  }
  ctx.summary["rare_event_validation"] = Json{{"domains", out}, {"single_site", single}};
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

bool is_previous_run(const fs::path& dir) {
  if (!fs::exists(dir)) return true;
  if (!fs::is_directory(dir)) return false;
  if (fs::is_empty(dir)) return true;
  return fs::exists(dir / "manifest.json");
}

}  // namespace

Json run_experiment(const Json& config, const fs::path& base_dir, const fs::path& out_dir,
                    const RunOptions& options) {
  Json effective = config;
  if (options.seed) effective["seed"] = *options.seed;
  ExperimentSpec spec = parse_experiment(effective, base_dir);
  // store resolved wall paths so the manifest is self-contained
  for (std::size_t i = 0; i < spec.walls.size(); ++i) {
    if (spec.walls[i].file) effective["walls"][i]["file"] = spec.walls[i].file->string();
  }
  const int threads_used = options.threads.value_or(spec.threads);
  set_threads(threads_used);

  const fs::path out = fs::absolute(out_dir).lexically_normal();
  if (!is_previous_run(out)) {
    throw Error("output directory " + out.string() + " exists and is not a run directory");
  }
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  const fs::path staging =
      out.parent_path() / (out.filename().string() + ".staging-" + std::to_string(::getpid()));
  fs::remove_all(staging);
  fs::create_directories(staging);

  Json manifest;
  manifest["tool"] = "hwall";
  manifest["tool_version"] = kToolVersion;
  manifest["schema_version"] = kSchemaVersion;
  manifest["kind"] = kind_name(spec.kind);
  manifest["config_sha256"] = sha256_hex(effective.dump());
  manifest["config"] = effective;
  manifest["seeds"] = Json{{"master", spec.seed}};
  manifest["threads"] = threads_used;
  manifest["started_utc"] = utc_now();

  Json inputs = Json::array();
  for (const WallEntry& e : spec.walls) {
    if (!e.file) continue;
    if (!fs::exists(*e.file)) {
      fs::remove_all(staging);
      throw Error("wall file not found: " + e.file->string());
    }
    inputs.push_back(Json{{"path", e.file->string()}, {"sha256", sha256_file(*e.file)}});
  }

  try {
    Context ctx{spec, staging};
    switch (spec.kind) {
      case Kind::green_validation:
        exec_green(ctx);
        break;
      case Kind::capacity_study:
        exec_capacity(ctx);
        break;
      case Kind::repulsion_scaling:
        exec_conditioned(ctx, false);
        break;
      case Kind::regime_comparison:
        exec_conditioned(ctx, true);
        break;
      case Kind::hitting_validation:
        exec_hitting(ctx);
        break;
      case Kind::bounds_validation:
        exec_bounds(ctx);
        break;
      case Kind::rare_event_validation:
        exec_rare_event(ctx);
        break;
    }
    ctx.frames.clear();
    ctx.table.write_csv(staging / "observables.csv");
    Json summary;
    summary["kind"] = kind_name(spec.kind);
    summary["tool_version"] = kToolVersion;
    summary["results"] = ctx.summary;
    summary["warnings"] = ctx.warnings;
    write_json(staging / "summary.json", summary);

    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(staging)) {
      names.push_back(entry.path().filename().string());
    }
    std::sort(names.begin(), names.end());
    Json outputs = Json::array();
    for (const std::string& name : names) {
      outputs.push_back(Json{{"file", name}, {"sha256", sha256_file(staging / name)}});
    }
    manifest["inputs"] = inputs;
    manifest["walls"] = ctx.walls;
    manifest["outputs"] = outputs;
    manifest["warnings"] = ctx.warnings;
    manifest["finished_utc"] = utc_now();
    write_json(staging / "manifest.json", manifest);
  } catch (...) {
    fs::remove_all(staging);
    throw;
  }
  fs::remove_all(out);
  fs::rename(staging, out);
  return manifest;
}

Json run_config_file(const fs::path& config_path, const fs::path& out_dir,
                     const RunOptions& options) {
  const Json config = read_json(config_path);
  return run_experiment(config, fs::absolute(config_path).parent_path(), out_dir, options);
}

ReplayReport replay(const fs::path& manifest_path, const fs::path& out_dir,
                    const RunOptions& options) {
  if (!fs::exists(manifest_path)) throw Error("manifest not found: " + manifest_path.string());
  const Json stored = read_json(manifest_path);
  for (const char* key : {"tool_version", "config", "outputs"}) {
    if (!stored.contains(key)) throw Error(std::string("manifest: missing '") + key + "'");
  }
  ReplayReport report;
  if (stored["tool_version"] != kToolVersion) {
    report.warnings.push_back("manifest written by version " +
                              stored["tool_version"].get<std::string>() + ", replaying with " +
                              kToolVersion);
  }
  if (stored.contains("inputs")) {
    for (const Json& in : stored["inputs"]) {
      const fs::path p = in["path"].get<std::string>();
      if (!fs::exists(p)) throw Error("missing input: " + p.string());
      const std::string h = sha256_file(p);
      if (h != in["sha256"].get<std::string>()) {
        throw IntegrityError("input " + p.string() + " changed: sha256 " + h + " != recorded " +
                             in["sha256"].get<std::string>());
      }
    }
  }
  const fs::path run_dir = fs::absolute(manifest_path).parent_path();
  for (const Json& o : stored["outputs"]) {
    const fs::path p = run_dir / o["file"].get<std::string>();
    if (fs::exists(p) && sha256_file(p) != o["sha256"].get<std::string>()) {
      report.warnings.push_back("stored output " + o["file"].get<std::string>() +
                                " differs from its recorded hash");
    }
  }
  report.manifest = run_experiment(stored["config"], run_dir, out_dir, options);
  std::map<std::string, std::string> fresh;
  for (const Json& o : report.manifest["outputs"]) fresh[o["file"]] = o["sha256"];
  std::set<std::string> seen;
  for (const Json& o : stored["outputs"]) {
    const std::string name = o["file"];
    seen.insert(name);
    auto it = fresh.find(name);
    if (it == fresh.end()) {
      report.diff.push_back(name + ": missing from replay");
    } else if (it->second != o["sha256"].get<std::string>()) {
      report.diff.push_back(name + ": sha256 " + it->second + " != recorded " +
                            o["sha256"].get<std::string>());
    }
  }
  for (const auto& [name, h] : fresh) {
    if (!seen.count(name)) report.diff.push_back(name + ": not in the recorded run");
  }
  report.identical = report.diff.empty();
  return report;
}

}  // namespace hwall
