#include "hwall/sampler.hpp"

#include <cmath>
#include <limits>

#include "hwall/rng.hpp"

namespace hwall {

BoundaryCondition BoundaryCondition::affine(double a, Eigen::VectorXd v) {
  BoundaryCondition bc;
  bc.kind = Kind::affine;
  bc.a = a;
  bc.v = std::move(v);
  require(std::isfinite(a) && bc.v.allFinite(), "bc: a and v must be finite");
  return bc;
}

double BoundaryCondition::value(const Site& x) const {
  if (kind == Kind::zero) return 0.0;
  double s = a;
  for (Index i = 0; i < v.size(); ++i) s += v[i] * x[static_cast<std::size_t>(i)];
  return s;
}

void BoundaryCondition::validate(int d) const {
  if (kind == Kind::affine) require(v.size() == d, "bc.v: length must equal d");
}

Field boundary_field(const BoxGeometry& box, const BoundaryCondition& bc) {
  bc.validate(box.dim());
  Field f;
  f.box = box;
  f.values.resize(box.size());
  for (Index i = 0; i < box.size(); ++i) f.values[i] = bc.value(box.site(i));
  return f;
}

Eigen::VectorXd site_values(const Field& field, const LatticeDomain& domain) {
  require(field.box == domain.box(), "site_values: field and domain boxes differ");
  Eigen::VectorXd out(domain.size());
  for (Index i = 0; i < domain.size(); ++i) out[i] = field.values[domain.flat_of(i)];
  return out;
}

Field shift_field(const Field& field, const Field& psi) {
  if (!(field.box == psi.box)) throw InvalidArgument("shift_field: domain mismatch");
  return {field.box, field.values + psi.values};
}

ExactSampler::ExactSampler(const LatticeDomain& domain, const BoundaryCondition& bc, Index guard)
    : box_(domain.box()) {
  GreenTable table = green_field_region(domain, true, guard);
  interior_ = std::move(table.region);
  covariance_ = std::move(table.values);
  factor_ = std::move(table.factor);
  boundary_ = boundary_field(box_, bc);
  mean_.resize(static_cast<Index>(interior_.size()));
  for (std::size_t i = 0; i < interior_.size(); ++i) {
    mean_[static_cast<Index>(i)] = boundary_.values[interior_[i]];
  }
}

Eigen::VectorXd ExactSampler::noise(std::uint64_t seed, Index index) const {
  CounterRng rng(seed, StreamTag::exact, static_cast<std::uint32_t>(index),
                 static_cast<std::uint32_t>(static_cast<std::uint64_t>(index) >> 32));
  Eigen::VectorXd z(mean_.size());
  for (Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return z;
}

Eigen::MatrixXd ExactSampler::interior_samples(std::uint64_t seed, Index first,
                                               Index count) const {
  require(count >= 0, "interior_samples: count must be >= 0");
  Eigen::MatrixXd z(mean_.size(), count);
#pragma omp parallel for schedule(static)
  for (Index k = 0; k < count; ++k) z.col(k) = noise(seed, first + k);
  Eigen::MatrixXd out = factor_.triangularView<Eigen::Lower>() * z;
  out.colwise() += mean_;
  return out;
}

Field ExactSampler::sample(std::uint64_t seed, Index index) const {
  Field f = boundary_;
  const Eigen::VectorXd x = mean_ + factor_.triangularView<Eigen::Lower>() * noise(seed, index);
  for (std::size_t i = 0; i < interior_.size(); ++i) {
    f.values[interior_[i]] = x[static_cast<Index>(i)];
  }
  return f;
}

Field exact_sample(const LatticeDomain& domain, const BoundaryCondition& bc, std::uint64_t seed) {
  return ExactSampler(domain, bc).sample(seed, 0);
}

void Schedule::validate() const {
  require(burn_in >= 0, "schedule.burn_in: must be >= 0");
  require(thinning >= 1, "schedule.thinning: must be >= 1");
  require(samples >= 1, "schedule.samples: must be >= 1");
}

SamplerState make_state(const LatticeDomain& domain, const BoundaryCondition& bc,
                        std::uint64_t seed) {
  SamplerState s;
  s.field = boundary_field(domain.box(), bc);
  s.lower = Eigen::VectorXd::Constant(domain.box().size(),
                                      -std::numeric_limits<double>::infinity());
  s.seed = seed;
  auto colors = std::make_shared<std::array<std::vector<Index>, 2>>();
  for (Index f : domain.box().interior_indices()) {
    (*colors)[static_cast<std::size_t>(domain.box().parity(f))].push_back(f);
  }
  s.colors = std::move(colors);
  return s;
}

void set_wall(SamplerState& state, const LatticeDomain& domain, const WallField& wall) {
  require(wall.size() == domain.size(), "set_wall: wall does not match the domain");
  require(state.field.box == domain.box(), "set_wall: state and domain boxes differ");
  for (Index i = 0; i < domain.size(); ++i) {
    require(std::isfinite(wall.values[i]), "set_wall: wall must be finite on D_N");
    const Index f = domain.flat_of(i);
    require(domain.box().interior(f), "set_wall: D_N site on the box face");
    state.lower[f] = wall.values[i];
  }
  state.wall_active = true;
}

void heat_bath_sweep(SamplerState& state) {
  const BoxGeometry& box = state.field.box;
  const auto& offsets = box.neighbor_offsets();
  const double hop = 1.0 / static_cast<double>(offsets.size());
  double* values = state.field.values.data();
  const double* lower = state.lower.data();
  const auto sweep = static_cast<std::uint32_t>(state.sweep_count);
  for (const std::vector<Index>& color : *state.colors) {
    const Index n = static_cast<Index>(color.size());
    Index failed = -1;
    std::string failure;
#pragma omp parallel for schedule(static)
    for (Index k = 0; k < n; ++k) {
      const Index f = color[static_cast<std::size_t>(k)];
      double s = 0.0;
      for (Index off : offsets) s += values[f + off];
      const double mean = hop * s;
      CounterRng rng(state.seed, StreamTag::heat_bath, static_cast<std::uint32_t>(f), sweep);
      try {
        values[f] = mean + truncated_standard_normal(lower[f] - mean, rng);
      } catch (const NumericalError& e) {
#pragma omp critical
        {
          if (failed < 0 || f < failed) {
            failed = f;
            failure = e.what();
          }
        }
      }
    }
    if (failed >= 0) {
      const Site x = box.site(failed);
      std::string where;
      for (int v : x) where += (where.empty() ? "" : ",") + std::to_string(v);
      throw NumericalError("heat bath: site (" + where + ") at sweep " +
                           std::to_string(state.sweep_count) + ": " + failure);
    }
  }
  ++state.sweep_count;
}

bool satisfies_wall(const SamplerState& state) {
  if (!state.wall_active) return true;
  return (state.field.values.array() >= state.lower.array()).all();
}

double integrated_autocorrelation(const std::vector<double>& series, int batches) {
  require(batches >= 2, "integrated_autocorrelation: batches must be >= 2");
  const auto n = static_cast<Index>(series.size());
  const Index len = n / batches;
  if (len < 1) return std::numeric_limits<double>::quiet_NaN();
  const Index used = len * batches;
  double mean = 0.0;
  for (Index i = 0; i < used; ++i) mean += series[static_cast<std::size_t>(i)];
  mean /= static_cast<double>(used);
  double var = 0.0;
  for (Index i = 0; i < used; ++i) {
    const double e = series[static_cast<std::size_t>(i)] - mean;
    var += e * e;
  }
  var /= static_cast<double>(used - 1);
  if (var == 0.0) return 0.5;
  double var_batch = 0.0;
  for (int b = 0; b < batches; ++b) {
    double m = 0.0;
    for (Index i = 0; i < len; ++i) m += series[static_cast<std::size_t>(b * len + i)];
    m /= static_cast<double>(len);
    var_batch += (m - mean) * (m - mean);
  }
  var_batch /= batches - 1;
  return std::max(0.5, 0.5 * static_cast<double>(len) * var_batch / var);
}

ConditionedRun sample_conditioned(const LatticeDomain& domain, const WallField& wall,
                                  const BoundaryCondition& bc, const Schedule& schedule,
                                  std::uint64_t seed, double h0, const SampleSink& sink) {
  schedule.validate();
  require(std::isfinite(h0), "sample_conditioned: h0 must be finite");
  SamplerState state = make_state(domain, bc, seed);
  state.schedule = schedule;
  set_wall(state, domain, wall);
  for (const auto& color : *state.colors) {
    for (Index f : color) state.field.values[f] += h0;
  }
  for (Index i = 0; i < domain.size(); ++i) {
    const Index f = domain.flat_of(i);
    state.field.values[f] = std::max(wall.values[i], bc.value(domain.site(i))) + h0;
  }

  for (Index s = 0; s < schedule.burn_in; ++s) heat_bath_sweep(state);
  ConditionedRun run;
  const auto flats = domain.flat_indices();
  for (Index k = 0; k < schedule.samples; ++k) {
    for (Index t = 0; t < schedule.thinning; ++t) heat_bath_sweep(state);
    if (!satisfies_wall(state)) {
      throw NumericalError("sample_conditioned: wall constraint violated at sweep " +
                           std::to_string(state.sweep_count));
    }
    double m = 0.0;
    for (Index f : flats) m += state.field.values[f];
    run.block_means.push_back(m / static_cast<double>(flats.size()));
    if (sink) sink(k, state);
  }
  run.samples = schedule.samples;
  run.sweeps = state.sweep_count;
  if (schedule.samples >= 40) {
    run.tau = integrated_autocorrelation(run.block_means) * static_cast<double>(schedule.thinning);
    if (static_cast<double>(schedule.burn_in) < 20.0 * run.tau) {
      run.burn_in_ok = false;
      run.warnings.push_back("burn_in " + std::to_string(schedule.burn_in) + " < 20 tau (tau = " +
                             std::to_string(run.tau) + " sweeps)");
    }
  } else {
    run.tau = std::numeric_limits<double>::quiet_NaN();
    run.burn_in_ok = false;
    run.warnings.push_back("fewer than 40 samples: tau not estimated");
  }
  return run;
}

}  // namespace hwall
