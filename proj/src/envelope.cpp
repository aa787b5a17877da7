#include "istab/envelope.hpp"

#include "istab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace istab::envl {

namespace {

constexpr double kDominationSlack = 1e-9;
constexpr double kTinyR0 = 1e-12;

std::vector<double> random_point(const sys::Box& box, Rng& rng) {
  std::vector<double> x(box.dim());
  for (int i = 0; i < box.dim(); ++i) x[i] = rng.uniform(box.lo[i], box.hi[i]);
  return x;
}

// Second initial condition at a separation stratified across three
// decades, clamped back into the domain.
std::vector<double> offset_point(const std::vector<double>& x0, const sys::Box& box,
                                 int decade, Rng& rng) {
  std::vector<double> x(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) {
    double span = box.hi[i] - box.lo[i];
    double scale = 0.25 * span * std::pow(10.0, -decade);
    double delta = rng.uniform(-1.0, 1.0);
    if (std::fabs(delta) < 0.1) delta = delta < 0 ? -0.1 : 0.1; // keep pairs apart
    x[i] = std::clamp(x0[i] + delta * scale, box.lo[i], box.hi[i]);
  }
  return x;
}

std::vector<sys::InputSignal> extreme_signals(const sys::InputSet& set,
                                              double duration) {
  std::vector<sys::InputSignal> out;
  if (set.dim() == 0) return out;
  if (set.type == sys::InputSet::Type::Box) {
    out.push_back(sys::InputSignal::constant(set.hi, duration));
    out.push_back(sys::InputSignal::constant(set.lo, duration));
  } else {
    std::vector<double> hi(set.dim(), 0.0), lo(set.dim(), 0.0);
    hi[0] = set.radius;
    lo[0] = -set.radius;
    out.push_back(sys::InputSignal::constant(hi, duration));
    out.push_back(sys::InputSignal::constant(lo, duration));
  }
  return out;
}

void record_trace(std::vector<TraceSample>& samples, int pair_id, double r0,
                  double input_gap, const sys::Trajectory& a,
                  const sys::Trajectory& b, const met::Metric& d,
                  double trace_dt) {
  std::size_t stride = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(trace_dt / (a.times[1] - a.times[0]))));
  for (std::size_t k = 0; k < a.times.size(); k += stride) {
    TraceSample s;
    s.pair_id = pair_id;
    s.t = a.times[k];
    s.r0 = r0;
    s.dist = d(a.states[k], b.states[k]);
    s.input_gap = input_gap;
    samples.push_back(s);
  }
}

} // namespace

std::vector<TraceSample> gas_ensemble(const sys::ControlSystem& system,
                                      const met::Metric& d,
                                      const EnsembleSpec& spec) {
  if (spec.pairs < 1) throw EnvelopeError("ensemble needs at least one pair");
  if (spec.x0_domain.dim() != system.n)
    throw EnvelopeError("x0 domain dimension mismatch");
  std::vector<TraceSample> samples;
  std::vector<sys::InputSignal> probes =
      spec.include_probes ? extreme_signals(system.input_set, spec.horizon)
                          : std::vector<sys::InputSignal>{};
  for (int pair = 0; pair < spec.pairs; ++pair) {
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(pair)));
    std::vector<double> x0 = random_point(spec.x0_domain, rng);
    std::vector<double> x0b = offset_point(x0, spec.x0_domain, pair % 3, rng);
    sys::InputSignal sig;
    if (system.m == 0) {
      sig = sys::InputSignal::empty(spec.horizon);
    } else if (pair < static_cast<int>(probes.size())) {
      sig = probes[pair];
    } else {
      sig = sys::sample_signal(system.input_set, spec.horizon, spec.signal_cell, rng);
    }
    double r0 = d(x0, x0b);
    if (r0 < kTinyR0) continue;
    sys::Trajectory a = sys::integrate(system, x0, sig, spec.horizon, spec.step);
    sys::Trajectory b = sys::integrate(system, x0b, sig, spec.horizon, spec.step);
    record_trace(samples, pair, r0, 0.0, a, b, d, spec.trace_dt);
  }
  return samples;
}

std::vector<TraceSample> iss_ensemble(const sys::ControlSystem& system,
                                      const met::Metric& d,
                                      const EnsembleSpec& spec) {
  if (system.m == 0)
    throw EnvelopeError("ISS ensembles need an input dimension");
  if (spec.x0_domain.dim() != system.n)
    throw EnvelopeError("x0 domain dimension mismatch");
  std::vector<TraceSample> samples;

  // Probe pairs: shared initial state, constant signals with input gaps
  // stratified across three decades around the set center.
  int probe_count = 0;
  if (spec.include_probes && system.input_set.type == sys::InputSet::Type::Box) {
    std::vector<double> center(system.m), halfspan(system.m);
    for (int i = 0; i < system.m; ++i) {
      center[i] = 0.5 * (system.input_set.lo[i] + system.input_set.hi[i]);
      halfspan[i] = 0.5 * (system.input_set.hi[i] - system.input_set.lo[i]);
    }
    std::vector<double> mid(system.n);
    for (int i = 0; i < system.n; ++i)
      mid[i] = 0.5 * (spec.x0_domain.lo[i] + spec.x0_domain.hi[i]);
    for (int decade = 0; decade < 3 && probe_count < spec.pairs; ++decade) {
      double scale = std::pow(10.0, -decade);
      std::vector<double> up(system.m), down(system.m);
      for (int i = 0; i < system.m; ++i) {
        up[i] = center[i] + scale * halfspan[i];
        down[i] = center[i] - scale * halfspan[i];
      }
      sys::InputSignal sig = sys::InputSignal::constant(up, spec.horizon);
      sys::InputSignal sigb = sys::InputSignal::constant(down, spec.horizon);
      sys::Trajectory a = sys::integrate(system, mid, sig, spec.horizon, spec.step);
      sys::Trajectory b = sys::integrate(system, mid, sigb, spec.horizon, spec.step);
      record_trace(samples, probe_count, 0.0, sys::sup_norm_diff(sig, sigb), a, b,
                   d, spec.trace_dt);
      ++probe_count;
    }
  }

  for (int pair = probe_count; pair < spec.pairs; ++pair) {
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(pair)));
    std::vector<double> x0 = random_point(spec.x0_domain, rng);
    std::vector<double> x0b = offset_point(x0, spec.x0_domain, pair % 3, rng);
    sys::InputSignal sig =
        sys::sample_signal(system.input_set, spec.horizon, spec.signal_cell, rng);
    sys::InputSignal sigb =
        sys::sample_signal(system.input_set, spec.horizon, spec.signal_cell, rng);
    double r0 = d(x0, x0b);
    sys::Trajectory a = sys::integrate(system, x0, sig, spec.horizon, spec.step);
    sys::Trajectory b = sys::integrate(system, x0b, sigb, spec.horizon, spec.step);
    record_trace(samples, pair, r0, sys::sup_norm_diff(sig, sigb), a, b, d,
                 spec.trace_dt);
  }
  return samples;
}

std::optional<cmp::KLFn> fit_kl_envelope(const std::vector<TraceSample>& samples,
                                         const FitConstraints& constraints) {
  // c: worst observed amplification of the initial distance.
  double c = 1.0;
  bool any = false;
  for (const auto& s : samples) {
    if (s.r0 < kTinyR0) continue; // on-diagonal traces are trivially dominated
    any = true;
    c = std::max(c, s.dist / s.r0);
  }
  if (!any || c > constraints.c_max) return std::nullopt;

  auto feasible = [&](double lambda) {
    for (const auto& s : samples) {
      if (s.r0 < kTinyR0) continue;
      if (s.dist > c * s.r0 * std::exp(-lambda * s.t) + kDominationSlack)
        return false;
    }
    return true;
  };

  // Largest feasible lambda: log-spaced grid scan, then bisection between
  // the winner and the next (infeasible) grid point.
  const double log_lo = std::log(constraints.lambda_min);
  const double log_hi = std::log(constraints.lambda_max);
  double best = -1.0, upper = -1.0;
  for (int i = constraints.grid - 1; i >= 0; --i) {
    double lambda = std::exp(log_lo + (log_hi - log_lo) * i /
                                          (constraints.grid - 1));
    if (feasible(lambda)) {
      best = lambda;
      upper = i + 1 < constraints.grid
                  ? std::exp(log_lo + (log_hi - log_lo) * (i + 1) /
                                          (constraints.grid - 1))
                  : lambda;
      break;
    }
  }
  if (best < 0.0) return std::nullopt;
  for (int iter = 0; iter < 50 && upper > best; ++iter) {
    double mid = 0.5 * (best + upper);
    if (feasible(mid))
      best = mid;
    else
      upper = mid;
  }
  return cmp::KLFn{cmp::linear_k(c), best};
}

namespace {

double beta_residual(const std::vector<TraceSample>& samples, const cmp::KLFn& beta) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& s : samples)
    worst = std::max(worst, s.dist - beta(s.r0, s.t));
  return worst;
}

} // namespace

EnvelopeFit estimate_gas_envelope(const sys::ControlSystem& system,
                                  const met::Metric& d, const EnsembleSpec& spec,
                                  const FitConstraints& constraints) {
  EnvelopeFit fit;
  fit.seed = spec.seed;
  fit.traces = gas_ensemble(system, d, spec);
  fit.pairs = spec.pairs;
  fit.samples = static_cast<int>(fit.traces.size());
  auto beta = fit_kl_envelope(fit.traces, constraints);
  if (!beta) {
    fit.verdict = "no envelope in family";
    return fit;
  }
  fit.beta_found = true;
  fit.beta = *beta;
  fit.max_residual = beta_residual(fit.traces, fit.beta);
  fit.verdict = "ok";
  return fit;
}

EnvelopeFit estimate_iss_gain(const sys::ControlSystem& system,
                              const met::Metric& d, const cmp::KLFn& beta,
                              const EnsembleSpec& spec,
                              const FitConstraints& constraints) {
  EnvelopeFit fit;
  fit.seed = spec.seed;
  fit.beta = beta;
  fit.beta_found = true;
  fit.traces = iss_ensemble(system, d, spec);
  fit.pairs = spec.pairs;
  fit.samples = static_cast<int>(fit.traces.size());

  // Smallest dominating gain by (c, p), p drawn from a fixed menu.
  const double p_menu[] = {0.5, 1.0, 2.0};
  double best_c = std::numeric_limits<double>::infinity();
  double best_p = 0.0;
  double best_cmax = std::numeric_limits<double>::infinity();
  double best_pmax = 0.0;
  for (double p : p_menu) {
    double c_sum = 0.0, c_max_form = 0.0;
    bool ok = true;
    for (const auto& s : fit.traces) {
      double excess = s.dist - beta(s.r0, s.t);
      if (excess <= kDominationSlack) continue;
      if (s.input_gap < kTinyR0) {
        ok = false; // violation with no input gap: no gain can absorb it
        break;
      }
      c_sum = std::max(c_sum, excess / std::pow(s.input_gap, p));
      c_max_form = std::max(c_max_form, s.dist / std::pow(s.input_gap, p));
    }
    if (!ok) continue;
    c_sum = std::max(c_sum, 1e-12); // keep the gain a valid K-function
    c_max_form = std::max(c_max_form, 1e-12);
    if (c_sum <= constraints.c_max &&
        (c_sum < best_c || (c_sum == best_c && p < best_p))) {
      best_c = c_sum;
      best_p = p;
    }
    if (c_max_form <= constraints.c_max && c_max_form < best_cmax) {
      best_cmax = c_max_form;
      best_pmax = p;
    }
  }
  if (std::isfinite(best_c)) {
    fit.gamma_found = true;
    fit.gamma = cmp::power_k(best_c, best_p);
  }
  if (std::isfinite(best_cmax)) {
    fit.gamma_max_found = true;
    fit.gamma_max = cmp::power_k(best_cmax, best_pmax);
  }
  fit.verdict = fit.gamma_found ? "ok" : "no gain in family";
  if (fit.gamma_found) {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& s : fit.traces)
      worst = std::max(worst, s.dist - beta(s.r0, s.t) - fit.gamma(s.input_gap));
    fit.max_residual = worst;
  }
  return fit;
}

EnvelopeFit validate_ugas(const aug::AugmentedSystem& asys, const met::Metric& d,
                          const EnsembleSpec& spec,
                          const FitConstraints& constraints) {
  if (spec.x0_domain.dim() != asys.base.n)
    throw EnvelopeError("x0 domain dimension mismatch");
  EnvelopeFit fit;
  fit.seed = spec.seed;
  for (int run = 0; run < spec.pairs; ++run) {
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(run)));
    std::vector<double> x0 = random_point(spec.x0_domain, rng);
    std::vector<double> x0b = offset_point(x0, spec.x0_domain, run % 3, rng);
    std::vector<double> z0 = x0;
    z0.insert(z0.end(), x0b.begin(), x0b.end());
    sys::InputSignal omega;
    if (asys.mode == aug::AugmentMode::Iss) {
      omega = aug::sample_d_signal(asys.base.input_set, spec.horizon,
                                   spec.signal_cell, rng);
      aug::validate_d_signal(asys, omega);
    } else if (asys.base.m > 0) {
      omega = sys::sample_signal(asys.base.input_set, spec.horizon,
                                 spec.signal_cell, rng);
    } else {
      omega = sys::InputSignal::empty(spec.horizon);
    }
    double r0 = d(x0, x0b);
    aug::AugTrajectory traj =
        aug::integrate_augmented(asys, z0, omega, spec.horizon, spec.step, d);
    std::size_t stride = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(spec.trace_dt / spec.step)));
    for (std::size_t k = 0; k < traj.trajectory.times.size(); k += stride) {
      TraceSample s;
      s.pair_id = run;
      s.t = traj.trajectory.times[k];
      s.r0 = r0;
      s.dist = traj.diag_distance[k];
      fit.traces.push_back(s);
    }
  }
  fit.pairs = spec.pairs;
  fit.samples = static_cast<int>(fit.traces.size());
  auto beta = fit_kl_envelope(fit.traces, constraints);
  if (!beta) {
    fit.verdict = "no envelope in family";
    return fit;
  }
  fit.beta_found = true;
  fit.beta = *beta;
  fit.max_residual = beta_residual(fit.traces, fit.beta);
  fit.verdict = "ok";
  return fit;
}

} // namespace istab::envl
