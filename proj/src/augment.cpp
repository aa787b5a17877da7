#include "istab/augment.hpp"

#include <algorithm>
#include <cmath>

namespace istab::aug {

std::vector<double> sat(std::span<const double> u, const sys::InputSet& set) {
  if (static_cast<int>(u.size()) != set.dim())
    throw AugmentError("sat: input dimension mismatch");
  std::vector<double> out(u.begin(), u.end());
  if (set.type == sys::InputSet::Type::Box) {
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = std::clamp(out[i], set.lo[i], set.hi[i]);
    return out;
  }
  auto norm_of = [&] {
    double sq = 0.0;
    for (double ui : out) sq += ui * ui;
    return std::sqrt(sq);
  };
  // repeat the rescale until the rounded result lands inside the ball, so
  // an already-saturated input is a bitwise fixed point
  for (double norm = norm_of(); norm > set.radius; norm = norm_of()) {
    double scale = set.radius / norm;
    if (scale >= 1.0) break; // norm within half an ulp of the radius
    for (double& ui : out) ui *= scale;
  }
  return out;
}

void AugmentedSystem::eval_field(std::span<const double> z,
                                 std::span<const double> omega,
                                 std::span<double> out) const {
  const int n = base.n;
  const int m = base.m;
  auto x1 = z.subspan(0, n);
  auto x2 = z.subspan(n, n);
  if (mode == AugmentMode::Gas) {
    base.eval_field(x1, omega, out.subspan(0, n));
    base.eval_field(x2, omega, out.subspan(n, n));
    return;
  }
  auto w1 = omega.subspan(0, m);
  auto w2 = omega.subspan(m, m);
  double scale = (*rho)((*metric)(x1, x2));
  std::vector<double> plus(m), minus(m);
  for (int i = 0; i < m; ++i) {
    plus[i] = w1[i] + scale * w2[i];
    minus[i] = w1[i] - scale * w2[i];
  }
  std::vector<double> u1 = sat(plus, base.input_set);
  std::vector<double> u2 = sat(minus, base.input_set);
  base.eval_field(x1, u1, out.subspan(0, n));
  base.eval_field(x2, u2, out.subspan(n, n));
}

bool AugmentedSystem::input_in_domain(std::span<const double> omega,
                                      double tol) const {
  const int m = base.m;
  if (static_cast<int>(omega.size()) != input_dim()) return false;
  if (mode == AugmentMode::Gas) return base.input_set.contains(omega, tol);
  if (!base.input_set.contains(omega.subspan(0, m), tol)) return false;
  double norm = 0.0;
  for (int i = 0; i < m; ++i) norm += omega[m + i] * omega[m + i];
  return std::sqrt(norm) <= 1.0 + tol;
}

AugmentedSystem augment_gas(sys::ControlSystem system) {
  AugmentedSystem a;
  a.base = std::move(system);
  a.mode = AugmentMode::Gas;
  return a;
}

AugmentedSystem augment_iss(sys::ControlSystem system, met::Metric metric,
                            cmp::KInfFn rho) {
  if (metric.dim() != system.n)
    throw AugmentError("augment_iss: metric dimension must match the state dimension");
  AugmentedSystem a;
  a.base = std::move(system);
  a.mode = AugmentMode::Iss;
  a.metric = std::move(metric);
  a.rho = std::move(rho);
  return a;
}

AugTrajectory integrate_augmented(const AugmentedSystem& asys,
                                  std::span<const double> z0,
                                  const sys::InputSignal& signal, double horizon,
                                  double step, const met::Metric& trace_metric) {
  if (static_cast<int>(z0.size()) != asys.state_dim())
    throw AugmentError("integrate_augmented: initial condition dimension mismatch");
  // Wrap the augmented field in a ControlSystem-shaped integration loop by
  // running RK4 directly; the field is native code, not an expression.
  if (step <= 0.0) throw sys::SystemError("integration step must be positive");
  if (signal.duration() + 1e-12 < horizon)
    throw sys::SystemError("signal shorter than the integration horizon");
  auto steps = static_cast<std::size_t>(std::llround(horizon / step));
  if (std::fabs(static_cast<double>(steps) * step - horizon) >
      1e-9 * std::max(1.0, horizon))
    throw sys::SystemError("horizon must be a multiple of the step");

  const int dim = asys.state_dim();
  const int n = asys.base.n;
  AugTrajectory out;
  std::vector<double> z(z0.begin(), z0.end());
  out.trajectory.times.push_back(0.0);
  out.trajectory.states.push_back(z);
  out.diag_distance.push_back(
      trace_metric(std::span<const double>(z).subspan(0, n),
                   std::span<const double>(z).subspan(n, n)));

  std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
  for (std::size_t k = 0; k < steps; ++k) {
    double t = static_cast<double>(k) * step;
    asys.eval_field(z, signal.value_at(t), k1);
    for (int i = 0; i < dim; ++i) tmp[i] = z[i] + 0.5 * step * k1[i];
    asys.eval_field(tmp, signal.value_at(t + 0.5 * step), k2);
    for (int i = 0; i < dim; ++i) tmp[i] = z[i] + 0.5 * step * k2[i];
    asys.eval_field(tmp, signal.value_at(t + 0.5 * step), k3);
    for (int i = 0; i < dim; ++i) tmp[i] = z[i] + step * k3[i];
    asys.eval_field(tmp, signal.value_at(t + step), k4);
    for (int i = 0; i < dim; ++i)
      z[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    double tk = static_cast<double>(k + 1) * step;
    for (int i = 0; i < dim; ++i)
      if (!std::isfinite(z[i]) || std::fabs(z[i]) > 1e8)
        throw sys::DivergenceError(tk);
    out.trajectory.times.push_back(tk);
    out.trajectory.states.push_back(z);
    out.diag_distance.push_back(
        trace_metric(std::span<const double>(z).subspan(0, n),
                     std::span<const double>(z).subspan(n, n)));
  }
  return out;
}

sys::InputSignal sample_d_signal(const sys::InputSet& input_set, double duration,
                                 double cell_dt, Rng& rng) {
  const int m = input_set.dim();
  sys::InputSignal w1 = sys::sample_signal(input_set, duration, cell_dt, rng);
  sys::InputSignal ball =
      sys::sample_signal(sys::InputSet::ball(m, 1.0), duration, cell_dt, rng);
  sys::InputSignal out;
  out.dim = 2 * m;
  out.dt = cell_dt;
  for (std::size_t c = 0; c < w1.values.size(); ++c) {
    std::vector<double> cell = w1.values[c];
    cell.insert(cell.end(), ball.values[c].begin(), ball.values[c].end());
    out.values.push_back(std::move(cell));
  }
  return out;
}

void validate_d_signal(const AugmentedSystem& asys, const sys::InputSignal& signal) {
  if (signal.dim != asys.input_dim())
    throw AugmentError("signal dimension does not match the augmented input space");
  for (const auto& cell : signal.values)
    if (!asys.input_in_domain(cell))
      throw AugmentError("signal cell lies outside U x B_1(0)");
}

} // namespace istab::aug
