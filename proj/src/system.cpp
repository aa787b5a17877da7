#include "istab/system.hpp"

#include <algorithm>
#include <cmath>

namespace istab::sys {

namespace {

constexpr double kDivergenceThreshold = 1e8;

} // namespace

InputSet InputSet::box(std::vector<double> lo, std::vector<double> hi) {
  if (lo.size() != hi.size())
    throw SystemError("input box bounds must have equal length");
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (lo[i] > hi[i]) throw SystemError("input box has lo > hi");
  InputSet s;
  s.type = Type::Box;
  s.lo = std::move(lo);
  s.hi = std::move(hi);
  return s;
}

InputSet InputSet::ball(int dim, double radius) {
  if (dim <= 0) throw SystemError("ball input set needs a positive dimension");
  if (radius <= 0.0) throw SystemError("ball input set needs a positive radius");
  InputSet s;
  s.type = Type::Ball;
  s.ball_dim = dim;
  s.radius = radius;
  return s;
}

InputSet InputSet::empty() { return InputSet{}; }

int InputSet::dim() const {
  return type == Type::Box ? static_cast<int>(lo.size()) : ball_dim;
}

bool InputSet::contains(std::span<const double> u, double tol) const {
  if (static_cast<int>(u.size()) != dim()) return false;
  if (type == Type::Box) {
    for (std::size_t i = 0; i < u.size(); ++i)
      if (u[i] < lo[i] - tol || u[i] > hi[i] + tol) return false;
    return true;
  }
  double s = 0.0;
  for (double ui : u) s += ui * ui;
  return std::sqrt(s) <= radius + tol;
}

void ControlSystem::eval_field(std::span<const double> x, std::span<const double> u,
                               std::span<double> out) const {
  expr::Env env{.x = x, .u = u};
  for (int i = 0; i < n; ++i) out[i] = expr::eval(field[i], env);
}

ControlSystem make_system(std::string name, int n, int m, InputSet input_set,
                          const std::vector<std::string>& field_exprs) {
  if (n <= 0) throw SystemError("state dimension must be positive");
  if (m < 0) throw SystemError("input dimension must be nonnegative");
  if (static_cast<int>(field_exprs.size()) != n)
    throw SystemError("field must provide exactly n components");
  if (m > 0 && input_set.dim() != m)
    throw SystemError("input set dimension does not match input dimension");
  ControlSystem sys;
  sys.name = std::move(name);
  sys.n = n;
  sys.m = m;
  sys.input_set = std::move(input_set);
  for (const auto& text : field_exprs)
    sys.field.push_back(expr::parse(text, expr::Dims{n, m}));
  return sys;
}

std::span<const double> InputSignal::value_at(double t) const {
  static const std::vector<double> kEmpty;
  if (values.empty()) return kEmpty;
  auto cell = static_cast<std::size_t>(std::max(t, 0.0) / dt);
  if (cell >= values.size()) cell = values.size() - 1;
  return values[cell];
}

InputSignal InputSignal::constant(std::vector<double> value, double duration) {
  InputSignal s;
  s.dim = static_cast<int>(value.size());
  s.dt = duration;
  s.values = {std::move(value)};
  return s;
}

InputSignal InputSignal::empty(double duration) {
  InputSignal s;
  s.dim = 0;
  s.dt = duration;
  s.values = {{}};
  return s;
}

InputSignal sample_signal(const InputSet& set, double duration, double cell_dt,
                          Rng& rng) {
  if (cell_dt <= 0.0) throw SystemError("signal cell width must be positive");
  InputSignal sig;
  sig.dim = set.dim();
  sig.dt = cell_dt;
  auto cells = static_cast<std::size_t>(std::ceil(duration / cell_dt - 1e-12));
  for (std::size_t c = 0; c < std::max<std::size_t>(cells, 1); ++c) {
    std::vector<double> u(sig.dim);
    if (set.type == InputSet::Type::Box) {
      for (int i = 0; i < sig.dim; ++i) u[i] = rng.uniform(set.lo[i], set.hi[i]);
    } else {
      // rejection sampling from the bounding cube
      for (;;) {
        double s = 0.0;
        for (int i = 0; i < sig.dim; ++i) {
          u[i] = rng.uniform(-set.radius, set.radius);
          s += u[i] * u[i];
        }
        if (std::sqrt(s) <= set.radius) break;
      }
    }
    sig.values.push_back(std::move(u));
  }
  return sig;
}

Trajectory integrate(const ControlSystem& system, std::span<const double> x0,
                     const InputSignal& signal, double horizon, double step) {
  if (step <= 0.0) throw SystemError("integration step must be positive");
  if (static_cast<int>(x0.size()) != system.n)
    throw SystemError("initial condition dimension mismatch");
  if (system.m > 0 && signal.dim != system.m)
    throw SystemError("signal dimension does not match input dimension");
  if (signal.duration() + 1e-12 < horizon)
    throw SystemError("signal shorter than the integration horizon");
  auto steps = static_cast<std::size_t>(std::llround(horizon / step));
  if (std::fabs(static_cast<double>(steps) * step - horizon) > 1e-9 * std::max(1.0, horizon))
    throw SystemError("horizon must be a multiple of the step");

  const int n = system.n;
  Trajectory traj;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  std::vector<double> x(x0.begin(), x0.end());
  traj.times.push_back(0.0);
  traj.states.push_back(x);

  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  for (std::size_t k = 0; k < steps; ++k) {
    double t = static_cast<double>(k) * step;
    system.eval_field(x, signal.value_at(t), k1);
    for (int i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * step * k1[i];
    system.eval_field(tmp, signal.value_at(t + 0.5 * step), k2);
    for (int i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * step * k2[i];
    system.eval_field(tmp, signal.value_at(t + 0.5 * step), k3);
    for (int i = 0; i < n; ++i) tmp[i] = x[i] + step * k3[i];
    system.eval_field(tmp, signal.value_at(t + step), k4);
    for (int i = 0; i < n; ++i)
      x[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    double tk = static_cast<double>(k + 1) * step;
    for (int i = 0; i < n; ++i)
      if (!std::isfinite(x[i]) || std::fabs(x[i]) > kDivergenceThreshold)
        throw DivergenceError(tk);
    traj.times.push_back(tk);
    traj.states.push_back(x);
  }
  return traj;
}

double lipschitz_estimate(const ControlSystem& system, const Box& Q, int samples,
                          std::uint64_t seed) {
  if (Q.dim() != system.n) throw SystemError("sample box dimension mismatch");
  if (samples < 100) throw SystemError("lipschitz_estimate needs at least 100 samples");
  Rng rng(seed);
  const int n = system.n;
  std::vector<double> x(n), y(n), fx(n), fy(n);
  std::vector<double> u(system.m);
  double best = 0.0;
  for (int k = 0; k < samples; ++k) {
    double sep = 0.0;
    for (int i = 0; i < n; ++i) {
      x[i] = rng.uniform(Q.lo[i], Q.hi[i]);
      y[i] = rng.uniform(Q.lo[i], Q.hi[i]);
      sep += (x[i] - y[i]) * (x[i] - y[i]);
    }
    sep = std::sqrt(sep);
    if (sep < 1e-9) continue;
    if (system.m > 0) {
      if (system.input_set.type == InputSet::Type::Box) {
        for (int i = 0; i < system.m; ++i)
          u[i] = rng.uniform(system.input_set.lo[i], system.input_set.hi[i]);
      } else {
        for (int i = 0; i < system.m; ++i)
          u[i] = rng.uniform(-system.input_set.radius, system.input_set.radius);
        double s = 0.0;
        for (double ui : u) s += ui * ui;
        s = std::sqrt(s);
        if (s > system.input_set.radius)
          for (double& ui : u) ui *= system.input_set.radius / s;
      }
    }
    system.eval_field(x, u, fx);
    system.eval_field(y, u, fy);
    double num = 0.0;
    for (int i = 0; i < n; ++i) num += (fx[i] - fy[i]) * (fx[i] - fy[i]);
    best = std::max(best, std::sqrt(num) / sep);
  }
  return best;
}

double sup_norm_diff(const InputSignal& a, const InputSignal& b) {
  if (a.dim != b.dim || a.values.size() != b.values.size() ||
      std::fabs(a.dt - b.dt) > 1e-12)
    throw SystemError("sup_norm_diff requires signals on the same grid");
  double sup = 0.0;
  for (std::size_t c = 0; c < a.values.size(); ++c) {
    double s = 0.0;
    for (int i = 0; i < a.dim; ++i) {
      double diff = a.values[c][i] - b.values[c][i];
      s += diff * diff;
    }
    sup = std::max(sup, std::sqrt(s));
  }
  return sup;
}

} // namespace istab::sys
