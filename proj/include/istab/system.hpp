#pragma once

#include "istab/expr.hpp"
#include "istab/rng.hpp"

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace istab::sys {

class SystemError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Forward-completeness violation at desk scale: a state component left
// [-1e8, 1e8] during integration.
class DivergenceError : public SystemError {
public:
  DivergenceError(double time)
      : SystemError("trajectory diverged near t = " + std::to_string(time)),
        blow_up_time(time) {}
  double blow_up_time;
};

// Compact convex input set: axis-aligned box or origin-centered ball.
struct InputSet {
  enum class Type { Box, Ball };

  Type type = Type::Box;
  std::vector<double> lo, hi; // Box
  double radius = 0.0;        // Ball
  int ball_dim = 0;

  static InputSet box(std::vector<double> lo, std::vector<double> hi);
  static InputSet ball(int dim, double radius);
  static InputSet empty(); // m = 0 systems

  int dim() const;
  bool contains(std::span<const double> u, double tol = 1e-12) const;
};

struct ControlSystem {
  std::string name;
  int n = 0;
  int m = 0;
  InputSet input_set;
  std::vector<expr::NodePtr> field; // n expressions over x1..xn, u1..um

  void eval_field(std::span<const double> x, std::span<const double> u,
                  std::span<double> out) const;
};

ControlSystem make_system(std::string name, int n, int m, InputSet input_set,
                          const std::vector<std::string>& field_exprs);

// Piecewise-constant input signal on a uniform grid.
struct InputSignal {
  int dim = 0;
  double dt = 0.0;
  std::vector<std::vector<double>> values; // one vector per grid cell

  double duration() const { return dt * static_cast<double>(values.size()); }
  std::span<const double> value_at(double t) const;

  static InputSignal constant(std::vector<double> value, double duration);
  static InputSignal empty(double duration); // m = 0
};

// Uniform sample from the input set, one value per grid cell.
InputSignal sample_signal(const InputSet& set, double duration, double cell_dt,
                          Rng& rng);

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> states;
};

// Classical fixed-step RK4. The signal value is held constant inside each
// signal-grid cell; stages read the signal at their own stage time.
Trajectory integrate(const ControlSystem& system, std::span<const double> x0,
                     const InputSignal& signal, double horizon, double step);

struct Box {
  std::vector<double> lo, hi;
  int dim() const { return static_cast<int>(lo.size()); }
};

// Sampled lower bound on the Lipschitz constant of x -> f(x, u) over Q.
double lipschitz_estimate(const ControlSystem& system, const Box& Q, int samples,
                          std::uint64_t seed = 0);

// sup-norm of a - b; exact for piecewise-constant signals on equal grids.
double sup_norm_diff(const InputSignal& a, const InputSignal& b);

} // namespace istab::sys
