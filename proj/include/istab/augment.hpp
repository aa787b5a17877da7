#pragma once

#include "istab/comparison.hpp"
#include "istab/metric.hpp"
#include "istab/system.hpp"

#include <optional>
#include <span>
#include <vector>

namespace istab::aug {

class AugmentError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Euclidean projection onto the closed convex input set: componentwise
// clamp for boxes, radial scaling for balls, identity inside the set.
std::vector<double> sat(std::span<const double> u, const sys::InputSet& set);

enum class AugmentMode { Gas, Iss };

// Doubled system on R^{2n}. Gas mode drives both copies with the shared
// input; Iss mode feeds sat_U(w1 +/- rho(d(x1, x2)) * w2) to the copies,
// with disturbance inputs w = (w1, w2) in U x B_1(0).
struct AugmentedSystem {
  sys::ControlSystem base;
  AugmentMode mode = AugmentMode::Gas;
  std::optional<met::Metric> metric; // Iss
  std::optional<cmp::KInfFn> rho;    // Iss

  int state_dim() const { return 2 * base.n; }
  int input_dim() const { return mode == AugmentMode::Gas ? base.m : 2 * base.m; }

  void eval_field(std::span<const double> z, std::span<const double> omega,
                  std::span<double> out) const;
  bool input_in_domain(std::span<const double> omega, double tol = 1e-9) const;
};

AugmentedSystem augment_gas(sys::ControlSystem system);
AugmentedSystem augment_iss(sys::ControlSystem system, met::Metric metric,
                            cmp::KInfFn rho);

struct AugTrajectory {
  sys::Trajectory trajectory;
  std::vector<double> diag_distance; // d(x1(t_k), x2(t_k)), closed form
};

// RK4 on the augmented field; the metric term inside the Iss field is
// evaluated fresh at every stage. trace_metric measures the per-step
// distance to the diagonal.
AugTrajectory integrate_augmented(const AugmentedSystem& asys,
                                  std::span<const double> z0,
                                  const sys::InputSignal& signal, double horizon,
                                  double step, const met::Metric& trace_metric);

// Piecewise-constant signal with w1 uniform in U and w2 uniform in the
// unit ball; every cell is validated against D = U x B_1(0).
sys::InputSignal sample_d_signal(const sys::InputSet& input_set, double duration,
                                 double cell_dt, Rng& rng);

// Rejects signals whose cells leave the augmented input domain.
void validate_d_signal(const AugmentedSystem& asys, const sys::InputSignal& signal);

} // namespace istab::aug
