#pragma once

#include "istab/expr.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

namespace istab::met {

class MetricError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Distance function on R^n. Pullback metrics measure
// d(x, y) = ||T(x) - T(y)|| for a user coordinate change T written in the
// expression language over x1..xn. Product metrics live on R^{2n} and add
// the base distance of the two halves.
class Metric {
public:
  enum class Kind { Euclidean, Weighted, Pullback, Product };

  static Metric euclidean(int n);
  static Metric weighted(std::vector<std::vector<double>> P); // symmetric, SPD
  static Metric pullback(std::vector<expr::NodePtr> map, int n);
  static Metric product(Metric base); // doubled metric on R^{2n}: sum of halves

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  const Metric& base() const; // Product only
  const std::vector<std::vector<double>>& weights() const { return P_; }
  const std::vector<expr::NodePtr>& map() const { return map_; }

  double operator()(std::span<const double> x, std::span<const double> y) const;

private:
  Metric() = default;

  Kind kind_ = Kind::Euclidean;
  int dim_ = 0;
  std::vector<std::vector<double>> P_;
  std::vector<expr::NodePtr> map_;
  std::shared_ptr<const Metric> base_;
};

struct SetDescriptor {
  enum class Kind { Point, Diagonal, Box };

  Kind kind = Kind::Point;
  std::vector<double> point;    // Point
  std::vector<double> lo, hi;   // Box

  static SetDescriptor point_set(std::vector<double> a);
  static SetDescriptor diagonal();
  static SetDescriptor box(std::vector<double> lo, std::vector<double> hi);
};

struct SearchBudget {
  int starts = 16;
  int max_iterations = 500;
  std::uint64_t seed = 0;
};

struct DistanceEstimate {
  double value = 0.0;
  bool exact = false;     // closed form (point sets)
  bool converged = true;  // all descent starts reached the step floor
};

// inf over y in A of d(x, y). Exact for point sets; otherwise a
// multi-start derivative-free descent upper bound.
DistanceEstimate point_to_set(const Metric& d, std::span<const double> x,
                              const SetDescriptor& A,
                              const SearchBudget& budget = {});

// Closed-form distance of z = [x1; x2] in R^{2n} to the diagonal under the
// product of d: equals d(x1, x2).
double diag_dist(const Metric& d, std::span<const double> z);

// Sampled diagnostics backing the standing continuity/injectivity
// assumptions; both are reports, not gates.
struct ContinuityReport {
  double max_observed_ratio = 0.0; // max |d(x,y)-d(x',y)| / ||x-x'||
  int pairs = 0;
};
ContinuityReport continuity_check(const Metric& d, std::span<const double> lo,
                                  std::span<const double> hi, int pairs,
                                  std::uint64_t seed);

struct CollisionReport {
  bool collision_found = false;
  std::vector<double> a, b; // witnessing pair, if any
};
CollisionReport injectivity_check(const Metric& d, std::span<const double> lo,
                                  std::span<const double> hi, int samples,
                                  std::uint64_t seed);

} // namespace istab::met
