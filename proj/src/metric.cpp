#include "istab/metric.hpp"

#include "istab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace istab::met {

namespace {

void check_dim(std::span<const double> v, int n, const char* what) {
  if (static_cast<int>(v.size()) != n)
    throw MetricError(std::string("dimension mismatch in ") + what + ": expected " +
                      std::to_string(n) + ", got " + std::to_string(v.size()));
}

// Cholesky-based SPD test; n is small here.
bool is_spd(const std::vector<std::vector<double>>& P) {
  const std::size_t n = P.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (P[i].size() != n) return false;
    for (std::size_t j = 0; j < n; ++j)
      if (std::fabs(P[i][j] - P[j][i]) > 1e-12 * (1.0 + std::fabs(P[i][j])))
        return false;
  }
  std::vector<std::vector<double>> L(n, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    double diag = P[j][j];
    for (std::size_t k = 0; k < j; ++k) diag -= L[j][k] * L[j][k];
    if (diag <= 0.0) return false;
    L[j][j] = std::sqrt(diag);
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = P[i][j];
      for (std::size_t k = 0; k < j; ++k) v -= L[i][k] * L[j][k];
      L[i][j] = v / L[j][j];
    }
  }
  return true;
}

double euclid(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double diff = a[i] - b[i];
    s += diff * diff;
  }
  return std::sqrt(s);
}

} // namespace

Metric Metric::euclidean(int n) {
  if (n <= 0) throw MetricError("metric dimension must be positive");
  Metric m;
  m.kind_ = Kind::Euclidean;
  m.dim_ = n;
  return m;
}

Metric Metric::weighted(std::vector<std::vector<double>> P) {
  if (P.empty()) throw MetricError("weight matrix must be nonempty");
  if (!is_spd(P))
    throw MetricError("weight matrix must be symmetric positive definite");
  Metric m;
  m.kind_ = Kind::Weighted;
  m.dim_ = static_cast<int>(P.size());
  m.P_ = std::move(P);
  return m;
}

Metric Metric::pullback(std::vector<expr::NodePtr> map, int n) {
  if (map.empty()) throw MetricError("pullback map must be nonempty");
  if (n <= 0) throw MetricError("metric dimension must be positive");
  Metric m;
  m.kind_ = Kind::Pullback;
  m.dim_ = n;
  m.map_ = std::move(map);
  return m;
}

Metric Metric::product(Metric base) {
  Metric m;
  m.kind_ = Kind::Product;
  m.dim_ = 2 * base.dim();
  m.base_ = std::make_shared<const Metric>(std::move(base));
  return m;
}

const Metric& Metric::base() const {
  if (kind_ != Kind::Product || !base_)
    throw MetricError("base() is defined for product metrics only");
  return *base_;
}

double Metric::operator()(std::span<const double> x, std::span<const double> y) const {
  check_dim(x, dim_, "dist");
  check_dim(y, dim_, "dist");
  switch (kind_) {
    case Kind::Euclidean:
      return euclid(x, y);
    case Kind::Weighted: {
      std::vector<double> diff(dim_);
      for (int i = 0; i < dim_; ++i) diff[i] = x[i] - y[i];
      double s = 0.0;
      for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) s += diff[i] * P_[i][j] * diff[j];
      return std::sqrt(std::max(s, 0.0));
    }
    case Kind::Pullback: {
      double s = 0.0;
      for (const auto& component : map_) {
        double tx = expr::eval(component, expr::Env{.x = x});
        double ty = expr::eval(component, expr::Env{.x = y});
        if (!std::isfinite(tx) || !std::isfinite(ty))
          throw MetricError("pullback map evaluated to a non-finite value");
        double diff = tx - ty;
        s += diff * diff;
      }
      return std::sqrt(s);
    }
    case Kind::Product: {
      int n = dim_ / 2;
      return (*base_)(x.subspan(0, n), y.subspan(0, n)) +
             (*base_)(x.subspan(n, n), y.subspan(n, n));
    }
  }
  throw MetricError("corrupt metric kind");
}

SetDescriptor SetDescriptor::point_set(std::vector<double> a) {
  SetDescriptor s;
  s.kind = Kind::Point;
  s.point = std::move(a);
  return s;
}

SetDescriptor SetDescriptor::diagonal() {
  SetDescriptor s;
  s.kind = Kind::Diagonal;
  return s;
}

SetDescriptor SetDescriptor::box(std::vector<double> lo, std::vector<double> hi) {
  if (lo.size() != hi.size() || lo.empty())
    throw MetricError("box bounds must be nonempty and of equal length");
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (lo[i] > hi[i]) throw MetricError("box has lo > hi");
  SetDescriptor s;
  s.kind = Kind::Box;
  s.lo = std::move(lo);
  s.hi = std::move(hi);
  return s;
}

namespace {

// Coordinate descent with step halving on objective(y), box-constrained.
// Returns the best value found; sets converged when the step floor was hit.
template <typename F>
double descend(F&& objective, std::vector<double>& y, std::span<const double> lo,
               std::span<const double> hi, int max_iterations, bool& converged) {
  const std::size_t dim = y.size();
  double best = objective(y);
  double step = 0.0;
  for (std::size_t i = 0; i < dim; ++i) step = std::max(step, hi[i] - lo[i]);
  step = std::max(step * 0.25, 1e-6);
  converged = false;
  for (int iter = 0; iter < max_iterations; ++iter) {
    bool improved = false;
    for (std::size_t i = 0; i < dim; ++i) {
      for (double sign : {+1.0, -1.0}) {
        double saved = y[i];
        y[i] = std::clamp(saved + sign * step, lo[i], hi[i]);
        double v = objective(y);
        if (v < best) {
          best = v;
          improved = true;
        } else {
          y[i] = saved;
        }
      }
    }
    if (!improved) {
      step *= 0.5;
      if (step < 1e-10) {
        converged = true;
        break;
      }
    }
  }
  return best;
}

} // namespace

DistanceEstimate point_to_set(const Metric& d, std::span<const double> x,
                              const SetDescriptor& A, const SearchBudget& budget) {
  check_dim(x, d.dim(), "point_to_set");
  DistanceEstimate out;
  if (A.kind == SetDescriptor::Kind::Point) {
    out.value = d(x, A.point);
    out.exact = true;
    return out;
  }

  // Parameterize the candidate set point: a box point directly, a diagonal
  // point [y; y] by its n-dimensional half.
  int param_dim;
  std::vector<double> lo, hi;
  std::vector<std::vector<double>> seeds;
  if (A.kind == SetDescriptor::Kind::Diagonal) {
    if (d.dim() % 2 != 0)
      throw MetricError("diagonal set requires even ambient dimension");
    param_dim = d.dim() / 2;
    std::vector<double> h1(x.begin(), x.begin() + param_dim);
    std::vector<double> h2(x.begin() + param_dim, x.end());
    lo.resize(param_dim);
    hi.resize(param_dim);
    for (int i = 0; i < param_dim; ++i) {
      double a = std::min(h1[i], h2[i]), b = std::max(h1[i], h2[i]);
      double span = std::max(b - a, 1.0);
      lo[i] = a - span;
      hi[i] = b + span;
    }
    std::vector<double> mid(param_dim);
    for (int i = 0; i < param_dim; ++i) mid[i] = 0.5 * (h1[i] + h2[i]);
    seeds = {h1, h2, mid};
  } else {
    param_dim = static_cast<int>(A.lo.size());
    if (param_dim != d.dim())
      throw MetricError("box set dimension does not match metric dimension");
    lo = A.lo;
    hi = A.hi;
    std::vector<double> clamped(x.begin(), x.end());
    for (int i = 0; i < param_dim; ++i) clamped[i] = std::clamp(clamped[i], lo[i], hi[i]);
    seeds = {clamped};
  }

  auto objective = [&](const std::vector<double>& y) {
    if (A.kind == SetDescriptor::Kind::Diagonal) {
      std::vector<double> z(2 * param_dim);
      std::copy(y.begin(), y.end(), z.begin());
      std::copy(y.begin(), y.end(), z.begin() + param_dim);
      return d(x, z);
    }
    return d(x, y);
  };

  Rng rng(derive_seed(budget.seed, 0));
  double best = std::numeric_limits<double>::infinity();
  bool all_converged = true;
  for (int s = 0; s < budget.starts; ++s) {
    std::vector<double> y(param_dim);
    if (s < static_cast<int>(seeds.size())) {
      y = seeds[s];
      for (int i = 0; i < param_dim; ++i) y[i] = std::clamp(y[i], lo[i], hi[i]);
    } else {
      for (int i = 0; i < param_dim; ++i) y[i] = rng.uniform(lo[i], hi[i]);
    }
    bool converged = false;
    double v = descend(objective, y, lo, hi, budget.max_iterations, converged);
    all_converged = all_converged && converged;
    best = std::min(best, v);
  }
  out.value = best;
  out.converged = all_converged;
  return out;
}

double diag_dist(const Metric& d, std::span<const double> z) {
  if (z.size() % 2 != 0)
    throw MetricError("diag_dist requires even ambient dimension");
  const Metric& base = d.kind() == Metric::Kind::Product ? d.base() : d;
  int n = static_cast<int>(z.size()) / 2;
  check_dim(z, 2 * base.dim(), "diag_dist");
  return base(z.subspan(0, n), z.subspan(n, n));
}

ContinuityReport continuity_check(const Metric& d, std::span<const double> lo,
                                  std::span<const double> hi, int pairs,
                                  std::uint64_t seed) {
  ContinuityReport report;
  Rng rng(seed);
  int n = d.dim();
  std::vector<double> x(n), xp(n), y(n);
  for (int k = 0; k < pairs; ++k) {
    double norm = 0.0;
    for (int i = 0; i < n; ++i) {
      x[i] = rng.uniform(lo[i], hi[i]);
      y[i] = rng.uniform(lo[i], hi[i]);
      double delta = rng.uniform(-1e-3, 1e-3);
      xp[i] = std::clamp(x[i] + delta, lo[i], hi[i]);
      norm += (xp[i] - x[i]) * (xp[i] - x[i]);
    }
    norm = std::sqrt(norm);
    if (norm < 1e-12) continue;
    double ratio = std::fabs(d(x, y) - d(xp, y)) / norm;
    report.max_observed_ratio = std::max(report.max_observed_ratio, ratio);
    ++report.pairs;
  }
  return report;
}

CollisionReport injectivity_check(const Metric& d, std::span<const double> lo,
                                  std::span<const double> hi, int samples,
                                  std::uint64_t seed) {
  CollisionReport report;
  Rng rng(seed);
  int n = d.dim();
  std::vector<double> a(n), b(n);
  for (int k = 0; k < samples; ++k) {
    double sep = 0.0;
    for (int i = 0; i < n; ++i) {
      a[i] = rng.uniform(lo[i], hi[i]);
      b[i] = rng.uniform(lo[i], hi[i]);
      sep += (a[i] - b[i]) * (a[i] - b[i]);
    }
    if (std::sqrt(sep) < 1e-6) continue; // effectively the same point
    if (d(a, b) < 1e-9) {
      report.collision_found = true;
      report.a = a;
      report.b = b;
      return report;
    }
  }
  return report;
}

} // namespace istab::met
