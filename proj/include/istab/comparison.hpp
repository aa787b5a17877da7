#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace istab::cmp {

class ComparisonError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Parametric class-K_inf function. Families:
//   Linear    c*r
//   Power     c*r^p
//   AffineLog c*log(1+r)   (K_inf but excluded from inversion paths)
// with c > 0 and p > 0.
struct KInfFn {
  enum class Family { Linear, Power, AffineLog };

  Family family = Family::Linear;
  double c = 1.0;
  double p = 1.0; // Power only

  double operator()(double r) const;
};

KInfFn linear_k(double c);
KInfFn power_k(double c, double p);
KInfFn affine_log_k(double c);

// Separable class-KL function beta(r, t) = k(r) * exp(-lambda * t).
// lambda may be nonpositive on construction; verify_class flags it.
struct KLFn {
  KInfFn k;
  double lambda = 1.0;

  double operator()(double r, double t) const;
};

// Closed-form inverse; Linear and Power only.
KInfFn invert(const KInfFn& f);

struct GridSpec {
  double r_max = 100.0;
  int r_samples = 1000;
  double growth_threshold = 10.0; // unboundedness proxy: f(r_max) >= threshold
  double t_max = 10.0;
  int t_samples = 50;
};

struct ClassReport {
  bool zero_at_zero = true;
  bool strictly_increasing = true;
  bool unbounded_proxy = true;
  bool kl_decreasing = true; // KL only; stays true for K_inf checks
  // first violating sample, if any
  bool has_violation = false;
  double violation_r = 0.0;
  double violation_t = 0.0;
  std::string violated;

  bool pass() const {
    return zero_at_zero && strictly_increasing && unbounded_proxy && kl_decreasing;
  }
};

// Sampled class-membership check for an arbitrary candidate r -> f(r).
ClassReport verify_class_fn(const std::function<double(double)>& f,
                            const GridSpec& grid = {});
ClassReport verify_class(const KInfFn& f, const GridSpec& grid = {});
ClassReport verify_class(const KLFn& f, const GridSpec& grid = {});

// Builds rho(r) = (1/2) * gamma^{-1}(alpha^{-1}(r) / 4) with
// alpha(r) = beta(r, 0), as an exact parametric K_inf object. Requires
// alpha(r) > r on the sampled range (0, r_max] and closed-form invertible
// alpha and gamma; violations raise ComparisonError naming the offending r.
KInfFn construct_rho(const KLFn& beta, const KInfFn& gamma,
                     const GridSpec& grid = {});

} // namespace istab::cmp
