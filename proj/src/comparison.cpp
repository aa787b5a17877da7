#include "istab/comparison.hpp"

#include <cmath>
#include <sstream>

namespace istab::cmp {

namespace {

void check_params(KInfFn::Family family, double c, double p) {
  if (!(c > 0.0)) throw ComparisonError("K-function scale c must be positive");
  if (family == KInfFn::Family::Power && !(p > 0.0))
    throw ComparisonError("K-function exponent p must be positive");
}

} // namespace

double KInfFn::operator()(double r) const {
  if (r < 0.0) throw ComparisonError("K-function argument must be nonnegative");
  switch (family) {
    case Family::Linear: return c * r;
    case Family::Power: return c * std::pow(r, p);
    case Family::AffineLog: return c * std::log1p(r);
  }
  throw ComparisonError("corrupt K-function family");
}

KInfFn linear_k(double c) {
  check_params(KInfFn::Family::Linear, c, 1.0);
  return KInfFn{KInfFn::Family::Linear, c, 1.0};
}

KInfFn power_k(double c, double p) {
  check_params(KInfFn::Family::Power, c, p);
  if (p == 1.0) return linear_k(c);
  return KInfFn{KInfFn::Family::Power, c, p};
}

KInfFn affine_log_k(double c) {
  check_params(KInfFn::Family::AffineLog, c, 1.0);
  return KInfFn{KInfFn::Family::AffineLog, c, 1.0};
}

double KLFn::operator()(double r, double t) const {
  if (t < 0.0) throw ComparisonError("KL-function time argument must be nonnegative");
  return k(r) * std::exp(-lambda * t);
}

KInfFn invert(const KInfFn& f) {
  switch (f.family) {
    case KInfFn::Family::Linear:
      return linear_k(1.0 / f.c);
    case KInfFn::Family::Power:
      // (r/c)^(1/p) = c^(-1/p) * r^(1/p)
      return power_k(std::pow(f.c, -1.0 / f.p), 1.0 / f.p);
    case KInfFn::Family::AffineLog:
      throw ComparisonError("affine-log family has no closed-form inverse here");
  }
  throw ComparisonError("corrupt K-function family");
}

ClassReport verify_class_fn(const std::function<double(double)>& f,
                            const GridSpec& grid) {
  ClassReport report;
  auto violate = [&](const char* what, double r, double t = 0.0) {
    if (!report.has_violation) {
      report.has_violation = true;
      report.violation_r = r;
      report.violation_t = t;
      report.violated = what;
    }
  };

  if (std::fabs(f(0.0)) > 0.0) {
    report.zero_at_zero = false;
    violate("zero_at_zero", 0.0);
  }
  double prev_r = 0.0;
  double prev_v = f(0.0);
  for (int i = 1; i <= grid.r_samples; ++i) {
    double r = grid.r_max * static_cast<double>(i) / grid.r_samples;
    double v = f(r);
    if (!(v > prev_v)) {
      report.strictly_increasing = false;
      violate("strictly_increasing", r);
      break;
    }
    prev_r = r;
    prev_v = v;
  }
  (void)prev_r;
  if (f(grid.r_max) < grid.growth_threshold) {
    report.unbounded_proxy = false;
    violate("unbounded_proxy", grid.r_max);
  }
  return report;
}

ClassReport verify_class(const KInfFn& f, const GridSpec& grid) {
  return verify_class_fn([&](double r) { return f(r); }, grid);
}

ClassReport verify_class(const KLFn& f, const GridSpec& grid) {
  ClassReport report = verify_class(f.k, grid);
  // decreasing in t at a few fixed radii
  for (double r : {grid.r_max / 100.0, grid.r_max / 10.0, grid.r_max}) {
    double prev = f(r, 0.0);
    for (int j = 1; j <= grid.t_samples; ++j) {
      double t = grid.t_max * static_cast<double>(j) / grid.t_samples;
      double v = f(r, t);
      if (!(v < prev)) {
        report.kl_decreasing = false;
        if (!report.has_violation) {
          report.has_violation = true;
          report.violation_r = r;
          report.violation_t = t;
          report.violated = "kl_decreasing";
        }
        return report;
      }
      prev = v;
    }
  }
  return report;
}

namespace {

// g(s(r)) for s, g in {Linear, Power}, staying in the parametric family.
KInfFn compose_invertible(const KInfFn& g, const KInfFn& s) {
  double sp = s.family == KInfFn::Family::Linear ? 1.0 : s.p;
  double gp = g.family == KInfFn::Family::Linear ? 1.0 : g.p;
  double c = gp == 1.0 ? g.c * s.c : g.c * std::pow(s.c, gp);
  return power_k(c, sp * gp);
}

KInfFn scale_output(const KInfFn& f, double factor) {
  KInfFn out = f;
  out.c *= factor;
  return out;
}

} // namespace

KInfFn construct_rho(const KLFn& beta, const KInfFn& gamma, const GridSpec& grid) {
  const KInfFn alpha = beta.k; // alpha(r) = beta(r, 0)
  for (int i = 1; i <= grid.r_samples; ++i) {
    double r = grid.r_max * static_cast<double>(i) / grid.r_samples;
    if (!(alpha(r) > r)) {
      std::ostringstream msg;
      msg << "construct_rho precondition alpha(r) > r violated at r = " << r
          << " (alpha(r) = " << alpha(r) << ")";
      throw ComparisonError(msg.str());
    }
  }
  KInfFn alpha_inv = invert(alpha);
  KInfFn gamma_inv = invert(gamma);
  // rho(r) = 0.5 * gamma^{-1}( alpha^{-1}(r) / 4 )
  KInfFn quarter = scale_output(alpha_inv, 0.25);
  return scale_output(compose_invertible(gamma_inv, quarter), 0.5);
}

} // namespace istab::cmp
