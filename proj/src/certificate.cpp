#include "istab/certificate.hpp"

#include "istab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace istab::cert {

namespace {

struct CompiledV {
  expr::NodePtr V;
  std::vector<expr::NodePtr> dx; // partials w.r.t. x1..xn
  std::vector<expr::NodePtr> dy; // partials w.r.t. y1..yn (empty for UGAS V)
};

CompiledV compile(const expr::NodePtr& V, int n, bool with_y) {
  if (expr::contains_abs(*V))
    throw CertificateError("V contains abs and is not smooth");
  CompiledV c;
  c.V = V;
  for (int i = 0; i < n; ++i) c.dx.push_back(expr::diff(V, expr::VarKind::X, i));
  if (with_y)
    for (int i = 0; i < n; ++i) c.dy.push_back(expr::diff(V, expr::VarKind::Y, i));
  return c;
}

double euclid_diff(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double diff = a[i] - b[i];
    s += diff * diff;
  }
  return std::sqrt(s);
}

// Flattened sample layout: [x | y | u | v], block sizes nx/ny/nu/nv.
struct SampleProblem {
  int nx = 0, ny = 0, nu = 0, nv = 0;
  std::vector<double> lo, hi;
  std::function<double(std::span<const double>)> violation;
  std::function<bool(std::span<const double>)> feasible; // may be empty

  int dim() const { return nx + ny + nu + nv; }
  bool is_feasible(std::span<const double> s) const {
    return !feasible || feasible(s);
  }
};

void append_box(std::vector<double>& lo, std::vector<double>& hi,
                const sys::Box& box) {
  lo.insert(lo.end(), box.lo.begin(), box.lo.end());
  hi.insert(hi.end(), box.hi.begin(), box.hi.end());
}

void append_input_bounds(std::vector<double>& lo, std::vector<double>& hi,
                         const sys::InputSet& set) {
  if (set.type == sys::InputSet::Type::Box) {
    lo.insert(lo.end(), set.lo.begin(), set.lo.end());
    hi.insert(hi.end(), set.hi.begin(), set.hi.end());
  } else {
    for (int i = 0; i < set.dim(); ++i) {
      lo.push_back(-set.radius);
      hi.push_back(set.radius);
    }
  }
}

// d(x, A) with the closed form where one exists.
double set_distance(const met::Metric& d, std::span<const double> x,
                    const met::SetDescriptor& A) {
  if (A.kind == met::SetDescriptor::Kind::Point) return d(x, A.point);
  met::SearchBudget budget;
  budget.starts = 4;
  budget.max_iterations = 120;
  return met::point_to_set(d, x, A, budget).value;
}

SampleProblem make_problem(const FalsifyProblem& spec) {
  SampleProblem p;
  const int n = spec.domain.dim();
  const bool ball_input =
      spec.system && spec.system->m > 0 &&
      spec.system->input_set.type == sys::InputSet::Type::Ball;

  auto ball_ok = [system = spec.system](std::span<const double> u) {
    double s = 0.0;
    for (double ui : u) s += ui * ui;
    return std::sqrt(s) <= system->input_set.radius + 1e-12;
  };

  switch (spec.condition) {
    case Condition::Sandwich: {
      const auto& cert = *spec.gas;
      auto compiled = std::make_shared<CompiledV>(compile(cert.V, n, true));
      p.nx = p.ny = n;
      append_box(p.lo, p.hi, spec.domain);
      append_box(p.lo, p.hi, spec.domain);
      p.violation = [cert, compiled, n](std::span<const double> s) {
        auto x = s.subspan(0, n), y = s.subspan(n, n);
        double dist = cert.d(x, y);
        double V = expr::eval(compiled->V, expr::Env{.x = x, .y = y});
        return std::max(cert.alpha_lo(dist) - V, V - cert.alpha_hi(dist));
      };
      return p;
    }
    case Condition::DecreaseGas: {
      const auto& cert = *spec.gas;
      const auto* system = spec.system;
      auto compiled = std::make_shared<CompiledV>(compile(cert.V, n, true));
      p.nx = p.ny = n;
      p.nu = system->m;
      append_box(p.lo, p.hi, spec.domain);
      append_box(p.lo, p.hi, spec.domain);
      append_input_bounds(p.lo, p.hi, system->input_set);
      p.violation = [cert, compiled, system, n](std::span<const double> s) {
        auto x = s.subspan(0, n), y = s.subspan(n, n);
        auto u = s.subspan(2 * n, system->m);
        std::vector<double> fx(n), fy(n);
        system->eval_field(x, u, fx);
        system->eval_field(y, u, fy);
        expr::Env env{.x = x, .y = y};
        double L = cert.kappa * expr::eval(compiled->V, env);
        for (int i = 0; i < n; ++i) {
          L += expr::eval(compiled->dx[i], env) * fx[i];
          L += expr::eval(compiled->dy[i], env) * fy[i];
        }
        return L;
      };
      if (ball_input) {
        const int m = system->m;
        p.feasible = [ball_ok, n, m](std::span<const double> s) {
          return ball_ok(s.subspan(2 * n, m));
        };
      }
      return p;
    }
    case Condition::DecreaseIssSum:
    case Condition::DecreaseIssImplication: {
      const auto& cert = *spec.iss;
      const auto* system = spec.system;
      const bool implication = spec.condition == Condition::DecreaseIssImplication;
      if (implication && !spec.phi)
        throw CertificateError("implication mode requires a phi function");
      auto compiled = std::make_shared<CompiledV>(compile(cert.gas.V, n, true));
      const int m = system->m;
      p.nx = p.ny = n;
      p.nu = p.nv = m;
      append_box(p.lo, p.hi, spec.domain);
      append_box(p.lo, p.hi, spec.domain);
      append_input_bounds(p.lo, p.hi, system->input_set);
      append_input_bounds(p.lo, p.hi, system->input_set);
      p.violation = [cert, compiled, system, implication, n, m](
                        std::span<const double> s) {
        auto x = s.subspan(0, n), y = s.subspan(n, n);
        auto u = s.subspan(2 * n, m), v = s.subspan(2 * n + m, m);
        std::vector<double> fx(n), fy(n);
        system->eval_field(x, u, fx);
        system->eval_field(y, v, fy);
        expr::Env env{.x = x, .y = y};
        double L = cert.gas.kappa * expr::eval(compiled->V, env);
        for (int i = 0; i < n; ++i) {
          L += expr::eval(compiled->dx[i], env) * fx[i];
          L += expr::eval(compiled->dy[i], env) * fy[i];
        }
        if (!implication) L -= cert.sigma(euclid_diff(u, v));
        return L;
      };
      auto phi = spec.phi;
      auto d = cert.gas.d;
      p.feasible = [ball_ok, ball_input, implication, phi, d, n, m](
                       std::span<const double> s) {
        auto u = s.subspan(2 * n, m), v = s.subspan(2 * n + m, m);
        if (ball_input && (!ball_ok(u) || !ball_ok(v))) return false;
        if (implication) {
          auto x = s.subspan(0, n), y = s.subspan(n, n);
          if ((*phi)(d(x, y)) < euclid_diff(u, v)) return false;
        }
        return true;
      };
      return p;
    }
    case Condition::Ugas: {
      const auto& cert = *spec.ugas;
      const auto* system = spec.system;
      auto compiled = std::make_shared<CompiledV>(compile(cert.V, n, false));
      const int m = system->m;
      p.nx = n;
      p.nu = m;
      append_box(p.lo, p.hi, spec.domain);
      append_input_bounds(p.lo, p.hi, system->input_set);
      p.violation = [cert, compiled, system, n, m](std::span<const double> s) {
        auto x = s.subspan(0, n);
        auto u = s.subspan(n, m);
        double dist = set_distance(cert.d, x, cert.A);
        expr::Env env{.x = x};
        double V = expr::eval(compiled->V, env);
        double sandwich =
            std::max(cert.alpha_lo(dist) - V, V - cert.alpha_hi(dist));
        std::vector<double> fx(n);
        system->eval_field(x, u, fx);
        double L = cert.kappa * V;
        for (int i = 0; i < n; ++i) L += expr::eval(compiled->dx[i], env) * fx[i];
        return std::max(sandwich, L);
      };
      if (ball_input) {
        p.feasible = [ball_ok, n, m](std::span<const double> s) {
          return ball_ok(s.subspan(n, m));
        };
      }
      return p;
    }
  }
  throw CertificateError("corrupt falsification condition");
}

bool draw_sample(const SampleProblem& p, Rng& rng, std::vector<double>& s) {
  const int dim = p.dim();
  for (int attempt = 0; attempt < 1000; ++attempt) {
    for (int i = 0; i < dim; ++i) s[i] = rng.uniform(p.lo[i], p.hi[i]);
    if (p.is_feasible(s)) return true;
  }
  return false;
}

Witness split_witness(const SampleProblem& p, std::span<const double> s) {
  Witness w;
  auto it = s.begin();
  w.x.assign(it, it + p.nx);
  it += p.nx;
  w.y.assign(it, it + p.ny);
  it += p.ny;
  w.u.assign(it, it + p.nu);
  it += p.nu;
  w.v.assign(it, it + p.nv);
  return w;
}

struct ScanResult {
  double worst = -std::numeric_limits<double>::infinity();
  std::vector<double> worst_sample;
  int evaluated = 0;
};

ScanResult scan(const SampleProblem& p, int samples, std::uint64_t seed) {
  Rng rng(seed);
  ScanResult result;
  std::vector<double> s(p.dim());
  for (int k = 0; k < samples; ++k) {
    if (!draw_sample(p, rng, s)) continue;
    double viol = p.violation(s);
    ++result.evaluated;
    if (viol > result.worst) {
      result.worst = viol;
      result.worst_sample = s;
    }
  }
  return result;
}

CheckReport report_from_scan(const SampleProblem& p, const ScanResult& scan_result,
                             const SamplerSpec& sampler, std::string condition) {
  CheckReport report;
  report.condition = std::move(condition);
  report.samples = scan_result.evaluated;
  report.seed = sampler.seed;
  report.worst_violation = scan_result.worst;
  report.pass = scan_result.worst <= kCheckTolerance;
  if (!scan_result.worst_sample.empty())
    report.witness = split_witness(p, scan_result.worst_sample);
  return report;
}

const sys::ControlSystem& dummy_system() {
  // input-free placeholder for conditions that never touch the field
  static const sys::ControlSystem kNone = [] {
    sys::ControlSystem s;
    s.n = 1;
    s.m = 0;
    return s;
  }();
  return kNone;
}

} // namespace

CheckReport check_sandwich(const GasCertificate& cert, const sys::Box& domain,
                           const SamplerSpec& sampler) {
  FalsifyProblem spec;
  spec.condition = Condition::Sandwich;
  spec.gas = cert;
  spec.system = &dummy_system();
  spec.domain = domain;
  SampleProblem p = make_problem(spec);
  return report_from_scan(p, scan(p, sampler.samples, sampler.seed), sampler,
                          "sandwich");
}

CheckReport check_sandwich(const UgasCertificate& cert, const sys::Box& domain,
                           const SamplerSpec& sampler) {
  const int n = domain.dim();
  auto compiled = compile(cert.V, n, false);
  Rng rng(sampler.seed);
  CheckReport report;
  report.condition = "sandwich_ugas";
  report.seed = sampler.seed;
  report.worst_violation = -std::numeric_limits<double>::infinity();
  std::vector<double> x(n);
  for (int k = 0; k < sampler.samples; ++k) {
    for (int i = 0; i < n; ++i) x[i] = rng.uniform(domain.lo[i], domain.hi[i]);
    double dist = set_distance(cert.d, x, cert.A);
    double V = expr::eval(compiled.V, expr::Env{.x = x});
    double viol = std::max(cert.alpha_lo(dist) - V, V - cert.alpha_hi(dist));
    ++report.samples;
    if (viol > report.worst_violation) {
      report.worst_violation = viol;
      report.witness.x = x;
    }
  }
  report.pass = report.worst_violation <= kCheckTolerance;
  return report;
}

CheckReport check_decrease_gas(const GasCertificate& cert,
                               const sys::ControlSystem& system,
                               const sys::Box& domain, const SamplerSpec& sampler) {
  FalsifyProblem spec;
  spec.condition = Condition::DecreaseGas;
  spec.gas = cert;
  spec.system = &system;
  spec.domain = domain;
  SampleProblem p = make_problem(spec);
  return report_from_scan(p, scan(p, sampler.samples, sampler.seed), sampler,
                          "decrease_gas");
}

CheckReport check_decrease_iss(const IssCertificate& cert,
                               const sys::ControlSystem& system,
                               const sys::Box& domain, const SamplerSpec& sampler,
                               IssMode mode, const std::optional<cmp::KInfFn>& phi) {
  FalsifyProblem spec;
  spec.condition = mode == IssMode::Sum ? Condition::DecreaseIssSum
                                        : Condition::DecreaseIssImplication;
  spec.iss = cert;
  spec.phi = phi;
  spec.system = &system;
  spec.domain = domain;
  SampleProblem p = make_problem(spec);
  return report_from_scan(
      p, scan(p, sampler.samples, sampler.seed), sampler,
      mode == IssMode::Sum ? "decrease_iss_sum" : "decrease_iss_implication");
}

CheckReport check_ugas(const UgasCertificate& cert, const sys::ControlSystem& system,
                       const sys::Box& domain, const SamplerSpec& sampler) {
  FalsifyProblem spec;
  spec.condition = Condition::Ugas;
  spec.ugas = cert;
  spec.system = &system;
  spec.domain = domain;
  SampleProblem p = make_problem(spec);
  return report_from_scan(p, scan(p, sampler.samples, sampler.seed), sampler,
                          "ugas");
}

std::optional<Counterexample> falsify(const FalsifyProblem& problem,
                                      const FalsifyBudget& budget,
                                      std::uint64_t seed) {
  if (budget.samples < 1) throw CertificateError("falsify budget must be >= 1");
  SampleProblem p = make_problem(problem);
  ScanResult coarse = scan(p, budget.samples, seed);
  if (coarse.worst_sample.empty()) return std::nullopt;

  // Phase 2: coordinate-wise ascent, fixed axis sweep, step halving.
  std::vector<double> s = coarse.worst_sample;
  double best = coarse.worst;
  const int dim = p.dim();
  std::vector<double> step(dim);
  for (int i = 0; i < dim; ++i) step[i] = 0.25 * (p.hi[i] - p.lo[i]);
  for (int sweep = 0; sweep < budget.refinement_steps; ++sweep) {
    bool improved = false;
    for (int i = 0; i < dim; ++i) {
      for (double sign : {+1.0, -1.0}) {
        double saved = s[i];
        s[i] = std::clamp(saved + sign * step[i], p.lo[i], p.hi[i]);
        if (p.is_feasible(s)) {
          double viol = p.violation(s);
          if (viol > best) {
            best = viol;
            improved = true;
            continue;
          }
        }
        s[i] = saved;
      }
    }
    if (!improved) {
      bool floored = true;
      for (int i = 0; i < dim; ++i) {
        step[i] *= 0.5;
        if (step[i] >= 1e-8) floored = false;
      }
      if (floored) break;
    }
  }

  double final_viol = p.violation(s);
  if (final_viol <= kCheckTolerance) return std::nullopt;
  Counterexample cx;
  cx.witness = split_witness(p, s);
  cx.margin = final_viol;
  cx.seed = seed;
  cx.samples_used = coarse.evaluated;
  return cx;
}

void gradient_crosscheck(const expr::NodePtr& V, expr::Dims dims,
                         const sys::Box& domain, int points, std::uint64_t seed,
                         double rel_tol) {
  Rng rng(seed);
  const int n = dims.n;
  std::vector<expr::NodePtr> grads;
  std::vector<std::pair<expr::VarKind, int>> vars;
  for (int i = 0; i < n; ++i) {
    vars.emplace_back(expr::VarKind::X, i);
    grads.push_back(expr::diff(V, expr::VarKind::X, i));
  }
  for (int i = 0; i < n; ++i) {
    vars.emplace_back(expr::VarKind::Y, i);
    grads.push_back(expr::diff(V, expr::VarKind::Y, i));
  }
  std::vector<double> x(n), y(n);
  for (int k = 0; k < points; ++k) {
    for (int i = 0; i < n; ++i) {
      x[i] = rng.uniform(domain.lo[i], domain.hi[i]);
      y[i] = rng.uniform(domain.lo[i], domain.hi[i]);
    }
    for (std::size_t j = 0; j < vars.size(); ++j) {
      auto [kind, index] = vars[j];
      double& slot = kind == expr::VarKind::X ? x[index] : y[index];
      double center = slot;
      double h = 1e-5 * std::max(1.0, std::fabs(center));
      expr::Env env{.x = x, .y = y};
      double symbolic = expr::eval(grads[j], env);
      slot = center + h;
      double hi_val = expr::eval(V, env);
      slot = center - h;
      double lo_val = expr::eval(V, env);
      slot = center;
      double fd = (hi_val - lo_val) / (2.0 * h);
      double scale = std::max({1.0, std::fabs(symbolic), std::fabs(fd)});
      if (std::fabs(symbolic - fd) > rel_tol * scale)
        throw CertificateError(
            "symbolic gradient disagrees with finite differences for " +
            expr::print(grads[j]));
    }
  }
}

} // namespace istab::cert
