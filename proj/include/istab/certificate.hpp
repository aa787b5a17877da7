#pragma once

#include "istab/comparison.hpp"
#include "istab/expr.hpp"
#include "istab/metric.hpp"
#include "istab/system.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace istab::cert {

class CertificateError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Candidate certificate for incremental stability: V over (x, y), a metric
// d, sandwich bounds alpha_lo/alpha_hi, and exponential rate kappa.
struct GasCertificate {
  expr::NodePtr V; // over x1..xn, y1..yn
  met::Metric d = met::Metric::euclidean(1);
  cmp::KInfFn alpha_lo, alpha_hi;
  double kappa = 1.0;
};

struct IssCertificate {
  GasCertificate gas;
  cmp::KInfFn sigma;
};

// Certificate for uniform set stability: V over x only, measured against
// the point-to-set distance to A.
struct UgasCertificate {
  expr::NodePtr V; // over x1..xn
  met::Metric d = met::Metric::euclidean(1);
  met::SetDescriptor A;
  cmp::KInfFn alpha_lo, alpha_hi;
  double kappa = 1.0;
};

struct SamplerSpec {
  int samples = 10000;
  std::uint64_t seed = 0;
};

struct Witness {
  std::vector<double> x, y, u, v;
};

// worst_violation is the maximum sampled amount by which the condition is
// broken; pass means it stayed within tolerance. Reports are monotone in
// sampling: more samples can only raise the max.
struct CheckReport {
  std::string condition;
  bool pass = false;
  double worst_violation = 0.0;
  Witness witness;
  int samples = 0;
  std::uint64_t seed = 0;
};

constexpr double kCheckTolerance = 1e-9;

enum class IssMode { Sum, Implication };

CheckReport check_sandwich(const GasCertificate& cert, const sys::Box& domain,
                           const SamplerSpec& sampler);
CheckReport check_sandwich(const UgasCertificate& cert, const sys::Box& domain,
                           const SamplerSpec& sampler);
CheckReport check_decrease_gas(const GasCertificate& cert,
                               const sys::ControlSystem& system,
                               const sys::Box& domain, const SamplerSpec& sampler);
CheckReport check_decrease_iss(const IssCertificate& cert,
                               const sys::ControlSystem& system,
                               const sys::Box& domain, const SamplerSpec& sampler,
                               IssMode mode,
                               const std::optional<cmp::KInfFn>& phi = {});
// Runs the sandwich and decrease conditions of the set-stability
// definition; the report carries the worse of the two.
CheckReport check_ugas(const UgasCertificate& cert, const sys::ControlSystem& system,
                       const sys::Box& domain, const SamplerSpec& sampler);

struct Counterexample {
  Witness witness;
  double margin = 0.0; // re-evaluated violation, > tolerance
  std::uint64_t seed = 0;
  int samples_used = 0;
};

struct FalsifyBudget {
  int samples = 10000;
  int refinement_steps = 200;
};

enum class Condition {
  Sandwich,
  DecreaseGas,
  DecreaseIssSum,
  DecreaseIssImplication,
  Ugas,
};

// Bundles everything a falsification run needs. For Sandwich/DecreaseGas
// the gas certificate is used; Iss conditions need iss; Ugas needs ugas.
struct FalsifyProblem {
  Condition condition = Condition::DecreaseGas;
  std::optional<GasCertificate> gas;
  std::optional<IssCertificate> iss;
  std::optional<UgasCertificate> ugas;
  std::optional<cmp::KInfFn> phi; // implication mode
  const sys::ControlSystem* system = nullptr;
  sys::Box domain;
};

// Two-phase search: uniform sampling, then coordinate-wise ascent with
// step halving on the violation. Deterministic given the seed. A returned
// counterexample has been re-evaluated past tolerance.
std::optional<Counterexample> falsify(const FalsifyProblem& problem,
                                      const FalsifyBudget& budget,
                                      std::uint64_t seed);

// Symbolic-vs-finite-difference gradient cross-check; throws on mismatch.
// Run once per certificate before producing verdicts.
void gradient_crosscheck(const expr::NodePtr& V, expr::Dims dims,
                         const sys::Box& domain, int points, std::uint64_t seed,
                         double rel_tol = 1e-5);

} // namespace istab::cert
