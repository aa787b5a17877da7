#pragma once

#include "istab/augment.hpp"
#include "istab/comparison.hpp"
#include "istab/metric.hpp"
#include "istab/system.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace istab::envl {

class EnvelopeError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// One thinned trace point of a trajectory-pair experiment.
struct TraceSample {
  int pair_id = 0;
  double t = 0.0;
  double r0 = 0.0;        // initial distance in the chosen metric
  double dist = 0.0;      // distance at time t
  double input_gap = 0.0; // sup-norm signal difference (ISS ensembles)
};

struct EnsembleSpec {
  int pairs = 50;
  double horizon = 10.0;
  double step = 1e-3;
  double signal_cell = 1.0; // piecewise-constant cell width
  double trace_dt = 0.1;    // thinning interval for fit samples
  sys::Box x0_domain;
  // Deterministic probe pairs (extreme constant signals, stratified input
  // gaps) are prepended so the fit sees the worst corners of U.
  bool include_probes = true;
  std::uint64_t seed = 0;
};

struct FitConstraints {
  double c_max = 1e3;
  double lambda_min = 1e-3;
  double lambda_max = 10.0;
  int grid = 64; // log-spaced lambda grid resolution
};

// All reports are empirical, sampled evidence; nothing here is a proof.
struct EnvelopeFit {
  bool beta_found = false;
  cmp::KLFn beta{cmp::linear_k(1.0), 1.0};
  bool gamma_found = false;       // sum-form gain
  cmp::KInfFn gamma;
  bool gamma_max_found = false;   // max-form gain, fitted separately
  cmp::KInfFn gamma_max;
  double max_residual = 0.0;      // max(dist - envelope) over the dataset
  std::string verdict;            // "ok" | "no envelope in family" | ...
  int pairs = 0;
  int samples = 0;
  std::uint64_t seed = 0;
  std::vector<TraceSample> traces;
};

// Trajectory-pair ensembles. GAS pairs share the signal; ISS pairs get
// independent signals and record the input gap. Initial separations are
// stratified across three decades.
std::vector<TraceSample> gas_ensemble(const sys::ControlSystem& system,
                                      const met::Metric& d,
                                      const EnsembleSpec& spec);
std::vector<TraceSample> iss_ensemble(const sys::ControlSystem& system,
                                      const met::Metric& d,
                                      const EnsembleSpec& spec);

// Min-max fit of beta(r, t) = c * r * exp(-lambda t) dominating every
// sample: c is the worst observed amplification, lambda the largest
// feasible rate on the documented grid plus local refinement.
std::optional<cmp::KLFn> fit_kl_envelope(const std::vector<TraceSample>& samples,
                                         const FitConstraints& constraints);

EnvelopeFit estimate_gas_envelope(const sys::ControlSystem& system,
                                  const met::Metric& d, const EnsembleSpec& spec,
                                  const FitConstraints& constraints = {});

// Fits the smallest gain gamma (by parameter order c then p) with
// dist <= beta(r0, t) + gamma(gap) over an ensemble with differing
// signals; also fits the max-form gain dist <= max{beta, gamma_max}.
EnvelopeFit estimate_iss_gain(const sys::ControlSystem& system,
                              const met::Metric& d, const cmp::KLFn& beta,
                              const EnsembleSpec& spec,
                              const FitConstraints& constraints = {});

// Empirical set-stability check of the disturbance-augmented system:
// KL envelope over the diagonal-distance traces under random inputs from
// U x B_1(0). Pass iff an envelope with lambda > 0 exists in family.
EnvelopeFit validate_ugas(const aug::AugmentedSystem& asys, const met::Metric& d,
                          const EnsembleSpec& spec,
                          const FitConstraints& constraints = {});

} // namespace istab::envl
