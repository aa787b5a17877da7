#include "istab/envelope.hpp"

#include <doctest.h>

#include <cmath>

using namespace istab;
using envl::EnsembleSpec;
using envl::FitConstraints;
using sys::InputSet;

namespace {

EnsembleSpec spec1(std::uint64_t seed, int pairs = 50) {
  EnsembleSpec spec;
  spec.pairs = pairs;
  spec.horizon = 10.0;
  spec.x0_domain = sys::Box{{-2.0}, {2.0}};
  spec.seed = seed;
  return spec;
}

sys::ControlSystem decay() {
  return sys::make_system("decay", 1, 0, InputSet::empty(), {"-x1"});
}

sys::ControlSystem drift() {
  return sys::make_system("drift", 1, 1, InputSet::box({-0.5}, {0.5}), {"-1 + u1"});
}

sys::ControlSystem linear() {
  return sys::make_system("linear", 1, 1, InputSet::box({-1.0}, {1.0}), {"-x1 + u1"});
}

met::Metric exp_pullback() {
  return met::Metric::pullback({expr::parse("exp(x1)", expr::Dims{1, 0})}, 1);
}

} // namespace

TEST_CASE("pure decay fits the known envelope") {
  auto fit = envl::estimate_gas_envelope(decay(), met::Metric::euclidean(1), spec1(1));
  REQUIRE(fit.beta_found);
  CHECK(fit.verdict == "ok");
  CHECK(fit.beta.lambda >= 0.9);
  CHECK(fit.beta.lambda <= 1.0 + 1e-8);
  CHECK(fit.beta.k.c >= 1.0);
  CHECK(fit.beta.k.c <= 1.1);
  CHECK(fit.samples > 0);
  // domination residual within fit slack
  CHECK(fit.max_residual <= 1.01e-9);
}

TEST_CASE("drift system: pullback metric contracts, Euclidean does not") {
  auto pulled = envl::estimate_gas_envelope(drift(), exp_pullback(), spec1(2));
  REQUIRE(pulled.beta_found);
  // worst case is u = 0.5, where distances decay like e^{-t/2}
  CHECK(pulled.beta.lambda >= 0.45);
  CHECK(pulled.beta.lambda <= 0.5 + 1e-8);

  auto flat = envl::estimate_gas_envelope(drift(), met::Metric::euclidean(1), spec1(3));
  CHECK_FALSE(flat.beta_found);
  CHECK(flat.verdict == "no envelope in family");
}

TEST_CASE("iss gain of the linear benchmark is near the identity") {
  cmp::KLFn beta{cmp::linear_k(1.05), 0.9};
  auto fit = envl::estimate_iss_gain(linear(), met::Metric::euclidean(1), beta,
                                     spec1(4));
  REQUIRE(fit.gamma_found);
  // |x - y| <= |x0 - y0| e^{-t} + sup|u - v| exactly, so c near 1 and p = 1
  CHECK(fit.gamma.p == 1.0);
  CHECK(fit.gamma.c >= 0.85);
  CHECK(fit.gamma.c <= 1.15);
  CHECK(fit.gamma_max_found);
  // every sum-form dataset is dominated by beta + gamma by construction
  CHECK(fit.max_residual <= 1.01e-9);
}

TEST_CASE("max-form gain dominates its own dataset") {
  cmp::KLFn beta{cmp::linear_k(1.05), 0.9};
  auto fit = envl::estimate_iss_gain(linear(), met::Metric::euclidean(1), beta,
                                     spec1(5));
  REQUIRE(fit.gamma_max_found);
  for (const auto& s : fit.traces) {
    double sum_bound = beta(s.r0, s.t) + fit.gamma(s.input_gap);
    double max_bound = std::max(beta(s.r0, s.t), fit.gamma_max(s.input_gap));
    CHECK(s.dist <= sum_bound + 1.01e-9);
    CHECK(s.dist <= max_bound + 1.01e-9);
    // the sum form never reports a tighter bound than the max form family
    CHECK(sum_bound >= std::min(beta(s.r0, s.t), fit.gamma(s.input_gap)));
  }
}

TEST_CASE("fit is monotone under ensemble growth") {
  auto small = envl::gas_ensemble(decay(), met::Metric::euclidean(1), spec1(6, 20));
  auto large = envl::gas_ensemble(decay(), met::Metric::euclidean(1), spec1(6, 40));
  // the smaller ensemble is a prefix of the larger one pair by pair
  auto fit_small = envl::fit_kl_envelope(small, FitConstraints{});
  auto fit_large = envl::fit_kl_envelope(large, FitConstraints{});
  REQUIRE(fit_small.has_value());
  REQUIRE(fit_large.has_value());
  CHECK(fit_large->k.c >= fit_small->k.c - 1e-12);
  CHECK(fit_large->lambda <= fit_small->lambda + 1e-12);
}

TEST_CASE("fit_kl_envelope rejects non-contracting data") {
  std::vector<envl::TraceSample> grow;
  for (int i = 0; i <= 40; ++i) {
    double t = 0.25 * i;
    grow.push_back({0, t, 1.0, std::exp(0.3 * t), 0.0});
  }
  CHECK_FALSE(envl::fit_kl_envelope(grow, FitConstraints{}).has_value());
}

TEST_CASE("ensembles are deterministic given the seed") {
  auto a = envl::gas_ensemble(decay(), met::Metric::euclidean(1), spec1(7));
  auto b = envl::gas_ensemble(decay(), met::Metric::euclidean(1), spec1(7));
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].dist == b[i].dist);
    CHECK(a[i].r0 == b[i].r0);
  }
  auto c = envl::gas_ensemble(decay(), met::Metric::euclidean(1), spec1(8));
  bool differs = a.size() != c.size();
  for (std::size_t i = 0; !differs && i < a.size(); ++i)
    differs = a[i].dist != c[i].dist;
  CHECK(differs);
}

TEST_CASE("initial separations span three decades") {
  auto samples = envl::gas_ensemble(decay(), met::Metric::euclidean(1), spec1(9));
  double r_min = 1e300, r_max = 0.0;
  for (const auto& s : samples) {
    r_min = std::min(r_min, s.r0);
    r_max = std::max(r_max, s.r0);
  }
  CHECK(r_max / r_min >= 100.0);
}

TEST_CASE("validate_ugas accepts the contracting augmented benchmark") {
  auto asys = aug::augment_iss(linear(), met::Metric::euclidean(1),
                               cmp::linear_k(1.0 / 16.0));
  auto spec = spec1(10, 30);
  spec.horizon = 10.0;
  auto fit = envl::validate_ugas(asys, met::Metric::euclidean(1), spec);
  REQUIRE(fit.beta_found);
  CHECK(fit.beta.lambda > 0.0);
  CHECK(fit.verdict == "ok");
  CHECK(fit.pairs == 30);
}
