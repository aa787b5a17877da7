#include "istab/certificate.hpp"
#include "istab/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace istab;
using cert::GasCertificate;
using cert::IssCertificate;
using cert::SamplerSpec;
using cert::UgasCertificate;
using sys::InputSet;

namespace {

sys::ControlSystem linear_sys() {
  return sys::make_system("linear", 1, 1, InputSet::box({-1.0}, {1.0}), {"-x1 + u1"});
}

sys::ControlSystem drift_sys() {
  return sys::make_system("drift", 1, 1, InputSet::box({-0.5}, {0.5}), {"-1 + u1"});
}

// V = (x1 - y1)^2 against the Euclidean distance: V' = -2V along the
// shared-input linear system, so kappa = 2 cancels exactly.
GasCertificate linear_cert() {
  GasCertificate cert;
  cert.V = expr::parse("(x1 - y1)^2", expr::Dims{1, 1});
  cert.d = met::Metric::euclidean(1);
  cert.alpha_lo = cmp::power_k(0.5, 2.0);
  cert.alpha_hi = cmp::power_k(1.0, 2.0);
  cert.kappa = 2.0;
  return cert;
}

GasCertificate drift_pullback_cert() {
  GasCertificate cert;
  cert.V = expr::parse("(exp(x1) - exp(y1))^2", expr::Dims{1, 1});
  cert.d = met::Metric::pullback({expr::parse("exp(x1)", expr::Dims{1, 0})}, 1);
  cert.alpha_lo = cmp::power_k(0.5, 2.0);
  cert.alpha_hi = cmp::power_k(1.0, 2.0);
  cert.kappa = 1.0;
  return cert;
}

sys::Box box1() { return sys::Box{{-2.0}, {2.0}}; }

} // namespace

TEST_CASE("linear benchmark: sandwich and decrease pass at tolerance") {
  auto cert = linear_cert();
  SamplerSpec sampler{10000, 1};
  auto sandwich = cert::check_sandwich(cert, box1(), sampler);
  CHECK(sandwich.pass);
  CHECK(sandwich.worst_violation <= cert::kCheckTolerance);
  CHECK(sandwich.samples == 10000);

  auto decrease = cert::check_decrease_gas(cert, linear_sys(), box1(), sampler);
  CHECK(decrease.pass);
  CHECK(decrease.worst_violation <= cert::kCheckTolerance);
}

TEST_CASE("linear benchmark: ISS sum form passes") {
  // L + V - |u-v|^2 = -((x-y) - (u-v))^2 <= 0
  IssCertificate iss;
  iss.gas = linear_cert();
  iss.gas.kappa = 1.0;
  iss.sigma = cmp::power_k(1.0, 2.0);
  auto report = cert::check_decrease_iss(iss, linear_sys(), box1(),
                                         SamplerSpec{10000, 2}, cert::IssMode::Sum);
  CHECK(report.pass);
  CHECK(report.worst_violation <= cert::kCheckTolerance);
}

TEST_CASE("linear benchmark: ISS implication form passes with phi = r/8") {
  IssCertificate iss;
  iss.gas = linear_cert();
  iss.gas.kappa = 1.0;
  iss.sigma = cmp::power_k(1.0, 2.0); // unused by the implication form
  auto report = cert::check_decrease_iss(iss, linear_sys(), box1(),
                                         SamplerSpec{10000, 3},
                                         cert::IssMode::Implication,
                                         cmp::linear_k(1.0 / 8.0));
  CHECK(report.pass);
}

TEST_CASE("shared-drift system: Euclidean candidate fails, pullback passes") {
  // V' = 0 under a shared input, so any kappa > 0 is violated off-diagonal.
  GasCertificate euclid = linear_cert();
  euclid.kappa = 0.01;
  auto fail = cert::check_decrease_gas(euclid, drift_sys(), box1(),
                                       SamplerSpec{10000, 4});
  CHECK_FALSE(fail.pass);
  CHECK(fail.worst_violation > cert::kCheckTolerance);
  // the witness reproduces the reported violation on its face
  CHECK(fail.witness.x.size() == 1);
  CHECK(fail.witness.y.size() == 1);

  auto pass = cert::check_decrease_gas(drift_pullback_cert(), drift_sys(), box1(),
                                       SamplerSpec{10000, 5});
  CHECK(pass.pass);
}

TEST_CASE("ugas: quadratic certificate for decay to the origin") {
  UgasCertificate cert;
  cert.V = expr::parse("x1^2", expr::Dims{1, 0});
  cert.d = met::Metric::euclidean(1);
  cert.A = met::SetDescriptor::point_set({0.0});
  cert.alpha_lo = cmp::power_k(0.5, 2.0);
  cert.alpha_hi = cmp::power_k(1.0, 2.0);
  cert.kappa = 2.0;
  auto decay = sys::make_system("decay", 1, 0, InputSet::empty(), {"-x1"});
  auto report = cert::check_ugas(cert, decay, box1(), SamplerSpec{10000, 6});
  CHECK(report.pass);

  cert.kappa = 3.0; // faster than the actual decay rate
  auto fail = cert::check_ugas(cert, decay, box1(), SamplerSpec{10000, 6});
  CHECK_FALSE(fail.pass);
}

TEST_CASE("reports are monotone in the sample budget") {
  GasCertificate euclid = linear_cert();
  euclid.kappa = 0.5;
  auto small = cert::check_decrease_gas(euclid, drift_sys(), box1(),
                                        SamplerSpec{1000, 9});
  auto large = cert::check_decrease_gas(euclid, drift_sys(), box1(),
                                        SamplerSpec{10000, 9});
  CHECK(large.worst_violation >= small.worst_violation);
}

TEST_CASE("falsify finds the drift violation for every kappa") {
  for (double kappa : {0.01, 0.1, 1.0}) {
    cert::FalsifyProblem problem;
    problem.condition = cert::Condition::DecreaseGas;
    GasCertificate candidate = linear_cert();
    candidate.kappa = kappa;
    problem.gas = candidate;
    auto system = drift_sys();
    problem.system = &system;
    problem.domain = box1();
    auto cx = cert::falsify(problem, cert::FalsifyBudget{}, 10);
    REQUIRE(cx.has_value());
    CHECK(cx->margin > cert::kCheckTolerance);
    CHECK(cx->witness.x.size() == 1);
  }
}

TEST_CASE("falsify: sign-indefinite V breaks the sandwich") {
  cert::FalsifyProblem problem;
  problem.condition = cert::Condition::Sandwich;
  GasCertificate candidate = linear_cert();
  candidate.V = expr::parse("x1 - y1", expr::Dims{1, 1});
  problem.gas = candidate;
  problem.domain = box1();
  auto cx = cert::falsify(problem, cert::FalsifyBudget{}, 11);
  REQUIRE(cx.has_value());
  CHECK(cx->margin > cert::kCheckTolerance);
}

TEST_CASE("falsify returns nothing on a sound certificate") {
  cert::FalsifyProblem problem;
  problem.condition = cert::Condition::DecreaseGas;
  problem.gas = linear_cert();
  auto system = linear_sys();
  problem.system = &system;
  problem.domain = box1();
  CHECK_FALSE(cert::falsify(problem, cert::FalsifyBudget{}, 12).has_value());
}

TEST_CASE("falsify is deterministic for a fixed seed") {
  cert::FalsifyProblem problem;
  problem.condition = cert::Condition::DecreaseGas;
  GasCertificate candidate = linear_cert();
  candidate.kappa = 0.1;
  problem.gas = candidate;
  auto system = drift_sys();
  problem.system = &system;
  problem.domain = box1();
  auto a = cert::falsify(problem, cert::FalsifyBudget{}, 13);
  auto b = cert::falsify(problem, cert::FalsifyBudget{}, 13);
  REQUIRE(a.has_value());
  REQUIRE(b.has_value());
  CHECK(a->margin == b->margin);
  CHECK(a->witness.x == b->witness.x);
  CHECK(a->witness.y == b->witness.y);
  CHECK(a->witness.u == b->witness.u);
}

TEST_CASE("passing certificate implies the Gronwall bound on trajectories") {
  auto cert = linear_cert();
  auto system = linear_sys();
  Rng rng(77);
  std::vector<double> xy(2);
  for (int k = 0; k < 100; ++k) {
    double x0 = rng.uniform(-2.0, 2.0), y0 = rng.uniform(-2.0, 2.0);
    auto sig = sys::sample_signal(system.input_set, 5.0, 0.5, rng);
    auto tx = sys::integrate(system, std::vector<double>{x0}, sig, 5.0, 1e-3);
    auto ty = sys::integrate(system, std::vector<double>{y0}, sig, 5.0, 1e-3);
    xy[0] = x0;
    xy[1] = y0;
    double v0 = expr::eval(cert.V, expr::Env{.x = std::span<const double>(&xy[0], 1),
                                             .y = std::span<const double>(&xy[1], 1)});
    for (std::size_t i = 0; i < tx.times.size(); i += 250) {
      xy[0] = tx.states[i][0];
      xy[1] = ty.states[i][0];
      double vt = expr::eval(cert.V,
                             expr::Env{.x = std::span<const double>(&xy[0], 1),
                                       .y = std::span<const double>(&xy[1], 1)});
      CHECK(vt <= v0 * std::exp(-cert.kappa * tx.times[i]) + 1e-3);
    }
  }
}

TEST_CASE("gradient cross-check accepts smooth V and aborts on mismatch") {
  CHECK_NOTHROW(cert::gradient_crosscheck(linear_cert().V, expr::Dims{1, 1}, box1(),
                                          100, 99));
  // derivative oscillates far below the finite-difference step
  auto wild = expr::parse("sin(1000000*x1)", expr::Dims{1, 1});
  CHECK_THROWS_AS(cert::gradient_crosscheck(wild, expr::Dims{1, 1}, box1(), 100, 99),
                  cert::CertificateError);
}
