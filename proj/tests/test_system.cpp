#include "istab/system.hpp"

#include <doctest.h>

#include <cmath>

using namespace istab;
using sys::ControlSystem;
using sys::InputSet;
using sys::InputSignal;

namespace {

ControlSystem decay() {
  return sys::make_system("decay", 1, 0, InputSet::empty(), {"-x1"});
}

ControlSystem drift() {
  return sys::make_system("drift", 1, 1, InputSet::box({-0.5}, {0.5}), {"-1 + u1"});
}

} // namespace

TEST_CASE("RK4 against closed forms") {
  auto traj = sys::integrate(decay(), std::vector<double>{1.0},
                             InputSignal::empty(1.0), 1.0, 1e-3);
  CHECK(traj.states.back()[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-6));
  CHECK(traj.states.front()[0] == 1.0);
  CHECK(traj.times.size() == 1001);

  // xdot = -1 + u, u = 0.5: exact for polynomials
  auto lin = sys::integrate(drift(), std::vector<double>{0.0},
                            InputSignal::constant({0.5}, 2.0), 2.0, 1e-3);
  CHECK(std::fabs(lin.states.back()[0] - (-1.0)) <= 1e-9);
}

TEST_CASE("finite-escape solutions report divergence with a blow-up time") {
  auto quad = sys::make_system("blowup", 1, 0, InputSet::empty(), {"x1^2"});
  try {
    sys::integrate(quad, std::vector<double>{1.0}, InputSignal::empty(2.0), 2.0, 1e-3);
    FAIL("expected DivergenceError");
  } catch (const sys::DivergenceError& e) {
    CHECK(e.blow_up_time > 0.9);
    CHECK(e.blow_up_time < 1.1);
  }
}

TEST_CASE("integration preconditions") {
  CHECK_THROWS_AS(sys::integrate(decay(), std::vector<double>{1.0},
                                 InputSignal::empty(1.0), 1.0, 0.0),
                  sys::SystemError);
  CHECK_THROWS_AS(sys::integrate(decay(), std::vector<double>{1.0, 2.0},
                                 InputSignal::empty(1.0), 1.0, 1e-3),
                  sys::SystemError);
  CHECK_THROWS_AS(sys::integrate(drift(), std::vector<double>{0.0},
                                 InputSignal::constant({0.0}, 0.5), 1.0, 1e-3),
                  sys::SystemError);
}

TEST_CASE("RK4 is fourth order on the linear benchmark") {
  auto run = [&](double step) {
    auto traj = sys::integrate(decay(), std::vector<double>{1.0},
                               InputSignal::empty(1.0), 1.0, step);
    return std::fabs(traj.states.back()[0] - std::exp(-1.0));
  };
  double ratio = run(0.05) / run(0.025);
  CHECK(ratio >= 12.0);
  CHECK(ratio <= 20.0);
}

TEST_CASE("integration is bit-identical across repeats") {
  Rng rng(42);
  auto sig = sys::sample_signal(drift().input_set, 5.0, 0.5, rng);
  auto a = sys::integrate(drift(), std::vector<double>{0.3}, sig, 5.0, 1e-3);
  auto b = sys::integrate(drift(), std::vector<double>{0.3}, sig, 5.0, 1e-3);
  REQUIRE(a.states.size() == b.states.size());
  for (std::size_t k = 0; k < a.states.size(); ++k)
    CHECK(a.states[k][0] == b.states[k][0]);
}

TEST_CASE("lipschitz estimates") {
  sys::Box q{{-1.0}, {1.0}};
  CHECK(sys::lipschitz_estimate(decay(), q, 10000, 1) ==
        doctest::Approx(1.0).epsilon(0.05));

  auto constant = sys::make_system("const", 1, 0, InputSet::empty(), {"-1"});
  CHECK(sys::lipschitz_estimate(constant, q, 1000, 2) == 0.0);

  auto quad = sys::make_system("quad", 1, 0, InputSet::empty(), {"x1^2"});
  CHECK(sys::lipschitz_estimate(quad, q, 20000, 3) ==
        doctest::Approx(2.0).epsilon(0.05));

  CHECK_THROWS_AS(sys::lipschitz_estimate(decay(), q, 10, 1), sys::SystemError);
}

TEST_CASE("sup-norm of signal differences") {
  InputSignal a{1, 1.0, {{0.3}, {-0.5}}};
  InputSignal zero{1, 1.0, {{0.0}, {0.0}}};
  CHECK(sys::sup_norm_diff(a, zero) == 0.5);
  CHECK(sys::sup_norm_diff(a, a) == 0.0);

  InputSignal p{2, 1.0, {{1.0, 0.0}}};
  InputSignal q2{2, 1.0, {{0.0, 1.0}}};
  CHECK(sys::sup_norm_diff(p, q2) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

  InputSignal other_grid{1, 0.5, {{0.0}, {0.0}}};
  CHECK_THROWS_AS(sys::sup_norm_diff(a, other_grid), sys::SystemError);
}

TEST_CASE("sampled signals stay inside the input set") {
  Rng rng(9);
  auto box = InputSet::box({-0.5, 1.0}, {0.5, 2.0});
  for (int k = 0; k < 50; ++k) {
    auto sig = sys::sample_signal(box, 10.0, 1.0, rng);
    for (const auto& cell : sig.values) CHECK(box.contains(cell));
  }
  auto ball = InputSet::ball(2, 1.5);
  for (int k = 0; k < 50; ++k) {
    auto sig = sys::sample_signal(ball, 10.0, 1.0, rng);
    for (const auto& cell : sig.values) CHECK(ball.contains(cell));
  }
}
