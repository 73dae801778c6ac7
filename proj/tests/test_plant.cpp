#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "coprosim/plant.hpp"

using namespace coprosim;
namespace pl = coprosim::plant;

namespace {

pl::MotorPlant scalar_plant(double a, double b, double noise, std::uint64_t seed) {
  pl::MotorPlant p;
  p.dynamics = Mat::from_rows({{a}});
  p.input = Mat::from_rows({{b}});
  p.lesion_mask = {1.0};
  p.process_noise = noise;
  p.state = {0.0};
  p.rng = Rng(seed);
  return p;
}

/// Empirical firing rate (Hz) of a single LIF neuron under constant current.
double measured_rate(double tau_ms, double theta, double current, double dt_ms,
                     double duration_ms) {
  auto net = pl::SpikingNetwork::make(1, 0);
  net.tau_m_ms = tau_ms;
  net.threshold = theta;
  net.plastic = false;
  const Vec input = {current};
  long spikes = 0;
  const long steps = std::lround(duration_ms / dt_ms);
  for (long s = 0; s < steps; ++s) spikes += pl::spiking_step(net, input, dt_ms)[0];
  return 1000.0 * double(spikes) / duration_ms;
}

}  // namespace

TEST_SUITE("plant") {

TEST_CASE("scalar plant follows the geometric series solution") {
  auto p = scalar_plant(0.9, 1.0, 0.0, 1);
  // x_k = sum_{j<k} 0.9^j = (1 - 0.9^k) / 0.1
  for (int k = 1; k <= 200; ++k) {
    const double x = pl::plant_step(p, {1.0})[0];
    const double expect = (1.0 - std::pow(0.9, k)) / 0.1;
    CHECK(x == doctest::Approx(expect).epsilon(1e-12));
  }
  // Fixed point of x <- 0.9 x + 1 is 10.
  for (int k = 0; k < 400; ++k) pl::plant_step(p, {1.0});
  CHECK(p.state[0] == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("lesioned channels are annihilated exactly") {
  pl::MotorPlant a;
  a.dynamics = Mat::from_rows({{0.8, 0.1}, {0.0, 0.7}});
  a.input = Mat::from_rows({{1.0, 0.5}, {0.2, 1.0}});
  a.lesion_mask = {1.0, 0.0};  // channel 1 severed
  a.process_noise = 0.05;
  a.state = {0.0, 0.0};
  a.rng = Rng(77);
  pl::MotorPlant b = a;  // same noise stream

  for (int k = 0; k < 50; ++k) {
    const Vec sa = pl::plant_step(a, {0.3, 123.0});  // wild channel-1 command
    const Vec sb = pl::plant_step(b, {0.3, 0.0});
    CHECK(sa == sb);  // bitwise: the lesion multiplies the command away
  }
}

TEST_CASE("noise-free plant responses superpose") {
  Rng rng(5);
  Mat dyn(3, 3);
  for (auto& x : dyn.a) x = rng.uniform(-1.0, 1.0);
  const double rho = linalg::spectral_radius_estimate(dyn);
  dyn = linalg::scaled(dyn, 0.7 / rho);

  pl::MotorPlant p;
  p.dynamics = dyn;
  p.input = Mat::from_rows({{1.0, 0.0}, {0.0, 1.0}, {0.5, -0.5}});
  p.lesion_mask = {1.0, 1.0};
  p.state = {0.0, 0.0, 0.0};
  p.validate();

  const Vec u1 = {0.7, -0.2}, u2 = {-0.3, 0.9}, u12 = {0.4, 0.7};
  const Vec x1 = pl::settle_from_rest(p, u1, 30);
  const Vec x2 = pl::settle_from_rest(p, u2, 30);
  const Vec x12 = pl::settle_from_rest(p, u12, 30);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(x12[i] == doctest::Approx(x1[i] + x2[i]).epsilon(1e-10));
  // Probing must not advance the original plant.
  CHECK(p.state == Vec{0.0, 0.0, 0.0});
}

TEST_CASE("same seed reproduces a noisy trajectory, different seed does not") {
  auto a = scalar_plant(0.5, 1.0, 0.1, 42);
  auto b = scalar_plant(0.5, 1.0, 0.1, 42);
  auto c = scalar_plant(0.5, 1.0, 0.1, 43);
  bool identical = true, differs = false;
  for (int k = 0; k < 100; ++k) {
    const double xa = pl::plant_step(a, {1.0})[0];
    identical = identical && (xa == pl::plant_step(b, {1.0})[0]);
    differs = differs || (xa != pl::plant_step(c, {1.0})[0]);
  }
  CHECK(identical);
  CHECK(differs);
}

TEST_CASE("plant validation rejects unstable or malformed models") {
  auto p = scalar_plant(0.9, 1.0, 0.0, 1);
  CHECK_NOTHROW(p.validate());

  auto unstable = scalar_plant(1.05, 1.0, 0.0, 1);
  CHECK_THROWS_AS(unstable.validate(), std::invalid_argument);

  auto bad_lesion = scalar_plant(0.9, 1.0, 0.0, 1);
  bad_lesion.lesion_mask = {1.5};
  CHECK_THROWS_AS(bad_lesion.validate(), std::invalid_argument);

  auto bad_noise = scalar_plant(0.9, 1.0, 0.0, 1);
  bad_noise.process_noise = -0.1;
  CHECK_THROWS_AS(bad_noise.validate(), std::invalid_argument);

  auto bad_shape = scalar_plant(0.9, 1.0, 0.0, 1);
  bad_shape.input = Mat(2, 1, 1.0);
  CHECK_THROWS_AS(bad_shape.validate(), std::invalid_argument);

  CHECK_THROWS_AS(pl::plant_step(p, {1.0, 2.0}), DimensionError);
}

TEST_CASE("LIF membrane leaks exponentially and stays quiet below threshold") {
  auto net = pl::SpikingNetwork::make(1, 0);
  net.potential[0] = 0.5;
  const Vec zero = {0.0};
  for (int k = 1; k <= 50; ++k) {
    pl::spiking_step(net, zero, 1.0);
    CHECK(net.potential[0] ==
          doctest::Approx(0.5 * std::pow(1.0 - 1.0 / 20.0, k)).epsilon(1e-12));
  }

  // Constant current with tau*I = 0.9 * threshold never reaches threshold.
  auto quiet = pl::SpikingNetwork::make(1, 0);
  long spikes = 0;
  const Vec weak = {0.9 / quiet.tau_m_ms};
  for (int s = 0; s < 20000; ++s) spikes += pl::spiking_step(quiet, weak, 0.5)[0];
  CHECK(spikes == 0);
  CHECK(quiet.potential[0] <= 0.9 + 1e-9);
}

TEST_CASE("LIF firing rate matches the closed-form interspike interval") {
  // Continuous solution: from reset, v(t) = tau*I*(1 - exp(-t/tau)) crosses
  // theta after t* = -tau * ln(1 - theta/(tau*I)); rate = 1000/t* Hz.
  struct Case {
    double tau, theta, current;
  } cases[] = {{20.0, 1.0, 0.1}, {10.0, 1.0, 0.25}, {30.0, 1.2, 0.05}};
  for (const auto& c : cases) {
    const double t_star = -c.tau * std::log(1.0 - c.theta / (c.tau * c.current));
    const double analytic_hz = 1000.0 / t_star;
    const double measured_hz =
        measured_rate(c.tau, c.theta, c.current, 0.05, 2000.0);
    CHECK(measured_hz == doctest::Approx(analytic_hz).epsilon(0.05));
  }
}

TEST_CASE("a strong synapse relays a spike with one step of delay") {
  auto net = pl::SpikingNetwork::make(2, 0);
  net.stdp.w_max = 5.0;
  net.weights(0, 1) = 2.0;
  net.plastic = false;
  net.potential[0] = 1.5;  // above threshold: neuron 0 fires on step 1

  const Vec zero = {0.0, 0.0};
  auto s1 = pl::spiking_step(net, zero, 1.0);
  CHECK(s1 == std::vector<std::uint8_t>{1, 0});
  auto s2 = pl::spiking_step(net, zero, 1.0);
  CHECK(s2 == std::vector<std::uint8_t>{0, 1});  // relayed through w(0,1)=2
}

TEST_CASE("stdp_update implements the exponential pair rule with clamping") {
  auto net = pl::SpikingNetwork::make(2, 0);
  net.weights(0, 1) = 0.5;

  // Post 20 ms after pre: potentiate by a_plus * e^{-1}.
  double d = pl::stdp_update(net, 100.0, 120.0, 0, 1);
  CHECK(d == doctest::Approx(0.01 * std::exp(-1.0)).epsilon(1e-12));
  CHECK(net.weights(0, 1) == doctest::Approx(0.5 + d).epsilon(1e-12));

  // Pre 20 ms after post: depress by a_minus * e^{-1}.
  const double w_before = net.weights(0, 1);
  d = pl::stdp_update(net, 120.0, 100.0, 0, 1);
  CHECK(d == doctest::Approx(-0.012 * std::exp(-1.0)).epsilon(1e-12));
  CHECK(net.weights(0, 1) == doctest::Approx(w_before + d).epsilon(1e-12));

  // Simultaneous spikes change nothing.
  const double w_same = net.weights(0, 1);
  CHECK(pl::stdp_update(net, 50.0, 50.0, 0, 1) == 0.0);
  CHECK(net.weights(0, 1) == w_same);

  // Clamp at w_max: the returned delta is the applied (truncated) change.
  net.weights(0, 1) = 0.999;
  d = pl::stdp_update(net, 100.0, 100.001, 0, 1);  // near-max potentiation
  CHECK(net.weights(0, 1) == 1.0);
  CHECK(d == doctest::Approx(0.001).epsilon(1e-9));

  // Clamp at zero on depression.
  net.weights(0, 1) = 0.0005;
  d = pl::stdp_update(net, 100.001, 100.0, 0, 1);
  CHECK(net.weights(0, 1) == 0.0);
  CHECK(d == doctest::Approx(-0.0005).epsilon(1e-9));

  // A neuron never conditions its own (structurally zero) synapse.
  CHECK(pl::stdp_update(net, 10.0, 20.0, 1, 1) == 0.0);

  // A partner that has never spiked contributes nothing.
  const double neg_inf = -std::numeric_limits<double>::infinity();
  CHECK(pl::stdp_update(net, neg_inf, 20.0, 0, 1) == 0.0);
}

TEST_CASE("weights stay inside [0, w_max] under random spiking pressure") {
  auto net = pl::SpikingNetwork::make(6, 12);
  net.stdp.w_max = 0.5;
  net.stdp.a_plus = 0.05;   // aggressive learning to stress the clamp
  net.stdp.a_minus = 0.06;
  Rng drive(999);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j)
      if (i != j) net.weights(i, j) = drive.uniform(0.0, 0.3);
  const Mat w_start = net.weights;

  Vec input(6);
  for (int step = 0; step < 5000; ++step) {
    for (auto& x : input) x = drive.uniform() < 0.05 ? 2.0 : 0.0;
    pl::spiking_step(net, input, 1.0);
    if (step % 500 == 0) CHECK_NOTHROW(net.validate());
  }
  CHECK_NOTHROW(net.validate());  // bounds + zero diagonal
  CHECK(linalg::max_abs_diff(net.weights, w_start) > 0.0);  // plasticity ran
}

TEST_CASE("output effect of an unwired site is exactly zero") {
  auto net = pl::SpikingNetwork::make(5, 9);
  net.sites["A"] = {0};
  net.readout(0, 1) = net.readout(0, 2) = 1.0;  // axis 0: neurons 1, 2
  net.readout(1, 3) = net.readout(1, 4) = 1.0;  // axis 1: neurons 3, 4

  const auto eff = pl::output_effect_map(net, "A");
  CHECK(eff.effect[0] == 0.0);
  CHECK(eff.effect[1] == 0.0);
  CHECK(eff.trials == 32);
  CHECK_THROWS_AS(pl::output_effect_map(net, "nope"), std::out_of_range);
}

TEST_CASE("output effect of a flexion-wired site aligns with the flexion axis") {
  auto net = pl::SpikingNetwork::make(5, 10);
  net.sites["A"] = {0};
  net.weights(0, 1) = 0.8;  // site drives the axis-0 pool only
  net.weights(0, 2) = 0.8;
  net.readout(0, 1) = net.readout(0, 2) = 1.0;
  net.readout(1, 3) = net.readout(1, 4) = 1.0;

  const auto eff = pl::output_effect_map(net, "A");
  CHECK(eff.effect[0] > 0.0);   // excitation raised axis-0 activity
  CHECK(eff.effect[1] == 0.0);  // untouched pool: identical paired runs
  const double cosine =
      eff.effect[0] / std::hypot(eff.effect[0], eff.effect[1]);
  CHECK(cosine > std::cos(5.0 * 3.14159265358979323846 / 180.0));

  // The probe is a pure function of the network value.
  const auto again = pl::output_effect_map(net, "A");
  CHECK(again.effect[0] == eff.effect[0]);
  CHECK(again.effect[1] == eff.effect[1]);
}

TEST_CASE("stimulate kicks exactly the site's neurons") {
  auto net = pl::SpikingNetwork::make(4, 0);
  net.sites["pair"] = {1, 3};
  net.stimulate("pair", 0.7);
  CHECK(net.potential == Vec{0.0, 0.7, 0.0, 0.7});
  CHECK_THROWS_AS(net.stimulate("ghost", 1.0), std::out_of_range);
}

}  // TEST_SUITE
