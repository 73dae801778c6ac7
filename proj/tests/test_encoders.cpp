#include <doctest.h>

#include <cmath>
#include <vector>

#include "coprosim/encoders.hpp"

using namespace coprosim;
namespace enc = coprosim::encoders;

TEST_SUITE("encoders") {

TEST_CASE("FES laws reproduce the published operating points exactly") {
  // 0.8 mA/Hz above 24 Hz for the flexor, 0.6 mA/Hz below 12 Hz for the
  // extensor, 10 mA compliance cap. These four values are contractual.
  CHECK(enc::fes_flexor(29.0) == 4.0);
  CHECK(enc::fes_flexor(36.5) == 10.0);
  CHECK(enc::fes_flexor(40.0) == 10.0);
  CHECK(enc::fes_extensor(2.0) == 6.0);

  CHECK(enc::fes_flexor(24.0) == 0.0);
  CHECK(enc::fes_flexor(10.0) == 0.0);
  CHECK(enc::fes_extensor(12.0) == 0.0);
  CHECK(enc::fes_extensor(30.0) == 0.0);
}

TEST_CASE("FES currents are monotone and continuous in rate") {
  double prev_f = enc::fes_flexor(0.0);
  double prev_e = enc::fes_extensor(0.0);
  for (double r = 0.25; r <= 60.0; r += 0.25) {
    const double f = enc::fes_flexor(r);
    const double e = enc::fes_extensor(r);
    CHECK(f >= prev_f);          // flexor nondecreasing
    CHECK(e <= prev_e);          // extensor nonincreasing
    CHECK(std::fabs(f - prev_f) <= 0.8 * 0.25 + 1e-12);  // Lipschitz by gain
    CHECK(std::fabs(e - prev_e) <= 0.6 * 0.25 + 1e-12);
    CHECK(f <= 10.0);
    CHECK(e <= 10.0);
    prev_f = f;
    prev_e = e;
  }
}

TEST_CASE("tactile cues for rewarded and unrewarded objects are discriminable") {
  const PulseTrain r = enc::tactile_encode(true);
  const PulseTrain u = enc::tactile_encode(false);
  CHECK(r.frequency_hz == 200.0);
  CHECK(r.packet_rate_hz == 10.0);
  CHECK(u.frequency_hz == 400.0);
  CHECK(u.packet_rate_hz == 5.0);
  CHECK(r.frequency_hz != u.frequency_hz);
  CHECK(r.packet_rate_hz != u.packet_rate_hz);

  enc::TactileConfig cfg;
  cfg.amplitude_ma = 3.5;
  CHECK(enc::tactile_encode(true, cfg).amplitude_ma == 3.5);
}

TEST_CASE("hold reinforcement covers exactly the first second of a grasp") {
  const auto at0 = enc::hold_encode(true, 0.0);
  REQUIRE(at0.has_value());
  CHECK(at0->channels.size() == 3);
  for (const auto& c : at0->channels) {
    CHECK(c.train.frequency_hz == 300.0);
    CHECK(c.train.biphasic);
    CHECK(c.train.duration_ms == 1000.0);
  }

  const auto mid = enc::hold_encode(true, 400.0);
  REQUIRE(mid.has_value());
  CHECK(mid->channels.front().train.duration_ms == 600.0);

  CHECK(enc::hold_encode(true, 999.75).has_value());   // still inside [0, 1000)
  CHECK_FALSE(enc::hold_encode(true, 1000.0).has_value());  // half-open end
  CHECK_FALSE(enc::hold_encode(true, -1.0).has_value());
  CHECK_FALSE(enc::hold_encode(false, 10.0).has_value());
}

TEST_CASE("torque feedback grades amplitude and respects per-finger caps") {
  enc::TorqueMapping map;
  map.fingers = {{0, 2.0, 5.0, 100.0, 200.0, 50.0},
                 {3, 1.0, 10.0, 100.0, 200.0, 50.0}};

  const StimPattern zero = enc::torque_feedback_encode({0.0, 0.0}, map);
  REQUIRE(zero.find(0) != nullptr);
  CHECK(zero.find(0)->amplitude_ma == 0.0);
  CHECK(zero.find(3)->amplitude_ma == 0.0);

  double prev = -1.0;
  for (double tq = 0.0; tq <= 4.0; tq += 0.1) {
    const StimPattern p = enc::torque_feedback_encode({tq, 0.0}, map);
    const double amp = p.find(0)->amplitude_ma;
    CHECK(amp >= prev);    // monotone in torque magnitude
    CHECK(amp <= 5.0);     // clipped at configured max
    prev = amp;
  }
  CHECK(enc::torque_feedback_encode({10.0, 0.0}, map).find(0)->amplitude_ma == 5.0);
  // Magnitude, not sign, drives the sensation.
  CHECK(enc::torque_feedback_encode({-1.0, 0.0}, map).find(0)->amplitude_ma == 2.0);

  CHECK_THROWS_AS(enc::torque_feedback_encode({1.0}, map), DimensionError);
}

TEST_CASE("piecewise intensity curve interpolates and clamps") {
  const std::vector<std::pair<double, double>> knots = {{0, 0}, {1, 2}, {3, 3}};
  CHECK(enc::intensity_piecewise(0.0, knots) == 0.0);
  CHECK(enc::intensity_piecewise(0.5, knots) == 1.0);
  CHECK(enc::intensity_piecewise(1.0, knots) == 2.0);
  CHECK(enc::intensity_piecewise(2.0, knots) == 2.5);
  CHECK(enc::intensity_piecewise(-5.0, knots) == 0.0);  // clamp low
  CHECK(enc::intensity_piecewise(9.0, knots) == 3.0);   // clamp high

  // Continuity: no jump larger than the steepest segment allows.
  const double steepest = 2.0;  // (0,0)->(1,2)
  for (double x = -1.0; x < 4.0; x += 0.01)
    CHECK(std::fabs(enc::intensity_piecewise(x + 1e-6, knots) -
                    enc::intensity_piecewise(x, knots)) <= steepest * 1e-6 + 1e-12);

  CHECK(enc::intensity_piecewise(7.0, {{2.0, 1.5}}) == 1.5);  // single knot
  CHECK_THROWS_AS(enc::intensity_piecewise(0.0, {}), std::invalid_argument);
  CHECK_THROWS_AS(enc::intensity_piecewise(0.0, {{1, 0}, {1, 2}}),
                  std::invalid_argument);
}

TEST_CASE("percent activation sums overlapping channels then clips") {
  PulseTrain base;
  base.frequency_hz = 50.0;
  base.pulse_width_us = 300.0;
  base.duration_ms = 100.0;

  StimPattern grasp;  // drives channels 0 and 1
  {
    PulseTrain t = base;
    t.amplitude_ma = 4.0;
    grasp.channels.push_back({0, t});
    t.amplitude_ma = 6.0;
    grasp.channels.push_back({1, t});
  }
  StimPattern pinch;  // drives channels 0 and 2
  {
    PulseTrain t = base;
    t.amplitude_ma = 2.0;
    pinch.channels.push_back({0, t});
    t.amplitude_ma = 8.0;
    pinch.channels.push_back({2, t});
  }
  const std::vector<StimPattern> lib = {grasp, pinch};
  const Vec caps = {5.0, 10.0, 10.0};

  // Direct summation oracle at 50/50 activation.
  const StimPattern half = enc::percent_activation_encode({0.5, 0.5}, lib, caps);
  CHECK(half.find(0)->amplitude_ma == 0.5 * 4.0 + 0.5 * 2.0);
  CHECK(half.find(1)->amplitude_ma == 0.5 * 6.0);
  CHECK(half.find(2)->amplitude_ma == 0.5 * 8.0);

  // Full co-activation exceeds channel 0's cap; clipping happens after the sum.
  const StimPattern full = enc::percent_activation_encode({1.0, 1.0}, lib, caps);
  CHECK(full.find(0)->amplitude_ma == 5.0);
  CHECK(full.find(1)->amplitude_ma == 6.0);

  const StimPattern off = enc::percent_activation_encode({0.0, 0.0}, lib, caps);
  for (const auto& c : off.channels) CHECK(c.train.amplitude_ma == 0.0);

  CHECK_THROWS_AS(enc::percent_activation_encode({0.5}, lib, caps),
                  DimensionError);
  CHECK_THROWS_AS(enc::percent_activation_encode({-0.1, 0.5}, lib, caps),
                  std::invalid_argument);
  CHECK_THROWS_AS(enc::percent_activation_encode({0.5, 0.5}, lib, {5.0}),
                  DimensionError);  // channel 1 has no cap
}

TEST_CASE("gait events select the matching spinal hotspot") {
  enc::SpinalConfig cfg;
  const StimPattern swing = enc::spinal_event_encode(GaitEvent::foot_off, cfg);
  const StimPattern stance = enc::spinal_event_encode(GaitEvent::foot_strike, cfg);

  for (int ch : cfg.flexion_channels) {
    CHECK(swing.find(ch) != nullptr);
    CHECK(stance.find(ch) == nullptr);
  }
  for (int ch : cfg.extension_channels) {
    CHECK(stance.find(ch) != nullptr);
    CHECK(swing.find(ch) == nullptr);
  }
  CHECK(swing.channels.front().train.duration_ms == cfg.burst_ms);
}

TEST_CASE("interleave gate phases are exhaustive and mutually exclusive") {
  const enc::InterleaveSchedule s;  // 50 record / 50 stim, 7.5 blank

  CHECK(enc::interleave_gate(0.0, s) == enc::GatePhase::blanked);
  CHECK(enc::interleave_gate(7.4, s) == enc::GatePhase::blanked);
  CHECK(enc::interleave_gate(7.5, s) == enc::GatePhase::record);
  CHECK(enc::interleave_gate(49.9, s) == enc::GatePhase::record);
  CHECK(enc::interleave_gate(50.0, s) == enc::GatePhase::stimulate);
  CHECK(enc::interleave_gate(99.9, s) == enc::GatePhase::stimulate);
  CHECK(enc::interleave_gate(100.0, s) == enc::GatePhase::blanked);  // wraps

  // Sweep several cycles: the phase computed from first principles must match,
  // so no instant can be both recording-valid and stimulating.
  for (double t = 0.0; t < 400.0; t += 0.125) {
    const double u = std::fmod(t, 100.0);
    const auto expect = (u < 7.5)    ? enc::GatePhase::blanked
                        : (u < 50.0) ? enc::GatePhase::record
                                     : enc::GatePhase::stimulate;
    CHECK(enc::interleave_gate(t, s) == expect);
  }

  enc::InterleaveSchedule bad;
  bad.blank_ms = 60.0;  // blank cannot consume the whole record window
  CHECK_THROWS_AS(enc::interleave_gate(0.0, bad), std::invalid_argument);
  CHECK_THROWS_AS(enc::interleave_gate(-1.0, s), std::invalid_argument);
}

TEST_CASE("pulse commands defer to the next stimulation window") {
  const enc::InterleaveSchedule s;
  CHECK(enc::defer_to_stim_window(55.0, s) == 55.0);   // already in stim
  CHECK(enc::defer_to_stim_window(0.0, s) == 50.0);
  CHECK(enc::defer_to_stim_window(10.0, s) == 50.0);
  CHECK(enc::defer_to_stim_window(100.0, s) == 150.0);
  CHECK(enc::defer_to_stim_window(249.0, s) == 250.0);
  for (double t = 0.0; t < 300.0; t += 1.0)
    CHECK(enc::interleave_gate(enc::defer_to_stim_window(t, s), s) ==
          enc::GatePhase::stimulate);
}

TEST_CASE("pulse expansion honors rate, duration, and 50% packet duty") {
  PulseTrain cont;
  cont.frequency_hz = 100.0;
  cont.amplitude_ma = 1.0;
  cont.pulse_width_us = 100.0;
  cont.duration_ms = 50.0;
  const auto times = enc::pulse_times(cont);
  REQUIRE(times.size() == 5);
  for (std::size_t i = 0; i < times.size(); ++i) CHECK(times[i] == 10.0 * i);

  PulseTrain packeted = cont;
  packeted.frequency_hz = 200.0;
  packeted.packet_rate_hz = 10.0;  // 100 ms packets, ON for 50 ms
  packeted.duration_ms = 1000.0;
  const auto pt = enc::pulse_times(packeted, 5.0);
  CHECK(pt.size() == 100);  // 10 packets x (50 ms ON at 200 Hz = 10 pulses)
  for (double t : pt) {
    CHECK(t >= 5.0);
    CHECK(t < 1005.0);
    CHECK(std::fmod(t - 5.0, 100.0) < 50.0);  // never in the OFF half
  }

  PulseTrain bad = cont;
  bad.amplitude_ma = -1.0;
  CHECK_THROWS_AS(enc::pulse_times(bad), std::invalid_argument);
}

TEST_CASE("pulse train and pattern validation reject malformed commands") {
  PulseTrain t;
  t.frequency_hz = 300.0;
  t.pulse_width_us = 2000.0;
  t.biphasic = true;  // 2 x 2000 us does not fit a 3333 us period
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);
  t.biphasic = false;
  CHECK_NOTHROW(t.validate());

  StimPattern dup;
  dup.channels.push_back({1, PulseTrain{}});
  dup.channels.push_back({1, PulseTrain{}});
  CHECK_THROWS_AS(dup.validate(), std::invalid_argument);

  StimPattern neg;
  neg.channels.push_back({-2, PulseTrain{}});
  CHECK_THROWS_AS(neg.validate(), std::invalid_argument);
}

}  // TEST_SUITE
