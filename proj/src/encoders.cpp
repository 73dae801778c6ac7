#include "coprosim/encoders.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace coprosim::encoders {

double fes_flexor(double rate_hz, const FesParams& p) {
  const double ma = p.flexor_gain_ma_per_hz * (rate_hz - p.flexor_threshold_hz);
  return std::min(std::max(0.0, ma), p.max_current_ma);
}

double fes_extensor(double rate_hz, const FesParams& p) {
  const double ma = p.extensor_gain_ma_per_hz * (p.extensor_threshold_hz - rate_hz);
  return std::min(std::max(0.0, ma), p.max_current_ma);
}

PulseTrain tactile_encode(bool rewarded, const TactileConfig& cfg) {
  PulseTrain t;
  t.frequency_hz = rewarded ? 200.0 : 400.0;
  t.packet_rate_hz = rewarded ? 10.0 : 5.0;
  t.amplitude_ma = cfg.amplitude_ma;
  t.pulse_width_us = cfg.pulse_width_us;
  t.duration_ms = cfg.duration_ms;
  t.biphasic = false;
  t.validate();
  return t;
}

std::optional<StimPattern> hold_encode(bool grasp_detected, double elapsed_ms,
                                       const HoldConfig& cfg) {
  if (!grasp_detected) return std::nullopt;
  if (!(elapsed_ms >= 0.0 && elapsed_ms < cfg.window_ms)) return std::nullopt;
  PulseTrain t;
  t.frequency_hz = 300.0;
  t.amplitude_ma = cfg.amplitude_ma;
  t.pulse_width_us = cfg.pulse_width_us;
  t.duration_ms = cfg.window_ms - elapsed_ms;
  t.biphasic = true;
  StimPattern p;
  for (int ch : cfg.channels) p.channels.push_back({ch, t});
  p.validate();
  return p;
}

StimPattern torque_feedback_encode(const Vec& torques, const TorqueMapping& map) {
  if (torques.size() != map.fingers.size())
    throw DimensionError("torque_feedback_encode: one torque per finger required");
  StimPattern p;
  for (std::size_t i = 0; i < torques.size(); ++i) {
    const auto& f = map.fingers[i];
    PulseTrain t;
    t.frequency_hz = f.frequency_hz;
    t.pulse_width_us = f.pulse_width_us;
    t.duration_ms = f.duration_ms;
    t.amplitude_ma =
        std::min(f.gain_ma_per_unit * std::fabs(torques[i]), f.max_amplitude_ma);
    p.channels.push_back({f.channel, t});
  }
  p.validate();
  return p;
}

double intensity_piecewise(double x,
                           const std::vector<std::pair<double, double>>& knots) {
  if (knots.empty())
    throw std::invalid_argument("intensity_piecewise: no knots");
  for (std::size_t i = 1; i < knots.size(); ++i)
    if (!(knots[i - 1].first < knots[i].first))
      throw std::invalid_argument(
          "intensity_piecewise: knot x values must be strictly increasing");
  if (x <= knots.front().first) return knots.front().second;
  if (x >= knots.back().first) return knots.back().second;
  // Find the segment with x in (x_i, x_{i+1}].
  std::size_t hi = 1;
  while (knots[hi].first < x) ++hi;
  const auto& [x0, y0] = knots[hi - 1];
  const auto& [x1, y1] = knots[hi];
  const double w = (x - x0) / (x1 - x0);
  return y0 + w * (y1 - y0);
}

StimPattern percent_activation_encode(const Vec& activations,
                                      const std::vector<StimPattern>& library,
                                      const Vec& channel_max) {
  if (activations.size() != library.size())
    throw DimensionError(
        "percent_activation_encode: one activation per library pattern required");
  for (double a : activations)
    if (!(a >= 0.0))
      throw std::invalid_argument(
          "percent_activation_encode: activations must be >= 0");

  StimPattern out;
  auto slot = [&out](int channel) -> StimPattern::Channel* {
    for (auto& c : out.channels)
      if (c.channel == channel) return &c;
    return nullptr;
  };

  for (std::size_t i = 0; i < library.size(); ++i) {
    for (const auto& c : library[i].channels) {
      const double add = activations[i] * c.train.amplitude_ma;
      if (StimPattern::Channel* existing = slot(c.channel)) {
        existing->train.amplitude_ma += add;
      } else {
        StimPattern::Channel nc = c;  // waveform params from first pattern seen
        nc.train.amplitude_ma = add;
        out.channels.push_back(nc);
      }
    }
  }
  // Clip after summation so co-activated patterns cannot exceed a channel's
  // safe amplitude.
  for (auto& c : out.channels) {
    if (static_cast<std::size_t>(c.channel) >= channel_max.size())
      throw DimensionError("percent_activation_encode: channel " +
                           std::to_string(c.channel) + " has no amplitude cap");
    c.train.amplitude_ma =
        std::min(c.train.amplitude_ma, channel_max[c.channel]);
  }
  std::sort(out.channels.begin(), out.channels.end(),
            [](const auto& a, const auto& b) { return a.channel < b.channel; });
  out.validate();
  return out;
}

StimPattern spinal_event_encode(GaitEvent event, const SpinalConfig& cfg) {
  PulseTrain t;
  t.frequency_hz = cfg.frequency_hz;
  t.amplitude_ma = cfg.amplitude_ma;
  t.pulse_width_us = cfg.pulse_width_us;
  t.duration_ms = cfg.burst_ms;
  const auto& hotspot = (event == GaitEvent::foot_off) ? cfg.flexion_channels
                                                       : cfg.extension_channels;
  StimPattern p;
  for (int ch : hotspot) p.channels.push_back({ch, t});
  p.validate();
  return p;
}

void InterleaveSchedule::validate() const {
  if (!(record_ms > 0.0) || !(stim_ms > 0.0))
    throw std::invalid_argument("InterleaveSchedule: windows must be positive");
  if (!(blank_ms >= 0.0) || !(blank_ms < record_ms))
    throw std::invalid_argument(
        "InterleaveSchedule: blank must satisfy 0 <= blank < record window");
}

GatePhase interleave_gate(double t_ms, const InterleaveSchedule& s) {
  s.validate();
  if (!(t_ms >= 0.0))
    throw std::invalid_argument("interleave_gate: time must be >= 0");
  const double period = s.record_ms + s.stim_ms;
  double u = std::fmod(t_ms, period);
  if (u < s.blank_ms) return GatePhase::blanked;
  if (u < s.record_ms) return GatePhase::record;
  return GatePhase::stimulate;
}

double defer_to_stim_window(double t_ms, const InterleaveSchedule& s) {
  if (interleave_gate(t_ms, s) == GatePhase::stimulate) return t_ms;
  const double period = s.record_ms + s.stim_ms;
  const double cycle = std::floor(t_ms / period);
  return cycle * period + s.record_ms;
}

std::vector<double> pulse_times(const PulseTrain& train, double t0_ms) {
  train.validate();
  std::vector<double> times;
  if (train.frequency_hz <= 0.0 || train.duration_ms <= 0.0) return times;
  const double step_ms = 1000.0 / train.frequency_hz;
  const bool gated = train.packet_rate_hz > 0.0;
  const double packet_ms = gated ? 1000.0 / train.packet_rate_hz : 0.0;
  for (double t = 0.0; t < train.duration_ms; t += step_ms) {
    if (gated) {
      // ON during the first half of each packet period (50% duty).
      const double phase = std::fmod(t, packet_ms);
      if (phase >= 0.5 * packet_ms) continue;
    }
    times.push_back(t0_ms + t);
  }
  return times;
}

}  // namespace coprosim::encoders
