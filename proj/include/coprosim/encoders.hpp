#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "coprosim/types.hpp"

/// Stimulation encoders: map decoded intents, sensor values, and events onto
/// pulse-train commands. All outputs are plain data (PulseTrain/StimPattern);
/// nothing here talks to a plant or clock except through its arguments.
namespace coprosim::encoders {

/// Rate-proportional functional electrical stimulation law. Flexor current
/// engages above `flexor_threshold_hz`, extensor current below
/// `extensor_threshold_hz`, both clipped at `max_current_ma`.
struct FesParams {
  double flexor_gain_ma_per_hz = 0.8;
  double flexor_threshold_hz = 24.0;
  double extensor_gain_ma_per_hz = 0.6;
  double extensor_threshold_hz = 12.0;
  double max_current_ma = 10.0;
};

/// min(max(0, g_f * (rate - r_f)), max) in mA.
double fes_flexor(double rate_hz, const FesParams& p = {});

/// min(max(0, g_e * (r_e - rate)), max) in mA.
double fes_extensor(double rate_hz, const FesParams& p = {});

/// Waveform parameters shared by the two tactile cue trains.
struct TactileConfig {
  double amplitude_ma = 2.0;
  double pulse_width_us = 200.0;
  double duration_ms = 500.0;
};

/// Discriminable cortical cue: rewarded objects get a 200 Hz train packeted
/// at 10 Hz; unrewarded objects a 400 Hz train packeted at 5 Hz.
PulseTrain tactile_encode(bool rewarded, const TactileConfig& cfg = {});

struct HoldConfig {
  double amplitude_ma = 2.5;
  double pulse_width_us = 200.0;
  double window_ms = 1000.0;          // half-open [0, window_ms)
  std::vector<int> channels = {0, 1, 2};
};

/// Grasp-hold reinforcement: while a grasp is detected and `elapsed_ms` lies
/// in [0, window_ms), emits a 300 Hz biphasic pattern on the configured
/// electrodes lasting the remainder of the window; otherwise nullopt.
std::optional<StimPattern> hold_encode(bool grasp_detected, double elapsed_ms,
                                       const HoldConfig& cfg = {});

/// Per-finger mapping from measured torque to feedback amplitude.
struct TorqueMapping {
  struct Finger {
    int channel = 0;
    double gain_ma_per_unit = 1.0;
    double max_amplitude_ma = 10.0;
    double frequency_hz = 100.0;
    double pulse_width_us = 200.0;
    double duration_ms = 50.0;
  };
  std::vector<Finger> fingers;
};

/// Graded contact feedback: amplitude = min(gain * |torque|, max) per finger.
/// `torques` must have one entry per configured finger.
StimPattern torque_feedback_encode(const Vec& torques, const TorqueMapping& map);

/// Piecewise-linear calibration curve through `knots` (sorted, strictly
/// increasing x); clamps outside the knot range. Throws on empty or
/// non-monotone knots.
double intensity_piecewise(double x,
                           const std::vector<std::pair<double, double>>& knots);

/// Blends library patterns channelwise: each output channel's amplitude is
/// the activation-weighted sum over library entries, then clipped at
/// `channel_max[channel]`. Waveform parameters come from the first library
/// pattern driving the channel. Activations must be >= 0, one per pattern.
StimPattern percent_activation_encode(const Vec& activations,
                                      const std::vector<StimPattern>& library,
                                      const Vec& channel_max);

/// Hotspot electrode groups for gait-event stimulation.
struct SpinalConfig {
  double amplitude_ma = 3.0;
  double frequency_hz = 60.0;
  double pulse_width_us = 300.0;
  double burst_ms = 300.0;
  std::vector<int> flexion_channels = {0, 1};
  std::vector<int> extension_channels = {2, 3};
};

/// foot_off triggers the flexion hotspot (swing), foot_strike the extension
/// hotspot (stance).
StimPattern spinal_event_encode(GaitEvent event, const SpinalConfig& cfg = {});

/// Alternating record/stimulate windows. Each cycle is
/// [blanked : blank_ms][record : record_ms - blank_ms][stimulate : stim_ms];
/// the blank interval absorbs the stimulation artifact from the previous
/// cycle, so recorded frames there must be discarded.
struct InterleaveSchedule {
  double record_ms = 50.0;
  double stim_ms = 50.0;
  double blank_ms = 7.5;
  void validate() const;  // throws std::invalid_argument
};

enum class GatePhase { record, blanked, stimulate };

/// Phase of the schedule at time `t_ms` (>= 0).
GatePhase interleave_gate(double t_ms, const InterleaveSchedule& s = {});

/// Earliest time >= t_ms that lies in a stimulation window; pulse commands
/// raised during record windows are deferred to this time.
double defer_to_stim_window(double t_ms, const InterleaveSchedule& s = {});

/// Absolute emission times (ms, offset t0_ms) of the individual pulses in a
/// train, honoring the 50%-duty packet gating.
std::vector<double> pulse_times(const PulseTrain& train, double t0_ms = 0.0);

}  // namespace coprosim::encoders
