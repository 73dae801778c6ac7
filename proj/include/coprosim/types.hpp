#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "coprosim/errors.hpp"

namespace coprosim {

using Vec = std::vector<double>;

/// One timestep of multichannel neural measurement (firing rates, band
/// powers, or binned spike counts depending on the pipeline).
using NeuralFrame = Vec;

/// Kalman state (e.g. cursor position/velocity stacked per axis).
using KinematicState = Vec;

/// Gait events recognized by the locomotion pipeline.
enum class GaitEvent { foot_strike = 0, foot_off = 1 };

/// One channel's stimulation pulse-train command.
///
/// `packet_rate_hz == 0` means a continuous train; a positive packet rate
/// gates the pulses ON for the first half of each packet period (50% duty).
struct PulseTrain {
  double frequency_hz = 0.0;
  double amplitude_ma = 0.0;
  double pulse_width_us = 0.0;
  double packet_rate_hz = 0.0;
  double duration_ms = 0.0;
  bool biphasic = false;

  /// Throws std::invalid_argument on out-of-range fields (negative rates,
  /// amplitudes, widths or durations; packet rate above pulse rate).
  void validate() const;
};

/// Multichannel stimulation command: one pulse train per electrode channel.
struct StimPattern {
  struct Channel {
    int channel = 0;
    PulseTrain train;
  };
  std::vector<Channel> channels;

  /// Validates every train and rejects duplicate channel ids.
  void validate() const;
  /// Train for `channel`, or nullptr when the pattern does not drive it.
  const PulseTrain* find(int channel) const;
};

/// A pulse train scheduled at an absolute time; the unit written to run logs
/// and produced by event-driven encoders.
struct StimCommand {
  double t_ms = 0.0;
  int channel = 0;
  PulseTrain pulse;
};

/// Multichannel binned spike data (0/1 per bin). channels[c][t] is bin t of
/// channel c; all channels share the bin width and length.
struct SpikeTrain {
  std::vector<std::vector<std::uint8_t>> channels;
  double bin_ms = 2.0;

  std::size_t bins() const { return channels.empty() ? 0 : channels[0].size(); }
  /// Throws std::invalid_argument on ragged channels, non-binary entries, or
  /// a non-positive bin width.
  void validate() const;
};

}  // namespace coprosim
