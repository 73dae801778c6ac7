#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coprosim/harness/artifacts.hpp"
#include "coprosim/types.hpp"

/// Scenario orchestration: each scenario wires decoders, encoders, plants and
/// co-processor training into one closed loop, runs it for a configured
/// number of sessions, and leaves a hashed artifact directory behind. All
/// randomness flows from the config seed, so a rerun reproduces every byte.
namespace coprosim::harness {

/// Linear motor plant knobs (prosthetic_control, limb_reanimation,
/// coadaptation). The dynamics matrix is `gain` times the identity; the
/// input matrix is drawn from the run seed.
struct PlantSpec {
  std::size_t state_dim = 2;
  std::size_t input_channels = 4;
  double gain = 0.85;
  double process_noise = 0.005;
  Vec lesion_mask;  // empty = every pathway intact
  void validate() const;  // throws ConfigError with the failing field
};

/// Synthetic recording + decoder knobs (prosthetic_control,
/// limb_reanimation): how many neural channels the simulated brain exposes
/// and how noisy they are.
struct DecoderSpec {
  std::size_t neural_channels = 6;
  double noise_std = 0.3;
  int calibration_samples = 400;
  void validate() const;
};

/// Stimulation-side constants (limb_reanimation FES law,
/// seizure_suppression pulse train).
struct EncoderSpec {
  double fes_flexor_gain_ma_per_hz = 0.8;
  double fes_flexor_threshold_hz = 24.0;
  double fes_extensor_gain_ma_per_hz = 0.6;
  double fes_extensor_threshold_hz = 12.0;
  double fes_max_current_ma = 10.0;
  double suppression_frequency_hz = 130.0;
  double suppression_amplitude_ma = 3.0;
  void validate() const;
};

/// Co-processor network and training knobs (seizure_suppression,
/// coadaptation).
struct CoprocSpec {
  std::size_t hidden = 0;  // 0 = single linear layer
  int epochs = 150;
  double learning_rate = 0.2;
  int batch_size = 32;
  int en_refresh_every = 1;
  int settle_steps = 30;
  double collect_noise_std = 0.2;
  int perturb_session = 0;  // 0 = the plant never changes
  double perturb_gain = 1.1;
  void validate() const;
};

/// Conditioning experiment knobs (plasticity_induction).
struct ConditioningSpec {
  double delay_ms = 3.0;
  double duration_ms = 6000.0;
  std::size_t neurons = 16;
  void validate() const;
};

/// Spike-bridge knobs (memory_bridge): synthetic two-region recording,
/// model fit, one-step-ahead evaluation.
struct BridgeSpec {
  std::size_t inputs = 2;
  std::size_t outputs = 2;
  std::size_t kernel_bins = 8;
  std::size_t feedback_bins = 4;
  std::size_t train_bins = 6000;
  std::size_t test_bins = 1500;
  double input_rate = 0.15;  // per-bin input spike probability
  void validate() const;
};

struct ScenarioConfig {
  std::string scenario;  // one of scenario_ids()
  std::uint64_t seed = 0;
  int sessions = 1;
  /// Where the artifact lands. Optional in config files (the CLI --out flag
  /// can supply it); run_scenario requires it to be resolved by then.
  std::string output_dir;
  /// "scalar" or "avx2" pins the kernel backend for the run; empty keeps
  /// whatever is active. Snapshots always record the backend actually used,
  /// which is how `eval` reruns on the same arithmetic.
  std::string kernel_backend;
  PlantSpec plant;
  DecoderSpec decoder;
  EncoderSpec encoder;
  CoprocSpec coproc;
  ConditioningSpec conditioning;
  BridgeSpec bridge;
  void validate() const;
};

/// The six scenario ids, in default-suite order.
const std::vector<std::string>& scenario_ids();

/// Parses config JSON. Every diagnostic is a ConfigError naming the failing
/// field by path (e.g. "plant.gain"); unknown keys are rejected the same way
/// so typos cannot silently fall back to defaults.
ScenarioConfig parse_scenario_config(const std::string& json_text);
ScenarioConfig load_scenario_config(const std::string& path);

/// Canonical snapshot of a parsed config: every field materialized, keys
/// sorted, output directory omitted (it locates the artifact, it is not part
/// of the experiment). parse(snapshot(cfg)) reproduces cfg up to output_dir.
std::string scenario_config_to_json(const ScenarioConfig& cfg);

/// Runs one scenario end to end and writes its artifact directory:
/// config_snapshot.json, metrics.csv (one row per session), scenario
/// specific weight/log files, and manifest.json with the SHA-256 of every
/// emitted file. Deterministic per config+seed. Errors from constituent
/// operations propagate wrapped with the scenario id.
RunArtifact run_scenario(const ScenarioConfig& cfg);

}  // namespace coprosim::harness
