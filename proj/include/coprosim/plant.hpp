#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "coprosim/linalg.hpp"
#include "coprosim/rng.hpp"
#include "coprosim/types.hpp"

/// Simulated biology: the "true" systems the co-processor acts on. Everything
/// here is value-semantic so experiments can copy a plant, probe the copy,
/// and leave the original untouched.
namespace coprosim::plant {

/// Linear-Gaussian limb/cursor model
///   state <- dynamics * state + input * (lesion_mask .* activation) + noise
/// with noise ~ N(0, process_noise^2 I) drawn from the plant's own generator.
struct MotorPlant {
  Mat dynamics;              // n x n
  Mat input;                 // n x m
  Vec lesion_mask;           // m entries in [0, 1]; 1 = intact pathway
  double process_noise = 0.0;
  double dt_ms = 10.0;       // bookkeeping only; dynamics are already discrete
  Vec state;                 // n
  Rng rng{0};

  /// Throws on shape mismatches, lesion gains outside [0, 1], negative noise,
  /// or an unstable dynamics matrix (spectral radius estimate >= 1).
  void validate() const;
};

/// Advances the plant one step under `activation` (length m) and returns the
/// new state. The only mutation points are `state` and the noise stream.
KinematicState plant_step(MotorPlant& p, const Vec& activation);

/// Runs a copy of the plant from the zero state under a constant activation
/// and returns the final state; the caller's plant is not advanced. Used for
/// trial-level probes where each trial starts from rest.
KinematicState settle_from_rest(const MotorPlant& p, const Vec& activation,
                                int steps);

/// Exponential nearest-spike pair rule.
struct StdpParams {
  double a_plus = 0.01;    // potentiation step
  double a_minus = 0.012;  // depression step
  double tau_plus_ms = 20.0;
  double tau_minus_ms = 20.0;
  double w_max = 1.0;
};

/// Leaky integrate-and-fire network with delta synapses and pair-based STDP.
///
/// Membrane update per step (dt in ms):
///   v <- v * (1 - dt/tau_m) + dt * I_ext + W^T spikes_prev
/// a neuron fires when v >= threshold and resets to 0. `weights(i, j)` is the
/// synapse from neuron i to neuron j; the diagonal stays zero.
struct SpikingNetwork {
  Mat weights;                    // n x n, w(i,j): i -> j
  double tau_m_ms = 20.0;
  double threshold = 1.0;
  StdpParams stdp;
  bool plastic = true;            // STDP on/off switch

  Vec potential;                  // n
  std::vector<double> last_spike_ms;   // -inf until a neuron first fires
  std::vector<std::uint8_t> spiked;    // previous step's spikes (synaptic input)
  double now_ms = 0.0;

  /// Named electrode/recording site -> member neuron indices.
  std::map<std::string, std::vector<std::size_t>> sites;

  /// Fixed 2-D behavioral readout (e.g. flexion/extension torque axes);
  /// rows are axes, columns neurons.
  Mat readout;

  Rng rng{0};

  static SpikingNetwork make(std::size_t n, std::uint64_t seed);
  void validate() const;
  std::size_t size() const { return potential.size(); }

  /// Adds `amplitude` to every neuron of `site` (an intracortical pulse);
  /// throws std::out_of_range for unknown sites.
  void stimulate(const std::string& site, double amplitude);
};

/// Advances the network by dt under external current `input` (length n) and
/// returns the spike indicators for this step. Applies STDP for every spike
/// pair formed with the most recent spike of each partner neuron (nearest
/// pre/post only); simultaneous spikes (delta t == 0) leave weights unchanged.
std::vector<std::uint8_t> spiking_step(SpikingNetwork& net, const Vec& input,
                                       double dt_ms);

/// One pairwise STDP update on the synapse pre -> post given the two spike
/// times; returns the applied weight delta (0 when delta t == 0 or the
/// synapse is the diagonal). Potentiates for post-after-pre by
/// a_plus * exp(-dt/tau_plus), depresses for pre-after-post by
/// a_minus * exp(dt/tau_minus); the weight is clamped to [0, w_max].
double stdp_update(SpikingNetwork& net, double pre_spike_ms,
                   double post_spike_ms, std::size_t pre, std::size_t post);

/// Direction and magnitude of the behavioral effect evoked by stimulating a
/// site: mean over trials of readout * (downstream activation with the pulse
/// minus without it), with the site's own neurons excluded from the
/// difference. Paired trials share initial conditions, so a site with no
/// outgoing influence maps to exactly (0, 0).
struct OutputEffect {
  std::string site;
  std::array<double, 2> effect{0.0, 0.0};
  int trials = 0;
};

struct ProbeConfig {
  double amplitude = 1.5;   // stimulation kick, in threshold units
  int steps = 60;
  double dt_ms = 1.0;
  int trials = 32;
};

OutputEffect output_effect_map(const SpikingNetwork& net, const std::string& site,
                               const ProbeConfig& cfg = {});

}  // namespace coprosim::plant
