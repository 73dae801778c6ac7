#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "coprosim/linalg.hpp"
#include "coprosim/types.hpp"

/// Spike-transformation models for the memory-bridge pipeline: each output
/// neuron is a probit-Volterra unit — a first-order kernel sum over input
/// spike histories plus a spike-triggered feedback after-potential, pushed
/// through a noisy threshold. A bank of these (one per output channel) maps
/// recorded input trains to predicted output trains, which then turn into
/// stimulation commands.
namespace coprosim::mimo {

/// One output neuron. The synaptic drive is
///   u(t) = sum_c sum_{tau=1..M_k} k_c(tau) x_c(t - tau)
///   a(t) = sum_{tau=1..M_h} h(tau) y(t - tau)
/// and the unit spikes when u + a + eps >= theta with eps ~ N(0, sigma).
struct MisoModel {
  std::vector<Vec> k;    // one feedforward kernel per input channel
  Vec h;                 // feedback (after-potential) kernel
  double theta = 1.0;    // spiking threshold
  double sigma = 1.0;    // threshold noise std; fits pin it at 1
  double bin_ms = 2.0;   // bin width the kernels are expressed in
  void validate() const;
};

struct Potential {
  double u;  // feedforward drive
  double a;  // feedback after-potential
};

/// Drive terms for the bin following the supplied histories. The last bin of
/// each history is lag 1; histories may be longer than the kernel memory
/// (only the trailing bins are read) but not shorter.
Potential miso_potential(const MisoModel& m, const SpikeTrain& x_history,
                         const SpikeTrain& y_history);

/// P(spike) = Phi((u + a - theta) / sigma).
double miso_spike_prob(const MisoModel& m, double u, double a);

/// Runs the unit over an input train bin by bin: draw the threshold noise,
/// spike iff u + a + eps >= theta, and feed emitted spikes back into the
/// after-potential history. Bins before the start count as silence.
/// Deterministic for a fixed seed.
SpikeTrain miso_simulate(const MisoModel& m, const SpikeTrain& x,
                         std::uint64_t seed);

/// Probit log-likelihood sum_t [y log Phi(s) + (1-y) log Phi(-s)] with
/// s_t = phi_t . beta, and its gradient in beta. Exposed so the fit's
/// gradient can be checked against finite differences.
struct ProbitEval {
  double loglik;
  Vec grad;
};
ProbitEval probit_loglik(const Mat& phi, const std::vector<std::uint8_t>& y,
                         const Vec& beta);

struct MimoFitConfig {
  int max_iters = 100;
  double tol = 1e-6;  // convergence: gradient infinity-norm below this
};

/// Fits one MisoModel per output channel by maximizing the probit
/// log-likelihood over (kernels, feedback, threshold) with sigma fixed at 1
/// for identifiability. Ascent steps are Newton directions with a ridge
/// fallback and backtracking, so the log-likelihood never decreases across
/// accepted iterations. An output channel that never (or always) spikes
/// carries no threshold information and fails with a DataError naming the
/// channel.
std::vector<MisoModel> mimo_fit(const SpikeTrain& x, const SpikeTrain& y,
                                std::size_t m_k, std::size_t m_h,
                                const MimoFitConfig& cfg = {});

/// How predicted output spikes become stimulation: each predicted channel
/// maps to an electrode and every spike emits one copy of the (biphasic)
/// pulse template, stamped at its bin center.
struct MimoStimConfig {
  std::map<std::size_t, int> channel_map;  // predicted channel -> electrode
  PulseTrain pulse;                        // template for every command
  MimoStimConfig();                        // biphasic single-pulse default
};

/// One command per predicted spike, time-ordered (bin-major). A spike on a
/// channel with no electrode mapping throws std::out_of_range.
std::vector<StimCommand> mimo_stim_encode(const SpikeTrain& predicted,
                                          const MimoStimConfig& cfg);

}  // namespace coprosim::mimo
