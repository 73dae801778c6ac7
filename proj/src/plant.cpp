#include "coprosim/plant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "coprosim/kernels.hpp"

namespace coprosim::plant {

void MotorPlant::validate() const {
  if (dynamics.rows != dynamics.cols)
    throw std::invalid_argument("MotorPlant: dynamics must be square");
  if (input.rows != dynamics.rows)
    throw std::invalid_argument("MotorPlant: input rows must match state dim");
  if (lesion_mask.size() != input.cols)
    throw std::invalid_argument("MotorPlant: one lesion gain per input channel");
  if (state.size() != dynamics.rows)
    throw std::invalid_argument("MotorPlant: state dim mismatch");
  for (double g : lesion_mask)
    if (!(g >= 0.0 && g <= 1.0))
      throw std::invalid_argument("MotorPlant: lesion gains must lie in [0, 1]");
  if (!(process_noise >= 0.0))
    throw std::invalid_argument("MotorPlant: negative process noise");
  if (!(dt_ms > 0.0)) throw std::invalid_argument("MotorPlant: dt must be > 0");
  const double rho = linalg::spectral_radius_estimate(dynamics);
  if (!(rho < 1.0))
    throw std::invalid_argument(
        "MotorPlant: dynamics unstable (spectral radius estimate " +
        std::to_string(rho) + " >= 1)");
}

KinematicState plant_step(MotorPlant& p, const Vec& activation) {
  if (activation.size() != p.input.cols)
    throw DimensionError("plant_step: activation length != input channels");
  Vec gated(activation.size());
  for (std::size_t i = 0; i < gated.size(); ++i)
    gated[i] = p.lesion_mask[i] * activation[i];

  Vec next = linalg::matvec(p.dynamics, p.state);
  const Vec drive = linalg::matvec(p.input, gated);
  kernels::axpy(1.0, drive.data(), next.data(), next.size());
  if (p.process_noise > 0.0)
    for (auto& x : next) x += p.rng.normal(0.0, p.process_noise);
  p.state = std::move(next);
  return p.state;
}

KinematicState settle_from_rest(const MotorPlant& p, const Vec& activation,
                                int steps) {
  MotorPlant probe = p;
  std::fill(probe.state.begin(), probe.state.end(), 0.0);
  for (int k = 0; k < steps; ++k) plant_step(probe, activation);
  return probe.state;
}

SpikingNetwork SpikingNetwork::make(std::size_t n, std::uint64_t seed) {
  SpikingNetwork net;
  net.weights = Mat(n, n);
  net.potential.assign(n, 0.0);
  net.last_spike_ms.assign(n, -std::numeric_limits<double>::infinity());
  net.spiked.assign(n, 0);
  net.readout = Mat(2, n);
  net.rng = Rng(seed);
  return net;
}

void SpikingNetwork::validate() const {
  const std::size_t n = potential.size();
  if (weights.rows != n || weights.cols != n)
    throw std::invalid_argument("SpikingNetwork: weights must be n x n");
  if (last_spike_ms.size() != n || spiked.size() != n)
    throw std::invalid_argument("SpikingNetwork: state vectors out of sync");
  if (!(tau_m_ms > 0.0) || !(threshold > 0.0))
    throw std::invalid_argument("SpikingNetwork: tau and threshold must be > 0");
  if (!(stdp.a_plus >= 0.0) || !(stdp.a_minus >= 0.0) ||
      !(stdp.tau_plus_ms > 0.0) || !(stdp.tau_minus_ms > 0.0) ||
      !(stdp.w_max > 0.0))
    throw std::invalid_argument("SpikingNetwork: bad STDP parameters");
  for (std::size_t i = 0; i < n; ++i) {
    if (weights(i, i) != 0.0)
      throw std::invalid_argument("SpikingNetwork: self-synapses must stay 0");
    for (std::size_t j = 0; j < n; ++j)
      if (!(weights(i, j) >= 0.0 && weights(i, j) <= stdp.w_max))
        throw std::invalid_argument(
            "SpikingNetwork: weights must lie in [0, w_max]");
  }
  if (readout.rows != 2 || readout.cols != n)
    throw std::invalid_argument("SpikingNetwork: readout must be 2 x n");
  for (const auto& [name, members] : sites)
    for (std::size_t idx : members)
      if (idx >= n)
        throw std::invalid_argument("SpikingNetwork: site '" + name +
                                    "' references neuron out of range");
}

void SpikingNetwork::stimulate(const std::string& site, double amplitude) {
  auto it = sites.find(site);
  if (it == sites.end())
    throw std::out_of_range("SpikingNetwork: unknown site '" + site + "'");
  for (std::size_t idx : it->second) potential[idx] += amplitude;
}

std::vector<std::uint8_t> spiking_step(SpikingNetwork& net, const Vec& input,
                                       double dt_ms) {
  const std::size_t n = net.size();
  if (input.size() != n)
    throw DimensionError("spiking_step: input length != neuron count");
  if (!(dt_ms > 0.0)) throw std::invalid_argument("spiking_step: dt must be > 0");

  // Synaptic drive from last step's spikes: column j collects w(i, j).
  Vec syn(n, 0.0);
  {
    Vec prev(n);
    for (std::size_t i = 0; i < n; ++i) prev[i] = net.spiked[i] ? 1.0 : 0.0;
    kernels::matvec_t(net.weights.a.data(), n, n, prev.data(), syn.data());
  }

  const double keep = 1.0 - dt_ms / net.tau_m_ms;
  const double t_now = net.now_ms + dt_ms;
  std::vector<std::uint8_t> fired(n, 0);
  std::vector<std::size_t> spikers;
  for (std::size_t i = 0; i < n; ++i) {
    double v = net.potential[i] * keep + dt_ms * input[i] + syn[i];
    if (v >= net.threshold) {
      fired[i] = 1;
      spikers.push_back(i);
      v = 0.0;  // hard reset
    }
    net.potential[i] = v;
  }

  // Nearest-spike pairing: each new spike pairs once with every partner's
  // most recent spike. Times are updated first so that two neurons firing on
  // the same step see delta t == 0 (a no-op by convention) rather than a
  // stale pairing.
  for (std::size_t j : spikers) net.last_spike_ms[j] = t_now;
  if (net.plastic) {
    for (std::size_t j : spikers) {
      for (std::size_t i = 0; i < n; ++i) {
        if (i == j) continue;
        const double t_i = net.last_spike_ms[i];
        if (std::isinf(t_i)) continue;  // partner has never fired
        stdp_update(net, t_i, t_now, i, j);   // i -> j potentiates
        stdp_update(net, t_now, t_i, j, i);   // j -> i depresses
      }
    }
  }

  net.spiked = fired;
  net.now_ms = t_now;
  return fired;
}

double stdp_update(SpikingNetwork& net, double pre_spike_ms,
                   double post_spike_ms, std::size_t pre, std::size_t post) {
  if (pre == post) return 0.0;  // diagonal is structurally zero
  if (std::isinf(pre_spike_ms) || std::isinf(post_spike_ms)) return 0.0;
  const double dt = post_spike_ms - pre_spike_ms;
  if (dt == 0.0) return 0.0;

  const double& w_old = net.weights(pre, post);
  double delta;
  if (dt > 0.0)
    delta = net.stdp.a_plus * std::exp(-dt / net.stdp.tau_plus_ms);
  else
    delta = -net.stdp.a_minus * std::exp(dt / net.stdp.tau_minus_ms);
  const double w_new = std::clamp(w_old + delta, 0.0, net.stdp.w_max);
  const double applied = w_new - w_old;
  net.weights(pre, post) = w_new;
  return applied;
}

namespace {

/// Accumulated per-neuron activity of a deterministic free run: positive
/// membrane potential integrated over steps, with a threshold's worth of
/// credit for each emitted spike (the reset would otherwise hide it).
Vec run_activation(SpikingNetwork net, int steps, double dt_ms) {
  const std::size_t n = net.size();
  const Vec zero(n, 0.0);
  Vec act(n, 0.0);
  for (int s = 0; s < steps; ++s) {
    const auto fired = spiking_step(net, zero, dt_ms);
    for (std::size_t i = 0; i < n; ++i) {
      act[i] += std::max(net.potential[i], 0.0);
      if (fired[i]) act[i] += net.threshold;
    }
  }
  return act;
}

}  // namespace

OutputEffect output_effect_map(const SpikingNetwork& net, const std::string& site,
                               const ProbeConfig& cfg) {
  auto it = net.sites.find(site);
  if (it == net.sites.end())
    throw std::out_of_range("output_effect_map: unknown site '" + site + "'");
  const auto& members = it->second;

  OutputEffect result;
  result.site = site;
  result.trials = cfg.trials;

  const std::size_t n = net.size();
  for (int trial = 0; trial < cfg.trials; ++trial) {
    // Shared random initial condition; the pulse is the only difference
    // between the paired runs, so a site with no outgoing path contributes
    // exactly zero.
    SpikingNetwork prepared = net;
    Rng trial_rng = net.rng.fork(0x0effec70ULL + std::uint64_t(trial));
    for (auto& v : prepared.potential)
      v = trial_rng.uniform(0.0, 0.45 * net.threshold);

    SpikingNetwork stimmed = prepared;
    stimmed.stimulate(site, cfg.amplitude * net.threshold);

    const Vec base = run_activation(std::move(prepared), cfg.steps, cfg.dt_ms);
    const Vec with = run_activation(std::move(stimmed), cfg.steps, cfg.dt_ms);

    Vec evoked(n);
    for (std::size_t i = 0; i < n; ++i) evoked[i] = with[i] - base[i];
    for (std::size_t idx : members) evoked[idx] = 0.0;  // downstream only

    const Vec torque = linalg::matvec(net.readout, evoked);
    result.effect[0] += torque[0];
    result.effect[1] += torque[1];
  }
  if (cfg.trials > 0) {
    result.effect[0] /= cfg.trials;
    result.effect[1] /= cfg.trials;
  }
  return result;
}

}  // namespace coprosim::plant
