#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "coprosim/linalg.hpp"
#include "coprosim/plant.hpp"
#include "coprosim/types.hpp"

/// The co-processor proper: a pair of small multilayer perceptrons — the CPN
/// mapping recorded activity (plus task context) to stimulation patterns, and
/// the EN, a trained surrogate for the biological path from stimulation to
/// behavior. The EN exists so the CPN can be trained by backpropagation or
/// reinforcement learning without stimulating the real tissue; it is frozen
/// whenever it serves as that training medium.
namespace coprosim::coproc {

enum class Activation { identity, sigmoid, relu };

/// Bias-free multilayer perceptron, v = g_L(W_L ... g_1(W_1 u)). Three layers
/// (input-hidden-output) is the default and the heavily tested case; depth is
/// whatever the weight list says.
struct LayeredNet {
  std::vector<Mat> w;           // w[l]: rows = layer l+1 width, cols = layer l width
  std::vector<Activation> act;  // one activation per weight matrix

  std::size_t input_dim() const { return w.empty() ? 0 : w.front().cols; }
  std::size_t output_dim() const { return w.empty() ? 0 : w.back().rows; }

  /// Throws on an empty layer list, a dimension chain mismatch, an activation
  /// count disagreeing with the layer count, or non-finite weights.
  void validate() const;

  /// Glorot-uniform initialization, ±sqrt(6 / (fan_in + fan_out)) per layer,
  /// drawn from the seed. dims lists layer widths (input first), so
  /// dims.size() == act.size() + 1.
  static LayeredNet make(const std::vector<std::size_t>& dims,
                         const std::vector<Activation>& act,
                         std::uint64_t seed);
};

/// Output of the net on `u`. Throws DimensionError on a length mismatch and
/// DataError on non-finite input.
Vec net_forward(const LayeredNet& net, const Vec& u);

/// Forward pass with every layer's pre-activation and activation kept, so a
/// reverse pass can run without recomputing.
struct ForwardTrace {
  Vec input;
  std::vector<Vec> pre;   // W_l applied to the previous activation
  std::vector<Vec> post;  // g_l(pre); post.back() is the net output
};
ForwardTrace net_forward_trace(const LayeredNet& net, const Vec& u);

struct NetGradients {
  std::vector<Mat> w;  // same shapes as the net's weight list
};

/// Reverse-mode sweep given dE/d(output). When `dloss_din` is non-null it
/// receives dE/d(input), which is how a gradient flows from a downstream net
/// (the EN) into an upstream one (the CPN).
NetGradients net_backward(const LayeredNet& net, const ForwardTrace& t,
                          const Vec& dloss_dout, Vec* dloss_din = nullptr);

/// ½ Σ_i (target_i − v_i)², the loss every supervised trainer here minimizes.
double squared_error(const Vec& target, const Vec& v);

/// Gradients of squared_error(target, net(u)) with respect to every weight.
NetGradients net_gradients(const LayeredNet& net, const Vec& u,
                           const Vec& target);

/// dE/d(CPN weights) for E = ½‖z_target − en(cpn(x))‖² with the EN held
/// fixed: the error backpropagates through the EN's layers and continues
/// through the CPN, but only CPN gradients are produced.
NetGradients composite_gradients(const LayeredNet& cpn, const LayeredNet& en,
                                 const Vec& x, const Vec& z_target);

/// Knobs shared by every trainer. `freeze` turns a call into a dry run: the
/// trainee comes back bit-identical (loss curves are still reported). Nets
/// passed by const reference (the EN under composite training) are never
/// touched regardless.
struct TrainConfig {
  double learning_rate = 0.05;   // > 0
  int epochs = 200;              // >= 1
  std::size_t batch_size = 32;   // >= 1; clamped to the dataset size
  std::uint64_t seed = 0;        // shuffling and exploration streams
  double gradient_clip = 0.0;    // per-update inf-norm cap; 0 disables
  bool freeze = false;
  bool line_search = false;      // full-batch backtracking; guarantees descent
  double holdout_fraction = 0.2; // validation split where the op reports one
  void validate() const;
};

/// Surrogate training: minibatch gradient descent of the mean squared error
/// of behaviors against net(stim) over a seeded shuffle split. epoch_loss
/// holds the full-training-set loss after each epoch; with line_search on
/// (full batch) it is nonincreasing by construction.
struct EnTrainResult {
  LayeredNet en;
  double holdout_loss = 0.0;
  std::vector<double> epoch_loss;
};
EnTrainResult train_en(const LayeredNet& en0, const Mat& stims,
                       const Mat& behaviors, const TrainConfig& cfg);

struct CpnTrainResult {
  LayeredNet cpn;
  std::vector<double> epoch_loss;
};

/// Direct supervision: the CPN learns prescribed stimulation patterns for
/// given activity patterns (no EN in the loop). The open-loop special case —
/// classify the state, emit the matching preprogrammed pattern.
CpnTrainResult train_cpn_supervised(const LayeredNet& cpn0, const Mat& inputs,
                                    const Mat& target_stims,
                                    const TrainConfig& cfg);

/// Closed-loop supervision through the surrogate: forward is
/// en(cpn(intention)), the loss compares that against the target behavior,
/// and only the CPN moves — the EN is read-only here by signature and comes
/// back byte-identical. Throws DimensionError when the CPN output width does
/// not match the EN input width.
CpnTrainResult train_cpn_through_en(const LayeredNet& cpn0,
                                    const LayeredNet& en,
                                    const Mat& intentions, const Mat& targets,
                                    const TrainConfig& cfg);

/// Reward over (behavior, intention) pairs; intentions ride along so goal-
/// dependent rewards (reach targets) need no global state.
using RewardFn = std::function<double(const Vec& behavior, const Vec& intention)>;

struct RlConfig {
  double discount = 0.95;        // in [0, 1]
  int horizon = 1;               // steps per rollout, >= 1
  int rollouts_per_update = 16;  // >= 1
  std::string reward_id;         // how configs name the reward; resolved upstream
  double exploration_std = 0.1;  // Gaussian noise on the stimulation, >= 0
  void validate() const;
};

/// Policy-gradient training run entirely on the EN — the plant is never
/// touched (there is nothing here to touch it with). Each rollout fixes one
/// intention row, perturbs the CPN's stimulation with Gaussian exploration
/// noise, scores the EN's predicted behavior, and updates with REINFORCE:
/// reward-to-go discounted by `discount`, a per-timestep mean baseline across
/// the rollout batch, and cfg.epochs policy updates at cfg.learning_rate.
/// mean_return tracks the (noisy) rollout return per update.
struct RlTrainResult {
  LayeredNet cpn;
  std::vector<double> mean_return;
};
RlTrainResult train_cpn_rl(const LayeredNet& cpn0, const LayeredNet& en,
                           const Mat& intentions, const RewardFn& reward,
                           const RlConfig& rl, const TrainConfig& cfg);

/// Mean noise-free rollout return of cpn∘en over the intention batch; the
/// common yardstick for comparing training methods.
double evaluate_mean_return(const LayeredNet& cpn, const LayeredNet& en,
                            const Mat& intentions, const RewardFn& reward,
                            const RlConfig& rl);

/// Activity-dependent stimulation for plasticity induction: every spike
/// recorded at rec_site schedules one suprathreshold pulse at stim_site
/// delay_ms later, while STDP stays on. Background current noise (seeded)
/// keeps the network spontaneously active. The log samples the mean synaptic
/// weight of every ordered site pair ("A->B") so conditioned and control
/// pathways can be compared.
struct ConditioningLog {
  std::vector<double> t_ms;  // weight sample times
  std::map<std::string, std::vector<double>> mean_weight;
  std::vector<double> rec_spike_ms;  // every spike detected at rec_site
  std::vector<double> pulse_ms;      // delivery time of every pulse; entry i
                                     // is rec_spike_ms[i] + delay_ms
  std::size_t rec_spikes = 0;        // == rec_spike_ms.size()
};
ConditioningLog identity_coprocessor(plant::SpikingNetwork& net,
                                     const std::string& rec_site,
                                     const std::string& stim_site,
                                     double delay_ms, double duration_ms,
                                     std::uint64_t seed);

/// One closed-loop practice block: run the CPN on the true plant, keep the
/// (stimulation, behavior) pairs, refresh the EN on everything collected so
/// far, retrain the CPN through the refreshed EN. Exploration noise is added
/// to the collected stimulations so the EN sees more than the CPN's current
/// output manifold. The CPN and EN are adapted in place (the caller keeps
/// the trained pair); the plant is taken by value, so perturbations applied
/// through the hook stay inside the loop.
struct CoadaptSchedule {
  int sessions = 0;             // >= 0; 0 means no plant interaction at all
  int en_refresh_every = 1;     // refresh the EN every this many sessions
  int settle_steps = 40;        // plant steps per trial (endpoint behavior)
  double collect_noise_std = 0.1;
  void validate() const;
};

struct SessionMetrics {
  int session = 0;
  double behavioral_mse = 0.0;  // mean ½‖target − endpoint‖² on the true plant
  double en_holdout_loss = 0.0; // from the most recent EN refresh
};

std::vector<SessionMetrics> coadapt_loop(
    LayeredNet& cpn, LayeredNet& en, plant::MotorPlant plant,
    const Mat& intentions, const Mat& targets, const CoadaptSchedule& sched,
    const TrainConfig& cfg,
    const std::function<void(plant::MotorPlant&, int)>& perturb = {});

}  // namespace coprosim::coproc
