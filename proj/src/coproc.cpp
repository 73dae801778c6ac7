#include "coprosim/coproc.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <string>
#include <utility>

#include "coprosim/kernels.hpp"
#include "coprosim/rng.hpp"

namespace coprosim::coproc {

// ---------------------------------------------------------------------------
// LayeredNet

void LayeredNet::validate() const {
  if (w.empty()) throw std::invalid_argument("LayeredNet: no layers");
  if (act.size() != w.size())
    throw std::invalid_argument("LayeredNet: one activation per layer");
  for (std::size_t l = 0; l < w.size(); ++l) {
    if (w[l].rows == 0 || w[l].cols == 0)
      throw std::invalid_argument("LayeredNet: empty weight matrix");
    if (l > 0 && w[l].cols != w[l - 1].rows)
      throw std::invalid_argument("LayeredNet: layer widths do not chain");
    for (double v : w[l].a)
      if (!std::isfinite(v))
        throw std::invalid_argument("LayeredNet: non-finite weight");
  }
}

LayeredNet LayeredNet::make(const std::vector<std::size_t>& dims,
                            const std::vector<Activation>& act,
                            std::uint64_t seed) {
  if (dims.size() < 2 || act.size() != dims.size() - 1)
    throw std::invalid_argument(
        "LayeredNet::make: need n+1 widths for n activations");
  LayeredNet net;
  net.act = act;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Mat m(dims[l + 1], dims[l]);
    const double bound = std::sqrt(6.0 / double(dims[l] + dims[l + 1]));
    for (auto& v : m.a) v = rng.uniform(-bound, bound);
    net.w.push_back(std::move(m));
  }
  net.validate();
  return net;
}

namespace {

double act_apply(Activation a, double x) {
  switch (a) {
    case Activation::identity:
      return x;
    case Activation::relu:
      return x > 0.0 ? x : 0.0;
    case Activation::sigmoid:
      // Evaluate from the side that keeps exp() in the underflow-safe range.
      return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                      : std::exp(x) / (1.0 + std::exp(x));
  }
  return x;
}

double act_slope(Activation a, double pre, double post) {
  switch (a) {
    case Activation::identity:
      return 1.0;
    case Activation::relu:
      return pre > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid:
      return post * (1.0 - post);
  }
  return 1.0;
}

void check_input(const LayeredNet& net, const Vec& u, const char* who) {
  if (u.size() != net.input_dim())
    throw DimensionError(std::string(who) + ": input length " +
                         std::to_string(u.size()) + ", net expects " +
                         std::to_string(net.input_dim()));
  for (double v : u)
    if (!std::isfinite(v))
      throw DataError(std::string(who) + ": non-finite input");
}

}  // namespace

Vec net_forward(const LayeredNet& net, const Vec& u) {
  net.validate();
  check_input(net, u, "net_forward");
  Vec cur = u;
  for (std::size_t l = 0; l < net.w.size(); ++l) {
    Vec next = linalg::matvec(net.w[l], cur);
    for (auto& v : next) v = act_apply(net.act[l], v);
    cur = std::move(next);
  }
  return cur;
}

ForwardTrace net_forward_trace(const LayeredNet& net, const Vec& u) {
  check_input(net, u, "net_forward_trace");
  ForwardTrace t;
  t.input = u;
  const Vec* below = &t.input;
  for (std::size_t l = 0; l < net.w.size(); ++l) {
    t.pre.push_back(linalg::matvec(net.w[l], *below));
    Vec post = t.pre.back();
    for (auto& v : post) v = act_apply(net.act[l], v);
    t.post.push_back(std::move(post));
    below = &t.post.back();
  }
  return t;
}

NetGradients net_backward(const LayeredNet& net, const ForwardTrace& t,
                          const Vec& dloss_dout, Vec* dloss_din) {
  const std::size_t layers = net.w.size();
  if (t.pre.size() != layers || t.post.size() != layers)
    throw DimensionError("net_backward: trace does not match the net");
  if (dloss_dout.size() != net.output_dim())
    throw DimensionError("net_backward: output gradient length mismatch");

  NetGradients g;
  g.w.resize(layers);
  Vec delta = dloss_dout;  // dE/d(activation) of the layer being processed
  for (std::size_t l = layers; l-- > 0;) {
    for (std::size_t i = 0; i < delta.size(); ++i)
      delta[i] *= act_slope(net.act[l], t.pre[l][i], t.post[l][i]);
    const Vec& below = (l == 0) ? t.input : t.post[l - 1];
    g.w[l] = Mat(net.w[l].rows, net.w[l].cols);
    kernels::outer_acc(1.0, delta.data(), delta.size(), below.data(),
                       below.size(), g.w[l].a.data());
    if (l > 0)
      delta = linalg::matvec_t(net.w[l], delta);
    else if (dloss_din)
      *dloss_din = linalg::matvec_t(net.w[l], delta);
  }
  return g;
}

double squared_error(const Vec& target, const Vec& v) {
  if (target.size() != v.size())
    throw DimensionError("squared_error: length mismatch");
  double e = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    e += (target[i] - v[i]) * (target[i] - v[i]);
  return 0.5 * e;
}

NetGradients net_gradients(const LayeredNet& net, const Vec& u,
                           const Vec& target) {
  net.validate();
  if (target.size() != net.output_dim())
    throw DimensionError("net_gradients: target length mismatch");
  ForwardTrace t = net_forward_trace(net, u);
  Vec dout = t.post.back();
  for (std::size_t i = 0; i < dout.size(); ++i) dout[i] -= target[i];
  return net_backward(net, t, dout);
}

NetGradients composite_gradients(const LayeredNet& cpn, const LayeredNet& en,
                                 const Vec& x, const Vec& z_target) {
  if (cpn.output_dim() != en.input_dim())
    throw DimensionError("composite_gradients: CPN output width " +
                         std::to_string(cpn.output_dim()) +
                         " does not feed EN input width " +
                         std::to_string(en.input_dim()));
  if (z_target.size() != en.output_dim())
    throw DimensionError("composite_gradients: target length mismatch");
  ForwardTrace tc = net_forward_trace(cpn, x);
  ForwardTrace te = net_forward_trace(en, tc.post.back());
  Vec dout = te.post.back();
  for (std::size_t i = 0; i < dout.size(); ++i) dout[i] -= z_target[i];
  Vec dstim;
  net_backward(en, te, dout, &dstim);  // EN gradients discarded: it is frozen
  return net_backward(cpn, tc, dstim);
}

// ---------------------------------------------------------------------------
// Shared SGD plumbing

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0))
    throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (batch_size < 1)
    throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (gradient_clip < 0.0)
    throw std::invalid_argument("TrainConfig: gradient_clip must be >= 0");
  if (!(holdout_fraction >= 0.0) || !(holdout_fraction < 1.0))
    throw std::invalid_argument("TrainConfig: holdout_fraction in [0, 1)");
}

namespace {

NetGradients zeros_like(const LayeredNet& net) {
  NetGradients g;
  for (const Mat& m : net.w) g.w.emplace_back(m.rows, m.cols);
  return g;
}

void add_grads(NetGradients& acc, const NetGradients& g) {
  for (std::size_t l = 0; l < acc.w.size(); ++l)
    kernels::axpy(1.0, g.w[l].a.data(), acc.w[l].a.data(), g.w[l].a.size());
}

double grad_inf_norm(const NetGradients& g) {
  double m = 0.0;
  for (const Mat& w : g.w)
    for (double v : w.a) m = std::max(m, std::fabs(v));
  return m;
}

/// net += alpha * g, with the gradient pre-scaled by `scale` (batch mean) and
/// clipped to `clip` in infinity norm when clip > 0.
void apply_update(LayeredNet& net, const NetGradients& g, double alpha,
                  double scale, double clip) {
  double s = scale;
  if (clip > 0.0) {
    const double m = grad_inf_norm(g) * std::fabs(scale);
    if (m > clip) s *= clip / m;
  }
  for (std::size_t l = 0; l < net.w.size(); ++l)
    kernels::axpy(alpha * s, g.w[l].a.data(), net.w[l].a.data(),
                  net.w[l].a.size());
}

void fisher_yates(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i-- > 1;)
    std::swap(idx[i], idx[rng.next_u64() % (i + 1)]);
}

/// Minibatch SGD driver shared by the supervised trainers. `grad` accumulates
/// one sample's weight gradient; `loss` scores one sample. Reports the mean
/// training-set loss after every epoch. With line_search the run is full
/// batch and each step backtracks until the loss does not increase, so the
/// reported sequence is nonincreasing.
std::vector<double> run_sgd(
    LayeredNet& net, const std::vector<std::size_t>& rows,
    const TrainConfig& cfg,
    const std::function<void(const LayeredNet&, std::size_t, NetGradients&)>& grad,
    const std::function<double(const LayeredNet&, std::size_t)>& loss) {
  const auto mean_loss = [&](const LayeredNet& n) {
    double s = 0.0;
    for (std::size_t r : rows) s += loss(n, r);
    return s / double(rows.size());
  };

  std::vector<double> epoch_loss;
  epoch_loss.reserve(std::size_t(cfg.epochs));
  std::vector<std::size_t> order = rows;
  Rng shuffle_rng = Rng(cfg.seed).fork(0x5d71);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.freeze) {
      epoch_loss.push_back(mean_loss(net));
      continue;
    }
    if (cfg.line_search) {
      NetGradients g = zeros_like(net);
      for (std::size_t r : rows) grad(net, r, g);
      const double before = mean_loss(net);
      double step = cfg.learning_rate;
      for (int half = 0; half < 40; ++half, step *= 0.5) {
        LayeredNet trial = net;
        apply_update(trial, g, -step, 1.0 / double(rows.size()),
                     cfg.gradient_clip);
        if (mean_loss(trial) <= before) {
          net = std::move(trial);
          break;
        }
      }
      epoch_loss.push_back(mean_loss(net));
      continue;
    }

    fisher_yates(order, shuffle_rng);
    const std::size_t bs = std::min<std::size_t>(cfg.batch_size, order.size());
    for (std::size_t at = 0; at < order.size(); at += bs) {
      const std::size_t n = std::min(bs, order.size() - at);
      NetGradients g = zeros_like(net);
      for (std::size_t i = 0; i < n; ++i) grad(net, order[at + i], g);
      apply_update(net, g, -cfg.learning_rate, 1.0 / double(n),
                   cfg.gradient_clip);
    }
    epoch_loss.push_back(mean_loss(net));
  }
  return epoch_loss;
}

std::vector<std::size_t> iota_rows(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

Vec mat_row(const Mat& m, std::size_t i) {
  return Vec(m.row(i), m.row(i) + m.cols);
}

}  // namespace

// ---------------------------------------------------------------------------
// Trainers

EnTrainResult train_en(const LayeredNet& en0, const Mat& stims,
                       const Mat& behaviors, const TrainConfig& cfg) {
  en0.validate();
  cfg.validate();
  if (stims.rows == 0) throw DataError("train_en: empty training set");
  if (behaviors.rows != stims.rows)
    throw DimensionError("train_en: one behavior row per stimulation row");
  if (stims.cols != en0.input_dim() || behaviors.cols != en0.output_dim())
    throw DimensionError("train_en: data widths do not match the net");

  // Seeded split: shuffle once, carve the holdout off the tail, keep at
  // least one training row.
  std::vector<std::size_t> idx = iota_rows(stims.rows);
  Rng split_rng = Rng(cfg.seed).fork(0x11e1d);
  fisher_yates(idx, split_rng);
  std::size_t n_hold = std::size_t(std::lround(cfg.holdout_fraction *
                                               double(stims.rows)));
  n_hold = std::min(n_hold, stims.rows - 1);
  std::vector<std::size_t> train_rows(idx.begin(), idx.end() - long(n_hold));
  std::vector<std::size_t> hold_rows(idx.end() - long(n_hold), idx.end());

  EnTrainResult res;
  res.en = en0;
  res.epoch_loss = run_sgd(
      res.en, train_rows, cfg,
      [&](const LayeredNet& n, std::size_t r, NetGradients& g) {
        add_grads(g, net_gradients(n, mat_row(stims, r), mat_row(behaviors, r)));
      },
      [&](const LayeredNet& n, std::size_t r) {
        return squared_error(mat_row(behaviors, r),
                             net_forward(n, mat_row(stims, r)));
      });

  // Holdout loss; with no held-out rows this is the training loss.
  const auto& score_rows = hold_rows.empty() ? train_rows : hold_rows;
  double s = 0.0;
  for (std::size_t r : score_rows)
    s += squared_error(mat_row(behaviors, r),
                       net_forward(res.en, mat_row(stims, r)));
  res.holdout_loss = s / double(score_rows.size());
  return res;
}

CpnTrainResult train_cpn_supervised(const LayeredNet& cpn0, const Mat& inputs,
                                    const Mat& target_stims,
                                    const TrainConfig& cfg) {
  cpn0.validate();
  cfg.validate();
  if (inputs.rows == 0)
    throw DataError("train_cpn_supervised: empty training set");
  if (target_stims.rows != inputs.rows)
    throw DimensionError("train_cpn_supervised: one target per input row");
  if (inputs.cols != cpn0.input_dim() ||
      target_stims.cols != cpn0.output_dim())
    throw DimensionError("train_cpn_supervised: data widths do not match");

  CpnTrainResult res;
  res.cpn = cpn0;
  res.epoch_loss = run_sgd(
      res.cpn, iota_rows(inputs.rows), cfg,
      [&](const LayeredNet& n, std::size_t r, NetGradients& g) {
        add_grads(g,
                  net_gradients(n, mat_row(inputs, r), mat_row(target_stims, r)));
      },
      [&](const LayeredNet& n, std::size_t r) {
        return squared_error(mat_row(target_stims, r),
                             net_forward(n, mat_row(inputs, r)));
      });
  return res;
}

CpnTrainResult train_cpn_through_en(const LayeredNet& cpn0,
                                    const LayeredNet& en,
                                    const Mat& intentions, const Mat& targets,
                                    const TrainConfig& cfg) {
  cpn0.validate();
  en.validate();
  cfg.validate();
  if (cpn0.output_dim() != en.input_dim())
    throw DimensionError("train_cpn_through_en: CPN output width " +
                         std::to_string(cpn0.output_dim()) +
                         " does not feed EN input width " +
                         std::to_string(en.input_dim()));
  if (intentions.rows == 0)
    throw DataError("train_cpn_through_en: empty training set");
  if (targets.rows != intentions.rows)
    throw DimensionError("train_cpn_through_en: one target per intention");
  if (intentions.cols != cpn0.input_dim() || targets.cols != en.output_dim())
    throw DimensionError("train_cpn_through_en: data widths do not match");

  CpnTrainResult res;
  res.cpn = cpn0;
  res.epoch_loss = run_sgd(
      res.cpn, iota_rows(intentions.rows), cfg,
      [&](const LayeredNet& n, std::size_t r, NetGradients& g) {
        add_grads(g, composite_gradients(n, en, mat_row(intentions, r),
                                         mat_row(targets, r)));
      },
      [&](const LayeredNet& n, std::size_t r) {
        return squared_error(
            mat_row(targets, r),
            net_forward(en, net_forward(n, mat_row(intentions, r))));
      });
  return res;
}

// ---------------------------------------------------------------------------
// Reinforcement learning on the surrogate

void RlConfig::validate() const {
  if (!(discount >= 0.0) || !(discount <= 1.0))
    throw std::invalid_argument("RlConfig: discount in [0, 1]");
  if (horizon < 1) throw std::invalid_argument("RlConfig: horizon must be >= 1");
  if (rollouts_per_update < 1)
    throw std::invalid_argument("RlConfig: rollouts_per_update must be >= 1");
  if (!(exploration_std >= 0.0))
    throw std::invalid_argument("RlConfig: exploration_std must be >= 0");
}

RlTrainResult train_cpn_rl(const LayeredNet& cpn0, const LayeredNet& en,
                           const Mat& intentions, const RewardFn& reward,
                           const RlConfig& rl, const TrainConfig& cfg) {
  cpn0.validate();
  en.validate();
  rl.validate();
  cfg.validate();
  if (!reward)
    throw std::invalid_argument("train_cpn_rl: reward function is empty");
  if (cpn0.output_dim() != en.input_dim())
    throw DimensionError("train_cpn_rl: CPN output width does not feed EN");
  if (intentions.rows == 0)
    throw DataError("train_cpn_rl: no intentions to roll out");
  if (intentions.cols != cpn0.input_dim())
    throw DimensionError("train_cpn_rl: intention width mismatch");

  const int R = rl.rollouts_per_update;
  const int H = rl.horizon;
  const double sig = rl.exploration_std;
  const double inv_var = sig > 0.0 ? 1.0 / (sig * sig) : 0.0;

  RlTrainResult res;
  res.cpn = cpn0;
  res.mean_return.reserve(std::size_t(cfg.epochs));
  Rng noise_rng = Rng(cfg.seed).fork(0xe791);

  struct Rollout {
    ForwardTrace trace;          // CPN pass on this rollout's intention
    std::vector<Vec> kicks;      // y_t − μ, the exploration noise per step
    std::vector<double> reward;  // r_t
    Vec togo;                    // discounted reward-to-go G_t
  };

  for (int update = 0; update < cfg.epochs; ++update) {
    std::vector<Rollout> batch(static_cast<std::size_t>(R));
    for (int r = 0; r < R; ++r) {
      Rollout& ro = batch[std::size_t(r)];
      // Deterministic round-robin over intentions keeps coverage even.
      const std::size_t row =
          (std::size_t(update) * std::size_t(R) + std::size_t(r)) %
          intentions.rows;
      const Vec x = mat_row(intentions, row);
      ro.trace = net_forward_trace(res.cpn, x);
      const Vec& mu = ro.trace.post.back();
      for (int t = 0; t < H; ++t) {
        Vec y = mu, kick(mu.size());
        for (std::size_t i = 0; i < y.size(); ++i) {
          kick[i] = sig > 0.0 ? noise_rng.normal(0.0, sig) : 0.0;
          y[i] += kick[i];
        }
        ro.kicks.push_back(std::move(kick));
        ro.reward.push_back(reward(net_forward(en, y), x));
      }
      ro.togo.assign(std::size_t(H), 0.0);
      double g = 0.0;
      for (int t = H; t-- > 0;) {
        g = ro.reward[std::size_t(t)] + rl.discount * g;
        ro.togo[std::size_t(t)] = g;
      }
    }

    // Per-timestep mean baseline across the batch, accumulated relative to
    // the first rollout: centering keeps the sum free of cancellation and
    // makes the advantage an exact zero when every rollout returns the same
    // number (a constant reward then provably moves no weight).
    Vec baseline = batch[0].togo;
    for (const Rollout& ro : batch)
      for (int t = 0; t < H; ++t)
        baseline[std::size_t(t)] +=
            (ro.togo[std::size_t(t)] - batch[0].togo[std::size_t(t)]) /
            double(R);

    double batch_return = 0.0;
    for (const Rollout& ro : batch) batch_return += ro.togo[0];
    res.mean_return.push_back(batch_return / double(R));

    if (cfg.freeze || sig == 0.0) continue;  // no exploration, no gradient

    // REINFORCE: dJ/dμ accumulates Σ_t (G_t − b_t)(y_t − μ)/σ²; one backward
    // pass per rollout since μ is shared across its steps. The driver below
    // descends, so feed it −dJ.
    NetGradients g = zeros_like(res.cpn);
    for (Rollout& ro : batch) {
      Vec dout(ro.trace.post.back().size(), 0.0);
      for (int t = 0; t < H; ++t) {
        const double adv = ro.togo[std::size_t(t)] - baseline[std::size_t(t)];
        kernels::axpy(-adv * inv_var, ro.kicks[std::size_t(t)].data(),
                      dout.data(), dout.size());
      }
      add_grads(g, net_backward(res.cpn, ro.trace, dout));
    }
    apply_update(res.cpn, g, -cfg.learning_rate, 1.0 / double(R),
                 cfg.gradient_clip);
  }
  return res;
}

double evaluate_mean_return(const LayeredNet& cpn, const LayeredNet& en,
                            const Mat& intentions, const RewardFn& reward,
                            const RlConfig& rl) {
  cpn.validate();
  en.validate();
  rl.validate();
  if (!reward)
    throw std::invalid_argument("evaluate_mean_return: reward function is empty");
  if (intentions.rows == 0)
    throw DataError("evaluate_mean_return: no intentions");

  double total = 0.0;
  for (std::size_t i = 0; i < intentions.rows; ++i) {
    const Vec x = mat_row(intentions, i);
    const double r = reward(net_forward(en, net_forward(cpn, x)), x);
    double g = 0.0;
    for (int t = rl.horizon; t-- > 0;) g = r + rl.discount * g;
    total += g;
  }
  return total / double(intentions.rows);
}

// ---------------------------------------------------------------------------
// Plasticity induction

namespace {

// Background drive keeping the conditioning network spontaneously active:
// constant current holding the membrane at 78% of threshold plus white noise
// with a 10%-of-threshold stationary membrane std. The ~2.2-sigma gap puts
// spontaneous rates in the low single-digit Hz range, sparse enough that
// spike-triggered pulses pair far more reliably with their trigger than with
// any bystander neuron; hotter drives drown the causal pairing in chance
// coincidences and every pathway potentiates alike.
constexpr double kRestFraction = 0.78;
constexpr double kMembraneNoiseFraction = 0.10;
constexpr double kConditioningDtMs = 1.0;
constexpr double kPulseThresholdMultiple = 1.5;  // suprathreshold kick
constexpr double kWeightSampleMs = 50.0;

}  // namespace

ConditioningLog identity_coprocessor(plant::SpikingNetwork& net,
                                     const std::string& rec_site,
                                     const std::string& stim_site,
                                     double delay_ms, double duration_ms,
                                     std::uint64_t seed) {
  net.validate();
  if (!net.sites.count(rec_site))
    throw std::out_of_range("identity_coprocessor: unknown site '" + rec_site +
                            "'");
  if (!net.sites.count(stim_site))
    throw std::out_of_range("identity_coprocessor: unknown site '" +
                            stim_site + "'");
  if (delay_ms < 0.0)
    throw std::invalid_argument("identity_coprocessor: delay must be >= 0");
  if (duration_ms < 0.0)
    throw std::invalid_argument("identity_coprocessor: duration must be >= 0");

  const double dt = kConditioningDtMs;
  const std::size_t n = net.size();
  const double i_mean = kRestFraction * net.threshold / net.tau_m_ms;
  const double i_std = kMembraneNoiseFraction * net.threshold *
                       std::sqrt(2.0 / (dt * net.tau_m_ms));

  ConditioningLog log;
  const auto sample_weights = [&]() {
    log.t_ms.push_back(net.now_ms);
    for (const auto& [from, from_members] : net.sites)
      for (const auto& [to, to_members] : net.sites) {
        if (from == to) continue;
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t i : from_members)
          for (std::size_t j : to_members) {
            if (i == j) continue;
            sum += net.weights(i, j);
            ++count;
          }
        log.mean_weight[from + "->" + to].push_back(
            count ? sum / double(count) : 0.0);
      }
  };

  Rng drive_rng(seed);
  std::deque<double> due;  // scheduled pulse times, nondecreasing
  const auto& rec_members = net.sites.at(rec_site);

  sample_weights();
  double next_sample = net.now_ms + kWeightSampleMs;
  const double t_end = net.now_ms + duration_ms;
  Vec input(n);

  while (net.now_ms + dt <= t_end + 1e-9) {
    // Deliver every pulse that has come due; its membrane effect lands in
    // the step about to run.
    while (!due.empty() && due.front() <= net.now_ms + 1e-9) {
      net.stimulate(stim_site, kPulseThresholdMultiple * net.threshold);
      log.pulse_ms.push_back(due.front());
      due.pop_front();
    }

    for (auto& v : input) v = drive_rng.normal(i_mean, i_std);
    const auto spikes = plant::spiking_step(net, input, dt);

    for (std::size_t idx : rec_members)
      if (spikes[idx]) {
        ++log.rec_spikes;
        log.rec_spike_ms.push_back(net.now_ms);
        due.push_back(net.now_ms + delay_ms);  // one pulse per spike
      }

    if (net.now_ms + 1e-9 >= next_sample) {
      sample_weights();
      next_sample += kWeightSampleMs;
    }
  }
  if (log.t_ms.back() != net.now_ms) sample_weights();
  return log;
}

// ---------------------------------------------------------------------------
// Co-adaptation

void CoadaptSchedule::validate() const {
  if (sessions < 0)
    throw std::invalid_argument("CoadaptSchedule: sessions must be >= 0");
  if (en_refresh_every < 1)
    throw std::invalid_argument("CoadaptSchedule: en_refresh_every must be >= 1");
  if (settle_steps < 1)
    throw std::invalid_argument("CoadaptSchedule: settle_steps must be >= 1");
  if (!(collect_noise_std >= 0.0))
    throw std::invalid_argument("CoadaptSchedule: collect_noise_std must be >= 0");
}

std::vector<SessionMetrics> coadapt_loop(
    LayeredNet& cpn, LayeredNet& en, plant::MotorPlant plant,
    const Mat& intentions, const Mat& targets, const CoadaptSchedule& sched,
    const TrainConfig& cfg,
    const std::function<void(plant::MotorPlant&, int)>& perturb) {
  cpn.validate();
  en.validate();
  plant.validate();
  sched.validate();
  cfg.validate();
  if (intentions.rows == 0 || targets.rows != intentions.rows)
    throw DimensionError("coadapt_loop: paired intentions and targets required");
  if (intentions.cols != cpn.input_dim() ||
      cpn.output_dim() != en.input_dim() ||
      en.input_dim() != plant.input.cols ||
      en.output_dim() != plant.dynamics.rows ||
      targets.cols != plant.dynamics.rows)
    throw DimensionError("coadapt_loop: CPN/EN/plant widths do not chain");

  std::vector<SessionMetrics> metrics;
  if (sched.sessions == 0) return metrics;  // no plant interaction at all

  std::vector<Vec> stim_data, behavior_data;
  Rng explore_rng = Rng(cfg.seed).fork(0xc0ad);
  // settle_from_rest probes a copy of the plant, so fork a fresh noise
  // stream per trial or every trial would replay the same process noise.
  const Rng plant_master = plant.rng;
  std::uint64_t trial = 0;
  double last_holdout = 0.0;

  for (int s = 1; s <= sched.sessions; ++s) {
    if (perturb) perturb(plant, s);

    // Practice block on the true plant: clean trials score this session's
    // behavior, jittered twins feed the EN so it sees off-policy stims.
    double mse = 0.0;
    for (std::size_t i = 0; i < intentions.rows; ++i) {
      const Vec stim = net_forward(cpn, mat_row(intentions, i));
      plant.rng = plant_master.fork(trial++);
      const KinematicState endpoint =
          plant::settle_from_rest(plant, stim, sched.settle_steps);
      mse += squared_error(mat_row(targets, i), endpoint);

      Vec probe = stim;
      for (auto& v : probe)
        v += explore_rng.normal(0.0, sched.collect_noise_std);
      plant.rng = plant_master.fork(trial++);
      behavior_data.push_back(
          plant::settle_from_rest(plant, probe, sched.settle_steps));
      stim_data.push_back(std::move(probe));
    }
    mse /= double(intentions.rows);

    // Refresh the surrogate on everything collected so far. The first
    // session always refreshes: an EN that has never seen this plant's data
    // is no training medium.
    if (s == 1 || s % sched.en_refresh_every == 0) {
      Mat stims(stim_data.size(), en.input_dim());
      Mat behaviors(behavior_data.size(), en.output_dim());
      for (std::size_t r = 0; r < stim_data.size(); ++r) {
        std::copy(stim_data[r].begin(), stim_data[r].end(), stims.row(r));
        std::copy(behavior_data[r].begin(), behavior_data[r].end(),
                  behaviors.row(r));
      }
      EnTrainResult refreshed = train_en(en, stims, behaviors, cfg);
      en = std::move(refreshed.en);
      last_holdout = refreshed.holdout_loss;
    }

    cpn = train_cpn_through_en(cpn, en, intentions, targets, cfg).cpn;
    metrics.push_back({s, mse, last_holdout});
  }
  return metrics;
}

}  // namespace coprosim::coproc
