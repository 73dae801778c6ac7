#include "coprosim/harness/scenario.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "coprosim/coproc.hpp"
#include "coprosim/decoders.hpp"
#include "coprosim/encoders.hpp"
#include "coprosim/errors.hpp"
#include "coprosim/kernels.hpp"
#include "coprosim/linalg.hpp"
#include "coprosim/mimo.hpp"
#include "coprosim/plant.hpp"
#include "coprosim/rng.hpp"
#include "coprosim/stats.hpp"

namespace coprosim::harness {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Config reading. Every helper reports by field path so a bad file tells the
// user exactly what to fix; unknown keys are errors rather than silently
// ignored typos.

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

const json* find_key(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

void check_keys(const json& obj, const std::string& prefix,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) known = known || it.key() == k;
    if (!known) fail(prefix + it.key(), "unknown field");
  }
}

double get_number(const json& obj, const char* key, const std::string& prefix,
                  double fallback) {
  const json* v = find_key(obj, key);
  if (!v) return fallback;
  if (!v->is_number()) fail(prefix + key, "must be a number");
  return v->get<double>();
}

int get_int(const json& obj, const char* key, const std::string& prefix,
            int fallback) {
  const json* v = find_key(obj, key);
  if (!v) return fallback;
  if (!v->is_number_integer()) fail(prefix + key, "must be an integer");
  const auto wide = v->get<long long>();
  if (wide < -2147483648LL || wide > 2147483647LL)
    fail(prefix + key, "out of range");
  return static_cast<int>(wide);
}

std::size_t get_size(const json& obj, const char* key,
                     const std::string& prefix, std::size_t fallback) {
  const json* v = find_key(obj, key);
  if (!v) return fallback;
  if (!v->is_number_unsigned())
    fail(prefix + key, "must be a nonnegative integer");
  return v->get<std::size_t>();
}

std::string get_string(const json& obj, const char* key,
                       const std::string& prefix, const std::string& fallback) {
  const json* v = find_key(obj, key);
  if (!v) return fallback;
  if (!v->is_string()) fail(prefix + key, "must be a string");
  return v->get<std::string>();
}

Vec get_number_array(const json& obj, const char* key,
                     const std::string& prefix, const Vec& fallback) {
  const json* v = find_key(obj, key);
  if (!v) return fallback;
  if (!v->is_array()) fail(prefix + key, "must be an array of numbers");
  Vec out;
  out.reserve(v->size());
  for (const auto& e : *v) {
    if (!e.is_number()) fail(prefix + key, "must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

PlantSpec parse_plant(const json& obj) {
  PlantSpec s;
  check_keys(obj, "plant.",
             {"state_dim", "input_channels", "gain", "process_noise",
              "lesion_mask"});
  s.state_dim = get_size(obj, "state_dim", "plant.", s.state_dim);
  s.input_channels = get_size(obj, "input_channels", "plant.", s.input_channels);
  s.gain = get_number(obj, "gain", "plant.", s.gain);
  s.process_noise = get_number(obj, "process_noise", "plant.", s.process_noise);
  s.lesion_mask = get_number_array(obj, "lesion_mask", "plant.", s.lesion_mask);
  return s;
}

DecoderSpec parse_decoder(const json& obj) {
  DecoderSpec s;
  check_keys(obj, "decoder.",
             {"neural_channels", "noise_std", "calibration_samples"});
  s.neural_channels =
      get_size(obj, "neural_channels", "decoder.", s.neural_channels);
  s.noise_std = get_number(obj, "noise_std", "decoder.", s.noise_std);
  s.calibration_samples =
      get_int(obj, "calibration_samples", "decoder.", s.calibration_samples);
  return s;
}

EncoderSpec parse_encoder(const json& obj) {
  EncoderSpec s;
  check_keys(obj, "encoder.",
             {"fes_flexor_gain_ma_per_hz", "fes_flexor_threshold_hz",
              "fes_extensor_gain_ma_per_hz", "fes_extensor_threshold_hz",
              "fes_max_current_ma", "suppression_frequency_hz",
              "suppression_amplitude_ma"});
  s.fes_flexor_gain_ma_per_hz = get_number(
      obj, "fes_flexor_gain_ma_per_hz", "encoder.", s.fes_flexor_gain_ma_per_hz);
  s.fes_flexor_threshold_hz = get_number(
      obj, "fes_flexor_threshold_hz", "encoder.", s.fes_flexor_threshold_hz);
  s.fes_extensor_gain_ma_per_hz =
      get_number(obj, "fes_extensor_gain_ma_per_hz", "encoder.",
                 s.fes_extensor_gain_ma_per_hz);
  s.fes_extensor_threshold_hz = get_number(
      obj, "fes_extensor_threshold_hz", "encoder.", s.fes_extensor_threshold_hz);
  s.fes_max_current_ma =
      get_number(obj, "fes_max_current_ma", "encoder.", s.fes_max_current_ma);
  s.suppression_frequency_hz = get_number(
      obj, "suppression_frequency_hz", "encoder.", s.suppression_frequency_hz);
  s.suppression_amplitude_ma = get_number(
      obj, "suppression_amplitude_ma", "encoder.", s.suppression_amplitude_ma);
  return s;
}

CoprocSpec parse_coproc(const json& obj) {
  CoprocSpec s;
  check_keys(obj, "coprocessor.",
             {"hidden", "epochs", "learning_rate", "batch_size",
              "en_refresh_every", "settle_steps", "collect_noise_std",
              "perturb_session", "perturb_gain"});
  s.hidden = get_size(obj, "hidden", "coprocessor.", s.hidden);
  s.epochs = get_int(obj, "epochs", "coprocessor.", s.epochs);
  s.learning_rate =
      get_number(obj, "learning_rate", "coprocessor.", s.learning_rate);
  s.batch_size = get_int(obj, "batch_size", "coprocessor.", s.batch_size);
  s.en_refresh_every =
      get_int(obj, "en_refresh_every", "coprocessor.", s.en_refresh_every);
  s.settle_steps = get_int(obj, "settle_steps", "coprocessor.", s.settle_steps);
  s.collect_noise_std =
      get_number(obj, "collect_noise_std", "coprocessor.", s.collect_noise_std);
  s.perturb_session =
      get_int(obj, "perturb_session", "coprocessor.", s.perturb_session);
  s.perturb_gain = get_number(obj, "perturb_gain", "coprocessor.", s.perturb_gain);
  return s;
}

ConditioningSpec parse_conditioning(const json& obj) {
  ConditioningSpec s;
  check_keys(obj, "conditioning.", {"delay_ms", "duration_ms", "neurons"});
  s.delay_ms = get_number(obj, "delay_ms", "conditioning.", s.delay_ms);
  s.duration_ms = get_number(obj, "duration_ms", "conditioning.", s.duration_ms);
  s.neurons = get_size(obj, "neurons", "conditioning.", s.neurons);
  return s;
}

BridgeSpec parse_bridge(const json& obj) {
  BridgeSpec s;
  check_keys(obj, "bridge.",
             {"inputs", "outputs", "kernel_bins", "feedback_bins", "train_bins",
              "test_bins", "input_rate"});
  s.inputs = get_size(obj, "inputs", "bridge.", s.inputs);
  s.outputs = get_size(obj, "outputs", "bridge.", s.outputs);
  s.kernel_bins = get_size(obj, "kernel_bins", "bridge.", s.kernel_bins);
  s.feedback_bins = get_size(obj, "feedback_bins", "bridge.", s.feedback_bins);
  s.train_bins = get_size(obj, "train_bins", "bridge.", s.train_bins);
  s.test_bins = get_size(obj, "test_bins", "bridge.", s.test_bins);
  s.input_rate = get_number(obj, "input_rate", "bridge.", s.input_rate);
  return s;
}

// ---------------------------------------------------------------------------
// Shared fixture pieces.

Mat gaussian_mat(std::size_t rows, std::size_t cols, double scale, Rng& rng) {
  Mat m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  return m;
}

Vec mat_row(const Mat& m, std::size_t i) {
  Vec r(m.cols);
  for (std::size_t j = 0; j < m.cols; ++j) r[j] = m(i, j);
  return r;
}

// Intention directions for reach-style scenarios: the canonical center-out
// ring in 2-D, unit Gaussians otherwise.
Mat reach_directions(std::size_t count, std::size_t dim, Rng& rng) {
  Mat dirs(count, dim);
  for (std::size_t k = 0; k < count; ++k) {
    if (dim == 2) {
      const double ang = 2.0 * 3.14159265358979323846 * double(k) / double(count);
      dirs(k, 0) = std::cos(ang);
      dirs(k, 1) = std::sin(ang);
    } else {
      double norm2 = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        dirs(k, j) = rng.normal();
        norm2 += dirs(k, j) * dirs(k, j);
      }
      const double inv = 1.0 / std::sqrt(std::max(norm2, 1e-12));
      for (std::size_t j = 0; j < dim; ++j) dirs(k, j) *= inv;
    }
  }
  return dirs;
}

coproc::LayeredNet make_net(std::size_t in, std::size_t hidden, std::size_t out,
                            std::uint64_t seed) {
  if (hidden == 0)
    return coproc::LayeredNet::make({in, out}, {coproc::Activation::identity},
                                    seed);
  return coproc::LayeredNet::make(
      {in, hidden, out},
      {coproc::Activation::sigmoid, coproc::Activation::identity}, seed);
}

// Sparse random spiking network with three labeled two-neuron sites, the
// standard bench for conditioning experiments: "rec" is recorded, "stim"
// receives the delayed pulses, "ctrl" is a bystander pathway.
plant::SpikingNetwork conditioning_network(std::size_t neurons,
                                           std::uint64_t seed) {
  plant::SpikingNetwork net = plant::SpikingNetwork::make(neurons, seed);
  Rng wiring(splitmix64(seed));
  net.weights = Mat(neurons, neurons);
  for (std::size_t i = 0; i < neurons; ++i)
    for (std::size_t j = 0; j < neurons; ++j)
      if (i != j && wiring.uniform() < 0.25)
        net.weights(i, j) = wiring.uniform(0.02, 0.12);
  net.sites = {{"rec", {0, 1}}, {"stim", {2, 3}}, {"ctrl", {4, 5}}};
  net.readout = Mat(2, neurons);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < neurons; ++j)
      net.readout(i, j) = wiring.uniform(-1.0, 1.0);
  net.validate();
  return net;
}

double cosine2(const std::array<double, 2>& a, const std::array<double, 2>& b) {
  const double na = std::sqrt(a[0] * a[0] + a[1] * a[1]);
  const double nb = std::sqrt(b[0] * b[0] + b[1] * b[1]);
  if (na < 1e-12 || nb < 1e-12) return 0.0;
  return (a[0] * b[0] + a[1] * b[1]) / (na * nb);
}

// Writes one numeric CSV cell; all artifact numbers go through the same
// 17-digit rendering so reruns are byte-identical.
void append_cell(std::string& csv, double v, bool last) {
  csv += format_g17(v);
  csv += last ? '\n' : ',';
}

// Registers a weight file that persist_weights already wrote to disk, so it
// shows up in the manifest with its hash like every other artifact.
void record_weight_file(RunArtifact& art, const std::string& name) {
  emit_file(art, name, read_file(art.dir + "/" + name));
}

// ---------------------------------------------------------------------------
// prosthetic_control: Kalman velocity decoding closing a cursor/arm loop.
//
// A tuned population (frame = T v + noise) is observed while the subject
// imagines center-out reaches; a Kalman filter fit on an open-loop
// calibration block then decodes intended velocity online, and the decoded
// velocity steers the plant through the pseudoinverse of its *intact* input
// map. Lesions apply to the plant only — the controller keeps its healthy
// model, which is exactly why behavioral error grows when pathways drop out.

void run_prosthetic_control(const ScenarioConfig& cfg, RunArtifact& art) {
  const std::size_t n = cfg.plant.state_dim;
  const std::size_t m = cfg.plant.input_channels;
  const std::size_t channels = cfg.decoder.neural_channels;
  if (m < n)
    fail("plant.input_channels",
         "prosthetic_control steers through the pseudoinverse of the input "
         "map and needs at least state_dim channels");
  if (channels < n)
    fail("decoder.neural_channels",
         "needs at least state_dim channels to observe every velocity "
         "component");

  Rng master(cfg.seed);
  Rng setup = master.fork(1);

  plant::MotorPlant p;
  p.dynamics = Mat(n, n);
  for (std::size_t i = 0; i < n; ++i) p.dynamics(i, i) = cfg.plant.gain;
  p.input = gaussian_mat(n, m, 0.6 / std::sqrt(double(m)), setup);
  p.lesion_mask =
      cfg.plant.lesion_mask.empty() ? Vec(m, 1.0) : cfg.plant.lesion_mask;
  p.process_noise = cfg.plant.process_noise;
  p.state = Vec(n, 0.0);
  p.validate();

  Mat tuning = gaussian_mat(channels, n, 1.0, setup);

  // Open-loop calibration: a smooth latent velocity (stationary AR(1)) and
  // its noisy population readout, the pairs a clinician would record while
  // the subject watches a moving cursor.
  Rng cal = master.fork(2);
  const double kVelocityMemory = 0.9;
  const double kVelocityStd = 0.25;
  const int samples = cfg.decoder.calibration_samples;
  std::vector<KinematicState> cal_states;
  std::vector<NeuralFrame> cal_frames;
  cal_states.reserve(std::size_t(samples));
  cal_frames.reserve(std::size_t(samples));
  Vec v(n, 0.0);
  const double innovation =
      kVelocityStd * std::sqrt(1.0 - kVelocityMemory * kVelocityMemory);
  for (int t = 0; t < samples; ++t) {
    for (std::size_t i = 0; i < n; ++i)
      v[i] = kVelocityMemory * v[i] + innovation * cal.normal();
    NeuralFrame f(channels);
    for (std::size_t j = 0; j < channels; ++j)
      f[j] = linalg::dot(mat_row(tuning, j), v) +
             cfg.decoder.noise_std * cal.normal();
    cal_states.push_back(v);
    cal_frames.push_back(f);
  }
  decoders::KalmanModel kf = decoders::fit_kalman(cal_states, cal_frames);
  const Vec prior_mean = kf.mean;
  const Mat prior_cov = kf.cov;

  // Controller's inverse model of the healthy input map: a = B^+ drive moves
  // the state by exactly `drive` when nothing is lesioned.
  const Mat bt = linalg::transpose(p.input);
  const Mat pinv = linalg::matmul(bt, linalg::inverse(linalg::matmul(p.input, bt)));

  const int kTrials = 8;
  const int kSteps = 40;
  const double kReachGain = 0.2;   // intended velocity = gain * (target - pos)
  const double kSuccessRadius = 0.15;
  Mat targets = reach_directions(kTrials, n, setup);
  for (std::size_t k = 0; k < targets.rows; ++k)
    for (std::size_t j = 0; j < targets.cols; ++j) targets(k, j) *= 0.9;

  std::string traj = "session,trial,step";
  for (std::size_t j = 0; j < n; ++j) traj += ",target_" + std::to_string(j);
  for (std::size_t j = 0; j < n; ++j) traj += ",pos_" + std::to_string(j);
  traj += '\n';

  MetricsTable table;
  table.columns = {{"session", "index"},
                   {"behavioral_mse", "a.u.^2"},
                   {"decode_mse", "a.u.^2"},
                   {"success_rate", "fraction"}};

  for (int s = 1; s <= cfg.sessions; ++s) {
    double endpoint_sq = 0.0;
    double decode_sq = 0.0;
    long decode_terms = 0;
    int successes = 0;
    for (int trial = 0; trial < kTrials; ++trial) {
      const std::uint64_t stream =
          (std::uint64_t(s) << 20) + std::uint64_t(trial);
      p.state = Vec(n, 0.0);
      p.rng = master.fork(0x100000 + stream);
      Rng frame_rng = master.fork(0x200000 + stream);
      kf.mean = prior_mean;
      kf.cov = prior_cov;
      const Vec target = mat_row(targets, std::size_t(trial));
      for (int step = 0; step < kSteps; ++step) {
        Vec v_true(n);
        for (std::size_t i = 0; i < n; ++i)
          v_true[i] = kReachGain * (target[i] - p.state[i]);
        NeuralFrame f(channels);
        for (std::size_t j = 0; j < channels; ++j)
          f[j] = linalg::dot(mat_row(tuning, j), v_true) +
                 cfg.decoder.noise_std * frame_rng.normal();
        const Vec v_hat = decoders::kalman_step(kf, f).mean;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = v_hat[i] - v_true[i];
          decode_sq += d * d;
        }
        decode_terms += long(n);
        Vec drive(n);
        for (std::size_t i = 0; i < n; ++i)
          drive[i] = (1.0 - cfg.plant.gain) * p.state[i] + v_hat[i];
        plant::plant_step(p, linalg::matvec(pinv, drive));
        traj += format_g17(double(s)) + ',' + format_g17(double(trial)) + ',' +
                format_g17(double(step));
        for (std::size_t j = 0; j < n; ++j) {
          traj += ',';
          traj += format_g17(target[j]);
        }
        for (std::size_t j = 0; j < n; ++j) {
          traj += ',';
          traj += format_g17(p.state[j]);
        }
        traj += '\n';
      }
      double dist_sq = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = p.state[i] - target[i];
        dist_sq += d * d;
      }
      endpoint_sq += dist_sq;
      if (std::sqrt(dist_sq) <= kSuccessRadius) ++successes;
    }
    table.rows.push_back({double(s), endpoint_sq / double(kTrials),
                          decode_sq / double(decode_terms),
                          double(successes) / double(kTrials)});
  }

  art.metrics = table;
  emit_file(art, "trajectories.csv", traj);
}

// ---------------------------------------------------------------------------
// limb_reanimation: cortical rate routed around a paralyzed pathway into FES.
//
// A single wrist angle is driven by antagonist muscles. The subject's
// cortical rate rises with flexion error; the rate-proportional FES law
// turns it into flexor current above its upper threshold and extensor
// current below its lower one, with a dead band in between. Commands are
// deferred into the stimulation half of the record/stimulate interleave so
// the (simulated) amplifier never sees its own artifact.

void run_limb_reanimation(const ScenarioConfig& cfg, RunArtifact& art) {
  if (cfg.plant.state_dim != 1)
    fail("plant.state_dim",
         "limb_reanimation models one wrist angle; set state_dim to 1");
  if (cfg.plant.input_channels != 2)
    fail("plant.input_channels",
         "limb_reanimation drives a flexor/extensor pair; set input_channels "
         "to 2");

  const encoders::FesParams fes{cfg.encoder.fes_flexor_gain_ma_per_hz,
                                cfg.encoder.fes_flexor_threshold_hz,
                                cfg.encoder.fes_extensor_gain_ma_per_hz,
                                cfg.encoder.fes_extensor_threshold_hz,
                                cfg.encoder.fes_max_current_ma};
  const double kBaselineHz = 18.0;  // inside the FES dead band
  const double kRateGainHzPerUnit = 140.0;
  const double kRateCapHz = 80.0;
  const double kFlexorTorquePerMa = 0.012;
  const double kExtensorTorquePerMa = 0.010;
  const double kSuccessBand = 0.1;
  const int kTrials = 6;
  const int kSteps = 80;

  plant::MotorPlant wrist;
  wrist.dynamics = Mat(1, 1);
  wrist.dynamics(0, 0) = cfg.plant.gain;
  wrist.input = Mat(1, 2);
  wrist.input(0, 0) = kFlexorTorquePerMa;
  wrist.input(0, 1) = -kExtensorTorquePerMa;
  wrist.lesion_mask =
      cfg.plant.lesion_mask.empty() ? Vec(2, 1.0) : cfg.plant.lesion_mask;
  wrist.process_noise = cfg.plant.process_noise;
  wrist.state = Vec(1, 0.0);
  wrist.validate();

  Rng master(cfg.seed);
  const encoders::InterleaveSchedule gate{};
  std::vector<StimCommand> log;

  MetricsTable table;
  table.columns = {{"session", "index"},
                   {"tracking_mse", "a.u.^2"},
                   {"mean_flexor_ma", "mA"},
                   {"mean_extensor_ma", "mA"},
                   {"success_rate", "fraction"}};

  for (int s = 1; s <= cfg.sessions; ++s) {
    double err_sq = 0.0;
    double flexor_sum = 0.0;
    double extensor_sum = 0.0;
    int successes = 0;
    for (int trial = 0; trial < kTrials; ++trial) {
      // Fixed ladder of hold targets, identical across sessions so the
      // session rows are comparable.
      const double target = 0.25 + 0.4 * double(trial) / double(kTrials - 1);
      const std::uint64_t stream =
          (std::uint64_t(s) << 20) + std::uint64_t(trial);
      wrist.state = Vec(1, 0.0);
      wrist.rng = master.fork(0x100000 + stream);
      Rng rate_noise = master.fork(0x200000 + stream);
      for (int step = 0; step < kSteps; ++step) {
        const double error = target - wrist.state[0];
        double rate = kBaselineHz + kRateGainHzPerUnit * error;
        rate = std::clamp(rate, 0.0, kRateCapHz);
        const double measured =
            std::max(0.0, rate + cfg.decoder.noise_std * rate_noise.normal());
        const double flexor_ma = encoders::fes_flexor(measured, fes);
        const double extensor_ma = encoders::fes_extensor(measured, fes);

        const double t_ms =
            (double((std::int64_t(s) - 1) * kTrials + trial) * kSteps + step) *
            wrist.dt_ms;
        const double t_emit = encoders::defer_to_stim_window(t_ms, gate);
        PulseTrain burst;
        burst.frequency_hz = 40.0;
        burst.pulse_width_us = 300.0;
        burst.duration_ms = wrist.dt_ms;
        burst.biphasic = true;
        if (flexor_ma > 0.0) {
          burst.amplitude_ma = flexor_ma;
          log.push_back({t_emit, 0, burst});
        }
        if (extensor_ma > 0.0) {
          burst.amplitude_ma = extensor_ma;
          log.push_back({t_emit, 1, burst});
        }

        plant::plant_step(wrist, {flexor_ma, extensor_ma});
        const double post = target - wrist.state[0];
        err_sq += post * post;
        flexor_sum += flexor_ma;
        extensor_sum += extensor_ma;
      }
      if (std::abs(target - wrist.state[0]) <= kSuccessBand) ++successes;
    }
    const double ticks = double(kTrials) * double(kSteps);
    table.rows.push_back({double(s), err_sq / ticks, flexor_sum / ticks,
                          extensor_sum / ticks,
                          double(successes) / double(kTrials)});
  }

  art.metrics = table;
  emit_file(art, "stim_log.csv", stim_log_to_csv(log));
}

// ---------------------------------------------------------------------------
// plasticity_induction: spike-triggered stimulation rewires a recurrent net.
//
// Each session is an independent replicate: fresh network, probe the output
// effects of the recorded and stimulated sites, run the activity-dependent
// pairing for the configured duration, probe again. The conditioned pathway
// (rec -> stim) should strengthen while a bystander pathway onto the same
// target (ctrl -> stim) drifts, and the recorded site's evoked output effect
// should rotate toward the stimulated site's.

void run_plasticity_induction(const ScenarioConfig& cfg, RunArtifact& art) {
  Rng master(cfg.seed);

  MetricsTable table;
  table.columns = {{"session", "index"},
                   {"conditioned_delta", "weight"},
                   {"control_delta", "weight"},
                   {"cosine_pre", "1"},
                   {"cosine_post", "1"},
                   {"rec_spikes", "count"},
                   {"pulses", "count"}};

  for (int s = 1; s <= cfg.sessions; ++s) {
    Rng replicate = master.fork(std::uint64_t(s));
    plant::SpikingNetwork net =
        conditioning_network(cfg.conditioning.neurons, replicate.next_u64());

    const plant::OutputEffect rec_pre = plant::output_effect_map(net, "rec");
    const plant::OutputEffect stim_pre = plant::output_effect_map(net, "stim");

    const coproc::ConditioningLog cond = coproc::identity_coprocessor(
        net, "rec", "stim", cfg.conditioning.delay_ms,
        cfg.conditioning.duration_ms, replicate.next_u64());

    const plant::OutputEffect rec_post = plant::output_effect_map(net, "rec");
    const plant::OutputEffect stim_post = plant::output_effect_map(net, "stim");

    const auto delta = [&cond](const std::string& pair) {
      const std::vector<double>& w = cond.mean_weight.at(pair);
      return w.back() - w.front();
    };
    table.rows.push_back({double(s), delta("rec->stim"), delta("ctrl->stim"),
                          cosine2(rec_pre.effect, stim_pre.effect),
                          cosine2(rec_post.effect, stim_post.effect),
                          double(cond.rec_spikes),
                          double(cond.pulse_ms.size())});

    // The weight trajectories and pulse pairings of the first replicate are
    // worth keeping whole; the rest are summarized by the metrics row.
    if (s == 1) {
      std::string weights = "t_ms";
      std::vector<std::string> pairs;
      for (const auto& kv : cond.mean_weight) {
        pairs.push_back(kv.first);
        std::string col = kv.first;
        const std::size_t arrow = col.find("->");
        col.replace(arrow, 2, "_to_");
        weights += ',' + col;
      }
      weights += '\n';
      for (std::size_t t = 0; t < cond.t_ms.size(); ++t) {
        append_cell(weights, cond.t_ms[t], false);
        for (std::size_t c = 0; c < pairs.size(); ++c)
          append_cell(weights, cond.mean_weight.at(pairs[c])[t],
                      c + 1 == pairs.size());
      }
      emit_file(art, "conditioning_weights.csv", weights);

      std::string pulses = "rec_spike_ms,pulse_ms\n";
      for (std::size_t i = 0; i < cond.pulse_ms.size(); ++i) {
        append_cell(pulses, cond.rec_spike_ms[i], false);
        append_cell(pulses, cond.pulse_ms[i], true);
      }
      emit_file(art, "pulses.csv", pulses);
    }
  }

  art.metrics = table;
}

// ---------------------------------------------------------------------------
// memory_bridge: fit an input/output spiking bank and play predictions back.
//
// A hidden "donor" bank generates region-B spikes from region-A spikes; the
// bridge only sees the recorded trains, fits its own bank on the training
// span, and is scored on the held-out span: one-step-ahead AUC, kernel
// recovery against the generator, and the information its thresholded
// predictions carry about the real output. Predicted spikes are also pushed
// through the stimulation encoder, which is what an implanted bridge would
// actually deliver.

void run_memory_bridge(const ScenarioConfig& cfg, RunArtifact& art) {
  const BridgeSpec& b = cfg.bridge;
  const std::size_t total = b.train_bins + b.test_bins;
  const std::size_t chunk = b.test_bins / std::size_t(cfg.sessions);
  if (chunk < 50)
    fail("sessions",
         "leaves fewer than 50 evaluation bins per session; lower sessions or "
         "raise bridge.test_bins");

  Rng master(cfg.seed);
  Rng truth_rng = master.fork(1);

  std::vector<mimo::MisoModel> truth(b.outputs);
  for (std::size_t o = 0; o < b.outputs; ++o) {
    mimo::MisoModel& m = truth[o];
    m.bin_ms = 2.0;
    m.sigma = 1.0;
    m.theta = truth_rng.uniform(0.55, 0.85);
    m.k.resize(b.inputs);
    for (std::size_t c = 0; c < b.inputs; ++c) {
      Vec k(b.kernel_bins);
      const double amp =
          truth_rng.uniform(0.9, 1.5) * (truth_rng.uniform() < 0.5 ? -1.0 : 1.0);
      const double tau = truth_rng.uniform(2.0, 5.0);
      const double omega = truth_rng.uniform(0.4, 0.9);
      const double phase = truth_rng.uniform(0.0, 3.14159265358979323846);
      for (std::size_t j = 0; j < b.kernel_bins; ++j)
        k[j] = amp * std::exp(-double(j) / tau) * std::cos(omega * double(j) + phase);
      m.k[c] = k;
    }
    m.h = Vec(b.feedback_bins);
    const double h0 = truth_rng.uniform(0.6, 1.1);
    const double tau_h = truth_rng.uniform(1.5, 3.0);
    for (std::size_t j = 0; j < b.feedback_bins; ++j)
      m.h[j] = -h0 * std::exp(-double(j) / tau_h);
    m.validate();
  }

  SpikeTrain x;
  x.bin_ms = 2.0;
  x.channels.assign(b.inputs, std::vector<std::uint8_t>(total, 0));
  Rng input_rng = master.fork(2);
  for (std::size_t c = 0; c < b.inputs; ++c)
    for (std::size_t t = 0; t < total; ++t)
      x.channels[c][t] = input_rng.uniform() < b.input_rate ? 1 : 0;

  SpikeTrain y;
  y.bin_ms = 2.0;
  y.channels.resize(b.outputs);
  Rng sim_rng = master.fork(3);
  for (std::size_t o = 0; o < b.outputs; ++o)
    y.channels[o] = mimo::miso_simulate(truth[o], x, sim_rng.next_u64()).channels[0];

  const auto slice = [](const SpikeTrain& t, std::size_t from, std::size_t to) {
    SpikeTrain out;
    out.bin_ms = t.bin_ms;
    out.channels.reserve(t.channels.size());
    for (const auto& ch : t.channels)
      out.channels.emplace_back(ch.begin() + std::ptrdiff_t(from),
                                ch.begin() + std::ptrdiff_t(to));
    return out;
  };

  const std::vector<mimo::MisoModel> fit =
      mimo::mimo_fit(slice(x, 0, b.train_bins), slice(y, 0, b.train_bins),
                     b.kernel_bins, b.feedback_bins);

  // Kernel recovery: worst Pearson correlation across every feedforward and
  // feedback kernel, constant across sessions (one fit per run).
  double kernel_corr = 1.0;
  for (std::size_t o = 0; o < b.outputs; ++o) {
    for (std::size_t c = 0; c < b.inputs; ++c)
      kernel_corr = std::min(
          kernel_corr, stats::pearson(truth[o].k[c].data(), fit[o].k[c].data(),
                                      b.kernel_bins));
    kernel_corr = std::min(kernel_corr, stats::pearson(truth[o].h.data(),
                                                       fit[o].h.data(),
                                                       b.feedback_bins));
  }

  MetricsTable table;
  table.columns = {{"session", "index"},
                   {"auc", "1"},
                   {"kernel_corr", "1"},
                   {"prediction_mi", "bits"},
                   {"output_rate", "spikes/bin"}};

  for (int s = 1; s <= cfg.sessions; ++s) {
    const std::size_t from = b.train_bins + std::size_t(s - 1) * chunk;
    const std::size_t to = from + chunk;
    double auc_sum = 0.0;
    double mi_sum = 0.0;
    double rate_sum = 0.0;
    for (std::size_t o = 0; o < b.outputs; ++o) {
      Vec scores;
      std::vector<int> labels;
      scores.reserve(chunk);
      labels.reserve(chunk);
      for (std::size_t t = from; t < to; ++t) {
        const SpikeTrain hx = slice(x, t - b.kernel_bins, t);
        SpikeTrain hy;
        hy.bin_ms = y.bin_ms;
        hy.channels.push_back(std::vector<std::uint8_t>(
            y.channels[o].begin() + std::ptrdiff_t(t - b.feedback_bins),
            y.channels[o].begin() + std::ptrdiff_t(t)));
        const mimo::Potential drive = mimo::miso_potential(fit[o], hx, hy);
        scores.push_back(mimo::miso_spike_prob(fit[o], drive.u, drive.a));
        labels.push_back(int(y.channels[o][t]));
      }
      auc_sum += compute_roc(scores, labels).auc;

      // Hard predictions for the information score: split at the mean
      // predicted probability (deterministic, and keeps both sides populated
      // even when the unit's rate sits far from 1/2).
      double mean_p = 0.0;
      for (double p : scores) mean_p += p;
      mean_p /= double(scores.size());
      std::vector<std::uint8_t> hard(scores.size());
      std::vector<std::uint8_t> truth_bits(labels.size());
      for (std::size_t i = 0; i < scores.size(); ++i) {
        hard[i] = scores[i] > mean_p ? 1 : 0;
        truth_bits[i] = std::uint8_t(labels[i]);
      }
      mi_sum += mutual_information(hard, truth_bits);

      double ones = 0.0;
      for (int l : labels) ones += l;
      rate_sum += ones / double(labels.size());
    }
    table.rows.push_back({double(s), auc_sum / double(b.outputs), kernel_corr,
                          mi_sum / double(b.outputs),
                          rate_sum / double(b.outputs)});
  }

  art.metrics = table;

  persist_weights(fit, art.dir + "/mimo.json");
  record_weight_file(art, "mimo.json");

  // Closed-loop playback over the whole held-out span: simulate the fitted
  // bank on the test inputs and encode each predicted spike as a pulse.
  SpikeTrain predicted;
  predicted.bin_ms = x.bin_ms;
  predicted.channels.resize(b.outputs);
  Rng playback_rng = master.fork(4);
  const SpikeTrain x_test = slice(x, b.train_bins, total);
  for (std::size_t o = 0; o < b.outputs; ++o)
    predicted.channels[o] =
        mimo::miso_simulate(fit[o], x_test, playback_rng.next_u64()).channels[0];
  emit_file(art, "spikes_pred.csv", spike_train_to_csv(predicted));

  mimo::MimoStimConfig stim;
  for (std::size_t o = 0; o < b.outputs; ++o)
    stim.channel_map[o] = int(o);
  emit_file(art, "stim_log.csv",
            stim_log_to_csv(mimo::mimo_stim_encode(predicted, stim)));
}

// ---------------------------------------------------------------------------
// seizure_suppression: classify population bursts, stimulate on detection.
//
// The co-processor is trained open-loop on labeled activity: quiet frames
// map to the all-zero pattern, burst frames to the fixed suppression
// pattern. At run time each frame is scored by which pattern the network
// output is closer to; crossing toward the suppression pattern raises an
// alarm and emits one high-frequency pulse train.

void run_seizure_suppression(const ScenarioConfig& cfg, RunArtifact& art) {
  const std::size_t channels = cfg.decoder.neural_channels;
  if (channels < 4)
    fail("decoder.neural_channels",
         "seizure_suppression elevates the first three channels during a "
         "burst and needs at least 4");

  Rng master(cfg.seed);
  Rng data_rng = master.fork(1);

  const Vec suppression = {1.0, 0.0, 0.8, 0.0};
  const auto draw_frame = [&channels](Rng& rng, bool burst) {
    Vec f(channels);
    for (std::size_t j = 0; j < channels; ++j) {
      const bool elevated = burst && j < 3;
      const double mean = elevated ? 1.6 : 0.4;
      const double spread = elevated ? 0.3 : 0.15;
      f[j] = std::max(0.0, mean + spread * rng.normal());
    }
    return f;
  };

  const int kTrainPerClass = 80;
  Mat train_x(std::size_t(2 * kTrainPerClass), channels);
  Mat train_y(std::size_t(2 * kTrainPerClass), suppression.size());
  for (int i = 0; i < 2 * kTrainPerClass; ++i) {
    const bool burst = (i % 2) == 1;
    const Vec f = draw_frame(data_rng, burst);
    for (std::size_t j = 0; j < channels; ++j) train_x(std::size_t(i), j) = f[j];
    for (std::size_t j = 0; j < suppression.size(); ++j)
      train_y(std::size_t(i), j) = burst ? suppression[j] : 0.0;
  }

  coproc::LayeredNet cpn = make_net(channels, cfg.coproc.hidden,
                                    suppression.size(), master.fork(2).next_u64());
  coproc::TrainConfig tc;
  tc.learning_rate = cfg.coproc.learning_rate;
  tc.epochs = cfg.coproc.epochs;
  tc.batch_size = std::size_t(cfg.coproc.batch_size);
  tc.seed = master.fork(3).next_u64();
  const coproc::CpnTrainResult fit = coproc::train_cpn_supervised(
      cpn, train_x, train_y, tc);
  cpn = fit.cpn;

  std::string curve = "epoch,loss\n";
  for (std::size_t e = 0; e < fit.epoch_loss.size(); ++e) {
    append_cell(curve, double(e + 1), false);
    append_cell(curve, fit.epoch_loss[e], true);
  }
  emit_file(art, "training_loss.csv", curve);

  persist_weights(cpn, art.dir + "/cpn.json");
  record_weight_file(art, "cpn.json");

  PulseTrain dbs;
  dbs.frequency_hz = cfg.encoder.suppression_frequency_hz;
  dbs.amplitude_ma = cfg.encoder.suppression_amplitude_ma;
  dbs.pulse_width_us = 90.0;
  dbs.duration_ms = 100.0;
  dbs.biphasic = true;
  dbs.validate();

  const double kFrameMs = 50.0;
  const int kEvalFrames = 120;
  const double kBurstRate = 0.35;
  const double norm_sq = linalg::dot(suppression, suppression);
  std::vector<StimCommand> log;

  MetricsTable table;
  table.columns = {{"session", "index"},
                   {"auc", "1"},
                   {"accuracy", "fraction"},
                   {"false_alarm_rate", "fraction"},
                   {"detection_mi", "bits"},
                   {"stim_commands", "count"}};

  for (int s = 1; s <= cfg.sessions; ++s) {
    Rng eval_rng = master.fork(0x100 + std::uint64_t(s));
    const std::size_t frames_n = std::size_t(kEvalFrames);
    Vec scores(frames_n);
    std::vector<int> labels(frames_n);
    std::vector<std::uint8_t> alarm(frames_n);
    std::vector<std::uint8_t> truth_bits(frames_n);
    int commands = 0;
    int correct = 0;
    int false_alarms = 0;
    int quiet_frames = 0;
    for (int t = 0; t < kEvalFrames; ++t) {
      const bool burst = eval_rng.uniform() < kBurstRate;
      const Vec out = coproc::net_forward(cpn, draw_frame(eval_rng, burst));
      // ||out||^2 - ||out - pattern||^2: positive when the output is closer
      // to the suppression pattern than to the idle (all-zero) one.
      const double score = 2.0 * linalg::dot(out, suppression) - norm_sq;
      const bool detected = score > 0.0;
      scores[std::size_t(t)] = score;
      labels[std::size_t(t)] = burst ? 1 : 0;
      alarm[std::size_t(t)] = detected ? 1 : 0;
      truth_bits[std::size_t(t)] = burst ? 1 : 0;
      if (detected == burst) ++correct;
      if (!burst) {
        ++quiet_frames;
        if (detected) ++false_alarms;
      }
      if (detected) {
        const double t_ms =
            (double(s - 1) * kEvalFrames + double(t)) * kFrameMs;
        log.push_back({t_ms, 0, dbs});
        ++commands;
      }
    }
    table.rows.push_back({double(s), compute_roc(scores, labels).auc,
                          double(correct) / double(kEvalFrames),
                          quiet_frames == 0
                              ? 0.0
                              : double(false_alarms) / double(quiet_frames),
                          mutual_information(alarm, truth_bits),
                          double(commands)});
  }

  art.metrics = table;
  emit_file(art, "stim_log.csv", stim_log_to_csv(log));
}

// ---------------------------------------------------------------------------
// coadaptation: the full CPN/EN practice loop on a perturbable plant.

void run_coadaptation(const ScenarioConfig& cfg, RunArtifact& art) {
  const std::size_t n = cfg.plant.state_dim;
  const std::size_t m = cfg.plant.input_channels;

  Rng master(cfg.seed);
  Rng setup = master.fork(1);

  plant::MotorPlant p;
  p.dynamics = Mat(n, n);
  for (std::size_t i = 0; i < n; ++i) p.dynamics(i, i) = cfg.plant.gain;
  p.input = gaussian_mat(n, m, 0.4, setup);
  p.lesion_mask =
      cfg.plant.lesion_mask.empty() ? Vec(m, 1.0) : cfg.plant.lesion_mask;
  p.process_noise = cfg.plant.process_noise;
  p.state = Vec(n, 0.0);
  p.rng = master.fork(2);
  p.validate();

  coproc::LayeredNet cpn =
      make_net(n, cfg.coproc.hidden, m, master.fork(3).next_u64());
  coproc::LayeredNet en =
      make_net(m, cfg.coproc.hidden, n, master.fork(4).next_u64());

  const std::size_t kIntentions = 6;
  const Mat intentions = reach_directions(kIntentions, n, setup);
  Mat targets = intentions;
  for (std::size_t k = 0; k < targets.rows; ++k)
    for (std::size_t j = 0; j < targets.cols; ++j) targets(k, j) *= 0.5;

  coproc::CoadaptSchedule sched;
  sched.sessions = cfg.sessions;
  sched.en_refresh_every = cfg.coproc.en_refresh_every;
  sched.settle_steps = cfg.coproc.settle_steps;
  sched.collect_noise_std = cfg.coproc.collect_noise_std;

  coproc::TrainConfig tc;
  tc.learning_rate = cfg.coproc.learning_rate;
  tc.epochs = cfg.coproc.epochs;
  tc.batch_size = std::size_t(cfg.coproc.batch_size);
  tc.seed = master.fork(5).next_u64();
  tc.line_search = true;

  std::function<void(plant::MotorPlant&, int)> perturb;
  if (cfg.coproc.perturb_session > 0) {
    const int hit = cfg.coproc.perturb_session;
    const double gain = cfg.coproc.perturb_gain;
    perturb = [hit, gain](plant::MotorPlant& pl, int session) {
      if (session != hit) return;
      for (std::size_t i = 0; i < pl.input.rows; ++i)
        for (std::size_t j = 0; j < pl.input.cols; ++j) pl.input(i, j) *= gain;
    };
  }

  const std::vector<coproc::SessionMetrics> history =
      coproc::coadapt_loop(cpn, en, p, intentions, targets, sched, tc, perturb);

  MetricsTable table;
  table.columns = {{"session", "index"},
                   {"behavioral_mse", "a.u.^2"},
                   {"en_holdout_loss", "a.u.^2"}};
  for (const coproc::SessionMetrics& row : history)
    table.rows.push_back(
        {double(row.session), row.behavioral_mse, row.en_holdout_loss});
  art.metrics = table;

  persist_weights(cpn, art.dir + "/cpn.json");
  record_weight_file(art, "cpn.json");
  persist_weights(en, art.dir + "/en.json");
  record_weight_file(art, "en.json");
}

}  // namespace

// ---------------------------------------------------------------------------
// Spec validation.

void PlantSpec::validate() const {
  if (state_dim < 1 || state_dim > 64)
    fail("plant.state_dim", "must be in [1, 64]");
  if (input_channels < 1 || input_channels > 64)
    fail("plant.input_channels", "must be in [1, 64]");
  if (!(std::abs(gain) < 1.0))
    fail("plant.gain", "must lie strictly inside (-1, 1) for a stable plant");
  if (!(process_noise >= 0.0) || !std::isfinite(process_noise))
    fail("plant.process_noise", "must be a nonnegative number");
  if (!lesion_mask.empty()) {
    if (lesion_mask.size() != input_channels)
      fail("plant.lesion_mask",
           "needs one entry per input channel (" +
               std::to_string(input_channels) + ")");
    for (double g : lesion_mask)
      if (!(g >= 0.0 && g <= 1.0))
        fail("plant.lesion_mask", "entries must lie in [0, 1]");
  }
}

void DecoderSpec::validate() const {
  if (neural_channels < 1 || neural_channels > 512)
    fail("decoder.neural_channels", "must be in [1, 512]");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std))
    fail("decoder.noise_std", "must be a nonnegative number");
  if (calibration_samples < 10)
    fail("decoder.calibration_samples", "must be at least 10");
}

void EncoderSpec::validate() const {
  const auto nonneg = [](double v, const char* field) {
    if (!(v >= 0.0) || !std::isfinite(v))
      fail(std::string("encoder.") + field, "must be a nonnegative number");
  };
  nonneg(fes_flexor_gain_ma_per_hz, "fes_flexor_gain_ma_per_hz");
  nonneg(fes_extensor_gain_ma_per_hz, "fes_extensor_gain_ma_per_hz");
  nonneg(suppression_amplitude_ma, "suppression_amplitude_ma");
  if (!std::isfinite(fes_flexor_threshold_hz))
    fail("encoder.fes_flexor_threshold_hz", "must be a finite number");
  if (!std::isfinite(fes_extensor_threshold_hz))
    fail("encoder.fes_extensor_threshold_hz", "must be a finite number");
  if (!(fes_max_current_ma > 0.0) || !std::isfinite(fes_max_current_ma))
    fail("encoder.fes_max_current_ma", "must be a positive number");
  if (!(suppression_frequency_hz > 0.0) ||
      !std::isfinite(suppression_frequency_hz))
    fail("encoder.suppression_frequency_hz", "must be a positive number");
}

void CoprocSpec::validate() const {
  if (hidden > 256) fail("coprocessor.hidden", "must be at most 256");
  if (epochs < 1) fail("coprocessor.epochs", "must be at least 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    fail("coprocessor.learning_rate", "must be a positive number");
  if (batch_size < 1) fail("coprocessor.batch_size", "must be at least 1");
  if (en_refresh_every < 1)
    fail("coprocessor.en_refresh_every", "must be at least 1");
  if (settle_steps < 1) fail("coprocessor.settle_steps", "must be at least 1");
  if (!(collect_noise_std >= 0.0) || !std::isfinite(collect_noise_std))
    fail("coprocessor.collect_noise_std", "must be a nonnegative number");
  if (perturb_session < 0)
    fail("coprocessor.perturb_session", "must be 0 (never) or a session index");
  if (!(perturb_gain > 0.0) || !std::isfinite(perturb_gain))
    fail("coprocessor.perturb_gain", "must be a positive number");
}

void ConditioningSpec::validate() const {
  if (!(delay_ms >= 0.0) || !std::isfinite(delay_ms))
    fail("conditioning.delay_ms", "must be a nonnegative number");
  if (!(duration_ms > 0.0) || !std::isfinite(duration_ms))
    fail("conditioning.duration_ms", "must be a positive number");
  if (neurons < 8 || neurons > 256)
    fail("conditioning.neurons",
         "must be in [8, 256] (three two-neuron sites need at least 8)");
}

void BridgeSpec::validate() const {
  if (inputs < 1 || inputs > 8) fail("bridge.inputs", "must be in [1, 8]");
  if (outputs < 1 || outputs > 8) fail("bridge.outputs", "must be in [1, 8]");
  if (kernel_bins < 1 || kernel_bins > 64)
    fail("bridge.kernel_bins", "must be in [1, 64]");
  if (feedback_bins < 1 || feedback_bins > 64)
    fail("bridge.feedback_bins", "must be in [1, 64]");
  if (train_bins < 500) fail("bridge.train_bins", "must be at least 500");
  if (test_bins < 100) fail("bridge.test_bins", "must be at least 100");
  if (!(input_rate > 0.0 && input_rate < 1.0))
    fail("bridge.input_rate", "must lie strictly inside (0, 1)");
}

void ScenarioConfig::validate() const {
  const std::vector<std::string>& ids = scenario_ids();
  if (std::find(ids.begin(), ids.end(), scenario) == ids.end()) {
    std::string known;
    for (const std::string& id : ids) {
      if (!known.empty()) known += ", ";
      known += id;
    }
    fail("scenario", "unknown scenario '" + scenario + "' (known: " + known + ")");
  }
  if (sessions < 1 || sessions > 10000)
    fail("sessions", "must be in [1, 10000]");
  if (!kernel_backend.empty() && kernel_backend != "scalar" &&
      kernel_backend != "avx2")
    fail("kernel_backend", "must be \"scalar\", \"avx2\", or omitted");
  plant.validate();
  decoder.validate();
  encoder.validate();
  coproc.validate();
  conditioning.validate();
  bridge.validate();
}

const std::vector<std::string>& scenario_ids() {
  static const std::vector<std::string> ids = {
      "prosthetic_control", "limb_reanimation", "plasticity_induction",
      "memory_bridge",      "seizure_suppression", "coadaptation"};
  return ids;
}

ScenarioConfig parse_scenario_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: not valid JSON (") + e.what() + ")");
  }
  if (!root.is_object())
    throw ConfigError("config: top level must be a JSON object");
  check_keys(root, "",
             {"schema", "scenario", "seed", "sessions", "output_dir",
              "kernel_backend", "plant", "decoder", "encoder", "coprocessor",
              "conditioning", "bridge"});

  const json* schema = find_key(root, "schema");
  if (!schema) fail("schema", "required");
  if (!schema->is_number_integer() || schema->get<long long>() != 1)
    fail("schema",
         "unsupported config schema " + schema->dump() + " (this build reads 1)");

  ScenarioConfig cfg;
  const json* scenario = find_key(root, "scenario");
  if (!scenario) fail("scenario", "required");
  if (!scenario->is_string()) fail("scenario", "must be a string");
  cfg.scenario = scenario->get<std::string>();

  const json* seed = find_key(root, "seed");
  if (!seed) fail("seed", "required (every run is reproducible from it)");
  if (!seed->is_number_unsigned())
    fail("seed", "must be a nonnegative integer");
  cfg.seed = seed->get<std::uint64_t>();

  cfg.sessions = get_int(root, "sessions", "", cfg.sessions);
  cfg.output_dir = get_string(root, "output_dir", "", cfg.output_dir);
  cfg.kernel_backend = get_string(root, "kernel_backend", "", cfg.kernel_backend);

  const auto block = [&root](const char* key) -> const json* {
    const json* v = find_key(root, key);
    if (v && !v->is_object()) fail(key, "must be an object");
    return v;
  };
  if (const json* v = block("plant")) cfg.plant = parse_plant(*v);
  if (const json* v = block("decoder")) cfg.decoder = parse_decoder(*v);
  if (const json* v = block("encoder")) cfg.encoder = parse_encoder(*v);
  if (const json* v = block("coprocessor")) cfg.coproc = parse_coproc(*v);
  if (const json* v = block("conditioning"))
    cfg.conditioning = parse_conditioning(*v);
  if (const json* v = block("bridge")) cfg.bridge = parse_bridge(*v);

  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario_config(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return parse_scenario_config(text);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string scenario_config_to_json(const ScenarioConfig& cfg) {
  json j;
  j["schema"] = 1;
  j["scenario"] = cfg.scenario;
  j["seed"] = cfg.seed;
  j["sessions"] = cfg.sessions;
  j["kernel_backend"] = cfg.kernel_backend;
  j["plant"] = {{"state_dim", cfg.plant.state_dim},
                {"input_channels", cfg.plant.input_channels},
                {"gain", cfg.plant.gain},
                {"process_noise", cfg.plant.process_noise},
                {"lesion_mask", cfg.plant.lesion_mask}};
  j["decoder"] = {{"neural_channels", cfg.decoder.neural_channels},
                  {"noise_std", cfg.decoder.noise_std},
                  {"calibration_samples", cfg.decoder.calibration_samples}};
  j["encoder"] = {
      {"fes_flexor_gain_ma_per_hz", cfg.encoder.fes_flexor_gain_ma_per_hz},
      {"fes_flexor_threshold_hz", cfg.encoder.fes_flexor_threshold_hz},
      {"fes_extensor_gain_ma_per_hz", cfg.encoder.fes_extensor_gain_ma_per_hz},
      {"fes_extensor_threshold_hz", cfg.encoder.fes_extensor_threshold_hz},
      {"fes_max_current_ma", cfg.encoder.fes_max_current_ma},
      {"suppression_frequency_hz", cfg.encoder.suppression_frequency_hz},
      {"suppression_amplitude_ma", cfg.encoder.suppression_amplitude_ma}};
  j["coprocessor"] = {{"hidden", cfg.coproc.hidden},
                      {"epochs", cfg.coproc.epochs},
                      {"learning_rate", cfg.coproc.learning_rate},
                      {"batch_size", cfg.coproc.batch_size},
                      {"en_refresh_every", cfg.coproc.en_refresh_every},
                      {"settle_steps", cfg.coproc.settle_steps},
                      {"collect_noise_std", cfg.coproc.collect_noise_std},
                      {"perturb_session", cfg.coproc.perturb_session},
                      {"perturb_gain", cfg.coproc.perturb_gain}};
  j["conditioning"] = {{"delay_ms", cfg.conditioning.delay_ms},
                       {"duration_ms", cfg.conditioning.duration_ms},
                       {"neurons", cfg.conditioning.neurons}};
  j["bridge"] = {{"inputs", cfg.bridge.inputs},
                 {"outputs", cfg.bridge.outputs},
                 {"kernel_bins", cfg.bridge.kernel_bins},
                 {"feedback_bins", cfg.bridge.feedback_bins},
                 {"train_bins", cfg.bridge.train_bins},
                 {"test_bins", cfg.bridge.test_bins},
                 {"input_rate", cfg.bridge.input_rate}};
  return j.dump(2) + "\n";
}

RunArtifact run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  if (cfg.output_dir.empty())
    throw ConfigError(
        "output_dir: no artifact directory (set it in the config or pass "
        "--out)");
  if (!cfg.kernel_backend.empty()) {
    const kernels::Backend b = cfg.kernel_backend == "avx2"
                                   ? kernels::Backend::avx2
                                   : kernels::Backend::scalar;
    if (!kernels::backend_supported(b))
      throw ConfigError("kernel_backend: '" + cfg.kernel_backend +
                        "' is not supported on this host");
    kernels::set_backend(b);
  }

  RunArtifact art;
  art.dir = cfg.output_dir;
  art.scenario = cfg.scenario;
  art.seed = cfg.seed;

  try {
    if (cfg.scenario == "prosthetic_control")
      run_prosthetic_control(cfg, art);
    else if (cfg.scenario == "limb_reanimation")
      run_limb_reanimation(cfg, art);
    else if (cfg.scenario == "plasticity_induction")
      run_plasticity_induction(cfg, art);
    else if (cfg.scenario == "memory_bridge")
      run_memory_bridge(cfg, art);
    else if (cfg.scenario == "seizure_suppression")
      run_seizure_suppression(cfg, art);
    else
      run_coadaptation(cfg, art);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw std::runtime_error("scenario '" + cfg.scenario + "': " + e.what());
  }

  // The snapshot records the backend the run actually used, so a later
  // re-evaluation reproduces the same arithmetic even if the config left the
  // choice open.
  ScenarioConfig snapshot = cfg;
  snapshot.kernel_backend =
      kernels::backend_name(kernels::active_backend());
  emit_file(art, "config_snapshot.json", scenario_config_to_json(snapshot));

  art.metrics.validate();
  emit_file(art, "metrics.csv", art.metrics.to_csv());

  write_manifest(art);
  return art;
}

}  // namespace coprosim::harness
