#include "coprosim/harness/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "coprosim/coproc.hpp"
#include "coprosim/decoders.hpp"
#include "coprosim/encoders.hpp"
#include "coprosim/errors.hpp"
#include "coprosim/harness/artifacts.hpp"
#include "coprosim/harness/metrics.hpp"
#include "coprosim/harness/scenario.hpp"
#include "coprosim/kernels.hpp"
#include "coprosim/mimo.hpp"

namespace coprosim::harness {

namespace {

// Exit-code policy (documented on cli_main): 1 means the user can fix it
// (bad flags, missing or malformed files, bad config values), 2 means the
// toolkit failed (internal errors, reproducibility or self-check failures).
int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "coprosim: %s\n", e.what());
    return 1;
  } catch (const DataError& e) {
    std::fprintf(stderr, "coprosim: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "coprosim: %s\n", e.what());
    return 2;
  }
}

int cmd_run(const std::string& config_path, const std::string& out_override) {
  ScenarioConfig cfg = load_scenario_config(config_path);
  if (!out_override.empty()) cfg.output_dir = out_override;
  const RunArtifact art = run_scenario(cfg);

  std::printf("scenario %s (seed %llu): %zu session row(s), %zu file(s) in %s\n",
              art.scenario.c_str(), static_cast<unsigned long long>(art.seed),
              art.metrics.rows.size(), art.files.size(), art.dir.c_str());
  if (!art.metrics.rows.empty()) {
    std::printf("last session:");
    const std::vector<double>& last = art.metrics.rows.back();
    for (std::size_t c = 0; c < art.metrics.columns.size(); ++c)
      std::printf(" %s=%.6g", art.metrics.columns[c].name.c_str(), last[c]);
    std::printf("\n");
  }
  return 0;
}

int cmd_fit_mimo(const std::string& spikes_path, std::size_t inputs,
                 std::size_t kernel_bins, std::size_t feedback_bins,
                 double bin_ms, const std::string& out_path) {
  const SpikeTrain all = spike_train_from_csv(read_file(spikes_path), bin_ms);
  if (inputs == 0 || inputs >= all.channels.size())
    throw ConfigError(
        "--inputs: must leave at least one input and one output channel (file "
        "has " +
        std::to_string(all.channels.size()) + ")");

  SpikeTrain x, y;
  x.bin_ms = y.bin_ms = all.bin_ms;
  for (std::size_t c = 0; c < all.channels.size(); ++c)
    (c < inputs ? x : y).channels.push_back(all.channels[c]);

  const std::vector<mimo::MisoModel> bank =
      mimo::mimo_fit(x, y, kernel_bins, feedback_bins);
  persist_weights(bank, out_path);

  std::printf("fit %zu output unit(s) from %zu input channel(s) over %zu bins\n",
              bank.size(), inputs, all.bins());
  for (std::size_t o = 0; o < bank.size(); ++o)
    std::printf("output %zu: theta=%.6g\n", o, bank[o].theta);
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

int cmd_eval(const std::string& artifact_dir) {
  const std::string manifest_bytes = read_file(artifact_dir + "/manifest.json");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(manifest_bytes);
    if (!manifest.at("files").is_object())
      throw DataError(artifact_dir + "/manifest.json: files must be an object");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(artifact_dir + "/manifest.json: " + e.what());
  }

  // The snapshot pins the backend the original run used, so the rerun
  // repeats the same arithmetic; everything else comes from the seed.
  ScenarioConfig cfg =
      load_scenario_config(artifact_dir + "/config_snapshot.json");
  cfg.output_dir = artifact_dir + "/eval_rerun";
  const RunArtifact rerun = run_scenario(cfg);

  std::size_t mismatched = 0;
  std::size_t compared = 0;
  const auto compare = [&](const std::string& name) {
    ++compared;
    std::string original, repeated;
    try {
      original = read_file(artifact_dir + "/" + name);
      repeated = read_file(rerun.dir + "/" + name);
    } catch (const DataError& e) {
      std::printf("MISMATCH %s (%s)\n", name.c_str(), e.what());
      ++mismatched;
      return;
    }
    if (original == repeated) {
      std::printf("ok %s\n", name.c_str());
    } else {
      std::printf("MISMATCH %s\n", name.c_str());
      ++mismatched;
    }
  };
  for (auto it = manifest["files"].begin(); it != manifest["files"].end(); ++it)
    compare(it.key());
  compare("manifest.json");

  std::error_code ec;
  std::filesystem::remove_all(rerun.dir, ec);

  if (mismatched == 0) {
    std::printf("artifact reproduces bit-for-bit (%zu files)\n", compared);
    return 0;
  }
  std::printf("%zu of %zu files differ\n", mismatched, compared);
  return 2;
}

// Fast numerical self-test: a handful of closed-form facts the rest of the
// toolkit leans on. Any FAIL line flips the exit code to 2.
int cmd_check() {
  int failures = 0;
  const auto report = [&failures](const char* name, bool ok) {
    std::printf("%s: %s\n", ok ? "ok" : "FAIL", name);
    if (!ok) ++failures;
  };

  {
    const encoders::FesParams fes{};
    report("fes pinned operating points",
           encoders::fes_flexor(29.0, fes) == 4.0 &&
               encoders::fes_flexor(36.5, fes) == 10.0 &&
               encoders::fes_flexor(40.0, fes) == 10.0 &&
               encoders::fes_extensor(2.0, fes) == 6.0);
  }

  {
    const Vec scores = {0.9, 0.8, 0.3, 0.2};
    const std::vector<int> labels = {1, 0, 1, 0};
    report("roc four-point area", compute_roc(scores, labels).auc == 0.75);
  }

  {
    const std::vector<std::uint8_t> a = {0, 0, 1, 1};
    const std::vector<std::uint8_t> b = {0, 1, 0, 1};
    const double independent = mutual_information(a, b);
    const double identical = mutual_information(a, a);
    report("mutual information endpoints",
           std::abs(independent) <= 1e-12 &&
               std::abs(identical - 1.0) <= 1e-12);
  }

  {
    // Scalar random walk observed in noise: the filter gain must land on the
    // closed-form Riccati fixed point.
    const double q = 0.01;
    const double r = 0.04;
    decoders::KalmanModel m;
    m.A = Mat(1, 1);
    m.A(0, 0) = 1.0;
    m.B = Mat(1, 1);
    m.B(0, 0) = 1.0;
    m.Q = Mat(1, 1);
    m.Q(0, 0) = q;
    m.R = Mat(1, 1);
    m.R(0, 0) = r;
    m.mean = Vec(1, 0.0);
    m.cov = Mat(1, 1);
    m.cov(0, 0) = 1.0;
    decoders::KalmanStep step;
    for (int t = 0; t < 300; ++t) step = decoders::kalman_step(m, Vec(1, 0.0));
    const double p_star = (-q + std::sqrt(q * q + 4.0 * q * r)) / 2.0;
    const double k_star = (p_star + q) / (p_star + q + r);
    report("kalman gain fixed point",
           std::abs(step.gain(0, 0) - k_star) <= 1e-10);
  }

  {
    // One analytic-vs-finite-difference probe through a two-layer net.
    const coproc::LayeredNet net = coproc::LayeredNet::make(
        {2, 3, 2}, {coproc::Activation::sigmoid, coproc::Activation::identity},
        41);
    const Vec u = {0.7, -0.4};
    const Vec target = {0.2, -0.1};
    const coproc::NetGradients g = coproc::net_gradients(net, u, target);
    const double h = 1e-6;
    coproc::LayeredNet lo = net, hi = net;
    lo.w[0](0, 1) -= h;
    hi.w[0](0, 1) += h;
    const double fd = (coproc::squared_error(target, net_forward(hi, u)) -
                       coproc::squared_error(target, net_forward(lo, u))) /
                      (2.0 * h);
    const double scale = std::max({1.0, std::abs(fd), std::abs(g.w[0](0, 1))});
    report("backprop matches finite differences",
           std::abs(g.w[0](0, 1) - fd) / scale <= 1e-6);
  }

  if (kernels::backend_supported(kernels::Backend::avx2)) {
    Rng rng(7);
    std::vector<double> a(257), b(257);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = rng.normal();
      b[i] = rng.normal();
    }
    const kernels::Backend before = kernels::active_backend();
    kernels::set_backend(kernels::Backend::scalar);
    const double scalar = kernels::dot(a.data(), b.data(), a.size());
    kernels::set_backend(kernels::Backend::avx2);
    const double vector = kernels::dot(a.data(), b.data(), a.size());
    kernels::set_backend(before);
    report("kernel backends agree",
           std::abs(scalar - vector) <= 1e-12 * std::max(1.0, std::abs(scalar)));
  }

  return failures == 0 ? 0 : 2;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"deterministic closed-loop brain co-processor simulations"};
  app.require_subcommand(1);

  std::string run_config;
  std::string run_out;
  CLI::App* run = app.add_subcommand(
      "run", "run one scenario config and write its artifact directory");
  run->add_option("config", run_config, "scenario config JSON file")
      ->required();
  run->add_option("--out", run_out,
                  "artifact directory (overrides output_dir in the config)");

  CLI::App* fit = app.add_subcommand("fit", "fit a model from recorded data");
  fit->require_subcommand(1);
  std::string fit_spikes;
  std::size_t fit_inputs = 0;
  std::size_t fit_kernel_bins = 8;
  std::size_t fit_feedback_bins = 4;
  double fit_bin_ms = 2.0;
  std::string fit_out = "mimo.json";
  CLI::App* fit_mimo = fit->add_subcommand(
      "mimo", "fit a spiking input/output bank from a spike CSV");
  fit_mimo->add_option("spikes", fit_spikes, "spike train CSV (bin,channel,value)")
      ->required();
  fit_mimo
      ->add_option("--inputs", fit_inputs,
                   "number of leading channels treated as inputs")
      ->required();
  fit_mimo->add_option("--kernel-bins", fit_kernel_bins,
                       "feedforward kernel length in bins");
  fit_mimo->add_option("--feedback-bins", fit_feedback_bins,
                       "feedback kernel length in bins");
  fit_mimo->add_option("--bin-ms", fit_bin_ms, "bin width in milliseconds");
  fit_mimo->add_option("--out", fit_out, "where to write the weight file");

  std::string eval_dir;
  CLI::App* eval = app.add_subcommand(
      "eval", "re-run an artifact's config snapshot and byte-compare the outputs");
  eval->add_option("artifact", eval_dir,
                   "artifact directory containing manifest.json")
      ->required();

  CLI::App* check =
      app.add_subcommand("check", "run the quick numerical self-test battery");

  CLI::App* list = app.add_subcommand("list", "print the known scenario ids");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (app.got_subcommand(run))
    return guarded([&] { return cmd_run(run_config, run_out); });
  if (app.got_subcommand(fit))
    return guarded([&] {
      return cmd_fit_mimo(fit_spikes, fit_inputs, fit_kernel_bins,
                          fit_feedback_bins, fit_bin_ms, fit_out);
    });
  if (app.got_subcommand(eval))
    return guarded([&] { return cmd_eval(eval_dir); });
  if (app.got_subcommand(check)) return guarded(cmd_check);
  if (app.got_subcommand(list)) {
    for (const std::string& id : scenario_ids()) std::printf("%s\n", id.c_str());
    return 0;
  }
  return 1;
}

}  // namespace coprosim::harness
