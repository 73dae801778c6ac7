#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "coprosim/coproc.hpp"
#include "coprosim/errors.hpp"
#include "coprosim/harness/artifacts.hpp"
#include "coprosim/harness/cli.hpp"
#include "coprosim/harness/metrics.hpp"
#include "coprosim/harness/scenario.hpp"
#include "coprosim/mimo.hpp"
#include "coprosim/rng.hpp"

using namespace coprosim;
using namespace coprosim::harness;

namespace {

// Pairwise-counting AUC: the probability that a random positive outscores a
// random negative, ties counted half. Quadratic and obviously correct, which
// is the point — it shares no code with the threshold-sweep implementation.
double auc_by_pairs(const Vec& scores, const std::vector<int>& labels) {
  double concordant = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      pairs += 1.0;
      if (scores[i] > scores[j])
        concordant += 1.0;
      else if (scores[i] == scores[j])
        concordant += 0.5;
    }
  }
  return concordant / pairs;
}

double entropy_bits(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

// Scratch directory for artifact tests; wiped on construction so reruns of
// the test binary start clean.
std::string scratch_dir(const std::string& leaf) {
  const std::filesystem::path p =
      std::filesystem::temp_directory_path() / "coprosim_tests" / leaf;
  std::filesystem::remove_all(p);
  return p.string();
}

ScenarioConfig config_for(const std::string& scenario, std::uint64_t seed,
                          int sessions) {
  ScenarioConfig cfg;
  cfg.scenario = scenario;
  cfg.seed = seed;
  cfg.sessions = sessions;
  if (scenario == "limb_reanimation") {
    cfg.plant.state_dim = 1;
    cfg.plant.input_channels = 2;
    cfg.plant.gain = 0.9;
    cfg.decoder.noise_std = 2.0;
  }
  if (scenario == "coadaptation") {
    cfg.plant.state_dim = 2;
    cfg.plant.input_channels = 3;
    cfg.plant.gain = 0.6;
    cfg.plant.process_noise = 0.01;
  }
  if (scenario == "memory_bridge") {
    cfg.bridge.train_bins = 2500;
    cfg.bridge.test_bins = 600;
  }
  if (scenario == "seizure_suppression") {
    cfg.coproc.hidden = 10;
    cfg.coproc.epochs = 200;
    cfg.coproc.batch_size = 16;
  }
  if (scenario == "plasticity_induction") cfg.conditioning.duration_ms = 4000.0;
  return cfg;
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "coprosim");
  std::vector<char*> argv;
  argv.reserve(args.size());
  for (std::string& a : args) argv.push_back(a.data());
  return cli_main(int(argv.size()), argv.data());
}

}  // namespace

TEST_SUITE_BEGIN("harness");

// ---------------------------------------------------------------------------
// ROC / AUC

TEST_CASE("perfectly separated scores give area exactly one") {
  const Vec scores = {0.9, 0.8, 0.7, 0.3, 0.2, 0.1};
  const std::vector<int> labels = {1, 1, 1, 0, 0, 0};
  const RocCurve roc = compute_roc(scores, labels);
  CHECK(roc.auc == 1.0);
  // Curve starts at (0,0) under the +inf threshold and ends at (1,1).
  CHECK(roc.points.front().fpr == 0.0);
  CHECK(roc.points.front().tpr == 0.0);
  CHECK(roc.points.back().fpr == 1.0);
  CHECK(roc.points.back().tpr == 1.0);
}

TEST_CASE("textbook four-point case lands on 0.75 exactly") {
  const Vec scores = {0.9, 0.8, 0.3, 0.2};
  const std::vector<int> labels = {1, 0, 1, 0};
  CHECK(compute_roc(scores, labels).auc == 0.75);
}

TEST_CASE("threshold sweep agrees with pairwise counting on tied data") {
  Rng rng(2024);
  const std::size_t n = 2000;
  Vec scores(n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = rng.uniform() < 0.5 ? 1 : 0;
    // Coarse quantization forces heavy ties, including across classes.
    const double raw = 0.2 * labels[i] + rng.normal() * 0.3;
    scores[i] = std::round(raw * 20.0) / 20.0;
  }
  const double fast = compute_roc(scores, labels).auc;
  const double slow = auc_by_pairs(scores, labels);
  CHECK(fast == doctest::Approx(slow).epsilon(1e-12));
  CHECK(fast > 0.5);  // the shifted class must be detectable
}

TEST_CASE("negating scores mirrors the area") {
  Rng rng(7);
  Vec scores(301);
  std::vector<int> labels(301);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    labels[i] = rng.uniform() < 0.4 ? 1 : 0;
    scores[i] = rng.normal() + 0.8 * labels[i];
  }
  Vec neg = scores;
  for (double& s : neg) s = -s;
  const double a = compute_roc(scores, labels).auc;
  const double b = compute_roc(neg, labels).auc;
  CHECK(a + b == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("roc rejects degenerate inputs") {
  CHECK_THROWS_AS(compute_roc({}, {}), DataError);
  CHECK_THROWS_AS(compute_roc({0.1, 0.2}, {1, 1}), DataError);
  CHECK_THROWS_AS(compute_roc({0.1, 0.2}, {0, 0}), DataError);
  CHECK_THROWS_AS(compute_roc({0.1}, {1, 0}), DimensionError);
  CHECK_THROWS_AS(compute_roc({0.1, 0.2}, {1, 2}), std::invalid_argument);
  const double nan = std::nan("");
  CHECK_THROWS_AS(compute_roc({nan, 0.2}, {1, 0}), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Mutual information

TEST_CASE("identical balanced signals carry one bit") {
  const std::vector<std::uint8_t> a = {0, 1, 0, 1, 0, 1, 0, 1};
  CHECK(mutual_information(a, a) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("exactly independent signals carry zero bits") {
  // Every (a, b) combination appears equally often: the joint factorizes.
  const std::vector<std::uint8_t> a = {0, 0, 1, 1};
  const std::vector<std::uint8_t> b = {0, 1, 0, 1};
  CHECK(mutual_information(a, b) == 0.0);
}

TEST_CASE("hand-computed 2x2 joint matches the plug-in estimate") {
  // Counts: (0,0)=4, (0,1)=1, (1,0)=1, (1,1)=4 over 10 samples.
  std::vector<std::uint8_t> a, b;
  for (int i = 0; i < 4; ++i) { a.push_back(0); b.push_back(0); }
  a.push_back(0); b.push_back(1);
  a.push_back(1); b.push_back(0);
  for (int i = 0; i < 4; ++i) { a.push_back(1); b.push_back(1); }
  double expected = 0.0;
  const double joint[2][2] = {{0.4, 0.1}, {0.1, 0.4}};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      expected += joint[i][j] * std::log2(joint[i][j] / (0.5 * 0.5));
  CHECK(mutual_information(a, b) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("information is nonnegative and bounded by either entropy") {
  Rng rng(99);
  const std::size_t n = 10000;
  std::vector<std::uint8_t> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = rng.uniform() < 0.3 ? 1 : 0;
    // b copies a 70% of the time, else flips a coin.
    b[i] = rng.uniform() < 0.7 ? a[i] : (rng.uniform() < 0.5 ? 1 : 0);
  }
  const double mi = mutual_information(a, b);
  double pa = 0.0, pb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    pa += a[i];
    pb += b[i];
  }
  pa /= double(n);
  pb /= double(n);
  CHECK(mi >= 0.0);
  CHECK(mi <= entropy_bits(pa) + 1e-12);
  CHECK(mi <= entropy_bits(pb) + 1e-12);
  CHECK(mi > 0.05);  // the 70% copy channel is far from independent
}

TEST_CASE("information rejects mismatched or empty inputs") {
  CHECK_THROWS_AS(mutual_information({}, {}), DataError);
  CHECK_THROWS_AS(mutual_information({0, 1}, {0}), DimensionError);
  CHECK_THROWS_AS(mutual_information({0, 2}, {0, 1}), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Metrics table

TEST_CASE("metrics table renders one header and g17 cells") {
  MetricsTable t;
  t.columns = {{"session", "index"}, {"mse", "a.u.^2"}};
  t.rows = {{1.0, 0.125}, {2.0, 0.0625}};
  CHECK(t.to_csv() ==
        "session (index),mse (a.u.^2)\n1,0.125\n2,0.0625\n");
}

TEST_CASE("metrics table validation catches structural mistakes") {
  MetricsTable t;
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);  // no columns
  t.columns = {{"a", "1"}, {"a", "1"}};
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);  // duplicate name
  t.columns = {{"a", "1"}, {"b", "1"}};
  t.rows = {{1.0}};
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);  // ragged row
  t.rows = {{1.0, std::nan("")}};
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);  // non-finite cell
  t.rows = {{1.0, 2.0}};
  CHECK_NOTHROW(t.validate());
}

// ---------------------------------------------------------------------------
// Hashing and number rendering

TEST_CASE("sha256 matches the published test vectors") {
  CHECK(sha256_hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("g17 rendering survives the round trip bit-for-bit") {
  Rng rng(5);
  std::vector<double> cases = {0.1,    1.0 / 3.0, -0.0,      6.02e23,
                               1e-308, 2.5,       -1.875e-5, 3.14159265358979};
  for (int i = 0; i < 200; ++i) cases.push_back(rng.normal() * std::pow(10.0, rng.uniform(-12, 12)));
  for (double v : cases) {
    const std::string s = format_g17(v);
    const double back = std::strtod(s.c_str(), nullptr);
    CHECK(std::memcmp(&back, &v, sizeof v) == 0);
  }
}

// ---------------------------------------------------------------------------
// Weight persistence

TEST_CASE("layered net weights reload bit-identically") {
  const std::string dir = scratch_dir("net_roundtrip");
  const std::string path = dir + "/net.json";
  const coproc::LayeredNet net = coproc::LayeredNet::make(
      {3, 5, 2}, {coproc::Activation::relu, coproc::Activation::identity}, 17);
  persist_weights(net, path);
  const coproc::LayeredNet back = load_layered_net(path);
  REQUIRE(back.w.size() == net.w.size());
  CHECK(back.act == net.act);
  for (std::size_t l = 0; l < net.w.size(); ++l) {
    REQUIRE(back.w[l].rows == net.w[l].rows);
    REQUIRE(back.w[l].cols == net.w[l].cols);
    CHECK(std::memcmp(back.w[l].a.data(), net.w[l].a.data(),
                      net.w[l].a.size() * sizeof(double)) == 0);
  }
}

TEST_CASE("mimo bank weights reload bit-identically") {
  const std::string dir = scratch_dir("bank_roundtrip");
  const std::string path = dir + "/bank.json";
  Rng rng(23);
  std::vector<mimo::MisoModel> bank(2);
  for (mimo::MisoModel& m : bank) {
    m.k = {Vec(6), Vec(6)};
    m.h = Vec(3);
    for (Vec* v : {&m.k[0], &m.k[1], &m.h})
      for (double& x : *v) x = rng.normal();
    m.theta = rng.uniform(0.5, 1.5);
    m.bin_ms = 2.0;
  }
  persist_weights(bank, path);
  const std::vector<mimo::MisoModel> back = load_mimo_bank(path);
  REQUIRE(back.size() == bank.size());
  for (std::size_t o = 0; o < bank.size(); ++o) {
    CHECK(back[o].theta == bank[o].theta);
    CHECK(back[o].sigma == bank[o].sigma);
    CHECK(back[o].bin_ms == bank[o].bin_ms);
    CHECK(back[o].h == bank[o].h);
    REQUIRE(back[o].k.size() == bank[o].k.size());
    for (std::size_t c = 0; c < bank[o].k.size(); ++c)
      CHECK(back[o].k[c] == bank[o].k[c]);
  }
}

TEST_CASE("weight loader refuses malformed and mis-versioned files") {
  const std::string dir = scratch_dir("weights_bad");
  const coproc::LayeredNet net = coproc::LayeredNet::make(
      {2, 2}, {coproc::Activation::identity}, 3);
  persist_weights(net, dir + "/ok.json");
  const std::string good = read_file(dir + "/ok.json");

  write_file(dir + "/cut.json", good.substr(0, good.size() / 2));
  CHECK_THROWS_AS(load_layered_net(dir + "/cut.json"), DataError);

  std::string versioned = good;
  const std::size_t at = versioned.find("\"schema\": 1");
  REQUIRE(at != std::string::npos);
  versioned.replace(at, 11, "\"schema\": 2");
  write_file(dir + "/v2.json", versioned);
  CHECK_THROWS_WITH_AS(load_layered_net(dir + "/v2.json"),
                       doctest::Contains("schema version 2"), DataError);

  // A mimo bank is not a layered net and vice versa.
  std::vector<mimo::MisoModel> bank(1);
  bank[0].k = {Vec{0.1}};
  bank[0].h = Vec{0.0};
  persist_weights(bank, dir + "/bank.json");
  CHECK_THROWS_AS(load_layered_net(dir + "/bank.json"), DataError);
  CHECK_THROWS_AS(load_mimo_bank(dir + "/ok.json"), DataError);
  CHECK_THROWS_AS(load_layered_net(dir + "/missing.json"), DataError);
}

// ---------------------------------------------------------------------------
// Spike and stimulation CSV

TEST_CASE("spike trains survive the csv round trip") {
  SpikeTrain t;
  t.bin_ms = 2.0;
  t.channels = {{1, 0, 0, 1, 1}, {0, 0, 1, 0, 1}, {1, 1, 1, 0, 0}};
  const std::string csv = spike_train_to_csv(t);
  CHECK(csv.substr(0, 18) == "bin,channel,value\n");
  const SpikeTrain back = spike_train_from_csv(csv, 2.0);
  CHECK(back.channels == t.channels);
  CHECK(back.bin_ms == 2.0);
}

TEST_CASE("spike csv parser rejects structural damage") {
  const std::string good = "bin,channel,value\n0,0,1\n0,1,0\n1,0,0\n1,1,1\n";
  CHECK(spike_train_from_csv(good, 1.0).channels.size() == 2);
  // Missing header.
  CHECK_THROWS_AS(spike_train_from_csv("0,0,1\n", 1.0), DataError);
  // Duplicate cell.
  CHECK_THROWS_AS(
      spike_train_from_csv("bin,channel,value\n0,0,1\n0,0,0\n", 1.0),
      DataError);
  // Hole in the grid (bin 1 lacks channel 1).
  CHECK_THROWS_AS(
      spike_train_from_csv("bin,channel,value\n0,0,1\n0,1,0\n1,0,0\n", 1.0),
      DataError);
  // Non-binary value.
  CHECK_THROWS_AS(spike_train_from_csv("bin,channel,value\n0,0,7\n", 1.0),
                  DataError);
  CHECK_THROWS_AS(spike_train_from_csv("", 1.0), DataError);
}

TEST_CASE("stimulation log renders every pulse field") {
  PulseTrain p;
  p.frequency_hz = 130.0;
  p.amplitude_ma = 3.0;
  p.pulse_width_us = 90.0;
  p.duration_ms = 100.0;
  p.biphasic = true;
  const std::string csv = stim_log_to_csv({{250.0, 2, p}});
  CHECK(csv ==
        "t_ms,channel,amplitude_ma,frequency_hz,pulse_width_us,packet_rate_hz,"
        "duration_ms,biphasic\n250,2,3,130,90,0,100,1\n");
}

// ---------------------------------------------------------------------------
// Scenario configs

TEST_CASE("config parsing reports failures by field path") {
  const char* minimal = R"({"schema":1,"scenario":"coadaptation","seed":9})";
  const ScenarioConfig cfg = parse_scenario_config(minimal);
  CHECK(cfg.scenario == "coadaptation");
  CHECK(cfg.seed == 9);
  CHECK(cfg.sessions == 1);

  CHECK_THROWS_WITH_AS(parse_scenario_config("{"), doctest::Contains("JSON"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_scenario_config(R"({"scenario":"coadaptation","seed":1})"),
      doctest::Contains("schema"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_scenario_config(R"({"schema":2,"scenario":"coadaptation","seed":1})"),
      doctest::Contains("schema"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_scenario_config(R"({"schema":1,"scenario":"coadaptation"})"),
      doctest::Contains("seed"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_scenario_config(
          R"({"schema":1,"scenario":"warp_drive","seed":1})"),
      doctest::Contains("scenario"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_scenario_config(
          R"({"schema":1,"scenario":"coadaptation","seed":1,"plant":{"gain":2}})"),
      doctest::Contains("plant.gain"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_scenario_config(
          R"({"schema":1,"scenario":"coadaptation","seed":1,"plant":{"gians":0.5}})"),
      doctest::Contains("plant.gians"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_scenario_config(
          R"({"schema":1,"scenario":"coadaptation","seed":1,"frobnicate":3})"),
      doctest::Contains("frobnicate"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_scenario_config(
          R"({"schema":1,"scenario":"coadaptation","seed":-4})"),
      doctest::Contains("seed"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_scenario_config(
          R"({"schema":1,"scenario":"coadaptation","seed":1,
              "plant":{"input_channels":2,"lesion_mask":[1.0]}})"),
      doctest::Contains("plant.lesion_mask"), ConfigError);
}

TEST_CASE("snapshot serialization reproduces the parsed config") {
  ScenarioConfig cfg = config_for("memory_bridge", 77, 2);
  cfg.kernel_backend = "scalar";
  cfg.plant.lesion_mask = {1.0, 0.5, 0.0, 1.0};
  const ScenarioConfig back = parse_scenario_config(scenario_config_to_json(cfg));
  CHECK(back.scenario == cfg.scenario);
  CHECK(back.seed == cfg.seed);
  CHECK(back.sessions == cfg.sessions);
  CHECK(back.kernel_backend == cfg.kernel_backend);
  CHECK(back.plant.lesion_mask == cfg.plant.lesion_mask);
  CHECK(back.bridge.train_bins == cfg.bridge.train_bins);
  CHECK(back.bridge.test_bins == cfg.bridge.test_bins);
  CHECK(back.coproc.learning_rate == cfg.coproc.learning_rate);
  CHECK(back.conditioning.delay_ms == cfg.conditioning.delay_ms);
  CHECK(back.encoder.suppression_frequency_hz ==
        cfg.encoder.suppression_frequency_hz);
  // The snapshot deliberately omits where the artifact happened to land.
  CHECK(back.output_dir.empty());
}

// ---------------------------------------------------------------------------
// Scenario runs

TEST_CASE("every scenario leaves a complete hashed artifact") {
  for (const std::string& id : scenario_ids()) {
    CAPTURE(id);
    ScenarioConfig cfg = config_for(id, 31, 2);
    cfg.output_dir = scratch_dir("artifact_" + id);
    const RunArtifact art = run_scenario(cfg);

    // One metrics row per session, session column first.
    CHECK(art.metrics.rows.size() == 2);
    CHECK(art.metrics.columns.front().name == "session");
    CHECK(art.metrics.rows.front().front() == 1.0);
    CHECK(art.metrics.rows.back().front() == 2.0);

    // Every recorded file exists with exactly the hashed content.
    CHECK(art.files.size() >= 2);  // snapshot + metrics at minimum
    for (const std::string& name : art.files) {
      const std::string bytes = read_file(art.dir + "/" + name);
      CHECK(sha256_hex(bytes) == art.sha256.at(name));
    }
    CHECK(std::filesystem::exists(art.dir + "/manifest.json"));

    // The snapshot alone must be enough to rerun the scenario.
    const ScenarioConfig snap =
        load_scenario_config(art.dir + "/config_snapshot.json");
    CHECK(snap.scenario == id);
    CHECK((snap.kernel_backend == "scalar" || snap.kernel_backend == "avx2"));
  }
}

TEST_CASE("identical configs produce byte-identical artifacts") {
  for (const std::string& id : scenario_ids()) {
    CAPTURE(id);
    ScenarioConfig cfg = config_for(id, 58, 2);
    cfg.output_dir = scratch_dir("det_a_" + id);
    run_scenario(cfg);
    ScenarioConfig again = config_for(id, 58, 2);
    again.output_dir = scratch_dir("det_b_" + id);
    run_scenario(again);
    // The manifest holds the hash of every other file, so byte-equal
    // manifests mean byte-equal artifacts.
    CHECK(read_file(cfg.output_dir + "/manifest.json") ==
          read_file(again.output_dir + "/manifest.json"));
  }
}

TEST_CASE("severing input pathways degrades reaching at least twofold") {
  ScenarioConfig intact = config_for("prosthetic_control", 12, 2);
  intact.decoder.neural_channels = 12;
  intact.decoder.noise_std = 0.25;
  intact.output_dir = scratch_dir("lesion_off");
  const RunArtifact healthy = run_scenario(intact);

  ScenarioConfig severed = intact;
  severed.plant.lesion_mask = {1.0, 1.0, 0.0, 0.0};
  severed.output_dir = scratch_dir("lesion_on");
  const RunArtifact hurt = run_scenario(severed);

  double mse_healthy = 0.0, mse_hurt = 0.0;
  for (const auto& row : healthy.metrics.rows) mse_healthy += row[1];
  for (const auto& row : hurt.metrics.rows) mse_hurt += row[1];
  CHECK(mse_hurt >= 2.0 * mse_healthy);
}

TEST_CASE("practice sessions reduce coadaptation error") {
  ScenarioConfig cfg = config_for("coadaptation", 606, 5);
  cfg.output_dir = scratch_dir("coadapt_progress");
  const RunArtifact art = run_scenario(cfg);
  CHECK(art.metrics.rows.back()[1] < art.metrics.rows.front()[1]);
  CHECK(std::filesystem::exists(cfg.output_dir + "/cpn.json"));
  CHECK(std::filesystem::exists(cfg.output_dir + "/en.json"));
  // The persisted co-processor is a valid, loadable network.
  CHECK_NOTHROW(load_layered_net(cfg.output_dir + "/cpn.json").validate());
}

TEST_CASE("burst detection separates classes nearly perfectly") {
  ScenarioConfig cfg = config_for("seizure_suppression", 505, 2);
  cfg.output_dir = scratch_dir("seizure_metrics");
  const RunArtifact art = run_scenario(cfg);
  for (const auto& row : art.metrics.rows) {
    CHECK(row[1] >= 0.95);        // auc
    CHECK(row[4] >= 0.3);         // detection carries real information (bits)
  }
}

TEST_CASE("bridge fit recovers the generating kernels") {
  ScenarioConfig cfg = config_for("memory_bridge", 404, 1);
  cfg.output_dir = scratch_dir("bridge_metrics");
  const RunArtifact art = run_scenario(cfg);
  CHECK(art.metrics.rows.front()[2] >= 0.8);  // kernel_corr
  CHECK(art.metrics.rows.front()[1] >= 0.6);  // auc above chance
  const std::vector<mimo::MisoModel> bank =
      load_mimo_bank(cfg.output_dir + "/mimo.json");
  CHECK(bank.size() == cfg.bridge.outputs);
}

TEST_CASE("conditioned pathway outgrows its bystander control") {
  ScenarioConfig cfg = config_for("plasticity_induction", 303, 2);
  cfg.output_dir = scratch_dir("plasticity_metrics");
  const RunArtifact art = run_scenario(cfg);
  for (const auto& row : art.metrics.rows)
    CHECK(row[1] > row[2]);  // conditioned_delta > control_delta
}

TEST_CASE("running a scenario without a destination is refused") {
  ScenarioConfig cfg = config_for("coadaptation", 1, 1);
  CHECK_THROWS_WITH_AS(run_scenario(cfg), doctest::Contains("output_dir"),
                       ConfigError);
}

// ---------------------------------------------------------------------------
// CLI

TEST_CASE("cli distinguishes user errors from reproducibility failures") {
  CHECK(run_cli({"list"}) == 0);
  CHECK(run_cli({"check"}) == 0);
  CHECK(run_cli({"definitely-not-a-command"}) == 1);
  CHECK(run_cli({"run", "/nonexistent/config.json"}) == 1);
  CHECK(run_cli({"eval", "/nonexistent/artifact"}) == 1);
  CHECK(run_cli({"--help"}) == 0);
}

TEST_CASE("cli run and eval close the reproducibility loop") {
  const std::string dir = scratch_dir("cli_roundtrip");
  const std::string cfg_path = dir + "/config.json";
  ScenarioConfig cfg = config_for("coadaptation", 44, 2);
  write_file(cfg_path, scenario_config_to_json(cfg));

  const std::string out = dir + "/artifact";
  CHECK(run_cli({"run", cfg_path, "--out", out}) == 0);
  CHECK(run_cli({"eval", out}) == 0);

  // Tampering with a logged metric must be caught on re-evaluation.
  const std::string metrics_path = out + "/metrics.csv";
  std::string metrics = read_file(metrics_path);
  metrics += "# trailing note\n";
  write_file(metrics_path, metrics);
  CHECK(run_cli({"eval", out}) == 2);
}

TEST_SUITE_END();
