#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "coprosim/coproc.hpp"
#include "coprosim/harness/metrics.hpp"
#include "coprosim/mimo.hpp"
#include "coprosim/types.hpp"

/// File formats and content hashing for run artifacts. Every number that
/// round-trips through disk is written as a decimal string with 17
/// significant digits, so load(persist(x)) reproduces x bit-exactly and
/// identical runs produce identical bytes.
namespace coprosim::harness {

/// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

/// Shortest-width 17-significant-digit decimal rendering (printf %.17g);
/// the inverse of strtod for every finite double.
std::string format_g17(double v);

/// Whole-file helpers. Writing creates parent directories; both throw
/// DataError naming the path on failure.
void write_file(const std::string& path, const std::string& bytes);
std::string read_file(const std::string& path);

/// Weight files are JSON with a `schema` version and a `kind` tag telling
/// the loader what object the payload is:
///   layered_net: {schema, kind, activations, shapes, weights}
///   mimo_bank:   {schema, kind, bin_ms, outputs: [{kernels, feedback,
///                 theta, sigma}, ...]}
/// Loaders reject unknown schema versions explicitly and never hand back a
/// partially populated object: a malformed file is a DataError naming the
/// failing field, an unsupported version names both versions.
void persist_weights(const coproc::LayeredNet& net, const std::string& path);
void persist_weights(const std::vector<mimo::MisoModel>& bank,
                     const std::string& path);
coproc::LayeredNet load_layered_net(const std::string& path);
std::vector<mimo::MisoModel> load_mimo_bank(const std::string& path);

/// Binned spike data as CSV: header `bin,channel,value`, one row per
/// (bin, channel) pair in bin-major order, value 0 or 1.
std::string spike_train_to_csv(const SpikeTrain& t);

/// Parses the CSV format above; channel count and length are inferred from
/// the rows, which must tile the full (bin, channel) grid. The bin width is
/// not part of the file and comes from the caller.
SpikeTrain spike_train_from_csv(const std::string& text, double bin_ms);

/// Stimulation command log as CSV, one row per command.
std::string stim_log_to_csv(const std::vector<StimCommand>& log);

/// Everything one scenario run left on disk. `files` lists names relative
/// to `dir` (the manifest itself excluded); `sha256` maps each to its
/// content hash, which is also the body of manifest.json.
struct RunArtifact {
  std::string dir;
  std::string scenario;
  std::uint64_t seed = 0;
  MetricsTable metrics;
  std::vector<std::string> files;
  std::map<std::string, std::string> sha256;
};

/// Writes `bytes` into the artifact directory and records its hash.
void emit_file(RunArtifact& art, const std::string& name,
               const std::string& bytes);

/// Serializes {schema, scenario, seed, kernel_backend, files} to
/// manifest.json inside the artifact directory. Key order and number
/// rendering are canonical, so identical runs write identical manifests.
void write_manifest(const RunArtifact& art);

}  // namespace coprosim::harness
