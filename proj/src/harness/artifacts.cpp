#include "coprosim/harness/artifacts.hpp"

#include <openssl/evp.h>

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

#include "coprosim/errors.hpp"
#include "coprosim/kernels.hpp"

namespace coprosim::harness {

namespace {

using nlohmann::json;

constexpr int kWeightsSchema = 1;
constexpr int kManifestSchema = 1;

json g17_array(const Vec& v) {
  json a = json::array();
  for (double x : v) a.push_back(format_g17(x));
  return a;
}

/// Strict string-to-double: the whole token must parse and be finite.
double parse_double(const json& node, const std::string& where) {
  if (!node.is_string())
    throw DataError("weights file: " + where + " must be a decimal string");
  const std::string& s = node.get_ref<const std::string&>();
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || s.empty() || errno == ERANGE ||
      !std::isfinite(v))
    throw DataError("weights file: " + where + " is not a finite number: '" +
                    s + "'");
  return v;
}

Vec parse_double_array(const json& node, const std::string& where) {
  if (!node.is_array())
    throw DataError("weights file: " + where + " must be an array");
  Vec out;
  out.reserve(node.size());
  for (std::size_t i = 0; i < node.size(); ++i)
    out.push_back(parse_double(node[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

json parse_weights_file(const std::string& path, const std::string& kind) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw DataError("weights file '" + path +
                    "': truncated or not JSON: " + e.what());
  }
  if (!j.is_object() || !j.contains("schema") ||
      !j["schema"].is_number_integer())
    throw DataError("weights file '" + path + "': missing schema field");
  const int schema = j["schema"].get<int>();
  if (schema != kWeightsSchema)
    throw DataError("weights file '" + path + "': unsupported schema version " +
                    std::to_string(schema) + " (supported: " +
                    std::to_string(kWeightsSchema) + ")");
  if (!j.contains("kind") || !j["kind"].is_string() || j["kind"] != kind)
    throw DataError("weights file '" + path + "': expected kind '" + kind +
                    "', found '" +
                    (j.contains("kind") && j["kind"].is_string()
                         ? j["kind"].get<std::string>()
                         : std::string("<missing>")) +
                    "'");
  return j;
}

const char* activation_tag(coproc::Activation a) {
  switch (a) {
    case coproc::Activation::identity: return "identity";
    case coproc::Activation::sigmoid: return "sigmoid";
    case coproc::Activation::relu: return "relu";
  }
  throw std::invalid_argument("persist_weights: unknown activation");
}

coproc::Activation activation_from_tag(const std::string& tag) {
  if (tag == "identity") return coproc::Activation::identity;
  if (tag == "sigmoid") return coproc::Activation::sigmoid;
  if (tag == "relu") return coproc::Activation::relu;
  throw DataError("weights file: unknown activation tag '" + tag + "'");
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256_hex: digest computation failed");
  }
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const std::string& path, const std::string& bytes) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
    if (ec)
      throw DataError("cannot create directory '" + p.parent_path().string() +
                      "': " + ec.message());
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f.write(bytes.data(), std::streamsize(bytes.size()));
  if (!f) throw DataError("cannot write file '" + path + "'");
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read file '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(f)),
                    std::istreambuf_iterator<char>());
  if (f.bad()) throw DataError("cannot read file '" + path + "'");
  return bytes;
}

void persist_weights(const coproc::LayeredNet& net, const std::string& path) {
  net.validate();
  json j;
  j["schema"] = kWeightsSchema;
  j["kind"] = "layered_net";
  json acts = json::array(), shapes = json::array(), weights = json::array();
  for (std::size_t l = 0; l < net.w.size(); ++l) {
    acts.push_back(activation_tag(net.act[l]));
    shapes.push_back({net.w[l].rows, net.w[l].cols});
    weights.push_back(g17_array(net.w[l].a));
  }
  j["activations"] = acts;
  j["shapes"] = shapes;
  j["weights"] = weights;
  write_file(path, j.dump(2) + "\n");
}

coproc::LayeredNet load_layered_net(const std::string& path) {
  const json j = parse_weights_file(path, "layered_net");
  for (const char* key : {"activations", "shapes", "weights"})
    if (!j.contains(key) || !j[key].is_array())
      throw DataError("weights file '" + path + "': missing array '" +
                      std::string(key) + "'");
  const std::size_t layers = j["shapes"].size();
  if (j["activations"].size() != layers || j["weights"].size() != layers)
    throw DataError("weights file '" + path +
                    "': activations/shapes/weights lengths disagree");

  coproc::LayeredNet net;
  for (std::size_t l = 0; l < layers; ++l) {
    const json& shape = j["shapes"][l];
    if (!shape.is_array() || shape.size() != 2 ||
        !shape[0].is_number_unsigned() || !shape[1].is_number_unsigned())
      throw DataError("weights file '" + path + "': shapes[" +
                      std::to_string(l) + "] must be [rows, cols]");
    Mat m(shape[0].get<std::size_t>(), shape[1].get<std::size_t>());
    const Vec flat = parse_double_array(
        j["weights"][l], "weights[" + std::to_string(l) + "]");
    if (flat.size() != m.a.size())
      throw DataError("weights file '" + path + "': weights[" +
                      std::to_string(l) + "] holds " +
                      std::to_string(flat.size()) + " values for a " +
                      std::to_string(m.rows) + "x" + std::to_string(m.cols) +
                      " layer");
    m.a = flat;
    net.w.push_back(std::move(m));
    if (!j["activations"][l].is_string())
      throw DataError("weights file '" + path + "': activations[" +
                      std::to_string(l) + "] must be a string");
    net.act.push_back(
        activation_from_tag(j["activations"][l].get<std::string>()));
  }
  net.validate();
  return net;
}

void persist_weights(const std::vector<mimo::MisoModel>& bank,
                     const std::string& path) {
  if (bank.empty())
    throw std::invalid_argument("persist_weights: empty model bank");
  for (const auto& m : bank) m.validate();
  json j;
  j["schema"] = kWeightsSchema;
  j["kind"] = "mimo_bank";
  j["bin_ms"] = format_g17(bank[0].bin_ms);
  json outputs = json::array();
  for (const auto& m : bank) {
    if (m.bin_ms != bank[0].bin_ms)
      throw std::invalid_argument(
          "persist_weights: bank mixes bin widths");
    json o;
    json kernels = json::array();
    for (const Vec& k : m.k) kernels.push_back(g17_array(k));
    o["kernels"] = kernels;
    o["feedback"] = g17_array(m.h);
    o["theta"] = format_g17(m.theta);
    o["sigma"] = format_g17(m.sigma);
    outputs.push_back(std::move(o));
  }
  j["outputs"] = outputs;
  write_file(path, j.dump(2) + "\n");
}

std::vector<mimo::MisoModel> load_mimo_bank(const std::string& path) {
  const json j = parse_weights_file(path, "mimo_bank");
  if (!j.contains("outputs") || !j["outputs"].is_array() ||
      j["outputs"].empty())
    throw DataError("weights file '" + path + "': missing outputs array");
  if (!j.contains("bin_ms"))
    throw DataError("weights file '" + path + "': missing bin_ms");
  const double bin_ms = parse_double(j["bin_ms"], "bin_ms");

  std::vector<mimo::MisoModel> bank;
  for (std::size_t i = 0; i < j["outputs"].size(); ++i) {
    const json& o = j["outputs"][i];
    const std::string where = "outputs[" + std::to_string(i) + "]";
    if (!o.is_object() || !o.contains("kernels") || !o["kernels"].is_array())
      throw DataError("weights file '" + path + "': " + where +
                      ".kernels missing");
    mimo::MisoModel m;
    m.bin_ms = bin_ms;
    for (std::size_t c = 0; c < o["kernels"].size(); ++c)
      m.k.push_back(parse_double_array(
          o["kernels"][c], where + ".kernels[" + std::to_string(c) + "]"));
    m.h = parse_double_array(o.contains("feedback") ? o["feedback"] : json(),
                             where + ".feedback");
    m.theta = parse_double(o.contains("theta") ? o["theta"] : json(),
                           where + ".theta");
    m.sigma = parse_double(o.contains("sigma") ? o["sigma"] : json(),
                           where + ".sigma");
    m.validate();
    bank.push_back(std::move(m));
  }
  return bank;
}

std::string spike_train_to_csv(const SpikeTrain& t) {
  t.validate();
  std::string out = "bin,channel,value\n";
  for (std::size_t bin = 0; bin < t.bins(); ++bin)
    for (std::size_t c = 0; c < t.channels.size(); ++c) {
      out += std::to_string(bin);
      out += ',';
      out += std::to_string(c);
      out += ',';
      out += char('0' + t.channels[c][bin]);
      out += '\n';
    }
  return out;
}

SpikeTrain spike_train_from_csv(const std::string& text, double bin_ms) {
  std::size_t pos = text.find('\n');
  if (pos == std::string::npos ||
      text.substr(0, pos) != "bin,channel,value")
    throw DataError("spike CSV: missing 'bin,channel,value' header");

  struct Row {
    std::size_t bin, channel;
    std::uint8_t value;
  };
  std::vector<Row> rows;
  std::size_t line_no = 1;
  for (std::size_t start = pos + 1; start < text.size();) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;
    unsigned long long bin = 0, channel = 0, value = 0;
    char trailing = 0;
    if (std::sscanf(line.c_str(), "%llu,%llu,%llu%c", &bin, &channel, &value,
                    &trailing) != 3 ||
        value > 1)
      throw DataError("spike CSV: malformed row at line " +
                      std::to_string(line_no) + ": '" + line + "'");
    rows.push_back({std::size_t(bin), std::size_t(channel),
                    std::uint8_t(value)});
  }
  if (rows.empty()) throw DataError("spike CSV: no data rows");

  std::size_t bins = 0, channels = 0;
  for (const Row& r : rows) {
    bins = std::max(bins, r.bin + 1);
    channels = std::max(channels, r.channel + 1);
  }
  SpikeTrain t;
  t.bin_ms = bin_ms;
  t.channels.assign(channels, std::vector<std::uint8_t>(bins, 2));  // 2 = unset
  for (const Row& r : rows) {
    if (t.channels[r.channel][r.bin] != 2)
      throw DataError("spike CSV: duplicate entry for bin " +
                      std::to_string(r.bin) + ", channel " +
                      std::to_string(r.channel));
    t.channels[r.channel][r.bin] = r.value;
  }
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t bin = 0; bin < bins; ++bin)
      if (t.channels[c][bin] == 2)
        throw DataError("spike CSV: missing entry for bin " +
                        std::to_string(bin) + ", channel " +
                        std::to_string(c));
  t.validate();
  return t;
}

std::string stim_log_to_csv(const std::vector<StimCommand>& log) {
  std::string out =
      "t_ms,channel,amplitude_ma,frequency_hz,pulse_width_us,"
      "packet_rate_hz,duration_ms,biphasic\n";
  for (const StimCommand& c : log) {
    out += format_g17(c.t_ms);
    out += ',';
    out += std::to_string(c.channel);
    out += ',';
    out += format_g17(c.pulse.amplitude_ma);
    out += ',';
    out += format_g17(c.pulse.frequency_hz);
    out += ',';
    out += format_g17(c.pulse.pulse_width_us);
    out += ',';
    out += format_g17(c.pulse.packet_rate_hz);
    out += ',';
    out += format_g17(c.pulse.duration_ms);
    out += ',';
    out += c.pulse.biphasic ? '1' : '0';
    out += '\n';
  }
  return out;
}

void emit_file(RunArtifact& art, const std::string& name,
               const std::string& bytes) {
  write_file(art.dir + "/" + name, bytes);
  art.files.push_back(name);
  art.sha256[name] = sha256_hex(bytes);
}

void write_manifest(const RunArtifact& art) {
  json j;
  j["schema"] = kManifestSchema;
  j["scenario"] = art.scenario;
  j["seed"] = art.seed;
  j["kernel_backend"] =
      kernels::backend_name(kernels::active_backend());
  json files = json::object();
  for (const auto& [name, hash] : art.sha256) files[name] = hash;
  j["files"] = files;
  write_file(art.dir + "/manifest.json", j.dump(2) + "\n");
}

}  // namespace coprosim::harness
