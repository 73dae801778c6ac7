#include "coprosim/types.hpp"

#include <set>
#include <stdexcept>
#include <string>

namespace coprosim {

void PulseTrain::validate() const {
  auto fail = [](const std::string& msg) {
    throw std::invalid_argument("PulseTrain: " + msg);
  };
  if (!(frequency_hz >= 0.0)) fail("frequency_hz must be >= 0");
  if (!(amplitude_ma >= 0.0)) fail("amplitude_ma must be >= 0");
  if (!(pulse_width_us >= 0.0)) fail("pulse_width_us must be >= 0");
  if (!(packet_rate_hz >= 0.0)) fail("packet_rate_hz must be >= 0");
  if (!(duration_ms >= 0.0)) fail("duration_ms must be >= 0");
  if (packet_rate_hz > 0.0 && frequency_hz > 0.0 && packet_rate_hz > frequency_hz)
    fail("packet_rate_hz exceeds pulse frequency_hz");
  // A pulse (both phases when biphasic) must fit inside its own period.
  if (frequency_hz > 0.0 && pulse_width_us > 0.0) {
    const double period_us = 1e6 / frequency_hz;
    const double phase_us = biphasic ? 2.0 * pulse_width_us : pulse_width_us;
    if (phase_us > period_us) fail("pulse_width_us does not fit pulse period");
  }
}

void StimPattern::validate() const {
  std::set<int> seen;
  for (const auto& c : channels) {
    if (c.channel < 0)
      throw std::invalid_argument("StimPattern: negative channel id");
    if (!seen.insert(c.channel).second)
      throw std::invalid_argument("StimPattern: duplicate channel " +
                                  std::to_string(c.channel));
    c.train.validate();
  }
}

const PulseTrain* StimPattern::find(int channel) const {
  for (const auto& c : channels)
    if (c.channel == channel) return &c.train;
  return nullptr;
}

void SpikeTrain::validate() const {
  if (!(bin_ms > 0.0))
    throw std::invalid_argument("SpikeTrain: bin width must be > 0");
  const std::size_t len = bins();
  for (const auto& ch : channels) {
    if (ch.size() != len)
      throw std::invalid_argument("SpikeTrain: channels have unequal lengths");
    for (auto v : ch)
      if (v > 1) throw std::invalid_argument("SpikeTrain: bins must be 0 or 1");
  }
}

}  // namespace coprosim
