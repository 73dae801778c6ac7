#include "coprosim/mimo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "coprosim/kernels.hpp"
#include "coprosim/rng.hpp"
#include "coprosim/stats.hpp"

namespace coprosim::mimo {

void MisoModel::validate() const {
  if (!(sigma > 0.0))
    throw std::invalid_argument("MisoModel: sigma must be > 0");
  if (!(bin_ms > 0.0))
    throw std::invalid_argument("MisoModel: bin width must be > 0");
  if (k.empty() || h.empty())
    throw std::invalid_argument("MisoModel: kernels need at least one bin");
  const std::size_t m_k = k.front().size();
  if (m_k == 0)
    throw std::invalid_argument("MisoModel: kernels need at least one bin");
  for (const Vec& kc : k) {
    if (kc.size() != m_k)
      throw std::invalid_argument("MisoModel: input kernels differ in length");
    for (double v : kc)
      if (!std::isfinite(v))
        throw std::invalid_argument("MisoModel: non-finite kernel entry");
  }
  for (double v : h)
    if (!std::isfinite(v))
      throw std::invalid_argument("MisoModel: non-finite kernel entry");
  if (!std::isfinite(theta))
    throw std::invalid_argument("MisoModel: non-finite threshold");
}

namespace {

/// Trailing-window kernel sum: kernel index tau = 1 reads the last history
/// bin. Copies the 0/1 bins into doubles once so the hot dot product runs on
/// contiguous memory.
double kernel_drive(const Vec& kernel, const std::vector<std::uint8_t>& hist) {
  const std::size_t m = kernel.size();
  Vec tail(m);
  const std::size_t off = hist.size() - m;
  for (std::size_t i = 0; i < m; ++i) tail[i] = double(hist[off + i]);
  return kernels::dot_rev(kernel.data(), tail.data(), m);
}

}  // namespace

Potential miso_potential(const MisoModel& m, const SpikeTrain& x_history,
                         const SpikeTrain& y_history) {
  m.validate();
  x_history.validate();
  y_history.validate();
  if (x_history.channels.size() != m.k.size())
    throw DimensionError("miso_potential: one input history per kernel");
  if (y_history.channels.empty())
    throw DimensionError("miso_potential: output history missing");
  if (x_history.bins() < m.k.front().size() ||
      y_history.channels.front().size() < m.h.size())
    throw DimensionError("miso_potential: history shorter than kernel memory");

  Potential p{0.0, 0.0};
  for (std::size_t c = 0; c < m.k.size(); ++c)
    p.u += kernel_drive(m.k[c], x_history.channels[c]);
  p.a = kernel_drive(m.h, y_history.channels.front());
  return p;
}

double miso_spike_prob(const MisoModel& m, double u, double a) {
  if (!(m.sigma > 0.0))
    throw std::invalid_argument("miso_spike_prob: sigma must be > 0");
  return stats::norm_cdf((u + a - m.theta) / m.sigma);
}

SpikeTrain miso_simulate(const MisoModel& m, const SpikeTrain& x,
                         std::uint64_t seed) {
  m.validate();
  x.validate();
  if (x.channels.size() != m.k.size())
    throw DimensionError("miso_simulate: one input channel per kernel");
  if (x.bin_ms != m.bin_ms)
    throw DimensionError("miso_simulate: bin width differs from the model's");

  const std::size_t t_len = x.bins();
  const std::size_t m_k = m.k.front().size();
  const std::size_t m_h = m.h.size();

  SpikeTrain out;
  out.bin_ms = m.bin_ms;
  out.channels.assign(1, std::vector<std::uint8_t>(t_len, 0));

  // Rolling histories, oldest first; bins before the train start are silent.
  std::vector<Vec> xbuf(m.k.size(), Vec(m_k, 0.0));
  Vec ybuf(m_h, 0.0);

  Rng rng(seed);
  for (std::size_t t = 0; t < t_len; ++t) {
    double drive = 0.0;
    for (std::size_t c = 0; c < m.k.size(); ++c)
      drive += kernels::dot_rev(m.k[c].data(), xbuf[c].data(), m_k);
    drive += kernels::dot_rev(m.h.data(), ybuf.data(), m_h);

    const double eps = rng.normal(0.0, m.sigma);
    const bool spike = drive + eps >= m.theta;
    out.channels[0][t] = spike ? 1 : 0;

    for (std::size_t c = 0; c < m.k.size(); ++c) {
      std::rotate(xbuf[c].begin(), xbuf[c].begin() + 1, xbuf[c].end());
      xbuf[c].back() = double(x.channels[c][t]);
    }
    std::rotate(ybuf.begin(), ybuf.begin() + 1, ybuf.end());
    ybuf.back() = spike ? 1.0 : 0.0;
  }
  return out;
}

ProbitEval probit_loglik(const Mat& phi, const std::vector<std::uint8_t>& y,
                         const Vec& beta) {
  if (y.size() != phi.rows)
    throw DimensionError("probit_loglik: one response per design row");
  if (beta.size() != phi.cols)
    throw DimensionError("probit_loglik: coefficient length != design width");

  ProbitEval ev{0.0, Vec(phi.cols, 0.0)};
  for (std::size_t t = 0; t < phi.rows; ++t) {
    const double s = kernels::dot(phi.row(t), beta.data(), phi.cols);
    // d/ds log Phi(s) = mills(s); d/ds log Phi(-s) = -mills(-s). The stats
    // helpers stay finite deep in the tails where Phi underflows.
    if (y[t]) {
      ev.loglik += stats::norm_logcdf(s);
      kernels::axpy(stats::inverse_mills(s), phi.row(t), ev.grad.data(),
                    phi.cols);
    } else {
      ev.loglik += stats::norm_logcdf(-s);
      kernels::axpy(-stats::inverse_mills(-s), phi.row(t), ev.grad.data(),
                    phi.cols);
    }
  }
  return ev;
}

namespace {

/// Negative Hessian of the probit log-likelihood: sum_t w_t phi phi^T with
/// the standard positive probit weights.
Mat probit_neg_hessian(const Mat& phi, const std::vector<std::uint8_t>& y,
                       const Vec& beta) {
  Mat h(phi.cols, phi.cols);
  for (std::size_t t = 0; t < phi.rows; ++t) {
    const double s = kernels::dot(phi.row(t), beta.data(), phi.cols);
    double w;
    if (y[t]) {
      const double lam = stats::inverse_mills(s);
      w = lam * (lam + s);
    } else {
      const double lam = stats::inverse_mills(-s);
      w = lam * (lam - s);
    }
    kernels::outer_acc(w, phi.row(t), phi.cols, phi.row(t), phi.cols,
                       h.a.data());
  }
  return linalg::symmetrized(h);
}

double max_abs(const Vec& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

MisoModel fit_single(const Mat& phi, const std::vector<std::uint8_t>& spikes,
                     std::size_t inputs, std::size_t m_k, std::size_t m_h,
                     double bin_ms, const MimoFitConfig& cfg) {
  const std::size_t dim = phi.cols;
  Vec beta(dim, 0.0);
  ProbitEval cur = probit_loglik(phi, spikes, beta);

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    if (max_abs(cur.grad) < cfg.tol) break;

    // Newton direction with a ridge fallback: the probit Hessian is negative
    // semidefinite, so -H + ridge is SPD once degenerate columns (e.g. an
    // input that never spikes) are propped up.
    Mat neg_h = probit_neg_hessian(phi, spikes, beta);
    Vec dir;
    double ridge = 1e-9;
    for (;; ridge *= 100.0) {
      Mat damped = neg_h;
      for (std::size_t j = 0; j < dim; ++j) damped(j, j) += ridge;
      try {
        dir = linalg::solve_spd(damped, cur.grad);
        break;
      } catch (const SingularMatrixError&) {
        if (ridge > 1.0) throw;
      }
    }

    // Backtrack until the log-likelihood does not decrease.
    double step = 1.0;
    bool accepted = false;
    for (int half = 0; half < 40; ++half, step *= 0.5) {
      Vec trial = beta;
      linalg::axpy(step, dir, trial);
      const ProbitEval ev = probit_loglik(phi, spikes, trial);
      if (ev.loglik >= cur.loglik) {
        beta = std::move(trial);
        cur = ev;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;  // no direction improves: numerically converged
  }

  MisoModel m;
  m.k.assign(inputs, Vec(m_k, 0.0));
  for (std::size_t c = 0; c < inputs; ++c)
    for (std::size_t j = 0; j < m_k; ++j) m.k[c][j] = beta[c * m_k + j];
  m.h.assign(m_h, 0.0);
  for (std::size_t j = 0; j < m_h; ++j) m.h[j] = beta[inputs * m_k + j];
  m.theta = beta[inputs * m_k + m_h];  // the -1 column's coefficient
  m.sigma = 1.0;
  m.bin_ms = bin_ms;
  return m;
}

}  // namespace

std::vector<MisoModel> mimo_fit(const SpikeTrain& x, const SpikeTrain& y,
                                std::size_t m_k, std::size_t m_h,
                                const MimoFitConfig& cfg) {
  x.validate();
  y.validate();
  if (m_k == 0 || m_h == 0)
    throw std::invalid_argument("mimo_fit: kernel memories must be >= 1");
  if (x.channels.empty() || y.channels.empty())
    throw DimensionError("mimo_fit: need input and output channels");
  if (x.bins() != y.bins())
    throw DimensionError("mimo_fit: input and output lengths differ");
  if (x.bin_ms != y.bin_ms)
    throw DimensionError("mimo_fit: input and output bin widths differ");

  const std::size_t t_len = x.bins();
  const std::size_t lag0 = std::max(m_k, m_h);
  if (t_len < lag0 + 2 * (x.channels.size() * m_k + m_h + 1))
    throw DataError("mimo_fit: too few bins for the requested memory");

  const std::size_t inputs = x.channels.size();
  const std::size_t dim = inputs * m_k + m_h + 1;
  const std::size_t rows = t_len - lag0;

  std::vector<MisoModel> bank;
  bank.reserve(y.channels.size());
  for (std::size_t out = 0; out < y.channels.size(); ++out) {
    const auto& spikes_full = y.channels[out];

    // Design rows: input lags, own-output lags, then -1 so the threshold is
    // one more ascent coordinate (s = u + a - theta).
    Mat phi(rows, dim);
    std::vector<std::uint8_t> resp(rows);
    for (std::size_t t = lag0; t < t_len; ++t) {
      double* row = phi.row(t - lag0);
      for (std::size_t c = 0; c < inputs; ++c)
        for (std::size_t j = 0; j < m_k; ++j)
          row[c * m_k + j] = double(x.channels[c][t - (j + 1)]);
      for (std::size_t j = 0; j < m_h; ++j)
        row[inputs * m_k + j] = double(spikes_full[t - (j + 1)]);
      row[dim - 1] = -1.0;
      resp[t - lag0] = spikes_full[t];
    }

    std::size_t fired = 0;
    for (std::uint8_t s : resp) fired += s;
    if (fired == 0)
      throw DataError("mimo_fit: output channel " + std::to_string(out) +
                      " never spikes; threshold is unidentifiable");
    if (fired == resp.size())
      throw DataError("mimo_fit: output channel " + std::to_string(out) +
                      " always spikes; threshold is unidentifiable");

    bank.push_back(
        fit_single(phi, resp, inputs, m_k, m_h, x.bin_ms, cfg));
  }
  return bank;
}

MimoStimConfig::MimoStimConfig() {
  pulse.frequency_hz = 100.0;
  pulse.amplitude_ma = 1.0;
  pulse.pulse_width_us = 200.0;
  pulse.packet_rate_hz = 0.0;
  pulse.duration_ms = 2.0;
  pulse.biphasic = true;
}

std::vector<StimCommand> mimo_stim_encode(const SpikeTrain& predicted,
                                          const MimoStimConfig& cfg) {
  predicted.validate();
  cfg.pulse.validate();
  std::vector<StimCommand> commands;
  for (std::size_t t = 0; t < predicted.bins(); ++t) {
    for (std::size_t c = 0; c < predicted.channels.size(); ++c) {
      if (!predicted.channels[c][t]) continue;
      const auto it = cfg.channel_map.find(c);
      if (it == cfg.channel_map.end())
        throw std::out_of_range("mimo_stim_encode: channel " +
                                std::to_string(c) + " has no electrode");
      StimCommand cmd;
      cmd.t_ms = (double(t) + 0.5) * predicted.bin_ms;  // bin center
      cmd.channel = it->second;
      cmd.pulse = cfg.pulse;
      commands.push_back(cmd);
    }
  }
  return commands;
}

}  // namespace coprosim::mimo
