#include "coprosim/decoders.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "coprosim/kernels.hpp"

namespace coprosim::decoders {

void KalmanModel::validate() const {
  const std::size_t n = A.rows;
  if (A.cols != n) throw std::invalid_argument("KalmanModel: A must be square");
  if (Q.rows != n || Q.cols != n)
    throw std::invalid_argument("KalmanModel: Q must match state dim");
  if (B.cols != n)
    throw std::invalid_argument("KalmanModel: B columns must match state dim");
  if (R.rows != B.rows || R.cols != B.rows)
    throw std::invalid_argument("KalmanModel: R must match observation dim");
  if (mean.size() != n || cov.rows != n || cov.cols != n)
    throw std::invalid_argument("KalmanModel: belief dims must match state dim");
}

KalmanStep kalman_step(KalmanModel& m, const NeuralFrame& y) {
  m.validate();
  if (y.size() != m.B.rows)
    throw DimensionError("kalman_step: observation length != B rows");

  // Predict.
  const Vec mean_pred = linalg::matvec(m.A, m.mean);
  Mat p_pred = linalg::add(
      linalg::matmul(linalg::matmul(m.A, m.cov), linalg::transpose(m.A)), m.Q);
  p_pred = linalg::symmetrized(p_pred);

  // Innovation covariance and gain: K = P B^T S^-1, solved as S K^T = B P.
  Mat s = linalg::add(
      linalg::matmul(linalg::matmul(m.B, p_pred), linalg::transpose(m.B)), m.R);
  s = linalg::symmetrized(s);
  const Mat gain =
      linalg::transpose(linalg::solve_checked(s, linalg::matmul(m.B, p_pred)));

  // Update.
  Vec innovation = y;
  linalg::axpy(-1.0, linalg::matvec(m.B, mean_pred), innovation);
  Vec mean_new = mean_pred;
  linalg::axpy(1.0, linalg::matvec(gain, innovation), mean_new);

  // Joseph form keeps the covariance positive definite under rounding.
  const Mat ikb =
      linalg::sub(Mat::identity(m.A.rows), linalg::matmul(gain, m.B));
  Mat cov_new = linalg::add(
      linalg::matmul(linalg::matmul(ikb, p_pred), linalg::transpose(ikb)),
      linalg::matmul(linalg::matmul(gain, m.R), linalg::transpose(gain)));
  cov_new = linalg::symmetrized(cov_new);

  m.mean = std::move(mean_new);
  m.cov = std::move(cov_new);
  return {m.mean, m.cov, gain};
}

namespace {

Mat rows_to_mat(const std::vector<Vec>& rows, std::size_t lo, std::size_t hi,
                const char* what) {
  const std::size_t width = rows.empty() ? 0 : rows[lo].size();
  Mat m(hi - lo, width);
  for (std::size_t r = lo; r < hi; ++r) {
    if (rows[r].size() != width)
      throw DimensionError(std::string(what) + ": ragged sample rows");
    std::copy(rows[r].begin(), rows[r].end(), m.row(r - lo));
  }
  return m;
}

/// Covariance of regression residuals T - D * Wt, divided by `denom`.
Mat residual_cov(const Mat& design, const Mat& targets, const Mat& wt,
                 std::size_t denom) {
  const Mat fitted = linalg::matmul(design, wt);
  Mat cov(targets.cols, targets.cols);
  Vec r(targets.cols);
  for (std::size_t i = 0; i < targets.rows; ++i) {
    for (std::size_t j = 0; j < targets.cols; ++j)
      r[j] = targets(i, j) - fitted(i, j);
    kernels::outer_acc(1.0, r.data(), r.size(), r.data(), r.size(),
                       cov.a.data());
  }
  return linalg::symmetrized(linalg::scaled(cov, 1.0 / double(denom)));
}

}  // namespace

KalmanModel fit_kalman(const std::vector<KinematicState>& states,
                       const std::vector<NeuralFrame>& frames) {
  if (states.size() != frames.size())
    throw DimensionError("fit_kalman: states and frames must pair up");
  const std::size_t t_len = states.size();
  if (t_len < 2)
    throw DataError("fit_kalman: need at least two steps to fit a transition");

  const Mat x_prev = rows_to_mat(states, 0, t_len - 1, "fit_kalman");
  const Mat x_next = rows_to_mat(states, 1, t_len, "fit_kalman");
  const Mat x_all = rows_to_mat(states, 0, t_len, "fit_kalman");
  const Mat y_all = rows_to_mat(frames, 0, t_len, "fit_kalman");

  KalmanModel m;
  const Mat at = linalg::least_squares(x_prev, x_next);  // n x n, A^T
  m.A = linalg::transpose(at);
  m.Q = residual_cov(x_prev, x_next, at, t_len - 1);

  const Mat bt = linalg::least_squares(x_all, y_all);  // n x m, B^T
  m.B = linalg::transpose(bt);
  m.R = residual_cov(x_all, y_all, bt, t_len);

  // Empirical prior for the belief.
  const std::size_t n = x_all.cols;
  m.mean.assign(n, 0.0);
  for (std::size_t i = 0; i < t_len; ++i)
    kernels::axpy(1.0 / double(t_len), x_all.row(i), m.mean.data(), n);
  m.cov = Mat(n, n);
  Vec centered(n);
  for (std::size_t i = 0; i < t_len; ++i) {
    for (std::size_t j = 0; j < n; ++j) centered[j] = x_all(i, j) - m.mean[j];
    kernels::outer_acc(1.0 / double(t_len), centered.data(), n, centered.data(),
                       n, m.cov.a.data());
  }
  m.cov = linalg::symmetrized(m.cov);
  m.validate();
  return m;
}

Vec decode_velocity(const LinearDecoder& dec, const NeuralFrame& frame) {
  if (frame.size() != dec.B.rows)
    throw DimensionError("decode_velocity: frame length != tuning rows");
  // Normal equations of f = B v: (B^T B) v = B^T f. A rank-deficient tuning
  // map surfaces as SingularMatrixError from the solver.
  return linalg::solve_spd(linalg::matmul_tn(dec.B, dec.B),
                           linalg::matvec_t(dec.B, frame));
}

LinearDecoder fit_linear_decoder(const Mat& rates, const Mat& velocities,
                                 int assist_rounds) {
  if (rates.rows != velocities.rows)
    throw DimensionError("fit_linear_decoder: sample counts differ");
  if (assist_rounds < 0)
    throw std::invalid_argument("fit_linear_decoder: negative assist rounds");

  // Phase 1: the tuning map, channel by channel, regressed on velocities.
  Mat labels = velocities;
  LinearDecoder dec{linalg::transpose(linalg::least_squares(labels, rates))};
  // Phase 2 (assisted refits): replay each trial through the decoder and
  // relabel with an equal blend of the previous label and the decoded
  // velocity. The label component the rates cannot explain (intention noise)
  // halves every round, while a self-consistent label set is a fixed point.
  for (int round = 0; round < assist_rounds; ++round) {
    for (std::size_t i = 0; i < labels.rows; ++i) {
      Vec f(rates.cols);
      std::copy(rates.row(i), rates.row(i) + rates.cols, f.begin());
      const Vec decoded = decode_velocity(dec, f);
      for (std::size_t j = 0; j < labels.cols; ++j)
        labels(i, j) = 0.5 * labels(i, j) + 0.5 * decoded[j];
    }
    dec.B = linalg::transpose(linalg::least_squares(labels, rates));
  }
  return dec;
}

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

/// In-band DFT bins of an N-point window: k in [1, N/2] whose frequency
/// k*fs/N lies in [lo, hi] (inclusive within rounding).
std::vector<std::size_t> band_bins(std::size_t n, double fs, double lo,
                                   double hi) {
  std::vector<std::size_t> bins;
  for (std::size_t k = 1; k <= n / 2; ++k) {
    const double f = double(k) * fs / double(n);
    if (f >= lo - 1e-9 && f <= hi + 1e-9) bins.push_back(k);
  }
  return bins;
}

struct DftBin {
  double re, im;  // X_k = re - i*im with re = sum x cos, im = sum x sin
};

DftBin project_bin(const Vec& x, std::size_t k) {
  const std::size_t n = x.size();
  Vec c(n), s(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double th = kTwoPi * double(k) * double(j) / double(n);
    c[j] = std::cos(th);
    s[j] = std::sin(th);
  }
  return {kernels::dot(x.data(), c.data(), n), kernels::dot(x.data(), s.data(), n)};
}

}  // namespace

double band_power(const Vec& window, double fs_hz, double band_lo_hz,
                  double band_hi_hz) {
  if (window.empty()) throw DataError("band_power: empty window");
  if (!(fs_hz > 0.0))
    throw std::invalid_argument("band_power: sampling rate must be > 0");
  if (!(band_lo_hz > 0.0) || !(band_hi_hz >= band_lo_hz) ||
      !(band_hi_hz < fs_hz / 2.0))
    throw std::invalid_argument("band_power: band must sit inside (0, fs/2)");

  const std::size_t n = window.size();
  double acc = 0.0;
  for (std::size_t k : band_bins(n, fs_hz, band_lo_hz, band_hi_hz)) {
    const DftBin b = project_bin(window, k);
    acc += b.re * b.re + b.im * b.im;
  }
  return 2.0 * acc / (double(n) * double(n));
}

bool detect_intention(const BandPowerDecoder& dec, const Vec& window) {
  if (window.size() != dec.window)
    throw DimensionError("detect_intention: window length != configured size");
  if (!(dec.baseline_power > 0.0))
    throw std::invalid_argument("detect_intention: baseline power must be > 0");
  if (!(dec.drop_fraction > 0.0 && dec.drop_fraction < 1.0))
    throw std::invalid_argument("detect_intention: drop_fraction outside (0, 1)");
  const double power =
      band_power(window, dec.fs_hz, dec.band_lo_hz, dec.band_hi_hz);
  // Strictly below the threshold: power equal to it still counts as rest.
  return power < (1.0 - dec.drop_fraction) * dec.baseline_power;
}

bool detect_burst(const Vec& window, double fs_hz, double band_lo_hz,
                  double band_hi_hz, double k_sigma) {
  if (!(k_sigma > 0.0))
    throw std::invalid_argument("detect_burst: k_sigma must be > 0");
  const std::size_t n = window.size();
  const double center = 0.5 * (band_lo_hz + band_hi_hz);
  const std::size_t len =
      std::max<std::size_t>(1, std::size_t(std::lround(fs_hz / center)));
  if (n < len)
    throw DataError("detect_burst: window shorter than the smoothing length");

  // Band-pass by DFT mask: y_t = (2/n) * sum_k (re_k cos + im_k sin).
  const auto bins = band_bins(n, fs_hz, band_lo_hz, band_hi_hz);
  Vec y(n, 0.0);
  for (std::size_t k : bins) {
    const DftBin b = project_bin(window, k);
    for (std::size_t t = 0; t < n; ++t) {
      const double th = kTwoPi * double(k) * double(t) / double(n);
      y[t] += (2.0 / double(n)) * (b.re * std::cos(th) + b.im * std::sin(th));
    }
  }

  // Rectified moving-average envelope, one center period long.
  Vec env(n);
  double acc = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    acc += std::fabs(y[t]);
    if (t >= len) acc -= std::fabs(y[t - len]);
    env[t] = acc / double(std::min(t + 1, len));
  }

  // Numerical floor: a constant or empty-band window produces only rounding
  // dust in y; that must never out-score its own running baseline.
  double peak = 0.0;
  for (double v : window) peak = std::max(peak, std::fabs(v));
  const double floor = 1e-9 * peak;

  // Running baseline over env[warmup .. t - lag - 1]. The warmup skips the
  // circular-DFT edge ghost and the smoother's ramp-in; the lag keeps the
  // probe's own rise (which spans up to one smoothing length, plus band-pass
  // spread) out of its threshold, otherwise a slow envelope ramp raises the
  // running std fast enough that no sample ever clears mean + k*std.
  const std::size_t warmup = std::max<std::size_t>(2 * len, 16);
  const std::size_t lag = 3 * len;
  // Envelope samples decorrelate only about once per smoothing length, so
  // the baseline must span several lengths before its moments mean anything.
  const std::size_t min_baseline = std::max<std::size_t>(6 * len, 48);
  double mean = 0.0, m2 = 0.0;  // Welford accumulators
  std::size_t count = 0, absorb = warmup, streak = 0;
  for (std::size_t t = warmup; t < n; ++t) {
    while (absorb + lag < t) {
      const double d = env[absorb] - mean;
      ++count;
      mean += d / double(count);
      m2 += d * (env[absorb] - mean);
      ++absorb;
    }
    if (count < min_baseline) continue;
    // A window holds only ~(duration * bandwidth) independent envelope
    // values, so the running std starts from very few effective samples and
    // can land far below the true dispersion, spraying false alarms. A
    // narrowband envelope's spread is never below about forty percent of its
    // level (Rayleigh sd/mean = 0.52, and a one-period smoother barely
    // narrows it), so flooring the estimate there costs real bursts nothing.
    const double sd = std::max(std::sqrt(m2 / double(count)), 0.4 * mean);
    if (env[t] > mean + k_sigma * sd && env[t] > floor) {
      // Physiological bursts hold their amplitude for several cycles; an
      // excursion that cannot keep the threshold for half a smoothing
      // length is a fluke of the band-limited noise, not a burst.
      if (++streak >= std::max<std::size_t>(len / 2, 4)) return true;
    } else {
      streak = 0;
    }
  }
  return false;
}

LdaModel lda_fit(const Mat& x, const std::vector<int>& labels) {
  if (labels.size() != x.rows)
    throw DimensionError("lda_fit: one label per sample row");
  const std::size_t d = x.cols;
  std::size_t n0 = 0, n1 = 0;
  for (int y : labels) {
    if (y == 0)
      ++n0;
    else if (y == 1)
      ++n1;
    else
      throw std::invalid_argument("lda_fit: labels must be 0 or 1");
  }
  if (n0 == 0 || n1 == 0)
    throw DataError("lda_fit: both classes must be present");

  LdaModel m;
  m.mean0.assign(d, 0.0);
  m.mean1.assign(d, 0.0);
  for (std::size_t i = 0; i < x.rows; ++i) {
    if (labels[i] == 0)
      kernels::axpy(1.0 / double(n0), x.row(i), m.mean0.data(), d);
    else
      kernels::axpy(1.0 / double(n1), x.row(i), m.mean1.data(), d);
  }

  Mat scatter(d, d);
  Vec c(d);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const Vec& mu = labels[i] == 0 ? m.mean0 : m.mean1;
    for (std::size_t j = 0; j < d; ++j) c[j] = x(i, j) - mu[j];
    kernels::outer_acc(1.0, c.data(), d, c.data(), d, scatter.a.data());
  }
  const double denom = double(std::max<std::size_t>(x.rows - 2, 1));
  m.cov = linalg::symmetrized(linalg::scaled(scatter, 1.0 / denom));
  for (std::size_t j = 0; j < d; ++j) m.cov(j, j) += 1e-8;  // fixed ridge
  m.prior0 = double(n0) / double(x.rows);
  m.prior1 = double(n1) / double(x.rows);
  return m;
}

int lda_predict(const LdaModel& m, const Vec& x) {
  if (x.size() != m.mean0.size())
    throw DimensionError("lda_predict: feature length mismatch");
  Vec diff(m.mean1.size());
  for (std::size_t j = 0; j < diff.size(); ++j) diff[j] = m.mean1[j] - m.mean0[j];
  const Vec w = linalg::solve_spd(m.cov, diff);
  Vec mid(m.mean0.size());
  for (std::size_t j = 0; j < mid.size(); ++j)
    mid[j] = 0.5 * (m.mean0[j] + m.mean1[j]);
  const double g = linalg::dot(w, x) - linalg::dot(w, mid) +
                   std::log(m.prior1 / m.prior0);
  return g > 0.0 ? 1 : 0;  // ties resolve to the lower class
}

HingeClassifier hinge_fit(const Mat& x, const std::vector<int>& labels,
                          const HingeFitConfig& cfg) {
  if (labels.size() != x.rows)
    throw DimensionError("hinge_fit: one label per sample row");
  if (x.rows == 0) throw DataError("hinge_fit: no samples");
  // Classes are numbered from 1; the class count is the largest label seen.
  int classes = 0;
  for (int y : labels) {
    if (y < 1) throw std::invalid_argument("hinge_fit: labels start at 1");
    classes = std::max(classes, y);
  }
  bool two_distinct = false;
  for (int y : labels) two_distinct = two_distinct || y != labels[0];
  if (!two_distinct)
    throw DataError("hinge_fit: training data holds a single class");

  const std::size_t d = x.cols;
  const std::size_t k = std::size_t(classes);
  HingeClassifier clf;
  clf.w = Mat(k, d);
  clf.b.assign(k, 0.0);
  clf.lambda = cfg.lambda;

  const double inv_n = 1.0 / double(x.rows);
  Mat gw(k, d);
  Vec gb(k);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::fill(gw.a.begin(), gw.a.end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
    kernels::axpy(2.0 * cfg.lambda, clf.w.a.data(), gw.a.data(), gw.a.size());
    for (std::size_t i = 0; i < x.rows; ++i) {
      for (std::size_t c = 0; c < k; ++c) {
        const double sign = (std::size_t(labels[i]) == c + 1) ? 1.0 : -1.0;
        const double score =
            kernels::dot(clf.w.row(c), x.row(i), d) + clf.b[c];
        if (sign * score < 1.0) {  // margin violated: hinge subgradient
          kernels::axpy(-sign * inv_n, x.row(i), gw.row(c), d);
          gb[c] -= sign * inv_n;
        }
      }
    }
    const double lr = cfg.learning_rate / (1.0 + 0.02 * double(epoch));
    kernels::axpy(-lr, gw.a.data(), clf.w.a.data(), clf.w.a.size());
    linalg::axpy(-lr, gb, clf.b);
  }
  return clf;
}

int hinge_predict(const HingeClassifier& clf, const Vec& x) {
  if (x.size() != clf.w.cols)
    throw DimensionError("hinge_predict: feature length mismatch");
  std::size_t best = 0;
  double best_score = kernels::dot(clf.w.row(0), x.data(), x.size()) + clf.b[0];
  for (std::size_t c = 1; c < clf.w.rows; ++c) {
    const double s = kernels::dot(clf.w.row(c), x.data(), x.size()) + clf.b[c];
    if (s > best_score) {  // strict: ties keep the lowest class index
      best_score = s;
      best = c;
    }
  }
  return int(best) + 1;  // classes are 1-based
}

double operant_rate(const SpikeTrain& spikes, double window_ms,
                    std::size_t channel) {
  if (!(window_ms > 0.0))
    throw std::invalid_argument("operant_rate: window must be > 0");
  if (spikes.channels.empty()) return 0.0;
  if (channel >= spikes.channels.size())
    throw std::out_of_range("operant_rate: no such channel");
  const auto& ch = spikes.channels[channel];
  if (ch.empty()) return 0.0;

  const std::size_t want = std::size_t(
      std::max<long long>(1, std::llround(window_ms / spikes.bin_ms)));
  const std::size_t m = std::min(want, ch.size());
  long long count = 0;
  for (std::size_t t = ch.size() - m; t < ch.size(); ++t) count += ch[t];
  return 1000.0 * double(count) / (double(m) * spikes.bin_ms);
}

}  // namespace coprosim::decoders
