#pragma once

#include <cstdint>
#include <vector>

#include "coprosim/linalg.hpp"
#include "coprosim/types.hpp"

/// Decoders: map neural measurements to movement intents, rates, and event
/// labels. Fitting functions are pure (inputs in, model out); only
/// kalman_step carries running belief state, stored inside the model it
/// mutates.
namespace coprosim::decoders {

/// Linear-Gaussian state-space model plus the current posterior belief.
///   x_{t+1} = A x_t + w,  w ~ N(0, Q)
///   y_t     = B x_t + v,  v ~ N(0, R)
/// A, B, Q, R are fixed after fitting; mean/cov evolve with kalman_step.
struct KalmanModel {
  Mat A;     // n x n state transition
  Mat B;     // m x n observation matrix
  Mat Q;     // n x n process noise covariance
  Mat R;     // m x m observation noise covariance
  Vec mean;  // posterior mean (n)
  Mat cov;   // posterior covariance (n x n)
  void validate() const;  // throws std::invalid_argument on shape mismatch
};

struct KalmanStep {
  Vec mean;
  Mat cov;
  Mat gain;  // n x m Kalman gain used for this update
};

/// One predict/update cycle on observation `y`. The posterior covariance is
/// propagated in Joseph form and symmetrized, so it stays symmetric positive
/// definite; a (numerically) singular innovation covariance surfaces as
/// SingularMatrixError instead of a silent garbage update.
KalmanStep kalman_step(KalmanModel& m, const NeuralFrame& y);

/// Least-squares system identification from paired state/frame sequences:
/// A from consecutive state pairs, B from state->frame regression, Q and R
/// from the respective residual covariances. The belief is initialized to
/// the empirical state mean and covariance. Throws DataError when the data
/// cannot pin the parameters down (fewer than two steps, or degenerate
/// regressors).
KalmanModel fit_kalman(const std::vector<KinematicState>& states,
                       const std::vector<NeuralFrame>& frames);

/// Linear cosine-tuning map f = B v: row = rate channel, column = velocity
/// dimension. Decoding inverts the map by least squares.
struct LinearDecoder {
  Mat B;  // C x D
};

/// v_hat = (B^T B)^-1 B^T f, the least-squares inverse of f = B v. Throws
/// DimensionError when the frame length differs from the channel count and
/// SingularMatrixError when B^T B is not invertible (rank-deficient tuning).
Vec decode_velocity(const LinearDecoder& dec, const NeuralFrame& frame);

/// Fits B by regressing observed rates on observed velocities, then runs
/// optional assisted refit rounds: each round relabels every sample with an
/// equal blend of its previous velocity label and the current decoder's own
/// output and refits. The blend geometrically shrinks the label component
/// the neural data cannot explain (noise in the intention estimates) while
/// preserving the explainable part.
LinearDecoder fit_linear_decoder(const Mat& rates /* N x C */,
                                 const Mat& velocities /* N x D */,
                                 int assist_rounds = 0);

/// In-band signal power of one window by direct DFT over the band's bins:
/// (2/N^2) * sum |X_k|^2 for band_lo <= k*fs/N <= band_hi (edges inclusive).
/// A unit-amplitude sinusoid on an in-band bin yields 0.5. The band must sit
/// inside (0, fs/2); empty windows are a DataError.
double band_power(const Vec& window, double fs_hz, double band_lo_hz,
                  double band_hi_hz);

/// Movement-intention detector keyed to a sensorimotor-rhythm power drop:
/// intention is flagged when in-band power falls strictly below
/// (1 - drop_fraction) * baseline_power. Power exactly at the threshold is
/// rest, not intent.
struct BandPowerDecoder {
  double fs_hz = 256.0;
  double band_lo_hz = 8.0;
  double band_hi_hz = 12.0;
  std::size_t window = 256;
  double baseline_power = 1.0;  // resting in-band power; must be > 0
  double drop_fraction = 0.5;   // required fractional drop, in (0, 1)
};

bool detect_intention(const BandPowerDecoder& dec, const Vec& window);

/// Burst (spindle) detector: band-pass by DFT bin mask, rectify, smooth with
/// a moving average one center-period long, then flag once the envelope
/// holds above the running mean + k_sigma * running std of its own baseline
/// for half a smoothing length. The baseline trails the probed sample by
/// three smoothing lengths and skips the first max(2 lengths, 16) samples,
/// so neither filter edge effects nor the rising burst itself can inflate
/// the threshold before the detector has a chance to fire. Windows shorter
/// than the smoothing length are a DataError; k_sigma must be positive.
bool detect_burst(const Vec& window, double fs_hz, double band_lo_hz,
                  double band_hi_hz, double k_sigma = 6.0);

/// Binary linear discriminant with pooled covariance.
struct LdaModel {
  Vec mean0, mean1;
  Mat cov;  // pooled within-class covariance + 1e-8 I
  double prior0 = 0.5, prior1 = 0.5;
};

/// Fits on rows of X with labels 0/1; the pooled covariance gets a fixed
/// 1e-8 ridge so degenerate features stay solvable. Throws DataError unless
/// both classes are present.
LdaModel lda_fit(const Mat& x, const std::vector<int>& labels);

/// 1 iff the class-1 discriminant strictly exceeds class 0's (ties -> 0).
int lda_predict(const LdaModel& m, const Vec& x);

/// Multiclass one-vs-rest linear hinge classifier. Classes are numbered from
/// 1 (motion 1..K); row c-1 of `w` scores class c.
struct HingeClassifier {
  Mat w;   // K x D
  Vec b;   // K
  double lambda = 1e-3;
};

struct HingeFitConfig {
  int epochs = 300;
  double learning_rate = 0.1;
  double lambda = 1e-3;
};

/// Full-batch subgradient descent on the L2-regularized one-vs-rest hinge
/// loss; deterministic for fixed inputs. Labels must lie in 1..max(labels);
/// a training set with fewer than two distinct classes is a DataError.
HingeClassifier hinge_fit(const Mat& x, const std::vector<int>& labels,
                          const HingeFitConfig& cfg = {});

/// argmax_c of w_c . x + b_c, returned as a 1-based class; ties resolve to
/// the lowest class index.
int hinge_predict(const HingeClassifier& clf, const Vec& x);

/// Mean firing rate (Hz) of one spike-train channel over the trailing
/// `window_ms` (clipped to the available data). Empty trains rate 0.
double operant_rate(const SpikeTrain& spikes, double window_ms,
                    std::size_t channel = 0);

}  // namespace coprosim::decoders
