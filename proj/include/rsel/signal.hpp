#pragma once

#include <vector>

#include "rsel/matrix.hpp"

namespace rsel {

// Closed-open seizure interval in seconds from recording start.
struct Interval {
  double onset_sec = 0.0;
  double offset_sec = 0.0;
};

struct Recording {
  double fs = 0.0;
  Matrix samples;  // channels x samples
  std::vector<Interval> annotations;

  int channels() const noexcept { return samples.rows(); }
  int n_samples() const noexcept { return samples.cols(); }
  double duration_sec() const noexcept {
    return fs > 0.0 ? n_samples() / fs : 0.0;
  }
};

// One analysis window. `features` starts as the raw C x (len*fs) time-domain
// slice cut by make_epochs and becomes the C x 250 band-magnitude matrix
// after band_features.
struct Epoch {
  Matrix features;
  int label = 0;  // 1 = seizure
  double start_sec = 0.0;
};

struct BiquadSection {
  double b0 = 0.0, b1 = 0.0, b2 = 0.0;  // numerator
  double a1 = 0.0, a2 = 0.0;            // denominator, monic a0 = 1
};

struct IirFilter {
  std::vector<BiquadSection> sections;
};

// Butterworth band-pass: analog prototype poles, low-pass to band-pass
// transform, bilinear map with frequency prewarping, grouped into stable
// second-order sections with numerators (1, 0, -1) and per-section gain
// normalized at the mapped center frequency. Throws InvalidBand unless
// 0 < low_hz < high_hz < fs/2 and order >= 1.
IirFilter butterworth_bandpass(int order, double low_hz, double high_hz,
                               double fs);

// True when every section's poles are strictly inside the unit circle.
bool is_stable(const IirFilter& f);

// |H(e^{j 2 pi freq/fs})| of the cascade.
double filter_magnitude(const IirFilter& f, double freq_hz, double fs);

// Causal single-pass filtering, zero initial state, per channel.
std::vector<double> filter_channel(const IirFilter& f,
                                   const std::vector<double>& x);
Recording filt(const IirFilter& f, const Recording& rec);

// Cuts the recording into consecutive non-overlapping len_sec windows
// (trailing partial window dropped). An epoch is labeled seizure when
// annotated intervals cover more than half of it.
std::vector<Epoch> make_epochs(const Recording& rec, double len_sec = 10.0);

// Per-channel DFT magnitudes on the 0.1 Hz grid at the theta, alpha and
// beta bins [4,7) + [8,13) + [13,30) Hz: 30 + 50 + 170 = 250 columns.
// Requires a 10 s window (that is what makes the grid 0.1 Hz) and fs >= 64.
Matrix band_features(const Matrix& epoch_samples, double fs);

// The half-open feature bands in Hz, shared with documentation and tests.
inline constexpr double kBandEdges[3][2] = {{4.0, 7.0}, {8.0, 13.0},
                                            {13.0, 30.0}};
inline constexpr int kBandBinCount = 250;

}  // namespace rsel
