#include "rsel/signal.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "rsel/errors.hpp"

namespace rsel {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

using Cplx = std::complex<double>;

Cplx bilinear(Cplx s, double fs) { return (2.0 * fs + s) / (2.0 * fs - s); }

// Denominator (1, a1, a2) from a conjugate pole pair or two real poles.
BiquadSection section_from_poles(Cplx z1, Cplx z2) {
  BiquadSection s;
  s.a1 = -(z1 + z2).real();
  s.a2 = (z1 * z2).real();
  return s;
}

Cplx section_response(const BiquadSection& s, Cplx zinv) {
  return (s.b0 + s.b1 * zinv + s.b2 * zinv * zinv) /
         (1.0 + s.a1 * zinv + s.a2 * zinv * zinv);
}

bool section_stable(const BiquadSection& s) {
  // Jury criterion for z^2 + a1 z + a2.
  return std::abs(s.a2) < 1.0 && std::abs(s.a1) < 1.0 + s.a2;
}

}  // namespace

IirFilter butterworth_bandpass(int order, double low_hz, double high_hz,
                               double fs) {
  if (order < 1) throw InvalidBand("filter order must be >= 1");
  if (!(fs > 0.0) || !(low_hz > 0.0) || !(low_hz < high_hz) ||
      !(high_hz < fs / 2.0))
    throw InvalidBand("band edges must satisfy 0 < low < high < fs/2");

  // Prewarped analog edges so the digital response hits the requested ones.
  const double w1 = 2.0 * fs * std::tan(kPi * low_hz / fs);
  const double w2 = 2.0 * fs * std::tan(kPi * high_hz / fs);
  const double bw = w2 - w1;
  const double w0sq = w1 * w2;

  // Each analog prototype pole p maps to the roots of s^2 - bw p s + w0^2.
  const auto bandpass_pair = [&](Cplx p) -> std::pair<Cplx, Cplx> {
    const Cplx bp = bw * p;
    const Cplx disc = std::sqrt(bp * bp - 4.0 * w0sq);
    return {0.5 * (bp + disc), 0.5 * (bp - disc)};
  };

  IirFilter f;
  for (int k = 0; k < order / 2; ++k) {
    const double theta = kPi * (2.0 * k + 1.0) / (2.0 * order);
    const Cplx p(-std::sin(theta), std::cos(theta));  // upper-half-plane pole
    const auto [s1, s2] = bandpass_pair(p);
    // The conjugate prototype pole contributes the conjugates of s1 and s2,
    // so each band-pass pole pairs with its own conjugate.
    for (const Cplx s : {s1, s2}) {
      const Cplx z = bilinear(s, fs);
      f.sections.push_back(section_from_poles(z, std::conj(z)));
    }
  }
  if (order % 2 == 1) {
    const auto [s1, s2] = bandpass_pair(Cplx(-1.0, 0.0));
    const Cplx z1 = bilinear(s1, fs);
    const Cplx z2 = bilinear(s2, fs);
    // Real prototype pole: the two band-pass poles are either a conjugate
    // pair or both real; either way they share one section.
    f.sections.push_back(section_from_poles(z1, z2));
  }

  // One zero at z=1 and one at z=-1 per section, gain-normalized at the
  // image of the analog center frequency.
  const double wd = 2.0 * std::atan(std::sqrt(w0sq) / (2.0 * fs));
  const Cplx zinv_c = std::exp(Cplx(0.0, -wd));
  for (auto& s : f.sections) {
    s.b0 = 1.0;
    s.b1 = 0.0;
    s.b2 = -1.0;
    const double mag = std::abs(section_response(s, zinv_c));
    if (!(mag > 0.0) || !std::isfinite(mag))
      throw InvalidBand("degenerate band: zero response at center frequency");
    const double g = 1.0 / mag;
    s.b0 = g;
    s.b2 = -g;
    if (!section_stable(s))
      throw InvalidBand("band produced an unstable section");
  }
  return f;
}

bool is_stable(const IirFilter& f) {
  return std::all_of(f.sections.begin(), f.sections.end(), section_stable);
}

double filter_magnitude(const IirFilter& f, double freq_hz, double fs) {
  const Cplx zinv = std::exp(Cplx(0.0, -2.0 * kPi * freq_hz / fs));
  Cplx h(1.0, 0.0);
  for (const auto& s : f.sections) h *= section_response(s, zinv);
  return std::abs(h);
}

std::vector<double> filter_channel(const IirFilter& f,
                                   const std::vector<double>& x) {
  std::vector<double> y = x;
  // Direct form II transposed per section, zero initial state.
  std::vector<std::pair<double, double>> state(f.sections.size(), {0.0, 0.0});
  for (double& v : y) {
    for (std::size_t s = 0; s < f.sections.size(); ++s) {
      const BiquadSection& c = f.sections[s];
      auto& [z1, z2] = state[s];
      const double out = c.b0 * v + z1;
      z1 = c.b1 * v - c.a1 * out + z2;
      z2 = c.b2 * v - c.a2 * out;
      v = out;
    }
  }
  return y;
}

Recording filt(const IirFilter& f, const Recording& rec) {
  Recording out;
  out.fs = rec.fs;
  out.annotations = rec.annotations;
  out.samples = Matrix(rec.channels(), rec.n_samples());
  std::vector<double> channel(rec.n_samples());
  for (int c = 0; c < rec.channels(); ++c) {
    for (int t = 0; t < rec.n_samples(); ++t) channel[t] = rec.samples(c, t);
    const std::vector<double> filtered = filter_channel(f, channel);
    for (int t = 0; t < rec.n_samples(); ++t) out.samples(c, t) = filtered[t];
  }
  return out;
}

std::vector<Epoch> make_epochs(const Recording& rec, double len_sec) {
  if (!(rec.fs > 0.0)) throw InvalidArgument("recording sample rate must be > 0");
  if (!(len_sec > 0.0)) throw InvalidArgument("epoch length must be > 0");
  const double exact = len_sec * rec.fs;
  const long long window = std::llround(exact);
  if (window < 1 || std::abs(exact - static_cast<double>(window)) >
                        1e-9 * std::max(1.0, exact))
    throw InvalidArgument("epoch length times sample rate must be an integer");

  const int w = static_cast<int>(window);
  const int n_epochs = rec.n_samples() / w;
  std::vector<Epoch> epochs;
  epochs.reserve(n_epochs);
  for (int e = 0; e < n_epochs; ++e) {
    Epoch ep;
    ep.start_sec = static_cast<double>(e) * w / rec.fs;
    ep.features = Matrix(rec.channels(), w);
    for (int c = 0; c < rec.channels(); ++c)
      for (int t = 0; t < w; ++t)
        ep.features(c, t) = rec.samples(c, e * w + t);

    const double t0 = ep.start_sec;
    const double t1 = t0 + len_sec;
    double covered = 0.0;
    for (const Interval& iv : rec.annotations)
      covered += std::max(0.0, std::min(t1, iv.offset_sec) -
                                   std::max(t0, iv.onset_sec));
    ep.label = covered > 0.5 * len_sec ? 1 : 0;
    epochs.push_back(std::move(ep));
  }
  return epochs;
}

Matrix band_features(const Matrix& epoch_samples, double fs) {
  if (!(fs >= 64.0))
    throw InvalidArgument("band features need fs >= 64 Hz");
  const int w = epoch_samples.cols();
  const int channels = epoch_samples.rows();
  if (channels < 1) throw InvalidArgument("band features need >= 1 channel");
  if (std::abs(w / fs - 10.0) > 1e-9)
    throw ResolutionMismatch(
        "band features need a 10 s window for 0.1 Hz resolution");

  // DFT index k corresponds to k * 0.1 Hz; half-open bands.
  std::vector<int> bins;
  bins.reserve(kBandBinCount);
  for (const auto& band : kBandEdges) {
    const int k0 = static_cast<int>(std::lround(band[0] * 10.0));
    const int k1 = static_cast<int>(std::lround(band[1] * 10.0));
    for (int k = k0; k < k1; ++k) bins.push_back(k);
  }

  Matrix out(channels, static_cast<int>(bins.size()));
  for (int c = 0; c < channels; ++c) {
    for (std::size_t b = 0; b < bins.size(); ++b) {
      // Goertzel recurrence for a single DFT magnitude.
      const double wk = 2.0 * kPi * bins[b] / w;
      const double coeff = 2.0 * std::cos(wk);
      double s1 = 0.0, s2 = 0.0;
      for (int t = 0; t < w; ++t) {
        const double s0 = epoch_samples(c, t) + coeff * s1 - s2;
        s2 = s1;
        s1 = s0;
      }
      const double power = s1 * s1 + s2 * s2 - coeff * s1 * s2;
      out(c, static_cast<int>(b)) = std::sqrt(std::max(0.0, power));
    }
  }
  return out;
}

}  // namespace rsel
