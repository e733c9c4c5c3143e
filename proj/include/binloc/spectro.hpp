#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

#include "binloc/common.hpp"

namespace binloc::spectro {

// STFT of one channel. F = window_len/2 positive-frequency bins: the DC bin
// is dropped, bin index i holds frequency (i+1) * sample_rate / window_len
// up to and including Nyquist.
struct ComplexSpectrogram {
  RMatC data;  // F x T
  double sample_rate = 16000.0;
  int window_len = 1024;
  int hop = 128;

  int freq_bins() const { return static_cast<int>(data.rows()); }
  int frames() const { return static_cast<int>(data.cols()); }
};

// Binaural feature spectrogram. Rows 0..F-1 are ILD (dB), F..2F-1 the IPD
// real part, 2F..3F-1 the IPD imaginary part; D = 3F. The activity mask is
// replicated across the three blocks of each (f, t).
struct BinauralSpectrogram {
  RMat features;    // D x T
  MaskMat activity; // D x T, entries 0/1
  int freq_bins = 0;

  int D() const { return static_cast<int>(features.rows()); }
  int T() const { return static_cast<int>(features.cols()); }

  int ild_row(int f) const { return f; }
  int ipd_re_row(int f) const { return freq_bins + f; }
  int ipd_im_row(int f) const { return 2 * freq_bins + f; }

  double active_fraction() const;
};

ComplexSpectrogram stft(std::span<const double> signal, int window_len, int hop,
                        double sample_rate);

// Weighted overlap-add inverse; reconstructs a real signal of length
// (T-1)*hop + window_len. The dropped DC bin is taken as zero.
std::vector<double> istft(const ComplexSpectrogram& spec);

// ILD/IPD extraction per Eqs. (2)-(4); activity all-ones.
BinauralSpectrogram binaural_features(const ComplexSpectrogram& left,
                                      const ComplexSpectrogram& right);

// Convenience overload that also thresholds activity at epsilon.
BinauralSpectrogram binaural_features(const ComplexSpectrogram& left,
                                      const ComplexSpectrogram& right, double epsilon);

// chi_{ft} = 1 iff |s_L|^2 + |s_R|^2 >= epsilon, replicated across the three
// feature rows of (f, t).
MaskMat activity_mask(const ComplexSpectrogram& left, const ComplexSpectrogram& right,
                      double epsilon);

// factor times the mean over (f, t) of the summed channel power of a
// noise-only recording.
double noise_floor_epsilon(const ComplexSpectrogram& noise_left,
                           const ComplexSpectrogram& noise_right, double factor);

// Temporal mean, Eq. (8). Requires a fully active spectrogram (white-noise
// convention).
Vec mean_feature_vector(const BinauralSpectrogram& spec);

// Binary container: magic "BNSP", u32 D, u32 F, u32 T (little-endian),
// D*T float64 features row-major, D*T bytes of activity.
void write_bnsp(const std::string& path, const BinauralSpectrogram& spec);
BinauralSpectrogram read_bnsp(const std::string& path);

}  // namespace binloc::spectro
