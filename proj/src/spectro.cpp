#include "binloc/spectro.hpp"

#include <omp.h>

#include <cstdio>
#include <cstring>
#include <fstream>

#include "binloc/fft.hpp"

namespace binloc::spectro {

namespace {

using detail::fft;

std::vector<double> hann_window(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / n);
  return w;
}

void check_same_shape(const ComplexSpectrogram& a, const ComplexSpectrogram& b) {
  if (a.freq_bins() != b.freq_bins() || a.frames() != b.frames())
    throw std::invalid_argument("spectrogram dimension mismatch between channels");
  if (a.sample_rate != b.sample_rate)
    throw std::invalid_argument("sample rate mismatch between channels");
}

constexpr double kMagClamp = 1e-12;

}  // namespace

double BinauralSpectrogram::active_fraction() const {
  if (activity.size() == 0) return 0.0;
  long n = 0;
  for (Eigen::Index i = 0; i < activity.size(); ++i) n += activity.data()[i] ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(activity.size());
}

ComplexSpectrogram stft(std::span<const double> signal, int window_len, int hop,
                        double sample_rate) {
  if (window_len < 2 || window_len % 2 != 0)
    throw std::invalid_argument("window_len must be even and >= 2");
  if (hop < 1) throw std::invalid_argument("hop must be >= 1");
  if (static_cast<int>(signal.size()) < window_len)
    throw std::invalid_argument("signal too short");

  const int F = window_len / 2;
  const int T = static_cast<int>((signal.size() - window_len) / hop) + 1;
  const auto win = hann_window(window_len);

  ComplexSpectrogram out;
  out.data.resize(F, T);
  out.sample_rate = sample_rate;
  out.window_len = window_len;
  out.hop = hop;

#pragma omp parallel
  {
    std::vector<std::complex<double>> buf(window_len);
#pragma omp for schedule(static)
    for (int t = 0; t < T; ++t) {
      const double* frame = signal.data() + static_cast<size_t>(t) * hop;
      for (int i = 0; i < window_len; ++i) buf[i] = frame[i] * win[i];
      fft(buf.data(), window_len, false);
      // keep bins 1..F (drop DC; bin F is Nyquist)
      for (int f = 0; f < F; ++f) out.data(f, t) = buf[f + 1];
    }
  }
  return out;
}

std::vector<double> istft(const ComplexSpectrogram& spec) {
  const int F = spec.freq_bins();
  const int T = spec.frames();
  const int n = spec.window_len;
  if (n != 2 * F) throw std::invalid_argument("window_len inconsistent with freq_bins");
  const int hop = spec.hop;
  const auto win = hann_window(n);

  std::vector<double> out(static_cast<size_t>(T - 1) * hop + n, 0.0);
  std::vector<double> wsum(out.size(), 0.0);
  std::vector<std::complex<double>> buf(n);

  for (int t = 0; t < T; ++t) {
    buf[0] = 0.0;  // dropped DC
    for (int f = 0; f < F; ++f) buf[f + 1] = spec.data(f, t);
    for (int k = 1; k < F; ++k) buf[n - k] = std::conj(buf[k]);
    // Nyquist bin of a real frame is real; drop any imaginary leakage.
    buf[F] = std::complex<double>(buf[F].real(), 0.0);
    fft(buf.data(), n, true);
    const size_t off = static_cast<size_t>(t) * hop;
    for (int i = 0; i < n; ++i) {
      out[off + i] += win[i] * buf[i].real();
      wsum[off + i] += win[i] * win[i];
    }
  }
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = wsum[i] > 1e-12 ? out[i] / wsum[i] : 0.0;
  return out;
}

BinauralSpectrogram binaural_features(const ComplexSpectrogram& left,
                                      const ComplexSpectrogram& right) {
  check_same_shape(left, right);
  const int F = left.freq_bins();
  const int T = left.frames();

  BinauralSpectrogram out;
  out.freq_bins = F;
  out.features.resize(3 * F, T);
  out.activity = MaskMat::Ones(3 * F, T);

#pragma omp parallel for schedule(static)
  for (int f = 0; f < F; ++f) {
    for (int t = 0; t < T; ++t) {
      const std::complex<double> sl = left.data(f, t);
      const std::complex<double> sr = right.data(f, t);
      // Clamp magnitudes before the ratio so unmasked zeros stay finite;
      // the phase of a clamped-to-zero channel degenerates to arg(0) = 0.
      const double ml = std::max(std::abs(sl), kMagClamp);
      const double mr = std::max(std::abs(sr), kMagClamp);
      out.features(f, t) = 20.0 * std::log10(mr / ml);
      // IPD as the unit complex number of s_R / s_L: r = s_R * conj(s_L),
      // normalized. Avoids atan2/cos/sin round trips.
      std::complex<double> r = sr * std::conj(sl);
      double rm = std::abs(r);
      if (rm < kMagClamp * kMagClamp) {
        out.features(F + f, t) = 1.0;  // arg = 0 convention for degenerate bins
        out.features(2 * F + f, t) = 0.0;
      } else {
        out.features(F + f, t) = r.real() / rm;
        out.features(2 * F + f, t) = r.imag() / rm;
      }
    }
  }
  return out;
}

BinauralSpectrogram binaural_features(const ComplexSpectrogram& left,
                                      const ComplexSpectrogram& right, double epsilon) {
  BinauralSpectrogram out = binaural_features(left, right);
  out.activity = activity_mask(left, right, epsilon);
  return out;
}

MaskMat activity_mask(const ComplexSpectrogram& left, const ComplexSpectrogram& right,
                      double epsilon) {
  check_same_shape(left, right);
  if (epsilon < 0) throw std::invalid_argument("epsilon must be >= 0");
  const int F = left.freq_bins();
  const int T = left.frames();
  MaskMat mask(3 * F, T);
  for (int f = 0; f < F; ++f) {
    for (int t = 0; t < T; ++t) {
      const double p = std::norm(left.data(f, t)) + std::norm(right.data(f, t));
      const std::uint8_t on = p >= epsilon ? 1 : 0;
      mask(f, t) = on;
      mask(F + f, t) = on;
      mask(2 * F + f, t) = on;
    }
  }
  return mask;
}

double noise_floor_epsilon(const ComplexSpectrogram& noise_left,
                           const ComplexSpectrogram& noise_right, double factor) {
  check_same_shape(noise_left, noise_right);
  if (factor <= 0) throw std::invalid_argument("factor must be > 0");
  if (noise_left.data.size() == 0) throw std::invalid_argument("empty noise recording");
  KahanSum acc;
  const int F = noise_left.freq_bins();
  const int T = noise_left.frames();
  for (int f = 0; f < F; ++f)
    for (int t = 0; t < T; ++t)
      acc.add(std::norm(noise_left.data(f, t)) + std::norm(noise_right.data(f, t)));
  return factor * acc.value() / static_cast<double>(F) / static_cast<double>(T);
}

Vec mean_feature_vector(const BinauralSpectrogram& spec) {
  const int D = spec.D();
  const int T = spec.T();
  if (T < 1) throw std::invalid_argument("empty spectrogram");
  for (Eigen::Index i = 0; i < spec.activity.size(); ++i)
    if (!spec.activity.data()[i])
      throw std::invalid_argument("mean feature vector requires full spectrogram");

  Vec y(D);
#pragma omp parallel for schedule(static)
  for (int d = 0; d < D; ++d) {
    KahanSum acc;
    for (int t = 0; t < T; ++t) acc.add(spec.features(d, t));
    y[d] = acc.value() / static_cast<double>(T);
  }
  return y;
}

void write_bnsp(const std::string& path, const BinauralSpectrogram& spec) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  const std::uint32_t D = static_cast<std::uint32_t>(spec.D());
  const std::uint32_t F = static_cast<std::uint32_t>(spec.freq_bins);
  const std::uint32_t T = static_cast<std::uint32_t>(spec.T());
  f.write("BNSP", 4);
  f.write(reinterpret_cast<const char*>(&D), 4);
  f.write(reinterpret_cast<const char*>(&F), 4);
  f.write(reinterpret_cast<const char*>(&T), 4);
  f.write(reinterpret_cast<const char*>(spec.features.data()),
          static_cast<std::streamsize>(sizeof(double) * D * T));
  f.write(reinterpret_cast<const char*>(spec.activity.data()),
          static_cast<std::streamsize>(D * T));
  if (!f) throw std::runtime_error("write failed: " + path);
}

BinauralSpectrogram read_bnsp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + path);
  char magic[4];
  std::uint32_t D = 0, F = 0, T = 0;
  f.read(magic, 4);
  f.read(reinterpret_cast<char*>(&D), 4);
  f.read(reinterpret_cast<char*>(&F), 4);
  f.read(reinterpret_cast<char*>(&T), 4);
  if (!f || std::memcmp(magic, "BNSP", 4) != 0)
    throw std::runtime_error("not a BNSP file: " + path);
  if (D != 3 * F || T == 0) throw std::runtime_error("corrupt BNSP header: " + path);
  BinauralSpectrogram spec;
  spec.freq_bins = static_cast<int>(F);
  spec.features.resize(D, T);
  spec.activity.resize(D, T);
  f.read(reinterpret_cast<char*>(spec.features.data()),
         static_cast<std::streamsize>(sizeof(double) * D * T));
  f.read(reinterpret_cast<char*>(spec.activity.data()), static_cast<std::streamsize>(D * T));
  if (!f) throw std::runtime_error("truncated BNSP file: " + path);
  return spec;
}

}  // namespace binloc::spectro
