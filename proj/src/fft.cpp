#include "binloc/fft.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace binloc::detail {

namespace {

constexpr double kPi = 3.14159265358979323846;

void fft_radix2(std::complex<double>* a, int n, bool inverse) {
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (int len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * kPi / len * (inverse ? 1.0 : -1.0);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (int i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (int k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse) {
    for (int i = 0; i < n; ++i) a[i] /= static_cast<double>(n);
  }
}

void dft_naive(std::complex<double>* a, int n, bool inverse) {
  std::vector<std::complex<double>> out(n);
  const double sgn = inverse ? 1.0 : -1.0;
  for (int k = 0; k < n; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (int m = 0; m < n; ++m) {
      const double ang = sgn * 2.0 * kPi * k * m / n;
      acc += a[m] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = inverse ? acc / static_cast<double>(n) : acc;
  }
  std::copy(out.begin(), out.end(), a);
}

}  // namespace

void fft(std::complex<double>* a, int n, bool inverse) {
  if ((n & (n - 1)) == 0)
    fft_radix2(a, n, inverse);
  else
    dft_naive(a, n, inverse);
}

}  // namespace binloc::detail
