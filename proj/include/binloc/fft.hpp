#pragma once

#include <complex>

namespace binloc::detail {

// In-place complex DFT: radix-2 for power-of-two sizes, naive fallback
// otherwise. Deterministic; no planning state.
void fft(std::complex<double>* a, int n, bool inverse);

}  // namespace binloc::detail
