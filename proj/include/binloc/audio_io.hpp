#pragma once

#include <string>
#include <vector>

namespace binloc::audio {

struct StereoAudio {
  std::vector<double> left;
  std::vector<double> right;
  double sample_rate = 16000.0;
};

// Two-channel WAV, 16-bit PCM or 32-bit IEEE float.
StereoAudio read_wav(const std::string& path);
void write_wav_f32(const std::string& path, const StereoAudio& audio);

// Raw interleaved float32 with a sidecar JSON header {sample_rate, channels}
// at <path>.json.
StereoAudio read_raw_f32(const std::string& path);
void write_raw_f32(const std::string& path, const StereoAudio& audio);

}  // namespace binloc::audio
