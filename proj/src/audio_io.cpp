#include "binloc/audio_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace binloc::audio {

namespace {

std::uint32_t rd_u32(std::ifstream& f) {
  std::uint32_t v = 0;
  f.read(reinterpret_cast<char*>(&v), 4);
  return v;
}

std::uint16_t rd_u16(std::ifstream& f) {
  std::uint16_t v = 0;
  f.read(reinterpret_cast<char*>(&v), 2);
  return v;
}

}  // namespace

StereoAudio read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + path);

  char tag[4];
  f.read(tag, 4);
  if (!f || std::memcmp(tag, "RIFF", 4) != 0) throw std::runtime_error("not a WAV file: " + path);
  rd_u32(f);  // riff size
  f.read(tag, 4);
  if (!f || std::memcmp(tag, "WAVE", 4) != 0) throw std::runtime_error("not a WAV file: " + path);

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  std::vector<char> data;
  bool got_fmt = false, got_data = false;

  while (f.read(tag, 4)) {
    std::uint32_t size = rd_u32(f);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      format = rd_u16(f);
      channels = rd_u16(f);
      sample_rate = rd_u32(f);
      rd_u32(f);  // byte rate
      rd_u16(f);  // block align
      bits = rd_u16(f);
      if (size > 16) f.ignore(size - 16);
      got_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      data.resize(size);
      f.read(data.data(), size);
      got_data = true;
    } else {
      f.ignore(size + (size & 1));
    }
    if (got_fmt && got_data) break;
  }
  if (!got_fmt || !got_data) throw std::runtime_error("incomplete WAV file: " + path);
  if (channels != 2) throw std::runtime_error("expected 2-channel WAV, got " + std::to_string(channels));

  StereoAudio out;
  out.sample_rate = sample_rate;
  if (format == 1 && bits == 16) {
    const auto* s = reinterpret_cast<const std::int16_t*>(data.data());
    const size_t n = data.size() / 4;
    out.left.resize(n);
    out.right.resize(n);
    for (size_t i = 0; i < n; ++i) {
      out.left[i] = s[2 * i] / 32768.0;
      out.right[i] = s[2 * i + 1] / 32768.0;
    }
  } else if (format == 3 && bits == 32) {
    const auto* s = reinterpret_cast<const float*>(data.data());
    const size_t n = data.size() / 8;
    out.left.resize(n);
    out.right.resize(n);
    for (size_t i = 0; i < n; ++i) {
      out.left[i] = s[2 * i];
      out.right[i] = s[2 * i + 1];
    }
  } else {
    throw std::runtime_error("unsupported WAV encoding (need PCM16 or float32): " + path);
  }
  return out;
}

void write_wav_f32(const std::string& path, const StereoAudio& audio) {
  if (audio.left.size() != audio.right.size())
    throw std::invalid_argument("channel length mismatch");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);

  const std::uint32_t n = static_cast<std::uint32_t>(audio.left.size());
  const std::uint32_t data_size = n * 8;
  const std::uint32_t sr = static_cast<std::uint32_t>(audio.sample_rate);
  const std::uint32_t riff_size = 36 + data_size;
  const std::uint16_t format = 3, channels = 2, bits = 32;
  const std::uint32_t byte_rate = sr * channels * bits / 8;
  const std::uint16_t block_align = channels * bits / 8;
  const std::uint32_t fmt_size = 16;

  f.write("RIFF", 4);
  f.write(reinterpret_cast<const char*>(&riff_size), 4);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  f.write(reinterpret_cast<const char*>(&fmt_size), 4);
  f.write(reinterpret_cast<const char*>(&format), 2);
  f.write(reinterpret_cast<const char*>(&channels), 2);
  f.write(reinterpret_cast<const char*>(&sr), 4);
  f.write(reinterpret_cast<const char*>(&byte_rate), 4);
  f.write(reinterpret_cast<const char*>(&block_align), 2);
  f.write(reinterpret_cast<const char*>(&bits), 2);
  f.write("data", 4);
  f.write(reinterpret_cast<const char*>(&data_size), 4);
  for (std::uint32_t i = 0; i < n; ++i) {
    float l = static_cast<float>(audio.left[i]);
    float r = static_cast<float>(audio.right[i]);
    f.write(reinterpret_cast<const char*>(&l), 4);
    f.write(reinterpret_cast<const char*>(&r), 4);
  }
  if (!f) throw std::runtime_error("write failed: " + path);
}

StereoAudio read_raw_f32(const std::string& path) {
  std::ifstream hdr(path + ".json");
  if (!hdr) throw std::runtime_error("missing sidecar header: " + path + ".json");
  nlohmann::json j = nlohmann::json::parse(hdr);
  const int channels = j.at("channels").get<int>();
  if (channels != 2) throw std::runtime_error("expected 2-channel raw file, got " + std::to_string(channels));

  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + path);
  f.seekg(0, std::ios::end);
  const size_t bytes = static_cast<size_t>(f.tellg());
  f.seekg(0);
  std::vector<float> buf(bytes / 4);
  f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));

  StereoAudio out;
  out.sample_rate = j.at("sample_rate").get<double>();
  const size_t n = buf.size() / 2;
  out.left.resize(n);
  out.right.resize(n);
  for (size_t i = 0; i < n; ++i) {
    out.left[i] = buf[2 * i];
    out.right[i] = buf[2 * i + 1];
  }
  return out;
}

void write_raw_f32(const std::string& path, const StereoAudio& audio) {
  if (audio.left.size() != audio.right.size())
    throw std::invalid_argument("channel length mismatch");
  {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    for (size_t i = 0; i < audio.left.size(); ++i) {
      float l = static_cast<float>(audio.left[i]);
      float r = static_cast<float>(audio.right[i]);
      f.write(reinterpret_cast<const char*>(&l), 4);
      f.write(reinterpret_cast<const char*>(&r), 4);
    }
  }
  nlohmann::json j;
  j["sample_rate"] = audio.sample_rate;
  j["channels"] = 2;
  std::ofstream hdr(path + ".json");
  hdr << j.dump(2) << "\n";
}

}  // namespace binloc::audio
