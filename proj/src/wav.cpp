#include "nlrestore/wav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

namespace nlrestore {

namespace {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatFloat = 0x0003;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

[[noreturn]] void fail(const std::filesystem::path& p, const std::string& msg) {
  throw std::runtime_error("wav: " + p.string() + ": " + msg);
}

std::uint32_t rd_u32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}
std::uint16_t rd_u16(const unsigned char* p) { return std::uint16_t(p[0] | (p[1] << 8)); }

void wr_u32(std::ofstream& f, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  f.write(reinterpret_cast<const char*>(b), 4);
}
void wr_u16(std::ofstream& f, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  f.write(reinterpret_cast<const char*>(b), 2);
}

}  // namespace

Signal read_wav(const std::filesystem::path& path, int channel) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(path, "cannot open file");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    fail(path, "not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::size_t data_off = 0, data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    const std::uint32_t len = rd_u32(bytes.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (body + len > bytes.size()) fail(path, "truncated chunk '" + std::string(id, 4) + "'");
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (len < 16) fail(path, "fmt chunk too short");
      format = rd_u16(bytes.data() + body);
      channels = rd_u16(bytes.data() + body + 2);
      rate = rd_u32(bytes.data() + body + 4);
      bits = rd_u16(bytes.data() + body + 14);
      if (format == kFormatExtensible) {
        if (len < 40) fail(path, "extensible fmt chunk too short");
        format = rd_u16(bytes.data() + body + 24);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data_off = body;
      data_len = len;
    }
    pos = body + len + (len & 1);  // chunks are word-aligned
  }

  if (!have_fmt) fail(path, "missing fmt chunk");
  if (data_off == 0) fail(path, "missing data chunk");
  if (channels == 0) fail(path, "zero channels");
  if (channel < 0 && channels != 1)
    fail(path, "file has " + std::to_string(channels) + " channels; pass a channel index");
  if (channel >= channels) fail(path, "channel index out of range");

  std::size_t bytes_per = 0;
  if (format == kFormatPcm && bits == 16) bytes_per = 2;
  else if (format == kFormatPcm && bits == 24) bytes_per = 3;
  else if (format == kFormatFloat && bits == 32) bytes_per = 4;
  else
    fail(path, "unsupported codec (format " + std::to_string(format) + ", " +
                   std::to_string(bits) + " bits); need PCM16/24 or float32");

  const std::size_t stride = bytes_per * channels;
  if (data_len % stride != 0) fail(path, "data chunk size not a multiple of the frame size");
  const std::size_t nframes = data_len / stride;
  if (nframes == 0) fail(path, "empty data chunk");
  const std::size_t ch = channel < 0 ? 0 : static_cast<std::size_t>(channel);

  Signal out;
  out.sample_rate = static_cast<int>(rate);
  out.samples.resize(nframes);
  const unsigned char* d = bytes.data() + data_off;
  for (std::size_t i = 0; i < nframes; ++i) {
    const unsigned char* s = d + i * stride + ch * bytes_per;
    if (bytes_per == 2) {
      const std::int16_t v = static_cast<std::int16_t>(s[0] | (s[1] << 8));
      out.samples[i] = v / 32767.0;
    } else if (bytes_per == 3) {
      std::int32_t v = s[0] | (s[1] << 8) | (std::int32_t(s[2]) << 16);
      if (v & 0x800000) v |= ~0xFFFFFF;  // sign extend
      out.samples[i] = v / 8388607.0;
    } else {
      std::uint32_t u = rd_u32(s);
      float fl;
      std::memcpy(&fl, &u, 4);
      out.samples[i] = fl;
    }
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const Signal& signal, WavBitDepth depth) {
  check_signal(signal, "write_wav");
  if (signal.sample_rate <= 0) throw std::invalid_argument("write_wav: sample_rate must be > 0");
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("wav: cannot open for writing: " + path.string());

  const bool is_float = depth == WavBitDepth::float32;
  const int bytes_per = depth == WavBitDepth::pcm16 ? 2 : depth == WavBitDepth::pcm24 ? 3 : 4;
  const std::uint32_t n = static_cast<std::uint32_t>(signal.length());
  const std::uint32_t data_len = n * bytes_per;
  const std::uint32_t fact_len = is_float ? 12 : 0;  // float files carry a fact chunk
  const std::uint32_t riff_len = 4 + (8 + 16) + fact_len + (8 + data_len) + (data_len & 1);

  f.write("RIFF", 4);
  wr_u32(f, riff_len);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  wr_u32(f, 16);
  wr_u16(f, is_float ? kFormatFloat : kFormatPcm);
  wr_u16(f, 1);
  wr_u32(f, static_cast<std::uint32_t>(signal.sample_rate));
  wr_u32(f, static_cast<std::uint32_t>(signal.sample_rate) * bytes_per);
  wr_u16(f, static_cast<std::uint16_t>(bytes_per));
  wr_u16(f, static_cast<std::uint16_t>(bytes_per * 8));
  if (is_float) {
    f.write("fact", 4);
    wr_u32(f, 4);
    wr_u32(f, n);
  }
  f.write("data", 4);
  wr_u32(f, data_len);

  for (double x : signal.samples) {
    if (is_float) {
      const float fl = static_cast<float>(x);
      std::uint32_t u;
      std::memcpy(&u, &fl, 4);
      wr_u32(f, u);
    } else if (depth == WavBitDepth::pcm16) {
      const double c = std::clamp(x, -1.0, 1.0);
      const auto v = static_cast<std::int16_t>(std::lround(c * 32767.0));
      wr_u16(f, static_cast<std::uint16_t>(v));
    } else {
      const double c = std::clamp(x, -1.0, 1.0);
      const auto v = static_cast<std::int32_t>(std::lround(c * 8388607.0));
      unsigned char b[3] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                            static_cast<unsigned char>(v >> 16)};
      f.write(reinterpret_cast<const char*>(b), 3);
    }
  }
  if (data_len & 1) f.put(0);
  if (!f) throw std::runtime_error("wav: write failed: " + path.string());
}

}  // namespace nlrestore
