#include "stringlab/wav.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "stringlab/error.hpp"

namespace stringlab {

namespace {

static_assert(std::endian::native == std::endian::little, "WAV I/O assumes a little-endian host");

template <typename T>
void put(std::vector<char>& buf, T v) {
  const auto* p = reinterpret_cast<const char*>(&v);
  buf.insert(buf.end(), p, p + sizeof(T));
}

template <typename T>
T get(const std::vector<char>& buf, std::size_t offset) {
  if (offset + sizeof(T) > buf.size()) throw Error(ErrorKind::FormatError, "truncated WAV header");
  T v;
  std::memcpy(&v, buf.data() + offset, sizeof(T));
  return v;
}

bool tag_is(const std::vector<char>& buf, std::size_t offset, const char* tag) {
  return offset + 4 <= buf.size() && std::memcmp(buf.data() + offset, tag, 4) == 0;
}

}  // namespace

void write_wav(const std::filesystem::path& path, std::span<const double> samples, int sample_rate) {
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * sizeof(float));
  std::vector<char> buf;
  buf.reserve(44 + data_bytes);
  buf.insert(buf.end(), {'R', 'I', 'F', 'F'});
  put<std::uint32_t>(buf, 36 + data_bytes);
  buf.insert(buf.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put<std::uint32_t>(buf, 16);
  put<std::uint16_t>(buf, 3);  // WAVE_FORMAT_IEEE_FLOAT
  put<std::uint16_t>(buf, 1);
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(sample_rate));
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(sample_rate) * 4);
  put<std::uint16_t>(buf, 4);
  put<std::uint16_t>(buf, 32);
  buf.insert(buf.end(), {'d', 'a', 't', 'a'});
  put<std::uint32_t>(buf, data_bytes);
  for (double s : samples) put<float>(buf, static_cast<float>(s));

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error(ErrorKind::IoError, "short write to " + path.string());
}

WavData read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  const std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (!tag_is(buf, 0, "RIFF") || !tag_is(buf, 8, "WAVE")) {
    throw Error(ErrorKind::FormatError, path.string() + " is not a RIFF/WAVE file");
  }
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const auto size = get<std::uint32_t>(buf, pos + 4);
    const std::size_t body = pos + 8;
    if (tag_is(buf, pos, "fmt ")) {
      format = get<std::uint16_t>(buf, body);
      channels = get<std::uint16_t>(buf, body + 2);
      rate = get<std::uint32_t>(buf, body + 4);
      bits = get<std::uint16_t>(buf, body + 14);
      have_fmt = true;
    } else if (tag_is(buf, pos, "data")) {
      if (!have_fmt) throw Error(ErrorKind::FormatError, "data chunk before fmt chunk");
      if (channels != 1) throw Error(ErrorKind::FormatError, "only mono WAV files are supported");
      const std::size_t avail = std::min<std::size_t>(size, buf.size() - body);
      WavData wav;
      wav.sample_rate = static_cast<int>(rate);
      if (format == 3 && bits == 32) {
        wav.samples.resize(avail / 4);
        for (std::size_t i = 0; i < wav.samples.size(); ++i) wav.samples[i] = get<float>(buf, body + 4 * i);
      } else if (format == 1 && bits == 16) {
        wav.samples.resize(avail / 2);
        for (std::size_t i = 0; i < wav.samples.size(); ++i) {
          wav.samples[i] = get<std::int16_t>(buf, body + 2 * i) / 32768.0;
        }
      } else {
        throw Error(ErrorKind::FormatError, "unsupported WAV encoding (need float32 or PCM16)");
      }
      return wav;
    }
    pos = body + size + (size & 1U);
  }
  throw Error(ErrorKind::FormatError, path.string() + " has no data chunk");
}

}  // namespace stringlab
