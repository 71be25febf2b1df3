#include "contrailseg/png_io.hpp"

#include <array>
#include <fstream>

#include "contrailseg/errors.hpp"

namespace contrailseg {

namespace {

uint32_t crc32(const uint8_t* data, size_t len) {
  static const std::array<uint32_t, 256> table = [] {
    std::array<uint32_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  uint32_t c = 0xffffffffu;
  for (size_t i = 0; i < len; ++i) c = table[(c ^ data[i]) & 0xff] ^ (c >> 8);
  return c ^ 0xffffffffu;
}

uint32_t adler32(const uint8_t* data, size_t len) {
  uint32_t a = 1, b = 0;
  for (size_t i = 0; i < len; ++i) {
    a = (a + data[i]) % 65521u;
    b = (b + a) % 65521u;
  }
  return (b << 16) | a;
}

void put_u32_be(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

void put_chunk(std::vector<uint8_t>& out, const char type[4], const std::vector<uint8_t>& body) {
  put_u32_be(out, static_cast<uint32_t>(body.size()));
  std::vector<uint8_t> typed(type, type + 4);
  typed.insert(typed.end(), body.begin(), body.end());
  out.insert(out.end(), typed.begin(), typed.end());
  put_u32_be(out, crc32(typed.data(), typed.size()));
}

std::vector<uint8_t> zlib_stored(const std::vector<uint8_t>& raw) {
  std::vector<uint8_t> z;
  z.push_back(0x78);
  z.push_back(0x01);
  size_t pos = 0;
  do {
    size_t len = raw.size() - pos;
    if (len > 65535) len = 65535;
    bool final = pos + len == raw.size();
    z.push_back(final ? 1 : 0);
    z.push_back(static_cast<uint8_t>(len & 0xff));
    z.push_back(static_cast<uint8_t>(len >> 8));
    z.push_back(static_cast<uint8_t>(~len & 0xff));
    z.push_back(static_cast<uint8_t>((~len >> 8) & 0xff));
    z.insert(z.end(), raw.begin() + static_cast<long>(pos), raw.begin() + static_cast<long>(pos + len));
    pos += len;
  } while (pos < raw.size());
  put_u32_be(z, adler32(raw.data(), raw.size()));
  return z;
}

std::vector<uint8_t> encode(int height, int width, int channels,
                            const std::vector<uint8_t>& pixels) {
  if (height < 1 || width < 1)
    throw DimensionError("png encode: size must be positive, got " + std::to_string(height) +
                         "x" + std::to_string(width));
  size_t expected = static_cast<size_t>(height) * width * channels;
  if (pixels.size() != expected)
    throw DimensionError("png encode: expected " + std::to_string(expected) + " bytes, got " +
                         std::to_string(pixels.size()));

  std::vector<uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

  std::vector<uint8_t> ihdr;
  put_u32_be(ihdr, static_cast<uint32_t>(width));
  put_u32_be(ihdr, static_cast<uint32_t>(height));
  ihdr.push_back(8);                                     // bit depth
  ihdr.push_back(channels == 1 ? 0 : 2);                 // gray or rgb
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  put_chunk(out, "IHDR", ihdr);

  std::vector<uint8_t> raw;
  raw.reserve(static_cast<size_t>(height) * (static_cast<size_t>(width) * channels + 1));
  for (int i = 0; i < height; ++i) {
    raw.push_back(0);  // filter: none
    const uint8_t* row = pixels.data() + static_cast<size_t>(i) * width * channels;
    raw.insert(raw.end(), row, row + static_cast<size_t>(width) * channels);
  }
  put_chunk(out, "IDAT", zlib_stored(raw));
  put_chunk(out, "IEND", {});
  return out;
}

void write_file(const std::string& path, const std::vector<uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IntegrityError("cannot open '" + path + "' for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<long>(bytes.size()));
  if (!f) throw IntegrityError("short write to '" + path + "'");
}

}  // namespace

std::vector<uint8_t> encode_png_gray(int height, int width, const std::vector<uint8_t>& pixels) {
  return encode(height, width, 1, pixels);
}

std::vector<uint8_t> encode_png_rgb(int height, int width, const std::vector<uint8_t>& rgb) {
  return encode(height, width, 3, rgb);
}

void write_png_gray(const std::string& path, int height, int width,
                    const std::vector<uint8_t>& pixels) {
  write_file(path, encode_png_gray(height, width, pixels));
}

void write_png_rgb(const std::string& path, int height, int width,
                   const std::vector<uint8_t>& rgb) {
  write_file(path, encode_png_rgb(height, width, rgb));
}

}  // namespace contrailseg
