#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace contrailseg {

// Minimal PNG writers (8-bit, uncompressed deflate blocks). Output bytes are a
// pure function of the pixel data, which keeps reruns byte-identical.
void write_png_gray(const std::string& path, int height, int width,
                    const std::vector<uint8_t>& pixels);
void write_png_rgb(const std::string& path, int height, int width,
                   const std::vector<uint8_t>& rgb);

std::vector<uint8_t> encode_png_gray(int height, int width, const std::vector<uint8_t>& pixels);
std::vector<uint8_t> encode_png_rgb(int height, int width, const std::vector<uint8_t>& rgb);

}  // namespace contrailseg
