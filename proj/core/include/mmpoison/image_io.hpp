#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mmpoison/image.hpp"

namespace mmpoison {

// Float sidecar layout (little-endian):
//   bytes 0..3   magic "MMPT"
//   bytes 4..15  u32 height, u32 width, u32 channels
//   then height*width*channels float32 values in HWC order.
inline constexpr char kSidecarMagic[4] = {'M', 'M', 'P', 'T'};
inline constexpr std::size_t kSidecarHeaderBytes = 16;

std::vector<std::uint8_t> encode_sidecar(const ImageTensor& image);
ImageTensor decode_sidecar(std::span<const std::uint8_t> bytes);

/// Binary PGM (P5, 1 channel) or PPM (P6, 3 channels), maxval 255.
std::vector<std::uint8_t> encode_netpbm(const ImageTensor& image);
/// 8-bit samples are divided by 255 on ingestion.
ImageTensor decode_netpbm(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Loads .mmpt, .pgm or .ppm by extension.
ImageTensor load_image(const std::filesystem::path& path);

std::string sha256_hex(std::span<const std::uint8_t> bytes);

}  // namespace mmpoison
