#include "mmpoison/image_io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>

#include "mmpoison/error.hpp"

namespace mmpoison {
namespace {

static_assert(std::endian::native == std::endian::little,
              "sidecar encoding assumes a little-endian host");

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[pos + i]) << (8 * i);
  return v;
}

// Netpbm header token reader; skips whitespace and '#' comments.
class PnmHeader {
 public:
  explicit PnmHeader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::string token() {
    skip_space();
    std::string tok;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_])) {
      tok.push_back(static_cast<char>(bytes_[pos_++]));
    }
    if (tok.empty()) throw FormatError("netpbm: truncated header");
    return tok;
  }

  std::uint32_t number() {
    const std::string tok = token();
    if (!std::all_of(tok.begin(), tok.end(), [](unsigned char c) { return std::isdigit(c); })) {
      throw FormatError("netpbm: bad header field '" + tok + "'");
    }
    return static_cast<std::uint32_t>(std::stoul(tok));
  }

  // Exactly one whitespace byte separates the header from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size()) throw FormatError("netpbm: missing raster");
    return pos_ + 1;
  }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_sidecar(const ImageTensor& image) {
  std::vector<std::uint8_t> out;
  out.reserve(kSidecarHeaderBytes + image.size() * 4);
  out.insert(out.end(), std::begin(kSidecarMagic), std::end(kSidecarMagic));
  put_u32(out, image.height());
  put_u32(out, image.width());
  put_u32(out, image.channels());
  const auto data = image.data();
  const auto* raw = reinterpret_cast<const std::uint8_t*>(data.data());
  out.insert(out.end(), raw, raw + data.size() * sizeof(float));
  return out;
}

ImageTensor decode_sidecar(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kSidecarHeaderBytes ||
      std::memcmp(bytes.data(), kSidecarMagic, sizeof(kSidecarMagic)) != 0) {
    throw FormatError("sidecar: bad magic or truncated header");
  }
  const std::uint32_t h = get_u32(bytes, 4);
  const std::uint32_t w = get_u32(bytes, 8);
  const std::uint32_t c = get_u32(bytes, 12);
  const std::size_t n = static_cast<std::size_t>(h) * w * c;
  if (bytes.size() != kSidecarHeaderBytes + n * sizeof(float)) {
    throw FormatError("sidecar: payload size does not match header");
  }
  std::vector<float> data(n);
  std::memcpy(data.data(), bytes.data() + kSidecarHeaderBytes, n * sizeof(float));
  try {
    return ImageTensor(h, w, c, std::move(data));
  } catch (const ContractError& e) {
    throw FormatError(std::string("sidecar: ") + e.what());
  }
}

std::vector<std::uint8_t> encode_netpbm(const ImageTensor& image) {
  const std::string header = std::string(image.channels() == 1 ? "P5" : "P6") + "\n" +
                             std::to_string(image.width()) + " " +
                             std::to_string(image.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + image.size());
  for (const float v : image.data()) {
    out.push_back(static_cast<std::uint8_t>(std::lround(static_cast<double>(v) * 255.0)));
  }
  return out;
}

ImageTensor decode_netpbm(std::span<const std::uint8_t> bytes) {
  PnmHeader header(bytes);
  const std::string magic = header.token();
  std::uint32_t channels = 0;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    throw FormatError("netpbm: unsupported magic '" + magic + "'");
  }
  const std::uint32_t w = header.number();
  const std::uint32_t h = header.number();
  const std::uint32_t maxval = header.number();
  if (maxval != 255) throw FormatError("netpbm: only maxval 255 is supported");
  const std::size_t offset = header.raster_offset();
  const std::size_t n = static_cast<std::size_t>(h) * w * channels;
  if (bytes.size() < offset + n) throw FormatError("netpbm: truncated raster");
  std::vector<float> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    data[i] = static_cast<float>(static_cast<double>(bytes[offset + i]) / 255.0);
  }
  try {
    return ImageTensor(h, w, channels, std::move(data));
  } catch (const ContractError& e) {
    throw FormatError(std::string("netpbm: ") + e.what());
  }
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError("cannot open '" + path.string() + "'");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("short write to '" + path.string() + "'");
}

ImageTensor load_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw MissingFileError("image file '" + path.string() + "' does not exist");
  }
  const auto bytes = read_file_bytes(path);
  const std::string ext = path.extension().string();
  if (ext == ".mmpt") return decode_sidecar(bytes);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return decode_netpbm(bytes);
  throw FormatError("unsupported image extension '" + ext + "' for " + path.string());
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              &EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw Error("sha256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

}  // namespace mmpoison
