#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mmpoison {

/// Dense HWC image with real-valued pixels in [0, 1].
///
/// Pixels are stored as float32, which is also the precision of the on-disk
/// sidecar format, so a saved and reloaded image is bit-identical. Backends
/// promote to double internally.
class ImageTensor {
 public:
  ImageTensor() = default;

  /// Zero-filled image. Throws ContractError on invalid dimensions.
  ImageTensor(std::uint32_t height, std::uint32_t width, std::uint32_t channels);

  /// Validates dimensions, finiteness and the [0, 1] range.
  ImageTensor(std::uint32_t height, std::uint32_t width, std::uint32_t channels,
              std::vector<float> data);

  /// Builds an image from double pixels, rounding each value to the nearest
  /// float that stays inside [0, 1].
  static ImageTensor from_doubles(std::uint32_t height, std::uint32_t width,
                                  std::uint32_t channels, std::span<const double> values);

  /// Constant-valued image.
  static ImageTensor filled(std::uint32_t height, std::uint32_t width, std::uint32_t channels,
                            float value);

  [[nodiscard]] std::uint32_t height() const noexcept { return height_; }
  [[nodiscard]] std::uint32_t width() const noexcept { return width_; }
  [[nodiscard]] std::uint32_t channels() const noexcept { return channels_; }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
  [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

  [[nodiscard]] std::span<const float> data() const noexcept { return data_; }

  [[nodiscard]] float at(std::uint32_t y, std::uint32_t x, std::uint32_t c) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  [[nodiscard]] std::vector<double> to_doubles() const;

  [[nodiscard]] bool same_shape(const ImageTensor& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

 private:
  std::uint32_t height_ = 0;
  std::uint32_t width_ = 0;
  std::uint32_t channels_ = 0;
  std::vector<float> data_;
};

/// Largest absolute element-wise difference; shapes must match.
double max_abs_diff(const ImageTensor& a, const ImageTensor& b);

/// Rounds every pixel to the 8-bit grid (round(x * 255) / 255).
ImageTensor quantize_8bit(const ImageTensor& image);

/// One output sample of a linear resampler: weighted sum of input elements.
struct ResampleTap {
  std::uint32_t index;
  double weight;
};

/// Bilinear resampling to a fixed HWC target, expressed as a sparse linear map
/// so the same taps serve the forward pass and its transpose (for gradients).
///
/// Uses half-pixel centres (src = (dst + 0.5) * in / out - 0.5, clamped to the
/// edge). Single-channel inputs are replicated into every output channel.
class BilinearResampler {
 public:
  BilinearResampler(std::uint32_t in_height, std::uint32_t in_width, std::uint32_t in_channels,
                    std::uint32_t out_height, std::uint32_t out_width,
                    std::uint32_t out_channels);

  [[nodiscard]] std::size_t input_size() const noexcept { return input_size_; }
  [[nodiscard]] std::size_t output_size() const noexcept { return offsets_.size() - 1; }

  /// out[i] = sum_k w_k * in[idx_k]
  void apply(std::span<const double> in, std::span<double> out) const;
  /// in_grad[idx_k] += w_k * out_grad[i]
  void apply_transpose(std::span<const double> out_grad, std::span<double> in_grad) const;

  [[nodiscard]] bool is_identity() const noexcept { return identity_; }

 private:
  std::size_t input_size_ = 0;
  bool identity_ = false;
  std::vector<std::size_t> offsets_;
  std::vector<ResampleTap> taps_;
};

}  // namespace mmpoison
