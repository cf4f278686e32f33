#include "mmpoison/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mmpoison/error.hpp"

namespace mmpoison {
namespace {

void check_dims(std::uint32_t height, std::uint32_t width, std::uint32_t channels) {
  if (height == 0 || width == 0) {
    throw ContractError("image dimensions must be positive");
  }
  if (channels != 1 && channels != 3) {
    throw ContractError("image channels must be 1 or 3, got " + std::to_string(channels));
  }
}

// Nearest float to v that is still inside [0, 1].
float to_unit_float(double v) {
  const double clamped = std::clamp(v, 0.0, 1.0);
  return static_cast<float>(clamped);
}

}  // namespace

ImageTensor::ImageTensor(std::uint32_t height, std::uint32_t width, std::uint32_t channels)
    : height_(height), width_(width), channels_(channels) {
  check_dims(height, width, channels);
  data_.assign(static_cast<std::size_t>(height) * width * channels, 0.0f);
}

ImageTensor::ImageTensor(std::uint32_t height, std::uint32_t width, std::uint32_t channels,
                         std::vector<float> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  check_dims(height, width, channels);
  if (data_.size() != static_cast<std::size_t>(height) * width * channels) {
    throw ContractError("image data length " + std::to_string(data_.size()) +
                        " does not match " + std::to_string(height) + "x" +
                        std::to_string(width) + "x" + std::to_string(channels));
  }
  for (const float v : data_) {
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f) {
      throw ContractError("image pixel outside [0,1] or non-finite");
    }
  }
}

ImageTensor ImageTensor::from_doubles(std::uint32_t height, std::uint32_t width,
                                      std::uint32_t channels, std::span<const double> values) {
  std::vector<float> data(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw ContractError("non-finite pixel value");
    }
    data[i] = to_unit_float(values[i]);
  }
  return ImageTensor(height, width, channels, std::move(data));
}

ImageTensor ImageTensor::filled(std::uint32_t height, std::uint32_t width,
                                std::uint32_t channels, float value) {
  return ImageTensor(height, width, channels,
                     std::vector<float>(static_cast<std::size_t>(height) * width * channels, value));
}

std::vector<double> ImageTensor::to_doubles() const {
  return std::vector<double>(data_.begin(), data_.end());
}

double max_abs_diff(const ImageTensor& a, const ImageTensor& b) {
  if (!a.same_shape(b)) {
    throw ContractError("max_abs_diff: shape mismatch");
  }
  double worst = 0.0;
  const auto da = a.data();
  const auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) {
    worst = std::max(worst, std::abs(static_cast<double>(da[i]) - static_cast<double>(db[i])));
  }
  return worst;
}

ImageTensor quantize_8bit(const ImageTensor& image) {
  std::vector<float> out(image.size());
  const auto in = image.data();
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double level = std::round(static_cast<double>(in[i]) * 255.0);
    out[i] = static_cast<float>(level / 255.0);
  }
  return ImageTensor(image.height(), image.width(), image.channels(), std::move(out));
}

BilinearResampler::BilinearResampler(std::uint32_t in_height, std::uint32_t in_width,
                                     std::uint32_t in_channels, std::uint32_t out_height,
                                     std::uint32_t out_width, std::uint32_t out_channels) {
  check_dims(in_height, in_width, in_channels);
  check_dims(out_height, out_width, out_channels);
  if (in_channels != out_channels && in_channels != 1) {
    throw ContractError("resampler: cannot map " + std::to_string(in_channels) +
                        " channels to " + std::to_string(out_channels));
  }
  input_size_ = static_cast<std::size_t>(in_height) * in_width * in_channels;
  identity_ = in_height == out_height && in_width == out_width && in_channels == out_channels;

  // Per-axis source positions and weights, half-pixel convention.
  struct Axis {
    std::uint32_t lo, hi;
    double w_hi;
  };
  auto axis = [](std::uint32_t in, std::uint32_t out) {
    std::vector<Axis> result(out);
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    for (std::uint32_t d = 0; d < out; ++d) {
      double src = (static_cast<double>(d) + 0.5) * scale - 0.5;
      src = std::clamp(src, 0.0, static_cast<double>(in - 1));
      const auto lo = static_cast<std::uint32_t>(std::floor(src));
      const std::uint32_t hi = std::min(lo + 1, in - 1);
      result[d] = Axis{lo, hi, src - static_cast<double>(lo)};
    }
    return result;
  };
  const auto ys = axis(in_height, out_height);
  const auto xs = axis(in_width, out_width);

  const std::size_t n_out = static_cast<std::size_t>(out_height) * out_width * out_channels;
  offsets_.reserve(n_out + 1);
  taps_.reserve(n_out * 4);
  offsets_.push_back(0);
  for (std::uint32_t y = 0; y < out_height; ++y) {
    for (std::uint32_t x = 0; x < out_width; ++x) {
      for (std::uint32_t c = 0; c < out_channels; ++c) {
        const std::uint32_t src_c = in_channels == 1 ? 0 : c;
        const Axis& ay = ys[y];
        const Axis& ax = xs[x];
        auto idx = [&](std::uint32_t yy, std::uint32_t xx) {
          return static_cast<std::uint32_t>((static_cast<std::size_t>(yy) * in_width + xx) *
                                                in_channels +
                                            src_c);
        };
        const double wy[2] = {1.0 - ay.w_hi, ay.w_hi};
        const double wx[2] = {1.0 - ax.w_hi, ax.w_hi};
        const std::uint32_t yy[2] = {ay.lo, ay.hi};
        const std::uint32_t xx[2] = {ax.lo, ax.hi};
        for (int i = 0; i < 2; ++i) {
          for (int j = 0; j < 2; ++j) {
            const double w = wy[i] * wx[j];
            if (w != 0.0) {
              taps_.push_back(ResampleTap{idx(yy[i], xx[j]), w});
            }
          }
        }
        offsets_.push_back(taps_.size());
      }
    }
  }
}

void BilinearResampler::apply(std::span<const double> in, std::span<double> out) const {
  if (in.size() != input_size_ || out.size() != output_size()) {
    throw ContractError("resampler: buffer size mismatch");
  }
  for (std::size_t i = 0; i + 1 < offsets_.size(); ++i) {
    double acc = 0.0;
    for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) {
      acc += taps_[k].weight * in[taps_[k].index];
    }
    out[i] = acc;
  }
}

void BilinearResampler::apply_transpose(std::span<const double> out_grad,
                                        std::span<double> in_grad) const {
  if (in_grad.size() != input_size_ || out_grad.size() != output_size()) {
    throw ContractError("resampler: buffer size mismatch");
  }
  for (std::size_t i = 0; i + 1 < offsets_.size(); ++i) {
    for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) {
      in_grad[taps_[k].index] += taps_[k].weight * out_grad[i];
    }
  }
}

}  // namespace mmpoison
