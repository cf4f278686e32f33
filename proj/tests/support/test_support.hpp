#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "mmpoison/datasets.hpp"
#include "mmpoison/image.hpp"
#include "mmpoison/toy_backend.hpp"

namespace mmpoison::testing {

/// Uniform random image in [lo, hi].
inline ImageTensor random_image(std::uint64_t seed, std::uint32_t h = 32, std::uint32_t w = 32,
                                std::uint32_t c = 3, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(lo, hi);
  std::vector<double> px(static_cast<std::size_t>(h) * w * c);
  for (double& p : px) p = unit(rng);
  return ImageTensor::from_doubles(h, w, c, px);
}

inline std::shared_ptr<const ToyEncoder> toy_encoder(std::uint64_t seed = 0) {
  ToyEncoderConfig cfg;
  cfg.seed = seed;
  return std::make_shared<const ToyEncoder>(cfg);
}

/// The default 50-query / 60-entry synthetic benchmark for encoder seed 0,
/// built once per process.
inline const DatasetManifest& benchmark() {
  static const DatasetManifest m = [] {
    SynthConfig cfg;
    return synth_generate(cfg, *toy_encoder(0));
  }();
  return m;
}

/// Relative error |a - b| / max(|a|, |b|, floor).
inline double rel_err(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("mmpoison_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace mmpoison::testing
