#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace mmpoison {

/// Unit-norm encoder output. Backends guarantee ||values|| = 1 +- 1e-6.
struct Embedding {
  std::vector<double> values;

  [[nodiscard]] std::size_t dim() const noexcept { return values.size(); }
  friend bool operator==(const Embedding&, const Embedding&) = default;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// Cosine of two unit embeddings is just their dot product.
inline double cosine(const Embedding& a, const Embedding& b) { return dot(a.values, b.values); }

/// General cosine for vectors of arbitrary norm (0 if either is zero).
inline double cosine(std::span<const double> a, std::span<const double> b) {
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

inline Embedding normalized(std::vector<double> v) {
  const double n = l2_norm(v);
  if (n > 0.0) {
    for (double& x : v) x /= n;
  }
  return Embedding{std::move(v)};
}

}  // namespace mmpoison
