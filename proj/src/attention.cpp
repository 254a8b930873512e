#include "dsd/attention.hpp"

#include <algorithm>
#include <cmath>

#include "dsd/errors.hpp"

namespace dsd {

HeadStack HeadStack::from_tensor(const TensorMap& attention, int frame_index) {
  if (attention.ndim() != 3) throw ShapeError("attention tensor must be heads x H' x W'");
  HeadStack s;
  s.frame_index = frame_index;
  s.heads = static_cast<int>(attention.dim(0));
  s.height = static_cast<int>(attention.dim(1));
  s.width = static_cast<int>(attention.dim(2));
  s.values.assign(attention.data().begin(), attention.data().end());
  return s;
}

std::span<const double> HeadStack::head(int h) const {
  const std::size_t n = static_cast<std::size_t>(height) * width;
  return std::span<const double>(values).subspan(static_cast<std::size_t>(h) * n, n);
}

double head_variance(std::span<const double> head) {
  // Welford update; the 1/n normalization gives the population variance.
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;
  for (double v : head) {
    ++n;
    const double d = v - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (v - mean);
  }
  return n == 0 ? 0.0 : m2 / static_cast<double>(n);
}

std::vector<double> head_weights(const HeadStack& stack, double eps) {
  std::vector<double> v(static_cast<std::size_t>(stack.heads));
  double total = 0.0;
  for (int h = 0; h < stack.heads; ++h) {
    v[static_cast<std::size_t>(h)] = head_variance(stack.head(h));
    total += v[static_cast<std::size_t>(h)];
  }
  for (auto& w : v) w /= total + eps;
  return v;
}

std::vector<double> effective_weights(const HeadStack& stack, double eps) {
  const auto n = static_cast<std::size_t>(stack.heads);
  std::vector<double> variances(n);
  double total = 0.0;
  for (std::size_t h = 0; h < n; ++h) {
    variances[h] = head_variance(stack.head(static_cast<int>(h)));
    total += variances[h];
  }
  if (total <= kUniformFallbackVariance) return std::vector<double>(n, 1.0 / static_cast<double>(n));
  auto w = head_weights(stack, eps);
  double sum = 0.0;
  for (double x : w) sum += x;
  for (auto& x : w) x /= sum;
  return w;
}

SaliencyMap aggregate(const HeadStack& stack, double eps, HeadFusion fusion) {
  if (stack.heads < 1) throw ShapeError("attention stack has no heads");
  SaliencyMap out;
  out.height = stack.height;
  out.width = stack.width;
  out.head_weights = fusion == HeadFusion::uniform
                         ? std::vector<double>(static_cast<std::size_t>(stack.heads), 1.0 / stack.heads)
                         : effective_weights(stack, eps);
  const std::size_t n = static_cast<std::size_t>(stack.height) * stack.width;
  out.values.assign(n, 0.0);
  for (int h = 0; h < stack.heads; ++h) {
    const double w = out.head_weights[static_cast<std::size_t>(h)];
    const auto head = stack.head(h);
    for (std::size_t i = 0; i < n; ++i) out.values[i] += w * head[i];
  }
  const auto [lo, hi] = std::minmax_element(out.values.begin(), out.values.end());
  const double min = *lo;
  const double range = *hi - *lo;
  if (!(range > 0.0)) {
    std::fill(out.values.begin(), out.values.end(), 0.0);
  } else {
    for (auto& v : out.values) v = (v - min) / range;
  }
  return out;
}

BinaryMap binarize(const SaliencyMap& s, double theta, int patch) {
  BinaryMap m(s.height * patch, s.width * patch);
  for (int r = 0; r < m.height; ++r) {
    for (int c = 0; c < m.width; ++c) {
      if (s.at(r / patch, c / patch) >= theta) m.set(r, c);
    }
  }
  return m;
}

}  // namespace dsd
