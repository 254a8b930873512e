#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dsd/mask.hpp"
#include "dsd/tensor.hpp"

namespace dsd {

inline constexpr double kDefaultHeadEps = 1e-8;
inline constexpr double kUniformFallbackVariance = 1e-12;

/// Per-head spatial responses of one frame, heads x height x width, row-major.
struct HeadStack {
  int frame_index = 0;
  int heads = 0;
  int height = 0;
  int width = 0;
  std::vector<double> values;

  static HeadStack from_tensor(const TensorMap& attention, int frame_index);
  std::span<const double> head(int h) const;
};

/// Fused per-frame saliency on the attention grid, normalized to [0, 1].
struct SaliencyMap {
  int height = 0;
  int width = 0;
  std::vector<double> values;
  /// Effective fusion weights, summing to 1.
  std::vector<double> head_weights;

  double at(int row, int col) const { return values[static_cast<std::size_t>(row) * width + col]; }
};

enum class HeadFusion { variance_weighted, uniform };

/// Population variance of one head (1/|Omega| normalization), computed in a
/// single left-to-right pass.
double head_variance(std::span<const double> head);

/// w_h = V_h / (sum_k V_k + eps). These sum to sum(V) / (sum(V) + eps) < 1.
std::vector<double> head_weights(const HeadStack& stack, double eps = kDefaultHeadEps);

/// Weights actually used for fusion: uniform when sum(V) <= 1e-12, otherwise
/// head_weights renormalized to sum to 1.
std::vector<double> effective_weights(const HeadStack& stack, double eps = kDefaultHeadEps);

/// Weighted sum of heads, then min-max normalized; a constant result maps to
/// all zeros.
SaliencyMap aggregate(const HeadStack& stack, double eps = kDefaultHeadEps,
                      HeadFusion fusion = HeadFusion::variance_weighted);

/// Thresholds (>= theta) and upsamples by nearest-neighbor patch replication.
BinaryMap binarize(const SaliencyMap& saliency, double theta, int patch);

/// Saliency value of the patch that contains an image pixel.
inline double saliency_at_pixel(const SaliencyMap& s, int patch, int row, int col) {
  return s.at(row / patch, col / patch);
}

}  // namespace dsd
