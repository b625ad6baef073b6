#pragma once

// PNG input/output and projected-depth overlays.

#include <filesystem>

#include "regnet/projection.hpp"

namespace regnet {

/// 8-bit RGB(A) or gray PNG to a three-channel image with values in [0, 1].
ImageTensor read_png(const std::filesystem::path& path);

/// Three channels, values clamped to [0, 1] and rounded to 8 bits.
void write_png(const ImageTensor& rgb, const std::filesystem::path& path);

/// 16-bit gray PNG of value * scale, rounded and clamped to [0, 65535].
void write_png16(const ImagePlane& plane, double scale, const std::filesystem::path& path);

/// Fixed colormap from t in [0, 1] (far = blue ... near = red).
Vector3<double> depth_color(double t);

/// RGB with every nonzero pixel of `depth` painted by depth_color of its
/// inverse depth relative to `max_inverse_depth` (<= 0: the map's maximum).
/// `marker_radius` > 0 paints a (2r+1)^2 square per point instead of one
/// pixel.
ImageTensor overlay(const ImageTensor& rgb, const SparseDepthMap& depth, int marker_radius = 0,
                    double max_inverse_depth = 0.0);

void emit_overlay(const ImageTensor& rgb, const SparseDepthMap& depth, const std::filesystem::path& path,
                  int marker_radius = 0);

}  // namespace regnet
