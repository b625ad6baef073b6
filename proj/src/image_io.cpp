#include "regnet/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <vector>

namespace regnet {

namespace {

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

void write_image(png_image& image, const void* buffer, const std::filesystem::path& path) {
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, buffer, 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error("cannot write PNG " + path.string() + ": " + msg);
  }
}

}  // namespace

ImageTensor read_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    throw Error("cannot read PNG " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error("cannot decode PNG " + path.string() + ": " + msg);
  }
  const int h = static_cast<int>(image.height);
  const int w = static_cast<int>(image.width);
  ImageTensor out;
  out.kind = ImageKind::kRgb;
  out.channels.assign(3, ImagePlane::Zero(h, w));
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      for (int c = 0; c < 3; ++c) {
        out.channels[static_cast<std::size_t>(c)](v, u) = buf[static_cast<std::size_t>(3 * (v * w + u) + c)] / 255.0;
      }
    }
  }
  return out;
}

void write_png(const ImageTensor& rgb, const std::filesystem::path& path) {
  if (rgb.channel_count() != 3) throw Error("write_png: expected 3 channels, got " + std::to_string(rgb.channel_count()));
  const int h = rgb.height();
  const int w = rgb.width();
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(3 * h * w));
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      for (int c = 0; c < 3; ++c) {
        buf[static_cast<std::size_t>(3 * (v * w + u) + c)] = to_byte(rgb.channels[static_cast<std::size_t>(c)](v, u));
      }
    }
  }
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = PNG_FORMAT_RGB;
  write_image(image, buf.data(), path);
}

void write_png16(const ImagePlane& plane, double scale, const std::filesystem::path& path) {
  std::vector<std::uint16_t> buf(static_cast<std::size_t>(plane.size()));
  for (Eigen::Index i = 0; i < plane.size(); ++i) {
    buf[static_cast<std::size_t>(i)] =
        static_cast<std::uint16_t>(std::clamp(std::lround(plane.data()[i] * scale), 0L, 65535L));
  }
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(plane.cols());
  image.height = static_cast<png_uint_32>(plane.rows());
  image.format = PNG_FORMAT_LINEAR_Y;
  write_image(image, buf.data(), path);
}

Vector3<double> depth_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  // Piecewise linear blue -> cyan -> green -> yellow -> red.
  static const double stops[5][3] = {{0, 0, 1}, {0, 1, 1}, {0, 1, 0}, {1, 1, 0}, {1, 0, 0}};
  const double x = t * 4.0;
  const int i = std::min(3, static_cast<int>(x));
  const double f = x - i;
  return {stops[i][0] + f * (stops[i + 1][0] - stops[i][0]), stops[i][1] + f * (stops[i + 1][1] - stops[i][1]),
          stops[i][2] + f * (stops[i + 1][2] - stops[i][2])};
}

ImageTensor overlay(const ImageTensor& rgb, const SparseDepthMap& depth, int marker_radius, double max_inverse_depth) {
  if (rgb.channel_count() != 3) throw Error("overlay: RGB image must have 3 channels");
  if (rgb.height() != depth.height() || rgb.width() != depth.width()) {
    throw Error("overlay: RGB is " + std::to_string(rgb.height()) + "x" + std::to_string(rgb.width()) +
                " but depth map is " + std::to_string(depth.height()) + "x" + std::to_string(depth.width()));
  }
  if (marker_radius < 0) throw Error("overlay: marker radius must be >= 0");
  ImageTensor out = rgb;
  const double top = max_inverse_depth > 0.0 ? max_inverse_depth : depth.values.maxCoeff();
  if (!(top > 0.0)) return out;
  const int h = depth.height();
  const int w = depth.width();
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const double d = depth.values(v, u);
      if (d <= 0.0) continue;
      const Vector3<double> color = depth_color(d / top);
      for (int dv = -marker_radius; dv <= marker_radius; ++dv) {
        for (int du = -marker_radius; du <= marker_radius; ++du) {
          const int vv = v + dv;
          const int uu = u + du;
          if (vv < 0 || vv >= h || uu < 0 || uu >= w) continue;
          for (int c = 0; c < 3; ++c) out.channels[static_cast<std::size_t>(c)](vv, uu) = color[c];
        }
      }
    }
  }
  return out;
}

void emit_overlay(const ImageTensor& rgb, const SparseDepthMap& depth, const std::filesystem::path& path,
                  int marker_radius) {
  write_png(overlay(rgb, depth, marker_radius), path);
}

}  // namespace regnet
