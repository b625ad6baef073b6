#pragma once

// Decalibration ranges, sampling, and the normalized network target encoding.

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "regnet/geometry.hpp"

namespace regnet {

enum class Representation { kEuler, kQuaternion, kDualQuaternion };

/// Number of meaningful slots in a DecalibVector (6, 7 or 8).
int representation_width(Representation rep);
std::string_view representation_name(Representation rep);
Representation parse_representation(std::string_view name);

/// Per-axis bounds: |t_i| <= max_translation (meters), |angle| <= max_rotation_deg.
struct DecalibRange {
  double max_translation = 0.0;
  double max_rotation_deg = 0.0;

  void validate() const;
  double max_rotation_rad() const { return deg2rad(max_rotation_deg); }
  friend bool operator==(const DecalibRange&, const DecalibRange&) = default;
};

/// Parses "X,Y" (meters, degrees).
DecalibRange parse_range(std::string_view text);

/// Balance factor applied to the quaternion real part.
inline constexpr double kDefaultBalanceFactor = 100.0;

/// Network target. Layouts:
///   euler:           yaw, pitch, roll (/ y_max), tx, ty, tz (/ x_max), 0, 0
///   quaternion:      f*p (4), tx, ty, tz (/ x_max), 0
///   dual-quaternion: f*p (4), q (4) / x_max
struct DecalibVector {
  Eigen::Matrix<double, 8, 1> values = Eigen::Matrix<double, 8, 1>::Zero();
  Representation representation = Representation::kDualQuaternion;
};

DecalibVector encode_decalib(const RigidTransformd& decalib, Representation rep, const DecalibRange& range,
                             double balance = kDefaultBalanceFactor);

RigidTransformd decode_decalib(const DecalibVector& v, const DecalibRange& range,
                               double balance = kDefaultBalanceFactor);

/// Yaw, pitch, roll uniform in +-y_max and each translation axis uniform in
/// +-x_max. Consumes exactly six draws from `rng`.
RigidTransformd sample_decalib(Rng& rng, const DecalibRange& range);

/// H_init = H_gt * phi, so that H_init * phi^-1 = H_gt.
inline RigidTransformd make_initial(const RigidTransformd& h_gt, const RigidTransformd& decalib) {
  return h_gt * decalib;
}

/// The decalibration separating H_init from H_gt: H_gt^-1 * H_init.
inline RigidTransformd residual_decalib(const RigidTransformd& h_init, const RigidTransformd& h_gt) {
  return h_gt.inverse() * h_init;
}

/// H_current * phi_hat^-1.
inline RigidTransformd apply_correction(const RigidTransformd& h_current, const RigidTransformd& decalib_estimate) {
  return h_current * decalib_estimate.inverse();
}

}  // namespace regnet
