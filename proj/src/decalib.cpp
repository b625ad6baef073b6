#include "regnet/decalib.hpp"

#include <charconv>
#include <cmath>

namespace regnet {

namespace {

// Slack for values sitting exactly on the range boundary after a roundtrip.
constexpr double kRangeSlack = 1e-9;

double safe_div(double value, double bound) { return bound > 0.0 ? value / bound : 0.0; }

void check_in_range(double value, double bound) {
  if (!std::isfinite(value) || std::abs(value) > bound * (1.0 + kRangeSlack) + kRangeSlack) {
    throw Error("decalibration exceeds encoding range");
  }
}

}  // namespace

int representation_width(Representation rep) {
  switch (rep) {
    case Representation::kEuler:
      return 6;
    case Representation::kQuaternion:
      return 7;
    case Representation::kDualQuaternion:
      return 8;
  }
  return 8;
}

std::string_view representation_name(Representation rep) {
  switch (rep) {
    case Representation::kEuler:
      return "euler";
    case Representation::kQuaternion:
      return "quaternion";
    case Representation::kDualQuaternion:
      return "dual-quaternion";
  }
  return "dual-quaternion";
}

Representation parse_representation(std::string_view name) {
  if (name == "euler") return Representation::kEuler;
  if (name == "quaternion") return Representation::kQuaternion;
  if (name == "dual-quaternion" || name == "dualquat") return Representation::kDualQuaternion;
  throw Error("unknown representation '" + std::string(name) + "'");
}

void DecalibRange::validate() const {
  if (!(max_translation >= 0.0) || !std::isfinite(max_translation)) {
    throw Error("decalibration range: translation bound must be >= 0");
  }
  if (!(max_rotation_deg >= 0.0) || !(max_rotation_deg < 90.0)) {
    throw Error("decalibration range: rotation bound must lie in [0, 90) degrees");
  }
}

DecalibRange parse_range(std::string_view text) {
  const auto comma = text.find(',');
  if (comma == std::string_view::npos) throw Error("range must be given as X,Y (meters,degrees)");
  auto parse = [](std::string_view s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      throw Error("cannot parse number '" + std::string(s) + "' in range");
    }
    return v;
  };
  DecalibRange range{parse(text.substr(0, comma)), parse(text.substr(comma + 1))};
  range.validate();
  return range;
}

DecalibVector encode_decalib(const RigidTransformd& decalib, Representation rep, const DecalibRange& range,
                             double balance) {
  const double y_max = range.max_rotation_rad();
  const double x_max = range.max_translation;
  const EulerPose<double> euler = transform_to_euler(decalib);
  for (double angle : {euler.yaw, euler.pitch, euler.roll}) check_in_range(angle, y_max);
  for (int i = 0; i < 3; ++i) check_in_range(decalib.translation()[i], x_max);

  DecalibVector v;
  v.representation = rep;
  switch (rep) {
    case Representation::kEuler:
      v.values[0] = safe_div(euler.yaw, y_max);
      v.values[1] = safe_div(euler.pitch, y_max);
      v.values[2] = safe_div(euler.roll, y_max);
      for (int i = 0; i < 3; ++i) v.values[3 + i] = safe_div(decalib.translation()[i], x_max);
      break;
    case Representation::kQuaternion: {
      const Vector4<double> p = rotation_to_quat(decalib.rotation());
      v.values.head<4>() = balance * p;
      for (int i = 0; i < 3; ++i) v.values[4 + i] = safe_div(decalib.translation()[i], x_max);
      break;
    }
    case Representation::kDualQuaternion: {
      const DualQuaternion<double> d = dualquat_from_transform(decalib);
      v.values.head<4>() = balance * d.real;
      for (int i = 0; i < 4; ++i) v.values[4 + i] = safe_div(d.dual[i], x_max);
      break;
    }
  }
  return v;
}

RigidTransformd decode_decalib(const DecalibVector& v, const DecalibRange& range, double balance) {
  if (!v.values.allFinite()) throw Error("decalibration vector is not finite");
  const double y_max = range.max_rotation_rad();
  const double x_max = range.max_translation;
  switch (v.representation) {
    case Representation::kEuler: {
      EulerPose<double> pose;
      pose.yaw = v.values[0] * y_max;
      pose.pitch = v.values[1] * y_max;
      pose.roll = v.values[2] * y_max;
      pose.translation = v.values.segment<3>(3) * x_max;
      return euler_to_transform(pose);
    }
    case Representation::kQuaternion: {
      QuatPose<double> pose;
      pose.quaternion = v.values.head<4>() / balance;
      pose.translation = v.values.segment<3>(4) * x_max;
      return transform_from_quat(pose);
    }
    case Representation::kDualQuaternion: {
      DualQuaternion<double> d;
      d.real = v.values.head<4>() / balance;
      d.dual = v.values.segment<4>(4) * x_max;
      return transform_from_dualquat(d);
    }
  }
  throw Error("unknown representation");
}

RigidTransformd sample_decalib(Rng& rng, const DecalibRange& range) {
  range.validate();
  const double y_max = range.max_rotation_rad();
  const double x_max = range.max_translation;
  EulerPose<double> pose;
  pose.yaw = uniform(rng, -y_max, y_max);
  pose.pitch = uniform(rng, -y_max, y_max);
  pose.roll = uniform(rng, -y_max, y_max);
  for (int i = 0; i < 3; ++i) pose.translation[i] = uniform(rng, -x_max, x_max);
  return euler_to_transform(pose);
}

}  // namespace regnet
