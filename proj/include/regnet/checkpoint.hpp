#pragma once

// Weight checkpoints: a versioned little-endian container holding the model
// configuration (JSON) and one named blob per parameter. Layout:
//
//   "RGNTCKPT"            8 bytes magic
//   version               u32 (= 1)
//   config length         u64, then that many bytes of UTF-8 JSON
//   parameter count       u32
//   per parameter:
//     name length         u32, then the name bytes
//     rank                u32, then rank x u32 dimensions
//     dtype               u8 (1 = float32, 2 = float64)
//     values              product(dims) little-endian values

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "regnet/config.hpp"
#include "regnet/model.hpp"

namespace regnet {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

inline constexpr char kCheckpointMagic[8] = {'R', 'G', 'N', 'T', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::string& what) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw Error("checkpoint truncated while reading " + what);
  return v;
}

template <typename Scalar>
constexpr std::uint8_t dtype_code() {
  return sizeof(Scalar) == 4 ? 1 : 2;
}

}  // namespace detail

template <typename Scalar>
void write_checkpoint(const RegNet<Scalar>& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::write_pod(out, kCheckpointVersion);
  const std::string config = to_json(model.config()).dump();
  detail::write_pod(out, static_cast<std::uint64_t>(config.size()));
  out.write(config.data(), static_cast<std::streamsize>(config.size()));
  detail::write_pod(out, static_cast<std::uint32_t>(model.parameters().size()));
  for (const Parameter<Scalar>& p : model.parameters()) {
    detail::write_pod(out, static_cast<std::uint32_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    detail::write_pod(out, static_cast<std::uint32_t>(p.value.rank()));
    for (int d : p.value.shape()) detail::write_pod(out, static_cast<std::uint32_t>(d));
    detail::write_pod(out, detail::dtype_code<Scalar>());
    out.write(reinterpret_cast<const char*>(p.value.data()), static_cast<std::streamsize>(p.value.size() * sizeof(Scalar)));
  }
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

/// Reads a checkpoint into a model of the requested precision; stored values
/// are converted when the precisions differ.
template <typename Scalar>
std::shared_ptr<RegNet<Scalar>> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw Error(path.string() + " is not a checkpoint file");
  }
  const auto version = detail::read_pod<std::uint32_t>(in, "version");
  if (version != kCheckpointVersion) throw Error("unsupported checkpoint version " + std::to_string(version));
  const auto config_len = detail::read_pod<std::uint64_t>(in, "config length");
  if (config_len > (1u << 24)) throw Error("checkpoint config block is implausibly large");
  std::string config(config_len, '\0');
  if (!in.read(config.data(), static_cast<std::streamsize>(config_len))) throw Error("checkpoint truncated in config");
  RegNetConfig cfg;
  try {
    cfg = model_config_from_json(Json::parse(config));
  } catch (const nlohmann::json::exception& e) {
    throw Error("checkpoint config is not valid JSON: " + std::string(e.what()));
  }
  auto model = std::make_shared<RegNet<Scalar>>(cfg, 0);
  const auto count = detail::read_pod<std::uint32_t>(in, "parameter count");
  if (count != model->parameters().size()) {
    throw Error("checkpoint has " + std::to_string(count) + " parameters, model expects " +
                std::to_string(model->parameters().size()));
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = detail::read_pod<std::uint32_t>(in, "name length");
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw Error("checkpoint truncated in parameter name");
    Parameter<Scalar>* p = model->find(name);
    if (!p) throw Error("checkpoint parameter '" + name + "' is not part of the model");
    const auto rank = detail::read_pod<std::uint32_t>(in, "rank");
    Shape shape;
    for (std::uint32_t d = 0; d < rank; ++d) shape.push_back(static_cast<int>(detail::read_pod<std::uint32_t>(in, "dims")));
    if (shape != p->value.shape()) {
      throw Error("checkpoint parameter '" + name + "' has shape " + shape_string(shape) + ", model expects " +
                  shape_string(p->value.shape()));
    }
    const auto dtype = detail::read_pod<std::uint8_t>(in, "dtype");
    if (dtype == 1) {
      std::vector<float> buf(p->value.size());
      if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4))) {
        throw Error("checkpoint truncated in parameter '" + name + "'");
      }
      for (std::size_t k = 0; k < buf.size(); ++k) p->value[k] = static_cast<Scalar>(buf[k]);
    } else if (dtype == 2) {
      std::vector<double> buf(p->value.size());
      if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 8))) {
        throw Error("checkpoint truncated in parameter '" + name + "'");
      }
      for (std::size_t k = 0; k < buf.size(); ++k) p->value[k] = static_cast<Scalar>(buf[k]);
    } else {
      throw Error("checkpoint parameter '" + name + "' has unknown dtype " + std::to_string(dtype));
    }
  }
  return model;
}

}  // namespace regnet
