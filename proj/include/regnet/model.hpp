#pragma once

// Two-stream RegNet built from NiN blocks: an RGB stream and a thinner depth
// stream, channel concatenation, a fusion stack, global max pooling and two
// fully connected layers regressing the encoded decalibration.

#include <cstdint>
#include <string>
#include <vector>

#include "regnet/decalib.hpp"
#include "regnet/optim.hpp"
#include "regnet/projection.hpp"
#include "regnet/tensor.hpp"

namespace regnet {

/// One k x k convolution followed by 1 x 1 convolutions. `channels[0]` is
/// the width of the k x k convolution, the rest are the 1 x 1 widths.
struct NiNBlockSpec {
  int kernel = 3;
  int stride = 1;
  std::vector<int> channels;

  friend bool operator==(const NiNBlockSpec&, const NiNBlockSpec&) = default;
};

struct RegNetConfig {
  int input_height = 96;
  int input_width = 256;
  std::vector<NiNBlockSpec> rgb_stream;
  std::vector<NiNBlockSpec> depth_stream;
  std::vector<NiNBlockSpec> fusion_stack;
  int fc_hidden = 256;
  Representation representation = Representation::kDualQuaternion;
  DecalibRange range{0.3, 5.0};
  double balance = kDefaultBalanceFactor;

  /// The desk-scale architecture: three RGB blocks (k 7/5/3, stride 2),
  /// the depth stream at half width, two fusion blocks.
  static RegNetConfig toy();

  int output_width() const { return representation_width(representation); }

  /// Throws Error on structural problems: NiN blocks without a 1 x 1
  /// convolution, a depth stream wider than the RGB stream, or streams that
  /// disagree on the spatial size at the concatenation point.
  void validate() const;

  /// Layer-by-layer output shapes, one line per layer.
  std::vector<std::string> shape_trace() const;

  friend bool operator==(const RegNetConfig&, const RegNetConfig&) = default;
};

/// Output spatial size of a stream for the configured input.
std::pair<int, int> stream_output_size(const std::vector<NiNBlockSpec>& blocks, int height, int width);

template <typename Scalar>
Tensor<Scalar> to_tensor(const ImageTensor& image) {
  Tensor<Scalar> t({image.channel_count(), image.height(), image.width()});
  std::size_t o = 0;
  for (const ImagePlane& c : image.channels) {
    for (Eigen::Index i = 0; i < c.size(); ++i) t[o++] = static_cast<Scalar>(c.data()[i]);
  }
  return t;
}

template <typename Scalar>
class RegNet {
 public:
  RegNet(const RegNetConfig& config, std::uint64_t seed) : config_(config) {
    config_.validate();
    Rng rng(seed);
    add_stream("rgb", config_.rgb_stream, 3, rng);
    add_stream("depth", config_.depth_stream, 1, rng);
    add_stream("fusion", config_.fusion_stack, stream_channels(config_.rgb_stream) + stream_channels(config_.depth_stream),
               rng);
    const int pooled = stream_channels(config_.fusion_stack);
    add_dense("fc1", config_.fc_hidden, pooled, rng);
    add_dense("fc2", config_.output_width(), config_.fc_hidden, rng);
    // Start at the encoding of "no decalibration" so the p-scalar slot does
    // not have to climb to the balance factor through the weights.
    const DecalibVector identity =
        encode_decalib(RigidTransformd::Identity(), config_.representation, config_.range, config_.balance);
    Parameter<Scalar>& b = params_.back();
    for (std::size_t i = 0; i < b.value.size(); ++i) b.value[i] = static_cast<Scalar>(identity.values[static_cast<Eigen::Index>(i)]);
  }

  const RegNetConfig& config() const { return config_; }
  std::vector<Parameter<Scalar>>& parameters() { return params_; }
  const std::vector<Parameter<Scalar>>& parameters() const { return params_; }

  std::vector<Parameter<Scalar>*> parameter_ptrs() {
    std::vector<Parameter<Scalar>*> out;
    for (auto& p : params_) out.push_back(&p);
    return out;
  }

  Parameter<Scalar>* find(const std::string& name) {
    for (auto& p : params_) {
      if (p.name == name) return &p;
    }
    return nullptr;
  }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  /// Records the network on `tape`; returns the raw output vector.
  Var forward(Tape<Scalar>& tape, Var rgb, Var depth) {
    check_input(tape.value(rgb), 3, "rgb");
    check_input(tape.value(depth), 1, "depth");
    std::size_t next = 0;
    const Var a = run_stream(tape, rgb, config_.rgb_stream, next, false);
    const Var b = run_stream(tape, depth, config_.depth_stream, next, false);
    const Var fused = concat_channels(tape, a, b);
    const Var features = run_stream(tape, fused, config_.fusion_stack, next, true);
    const Var pooled = global_max_pool(tape, features);
    const Var hidden = relu(tape, dense(tape, pooled, next));
    return dense(tape, hidden, next);
  }

  Tensor<Scalar> predict(const Tensor<Scalar>& rgb, const Tensor<Scalar>& depth) {
    Tape<Scalar> tape;
    const Var out = forward(tape, tape.input(rgb), tape.input(depth));
    return tape.value(out);
  }

 private:
  static int stream_channels(const std::vector<NiNBlockSpec>& blocks) { return blocks.back().channels.back(); }

  void check_input(const Tensor<Scalar>& t, int channels, const char* what) const {
    if (t.rank() != 3 || t.dim(0) != channels || t.dim(1) != config_.input_height || t.dim(2) != config_.input_width) {
      throw Error(std::string("regnet: ") + what + " input is " + shape_string(t.shape()) + ", expected " +
                  shape_string({channels, config_.input_height, config_.input_width}));
    }
  }

  void add_conv(const std::string& name, int out, int in, int kernel, Rng& rng) {
    params_.emplace_back(name + ".weight", xavier_init<Scalar>({out, in, kernel, kernel}, rng));
    params_.emplace_back(name + ".bias", Tensor<Scalar>({out}));
  }

  void add_dense(const std::string& name, int out, int in, Rng& rng) {
    params_.emplace_back(name + ".weight", xavier_init<Scalar>({out, in}, rng));
    params_.emplace_back(name + ".bias", Tensor<Scalar>({out}));
  }

  void add_stream(const std::string& prefix, const std::vector<NiNBlockSpec>& blocks, int in_channels, Rng& rng) {
    int in = in_channels;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const NiNBlockSpec& spec = blocks[b];
      for (std::size_t c = 0; c < spec.channels.size(); ++c) {
        const std::string name = prefix + ".block" + std::to_string(b) + ".conv" + std::to_string(c);
        add_conv(name, spec.channels[c], in, c == 0 ? spec.kernel : 1, rng);
        in = spec.channels[c];
      }
    }
  }

  Var run_stream(Tape<Scalar>& tape, Var x, const std::vector<NiNBlockSpec>& blocks, std::size_t& next,
                 bool last_is_output) {
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const NiNBlockSpec& spec = blocks[b];
      for (std::size_t c = 0; c < spec.channels.size(); ++c) {
        const bool leading = (c == 0);
        const Var w = tape.parameter(params_[next++]);
        const Var bias = tape.parameter(params_[next++]);
        x = conv2d(tape, x, w, bias, leading ? spec.stride : 1, leading ? spec.kernel / 2 : 0);
        // Every convolution but the network's last is followed by a ReLU.
        const bool last = last_is_output && b + 1 == blocks.size() && c + 1 == spec.channels.size();
        if (!last) x = relu(tape, x);
      }
    }
    return x;
  }

  Var dense(Tape<Scalar>& tape, Var x, std::size_t& next) {
    const Var w = tape.parameter(params_[next++]);
    const Var b = tape.parameter(params_[next++]);
    return fully_connected(tape, x, w, b);
  }

  RegNetConfig config_;
  std::vector<Parameter<Scalar>> params_;
};

}  // namespace regnet
