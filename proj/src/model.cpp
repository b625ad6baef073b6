#include "regnet/model.hpp"

#include <sstream>

namespace regnet {

namespace {

void validate_blocks(const std::vector<NiNBlockSpec>& blocks, const std::string& stream) {
  if (blocks.empty()) throw Error("regnet config: " + stream + " stream has no blocks");
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const NiNBlockSpec& b = blocks[i];
    const std::string where = stream + " block " + std::to_string(i);
    if (b.channels.size() < 2) throw Error("regnet config: " + where + " needs a 1x1 convolution after the leading one");
    if (b.kernel < 1 || b.stride < 1) throw Error("regnet config: " + where + " kernel and stride must be >= 1");
    for (int c : b.channels) {
      if (c < 1) throw Error("regnet config: " + where + " has a non-positive channel count");
    }
  }
}

}  // namespace

RegNetConfig RegNetConfig::toy() {
  RegNetConfig c;
  c.rgb_stream = {{7, 2, {24, 24}}, {5, 2, {48, 48}}, {3, 2, {96, 96}}};
  c.depth_stream = {{7, 2, {12, 12}}, {5, 2, {24, 24}}, {3, 2, {48, 48}}};
  c.fusion_stack = {{3, 1, {96, 96}}, {3, 1, {64, 64}}};
  return c;
}

std::pair<int, int> stream_output_size(const std::vector<NiNBlockSpec>& blocks, int height, int width) {
  for (const NiNBlockSpec& b : blocks) {
    height = (height + 2 * (b.kernel / 2) - b.kernel) / b.stride + 1;
    width = (width + 2 * (b.kernel / 2) - b.kernel) / b.stride + 1;
  }
  return {height, width};
}

void RegNetConfig::validate() const {
  if (input_height < 1 || input_width < 1) throw Error("regnet config: input size must be positive");
  if (fc_hidden < 1) throw Error("regnet config: fully connected width must be positive");
  validate_blocks(rgb_stream, "rgb");
  validate_blocks(depth_stream, "depth");
  validate_blocks(fusion_stack, "fusion");
  range.validate();
  if (!(balance > 0.0)) throw Error("regnet config: balance factor must be positive");

  const std::size_t shared = std::min(rgb_stream.size(), depth_stream.size());
  for (std::size_t i = 0; i < shared; ++i) {
    const auto& r = rgb_stream[i].channels;
    const auto& d = depth_stream[i].channels;
    for (std::size_t j = 0; j < std::min(r.size(), d.size()); ++j) {
      if (d[j] > r[j]) {
        throw Error("regnet config: depth stream block " + std::to_string(i) + " is wider than the rgb stream (" +
                    std::to_string(d[j]) + " > " + std::to_string(r[j]) + " channels)");
      }
    }
  }
  const auto [rh, rw] = stream_output_size(rgb_stream, input_height, input_width);
  const auto [dh, dw] = stream_output_size(depth_stream, input_height, input_width);
  if (rh < 1 || rw < 1 || dh < 1 || dw < 1 || rh != dh || rw != dw) {
    throw Error("regnet config: streams disagree at the concatenation point: rgb " + std::to_string(rh) + "x" +
                std::to_string(rw) + ", depth " + std::to_string(dh) + "x" + std::to_string(dw));
  }
  const auto [fh, fw] = stream_output_size(fusion_stack, rh, rw);
  if (fh < 1 || fw < 1) throw Error("regnet config: fusion stack shrinks the feature map to nothing");
}

std::vector<std::string> RegNetConfig::shape_trace() const {
  std::vector<std::string> lines;
  auto trace_stream = [&lines](const std::string& name, const std::vector<NiNBlockSpec>& blocks, int c, int h,
                               int w) {
    lines.push_back(name + ".input " + shape_string({c, h, w}));
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const NiNBlockSpec& spec = blocks[b];
      h = (h + 2 * (spec.kernel / 2) - spec.kernel) / spec.stride + 1;
      w = (w + 2 * (spec.kernel / 2) - spec.kernel) / spec.stride + 1;
      for (std::size_t i = 0; i < spec.channels.size(); ++i) {
        std::ostringstream os;
        const int k = i == 0 ? spec.kernel : 1;
        os << name << ".block" << b << ".conv" << i << " k" << k << " s" << (i == 0 ? spec.stride : 1) << ' '
           << shape_string({spec.channels[i], h, w});
        lines.push_back(os.str());
      }
    }
    return std::pair<int, int>{h, w};
  };
  const auto [h, w] = trace_stream("rgb", rgb_stream, 3, input_height, input_width);
  trace_stream("depth", depth_stream, 1, input_height, input_width);
  const int fused = rgb_stream.back().channels.back() + depth_stream.back().channels.back();
  lines.push_back("concat " + shape_string({fused, h, w}));
  trace_stream("fusion", fusion_stack, fused, h, w);
  lines.push_back("global_max_pool " + shape_string({fusion_stack.back().channels.back()}));
  lines.push_back("fc1 " + shape_string({fc_hidden}));
  lines.push_back("fc2 " + shape_string({output_width()}));
  return lines;
}

}  // namespace regnet
