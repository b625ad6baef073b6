#pragma once

// Dense tensors and a reverse-mode tape with the layer set RegNet needs.
//
// A Tape records every operation of one forward pass. Values live in the
// tape's nodes; Tape::backward walks the nodes in reverse and accumulates
// gradients, finally adding parameter gradients into Parameter::grad.
// Feature maps are laid out channels x height x width, row-major.

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "regnet/common.hpp"

namespace regnet {

using Shape = std::vector<int>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t a, int d) { return a * static_cast<std::size_t>(d); });
}

inline std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

template <typename Scalar>
class Tensor {
 public:
  using MatrixRM = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Tensor() = default;
  explicit Tensor(Shape shape, Scalar fill = Scalar(0))
      : shape_(checked(std::move(shape))), data_(shape_size(shape_), fill) {}
  Tensor(Shape shape, const std::vector<Scalar>& data)
      : shape_(checked(std::move(shape))), data_(data.begin(), data.end()) {
    if (data_.size() != shape_size(shape_)) {
      throw Error("tensor: " + std::to_string(data_.size()) + " values do not fill shape " + shape_string(shape_));
    }
  }

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }
  std::span<Scalar> values() { return data_; }
  std::span<const Scalar> values() const { return data_; }
  Scalar& operator[](std::size_t i) { return data_[i]; }
  Scalar operator[](std::size_t i) const { return data_[i]; }

  void fill(Scalar v) { std::fill(data_.begin(), data_.end(), v); }

  Eigen::Map<VectorX> vector() { return {data_.data(), static_cast<Eigen::Index>(data_.size())}; }
  Eigen::Map<const VectorX> vector() const { return {data_.data(), static_cast<Eigen::Index>(data_.size())}; }
  Eigen::Map<MatrixRM> matrix(Eigen::Index rows, Eigen::Index cols) { return {data_.data(), rows, cols}; }
  Eigen::Map<const MatrixRM> matrix(Eigen::Index rows, Eigen::Index cols) const { return {data_.data(), rows, cols}; }

  template <typename Other>
  Tensor<Other> cast() const {
    Tensor<Other> out(shape_);
    std::copy(data_.begin(), data_.end(), out.data());
    return out;
  }

 private:
  static Shape checked(Shape shape) {
    for (int d : shape) {
      if (d < 0) throw Error("tensor: negative dimension in " + shape_string(shape));
    }
    return shape;
  }

  Shape shape_;
  // Aligned storage keeps Eigen's vectorized reductions on the same
  // summation order from run to run, so training is bit-reproducible.
  std::vector<Scalar, Eigen::aligned_allocator<Scalar>> data_;
};

/// A trainable tensor with its accumulated gradient and Adam moments.
template <typename Scalar>
struct Parameter {
  std::string name;
  Tensor<Scalar> value;
  Tensor<Scalar> grad;
  Tensor<Scalar> first_moment;
  Tensor<Scalar> second_moment;
  long long step = 0;

  Parameter() = default;
  Parameter(std::string n, Tensor<Scalar> v)
      : name(std::move(n)),
        value(std::move(v)),
        grad(value.shape()),
        first_moment(value.shape()),
        second_moment(value.shape()) {}

  void zero_grad() { grad.fill(Scalar(0)); }
};

struct Var {
  std::size_t id = 0;
};

template <typename Scalar>
class Tape {
 public:
  struct Node {
    Tensor<Scalar> value;
    Tensor<Scalar> grad;  // allocated on first accumulation
    bool requires_grad = false;
    Parameter<Scalar>* parameter = nullptr;
    std::function<void()> backward;
  };

  Var input(Tensor<Scalar> value, bool requires_grad = false) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    return push(std::move(n));
  }

  /// Leaf bound to a parameter; backward adds into parameter.grad.
  Var parameter(Parameter<Scalar>& p) {
    Node n;
    n.value = p.value;
    n.requires_grad = true;
    n.parameter = &p;
    return push(std::move(n));
  }

  Var push(Node node) {
    nodes_.push_back(std::move(node));
    return Var{nodes_.size() - 1};
  }

  const Tensor<Scalar>& value(Var v) const { return nodes_.at(v.id).value; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  Node& node(Var v) { return nodes_.at(v.id); }

  /// Gradient buffer of v, zero-initialized on first access.
  Tensor<Scalar>& grad(Var v) {
    Node& n = nodes_.at(v.id);
    if (n.grad.size() != n.value.size()) n.grad = Tensor<Scalar>(n.value.shape());
    return n.grad;
  }

  bool has_grad(Var v) const {
    const Node& n = nodes_.at(v.id);
    return n.grad.size() == n.value.size() && !n.value.empty();
  }

  std::size_t size() const { return nodes_.size(); }

  /// Seeds d(loss)/d(loss) = 1 and runs every recorded backward step.
  void backward(Var loss) {
    if (value(loss).size() != 1) throw Error("backward: loss must be a scalar, got " + shape_string(value(loss).shape()));
    grad(loss)[0] = Scalar(1);
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.requires_grad || !has_grad(Var{i})) continue;
      if (n.backward) n.backward();
      if (n.parameter) n.parameter->grad.vector() += n.grad.vector();
    }
  }

 private:
  std::vector<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Layers

namespace detail {

inline int conv_out_dim(int in, int kernel, int stride, int pad) { return (in + 2 * pad - kernel) / stride + 1; }

template <typename Scalar>
void im2col(const Scalar* x, int channels, int height, int width, int kernel, int stride, int pad, int out_h,
            int out_w, Scalar* col) {
  const int plane = out_h * out_w;
  for (int c = 0; c < channels; ++c) {
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx) {
        Scalar* row = col + static_cast<std::size_t>((c * kernel + ky) * kernel + kx) * plane;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * stride - pad + ky;
          Scalar* dst = row + oy * out_w;
          if (iy < 0 || iy >= height) {
            std::fill(dst, dst + out_w, Scalar(0));
            continue;
          }
          const Scalar* src = x + (static_cast<std::size_t>(c) * height + iy) * width;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * stride - pad + kx;
            dst[ox] = (ix >= 0 && ix < width) ? src[ix] : Scalar(0);
          }
        }
      }
    }
  }
}

template <typename Scalar>
void col2im_add(const Scalar* col, int channels, int height, int width, int kernel, int stride, int pad, int out_h,
                int out_w, Scalar* x) {
  const int plane = out_h * out_w;
  for (int c = 0; c < channels; ++c) {
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx) {
        const Scalar* row = col + static_cast<std::size_t>((c * kernel + ky) * kernel + kx) * plane;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= height) continue;
          Scalar* dst = x + (static_cast<std::size_t>(c) * height + iy) * width;
          const Scalar* src = row + oy * out_w;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < width) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace detail

/// Cross-correlation. x: C_in x H x W, weight: C_out x C_in x k x k,
/// bias: C_out. Output spatial size floor((dim + 2 pad - k) / stride) + 1.
template <typename Scalar>
Var conv2d(Tape<Scalar>& tape, Var x, Var weight, Var bias, int stride, int pad) {
  using MatrixRM = typename Tensor<Scalar>::MatrixRM;
  const Tensor<Scalar>& xv = tape.value(x);
  const Tensor<Scalar>& wv = tape.value(weight);
  const Tensor<Scalar>& bv = tape.value(bias);
  if (xv.rank() != 3) throw Error("conv2d: input must be C x H x W, got " + shape_string(xv.shape()));
  if (wv.rank() != 4) throw Error("conv2d: weight must be C_out x C_in x k x k, got " + shape_string(wv.shape()));
  const int cin = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
  const int cout = wv.dim(0), k = wv.dim(2);
  if (wv.dim(1) != cin) {
    throw Error("conv2d: input channels " + std::to_string(cin) + " do not match weight input channels " +
                std::to_string(wv.dim(1)));
  }
  if (wv.dim(3) != k || k < 1) throw Error("conv2d: kernel must be square and >= 1, got " + shape_string(wv.shape()));
  if (bv.size() != static_cast<std::size_t>(cout)) {
    throw Error("conv2d: bias length " + std::to_string(bv.size()) + " does not match output channels " +
                std::to_string(cout));
  }
  if (stride < 1 || pad < 0) throw Error("conv2d: stride must be >= 1 and padding >= 0");
  const int oh = detail::conv_out_dim(h, k, stride, pad);
  const int ow = detail::conv_out_dim(w, k, stride, pad);
  if (oh < 1 || ow < 1) {
    throw Error("conv2d: kernel " + std::to_string(k) + " does not fit input height/width " + std::to_string(h) +
                "x" + std::to_string(w));
  }
  const int patch = cin * k * k;
  const int plane = oh * ow;
  const bool direct = (k == 1 && stride == 1 && pad == 0);

  auto col = std::make_shared<Tensor<Scalar>>();
  if (!direct) {
    *col = Tensor<Scalar>({patch, plane});
    detail::im2col(xv.data(), cin, h, w, k, stride, pad, oh, ow, col->data());
  }
  const auto col_matrix = [&tape, x, col, direct, patch, plane]() -> Eigen::Map<const MatrixRM> {
    return direct ? tape.value(x).matrix(patch, plane) : std::as_const(*col).matrix(patch, plane);
  };

  typename Tape<Scalar>::Node node;
  node.value = Tensor<Scalar>({cout, oh, ow});
  node.value.matrix(cout, plane).noalias() = wv.matrix(cout, patch) * col_matrix();
  node.value.matrix(cout, plane).colwise() += bv.vector();
  node.requires_grad = tape.requires_grad(x) || tape.requires_grad(weight) || tape.requires_grad(bias);
  const Var out{tape.size()};
  node.backward = [&tape, x, weight, bias, out, col_matrix, col, direct, cin, h, w, k, stride, pad, oh, ow, cout,
                   patch, plane]() {
    const auto g = std::as_const(tape.grad(out)).matrix(cout, plane);
    if (tape.requires_grad(weight)) tape.grad(weight).matrix(cout, patch).noalias() += g * col_matrix().transpose();
    if (tape.requires_grad(bias)) tape.grad(bias).vector() += g.rowwise().sum();
    if (tape.requires_grad(x)) {
      const auto wm = tape.value(weight).matrix(cout, patch);
      if (direct) {
        tape.grad(x).matrix(patch, plane).noalias() += wm.transpose() * g;
      } else {
        Tensor<Scalar> dcol({patch, plane});
        dcol.matrix(patch, plane).noalias() = wm.transpose() * g;
        detail::col2im_add(dcol.data(), cin, h, w, k, stride, pad, oh, ow, tape.grad(x).data());
      }
    }
  };
  return tape.push(std::move(node));
}

/// max(0, x); the subgradient at 0 is 0.
template <typename Scalar>
Var relu(Tape<Scalar>& tape, Var x) {
  typename Tape<Scalar>::Node node;
  node.value = tape.value(x);
  node.value.vector() = node.value.vector().cwiseMax(Scalar(0));
  node.requires_grad = tape.requires_grad(x);
  const Var out{tape.size()};
  node.backward = [&tape, x, out]() {
    const auto xv = tape.value(x).vector();
    const auto g = std::as_const(tape.grad(out)).vector();
    tape.grad(x).vector().array() += (xv.array() > Scalar(0)).select(g.array(), Scalar(0));
  };
  return tape.push(std::move(node));
}

/// Window max without padding. Backward routes each window's gradient to its
/// first maximal element in row-major order.
template <typename Scalar>
Var maxpool2d(Tape<Scalar>& tape, Var x, int kernel, int stride) {
  const Tensor<Scalar>& xv = tape.value(x);
  if (xv.rank() != 3) throw Error("maxpool2d: input must be C x H x W, got " + shape_string(xv.shape()));
  if (kernel < 1 || stride < 1) throw Error("maxpool2d: kernel and stride must be >= 1");
  const int c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
  if (kernel > h || kernel > w) {
    throw Error("maxpool2d: window " + std::to_string(kernel) + " larger than input " + shape_string(xv.shape()));
  }
  const int oh = (h - kernel) / stride + 1;
  const int ow = (w - kernel) / stride + 1;
  typename Tape<Scalar>::Node node;
  node.value = Tensor<Scalar>({c, oh, ow});
  auto argmax = std::make_shared<std::vector<std::size_t>>(node.value.size());
  std::size_t o = 0;
  for (int ch = 0; ch < c; ++ch) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox, ++o) {
        std::size_t best = (static_cast<std::size_t>(ch) * h + oy * stride) * w + ox * stride;
        for (int ky = 0; ky < kernel; ++ky) {
          for (int kx = 0; kx < kernel; ++kx) {
            const std::size_t idx = (static_cast<std::size_t>(ch) * h + oy * stride + ky) * w + ox * stride + kx;
            if (xv[idx] > xv[best]) best = idx;
          }
        }
        (*argmax)[o] = best;
        node.value[o] = xv[best];
      }
    }
  }
  node.requires_grad = tape.requires_grad(x);
  const Var out{tape.size()};
  node.backward = [&tape, x, out, argmax]() {
    const Tensor<Scalar>& g = tape.grad(out);
    Tensor<Scalar>& gx = tape.grad(x);
    for (std::size_t i = 0; i < argmax->size(); ++i) gx[(*argmax)[i]] += g[i];
  };
  return tape.push(std::move(node));
}

/// Per-channel maximum over all spatial positions: C x H x W -> C.
template <typename Scalar>
Var global_max_pool(Tape<Scalar>& tape, Var x) {
  const Tensor<Scalar>& xv = tape.value(x);
  if (xv.rank() != 3 || xv.dim(1) * xv.dim(2) == 0) {
    throw Error("global_max_pool: input must be a nonempty C x H x W, got " + shape_string(xv.shape()));
  }
  const int c = xv.dim(0);
  const std::size_t plane = static_cast<std::size_t>(xv.dim(1)) * xv.dim(2);
  typename Tape<Scalar>::Node node;
  node.value = Tensor<Scalar>({c});
  auto argmax = std::make_shared<std::vector<std::size_t>>(c);
  for (int ch = 0; ch < c; ++ch) {
    std::size_t best = ch * plane;
    for (std::size_t i = ch * plane; i < (ch + 1) * plane; ++i) {
      if (xv[i] > xv[best]) best = i;
    }
    (*argmax)[ch] = best;
    node.value[ch] = xv[best];
  }
  node.requires_grad = tape.requires_grad(x);
  const Var out{tape.size()};
  node.backward = [&tape, x, out, argmax]() {
    const Tensor<Scalar>& g = tape.grad(out);
    Tensor<Scalar>& gx = tape.grad(x);
    for (std::size_t i = 0; i < argmax->size(); ++i) gx[(*argmax)[i]] += g[i];
  };
  return tape.push(std::move(node));
}

/// Stacks b's channels after a's. A tensor with zero elements acts as empty.
template <typename Scalar>
Var concat_channels(Tape<Scalar>& tape, Var a, Var b) {
  const Tensor<Scalar>& av = tape.value(a);
  const Tensor<Scalar>& bv = tape.value(b);
  if (bv.empty() || av.empty()) {
    const Var keep = bv.empty() ? a : b;
    typename Tape<Scalar>::Node node;
    node.value = tape.value(keep);
    node.requires_grad = tape.requires_grad(keep);
    const Var out{tape.size()};
    node.backward = [&tape, keep, out]() { tape.grad(keep).vector() += std::as_const(tape.grad(out)).vector(); };
    return tape.push(std::move(node));
  }
  if (av.rank() != 3 || bv.rank() != 3 || av.dim(1) != bv.dim(1) || av.dim(2) != bv.dim(2)) {
    throw Error("concat_channels: spatial dimensions differ: " + shape_string(av.shape()) + " vs " +
                shape_string(bv.shape()));
  }
  typename Tape<Scalar>::Node node;
  node.value = Tensor<Scalar>({av.dim(0) + bv.dim(0), av.dim(1), av.dim(2)});
  std::copy(av.data(), av.data() + av.size(), node.value.data());
  std::copy(bv.data(), bv.data() + bv.size(), node.value.data() + av.size());
  node.requires_grad = tape.requires_grad(a) || tape.requires_grad(b);
  const Var out{tape.size()};
  const std::size_t na = av.size(), nb = bv.size();
  node.backward = [&tape, a, b, out, na, nb]() {
    const Tensor<Scalar>& g = tape.grad(out);
    if (tape.requires_grad(a)) {
      Tensor<Scalar>& ga = tape.grad(a);
      for (std::size_t i = 0; i < na; ++i) ga[i] += g[i];
    }
    if (tape.requires_grad(b)) {
      Tensor<Scalar>& gb = tape.grad(b);
      for (std::size_t i = 0; i < nb; ++i) gb[i] += g[na + i];
    }
  };
  return tape.push(std::move(node));
}

/// y = W x + b on the flattened input. weight: out x in.
template <typename Scalar>
Var fully_connected(Tape<Scalar>& tape, Var x, Var weight, Var bias) {
  const Tensor<Scalar>& xv = tape.value(x);
  const Tensor<Scalar>& wv = tape.value(weight);
  const Tensor<Scalar>& bv = tape.value(bias);
  if (wv.rank() != 2) throw Error("fully_connected: weight must be out x in, got " + shape_string(wv.shape()));
  const int rows = wv.dim(0), cols = wv.dim(1);
  if (xv.size() != static_cast<std::size_t>(cols)) {
    throw Error("fully_connected: input length " + std::to_string(xv.size()) + " does not match weight columns " +
                std::to_string(cols));
  }
  if (bv.size() != static_cast<std::size_t>(rows)) {
    throw Error("fully_connected: bias length " + std::to_string(bv.size()) + " does not match weight rows " +
                std::to_string(rows));
  }
  typename Tape<Scalar>::Node node;
  node.value = Tensor<Scalar>({rows});
  node.value.vector().noalias() = wv.matrix(rows, cols) * xv.vector() + bv.vector();
  node.requires_grad = tape.requires_grad(x) || tape.requires_grad(weight) || tape.requires_grad(bias);
  const Var out{tape.size()};
  node.backward = [&tape, x, weight, bias, out, rows, cols]() {
    const auto g = std::as_const(tape.grad(out)).vector();
    if (tape.requires_grad(weight)) {
      tape.grad(weight).matrix(rows, cols).noalias() += g * tape.value(x).vector().transpose();
    }
    if (tape.requires_grad(bias)) tape.grad(bias).vector() += g;
    if (tape.requires_grad(x)) tape.grad(x).vector().noalias() += tape.value(weight).matrix(rows, cols).transpose() * g;
  };
  return tape.push(std::move(node));
}

/// L = 1/2 * sum (pred - target)^2, so dL/dpred = pred - target.
template <typename Scalar>
Var euclidean_loss(Tape<Scalar>& tape, Var pred, Var target) {
  const Tensor<Scalar>& pv = tape.value(pred);
  const Tensor<Scalar>& tv = tape.value(target);
  if (pv.shape() != tv.shape()) {
    throw Error("euclidean_loss: prediction " + shape_string(pv.shape()) + " and target " +
                shape_string(tv.shape()) + " differ");
  }
  typename Tape<Scalar>::Node node;
  node.value = Tensor<Scalar>({1});
  node.value[0] = Scalar(0.5) * (pv.vector() - tv.vector()).squaredNorm();
  node.requires_grad = tape.requires_grad(pred) || tape.requires_grad(target);
  const Var out{tape.size()};
  node.backward = [&tape, pred, target, out]() {
    const Scalar g = tape.grad(out)[0];
    const auto diff = (tape.value(pred).vector() - tape.value(target).vector()).eval();
    if (tape.requires_grad(pred)) tape.grad(pred).vector() += g * diff;
    if (tape.requires_grad(target)) tape.grad(target).vector() -= g * diff;
  };
  return tape.push(std::move(node));
}

}  // namespace regnet
