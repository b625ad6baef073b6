#include "regnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>

namespace regnet {

double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

namespace {

using Leaves = std::vector<Tensor<double>>;
using Graph = std::function<Var(Tape<double>&, const std::vector<Var>&)>;

double graph_loss(const Graph& graph, const Leaves& leaves, const Tensor<double>& target) {
  Tape<double> tape;
  std::vector<Var> vars;
  for (const auto& l : leaves) vars.push_back(tape.input(l));
  const Var out = graph(tape, vars);
  return tape.value(euclidean_loss(tape, out, tape.input(target)))[0];
}

// Central differences with steps h and 2h; nullopt when they disagree,
// i.e. the entry sits on a kink of the piecewise-quadratic loss.
template <typename Eval>
std::optional<double> central_difference(double& x, double h, double floor, Eval eval) {
  const double x0 = x;
  auto diff = [&](double step) {
    x = x0 + step;
    const double up = eval();
    x = x0 - step;
    const double down = eval();
    x = x0;
    return (up - down) / (2.0 * step);
  };
  // A kink inside the stencil shows up as disagreement between step sizes.
  // A kink exactly at x0 (a max pool tie) gives a central difference that
  // does not depend on the step, but the one-sided slopes differ there.
  const double d1 = diff(h);
  const double d_half = diff(0.5 * h);
  const double d2 = diff(2.0 * h);
  const double here = eval();
  x = x0 + h;
  const double forward = (eval() - here) / h;
  x = x0 - h;
  const double backward = (here - eval()) / h;
  x = x0;
  if (relative_error(d1, d2, floor) > 1e-3 || relative_error(d1, d_half, floor) > 1e-3 ||
      relative_error(forward, backward, floor) > 1e-3) {
    return std::nullopt;
  }
  return d1;
}

GradCheckResult check_graph(const std::string& name, Leaves leaves, const Graph& graph, double tolerance, Rng& rng,
                            const GradCheckSettings& settings) {
  Tape<double> tape;
  std::vector<Var> vars;
  for (const auto& l : leaves) vars.push_back(tape.input(l, true));
  const Var out = graph(tape, vars);
  Tensor<double> target(tape.value(out).shape());
  for (std::size_t i = 0; i < target.size(); ++i) target[i] = gaussian(rng);
  tape.backward(euclidean_loss(tape, out, tape.input(target)));

  GradCheckResult r{name, 0.0, tolerance, 0, 0};
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    const Tensor<double> analytic =
        tape.has_grad(vars[l]) ? tape.grad(vars[l]) : Tensor<double>(leaves[l].shape());
    for (std::size_t i = 0; i < leaves[l].size(); ++i) {
      const auto numeric = central_difference(leaves[l][i], settings.step, settings.floor,
                                              [&] { return graph_loss(graph, leaves, target); });
      if (!numeric) {
        ++r.skipped;
        continue;
      }
      ++r.checked;
      r.max_relative_error = std::max(r.max_relative_error, relative_error(analytic[i], *numeric, settings.floor));
    }
  }
  return r;
}

Tensor<double> random_tensor(const Shape& shape, Rng& rng) {
  Tensor<double> t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = gaussian(rng);
  return t;
}

// Values with pairwise gaps of at least 0.01, so a max never flips within
// a finite-difference step.
Tensor<double> distinct_tensor(const Shape& shape, Rng& rng) {
  Tensor<double> t(shape);
  std::vector<int> order(t.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = 0.01 * order[i] - 0.005 * static_cast<double>(t.size());
  return t;
}

// Entries bounded away from zero.
Tensor<double> nonzero_tensor(const Shape& shape, Rng& rng) {
  Tensor<double> t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double mag = uniform(rng, 0.05, 1.0);
    t[i] = uniform01(rng) < 0.5 ? -mag : mag;
  }
  return t;
}

int pick(Rng& rng, int lo, int hi) { return lo + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(hi - lo + 1))); }

std::string shape_label(const std::string& layer, const Shape& shape, const std::string& extra = "") {
  return layer + " " + shape_string(shape) + (extra.empty() ? "" : " " + extra);
}

}  // namespace

std::vector<GradCheckResult> layer_gradient_suite(std::uint64_t seed, int shapes_per_layer,
                                                  const GradCheckSettings& settings) {
  if (shapes_per_layer < 1) throw Error("gradcheck: need at least one shape per layer");
  Rng rng(seed);
  std::vector<GradCheckResult> out;
  for (int s = 0; s < shapes_per_layer; ++s) {
    // conv2d
    {
      const int cin = pick(rng, 1, 3), cout = pick(rng, 1, 4);
      const int h = pick(rng, 5, 9), w = pick(rng, 5, 9);
      const int k = std::array{1, 3, 5}[static_cast<std::size_t>(pick(rng, 0, 2))];
      const int stride = pick(rng, 1, 3), pad = pick(rng, 0, k / 2);
      const Graph g = [=](Tape<double>& t, const std::vector<Var>& v) { return conv2d(t, v[0], v[1], v[2], stride, pad); };
      out.push_back(check_graph(shape_label("conv2d", {cin, h, w},
                                            "k" + std::to_string(k) + " s" + std::to_string(stride) + " p" +
                                                std::to_string(pad) + " out" + std::to_string(cout)),
                                {random_tensor({cin, h, w}, rng), random_tensor({cout, cin, k, k}, rng),
                                 random_tensor({cout}, rng)},
                                g, 1e-4, rng, settings));
    }
    // relu
    {
      const Shape shape{pick(rng, 1, 4), pick(rng, 2, 7), pick(rng, 2, 7)};
      const Graph g = [](Tape<double>& t, const std::vector<Var>& v) { return relu(t, v[0]); };
      out.push_back(check_graph(shape_label("relu", shape), {nonzero_tensor(shape, rng)}, g, 1e-6, rng, settings));
    }
    // maxpool2d
    {
      const Shape shape{pick(rng, 1, 4), pick(rng, 4, 8), pick(rng, 4, 8)};
      const int k = pick(rng, 1, 3), stride = pick(rng, 1, 3);
      const Graph g = [=](Tape<double>& t, const std::vector<Var>& v) { return maxpool2d(t, v[0], k, stride); };
      out.push_back(check_graph(shape_label("maxpool2d", shape, "k" + std::to_string(k) + " s" + std::to_string(stride)),
                                {distinct_tensor(shape, rng)}, g, 1e-4, rng, settings));
    }
    // global_max_pool
    {
      const Shape shape{pick(rng, 1, 5), pick(rng, 1, 6), pick(rng, 1, 6)};
      const Graph g = [](Tape<double>& t, const std::vector<Var>& v) { return global_max_pool(t, v[0]); };
      out.push_back(check_graph(shape_label("global_max_pool", shape), {distinct_tensor(shape, rng)}, g, 1e-4, rng,
                                settings));
    }
    // concat_channels
    {
      const int h = pick(rng, 1, 6), w = pick(rng, 1, 6);
      const Shape a{pick(rng, 1, 4), h, w}, b{pick(rng, 1, 4), h, w};
      const Graph g = [](Tape<double>& t, const std::vector<Var>& v) { return concat_channels(t, v[0], v[1]); };
      out.push_back(check_graph(shape_label("concat_channels", a, "+ " + shape_string(b)),
                                {random_tensor(a, rng), random_tensor(b, rng)}, g, 1e-4, rng, settings));
    }
    // fully_connected
    {
      const int in = pick(rng, 1, 12), outs = pick(rng, 1, 6);
      const Graph g = [](Tape<double>& t, const std::vector<Var>& v) { return fully_connected(t, v[0], v[1], v[2]); };
      out.push_back(check_graph(shape_label("fully_connected", {outs, in}),
                                {random_tensor({in}, rng), random_tensor({outs, in}, rng), random_tensor({outs}, rng)},
                                g, 1e-4, rng, settings));
    }
    // euclidean_loss (the graph is the identity; the checked function is the loss itself)
    {
      const Shape shape{pick(rng, 1, 10)};
      const Graph g = [](Tape<double>&, const std::vector<Var>& v) { return v[0]; };
      out.push_back(check_graph(shape_label("euclidean_loss", shape), {random_tensor(shape, rng)}, g, 1e-6, rng,
                                settings));
    }
  }
  return out;
}

GradCheckResult end_to_end_gradient_check(const RegNetConfig& config, std::uint64_t seed, int input_entries,
                                          int weight_entries, double tolerance, const GradCheckSettings& settings) {
  Rng rng(seed);
  RegNet<double> model(config, derive_seed(seed, 1));
  Tensor<double> rgb = random_tensor({3, config.input_height, config.input_width}, rng);
  Tensor<double> depth({1, config.input_height, config.input_width});
  // Sparse depth like a projected scan: roughly one pixel in eight is set.
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (uniform01(rng) < 0.125) depth[i] = uniform(rng, 0.02, 1.0);
  }
  // Target near the current output keeps the loss O(1); with the identity
  // encoding in the output bias the raw loss is in the thousands and the
  // finite differences drown in rounding.
  Tensor<double> target = model.predict(rgb, depth);
  for (std::size_t i = 0; i < target.size(); ++i) target[i] += gaussian(rng);

  auto loss_of = [&]() {
    Tape<double> tape;
    const Var out = model.forward(tape, tape.input(rgb), tape.input(depth));
    return tape.value(euclidean_loss(tape, out, tape.input(target)))[0];
  };

  model.zero_grad();
  Tape<double> tape;
  const Var rgb_var = tape.input(rgb, true);
  const Var depth_var = tape.input(depth, true);
  const Var out = model.forward(tape, rgb_var, depth_var);
  tape.backward(euclidean_loss(tape, out, tape.input(target)));
  const Tensor<double> rgb_grad = tape.has_grad(rgb_var) ? tape.grad(rgb_var) : Tensor<double>(rgb.shape());
  const Tensor<double> depth_grad = tape.has_grad(depth_var) ? tape.grad(depth_var) : Tensor<double>(depth.shape());
  Parameter<double>& first = model.parameters().front();
  const Tensor<double> weight_grad = first.grad;

  GradCheckResult r{"end-to-end " + shape_string(rgb.shape()), 0.0, tolerance, 0, 0};
  // Most input pixels do not reach the global max pool and have an exact
  // zero gradient; sample among the ones that do.
  auto check_entries = [&](Tensor<double>& values, const Tensor<double>& grad, int count, double step) {
    std::vector<std::size_t> live;
    for (std::size_t i = 0; i < grad.size(); ++i) {
      if (grad[i] != 0.0) live.push_back(i);
    }
    std::shuffle(live.begin(), live.end(), rng);
    int done = 0;
    for (std::size_t idx : live) {
      if (done >= count) break;
      const auto numeric = central_difference(values[idx], step, settings.floor, loss_of);
      if (!numeric) {
        ++r.skipped;
        continue;
      }
      ++done;
      ++r.checked;
      r.max_relative_error = std::max(r.max_relative_error, relative_error(grad[idx], *numeric, settings.floor));
    }
  };
  check_entries(rgb, rgb_grad, input_entries - input_entries / 3, settings.step);
  check_entries(depth, depth_grad, input_entries / 3, settings.step);
  // A first-layer weight feeds every position of its output map, so ReLU
  // kinks along it are far denser than along one pixel; use a finer step.
  check_entries(first.value, weight_grad, weight_entries, settings.step * 1e-2);
  return r;
}

}  // namespace regnet
