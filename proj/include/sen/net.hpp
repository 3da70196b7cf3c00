#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "sen/rng.hpp"

namespace sen {

// Dense row-major matrix of doubles. All network math runs in doubles so
// gradient checks against central differences are meaningful at 1e-4.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

  double* row(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
  const double* row(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }
  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
};

enum class Activation : std::uint8_t { kRelu = 0, kTanh = 1, kIdentity = 2 };

// One affine layer: weights are (out x in), applied as y = x w^T + b.
struct DenseLayer {
  Matrix w;
  std::vector<double> b;
};

// Fully connected net: hidden layers share one activation, the output layer
// has its own. revision changes on every parameter mutation so stale forward
// caches can be rejected in backward().
struct MlpNet {
  std::vector<DenseLayer> layers;
  Activation hidden_act = Activation::kRelu;
  Activation output_act = Activation::kIdentity;
  std::uint64_t revision = 0;

  int input_dim() const { return layers.empty() ? 0 : layers.front().w.cols; }
  int output_dim() const { return layers.empty() ? 0 : layers.back().w.rows; }

  // dims = {in, hidden..., out}; weights and biases drawn uniformly from
  // +-1/sqrt(fan_in)
  static MlpNet make(const std::vector<int>& dims, Activation output_act, Rng& rng);
};

// Intermediate values of one forward pass, kept for backpropagation.
struct ForwardCache {
  const MlpNet* net = nullptr;
  std::uint64_t revision = 0;
  Matrix input;
  std::vector<Matrix> pre;   // pre-activations per layer
  std::vector<Matrix> post;  // activations per layer (last = output)
};

// Batched forward pass; input is (batch x input_dim). Pass a cache to enable
// a later backward().
Matrix forward(const MlpNet& net, const Matrix& input, ForwardCache* cache = nullptr);

// Single-sample convenience wrapper.
std::vector<double> forward(const MlpNet& net, const std::vector<double>& input);

struct LayerGrads {
  Matrix w;
  std::vector<double> b;
};

struct NetGrads {
  std::vector<LayerGrads> layers;
  Matrix input;  // gradient w.r.t. the forward input
};

// Backpropagate out_grad (batch x output_dim) through the cached pass.
// A cache taken before any parameter update is rejected as stale. With
// want_param_grads=false only the input gradient is computed.
NetGrads backward(const MlpNet& net, const ForwardCache& cache, const Matrix& out_grad,
                  bool want_param_grads = true);

// Adam with the usual bias correction; moments are per-parameter.
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<LayerGrads> m;
  std::vector<LayerGrads> v;
};

AdamState make_adam(const MlpNet& net, double lr);

// One Adam descent step. Shapes must match the net; non-finite gradients are
// rejected before any parameter is touched.
void adam_step(MlpNet& net, const NetGrads& grads, AdamState& state);

// target <- tau * source + (1 - tau) * target, elementwise; tau in [0, 1]
void soft_update(MlpNet& target, const MlpNet& source, double tau);

// Versioned binary serialization (shapes + row-major weights). load_net
// rejects unknown magic or truncated data.
void save_net(std::ostream& out, const MlpNet& net);
MlpNet load_net(std::istream& in);
void save_adam(std::ostream& out, const AdamState& state);
AdamState load_adam(std::istream& in, const MlpNet& net);

}  // namespace sen
