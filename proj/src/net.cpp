#include "sen/net.hpp"

#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace sen {

namespace {

void apply_activation(Activation act, const Matrix& pre, Matrix& post) {
  post = pre;
  switch (act) {
    case Activation::kRelu:
      for (double& v : post.data) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::kTanh:
      for (double& v : post.data) v = std::tanh(v);
      break;
    case Activation::kIdentity:
      break;
  }
}

// derivative expressed through pre-activation z and activation y
double activation_grad(Activation act, double z, double y) {
  switch (act) {
    case Activation::kRelu:
      return z > 0.0 ? 1.0 : 0.0;  // exactly zero at z == 0
    case Activation::kTanh:
      return 1.0 - y * y;
    case Activation::kIdentity:
      return 1.0;
  }
  return 1.0;
}

// y = x w^T + b
void affine(const Matrix& x, const DenseLayer& l, Matrix& y) {
  y = Matrix(x.rows, l.w.rows);
  const int in = l.w.cols;
  for (int i = 0; i < x.rows; ++i) {
    const double* xi = x.row(i);
    double* yi = y.row(i);
    for (int o = 0; o < l.w.rows; ++o) {
      const double* wo = l.w.row(o);
      double acc = l.b[o];
      for (int k = 0; k < in; ++k) acc += xi[k] * wo[k];
      yi[o] = acc;
    }
  }
}

void check_same_shape(const MlpNet& net, const std::vector<LayerGrads>& layers,
                      const char* what) {
  if (layers.size() != net.layers.size()) {
    throw std::invalid_argument(std::string(what) + ": layer count mismatch");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].w.rows != net.layers[l].w.rows ||
        layers[l].w.cols != net.layers[l].w.cols ||
        layers[l].b.size() != net.layers[l].b.size()) {
      throw std::invalid_argument(std::string(what) + ": shape mismatch at layer " +
                                  std::to_string(l));
    }
  }
}

void write_raw(std::ostream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  if (!out.good()) throw std::runtime_error("checkpoint write failed");
}

void read_raw(std::istream& in, void* p, std::size_t n) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (in.gcount() != static_cast<std::streamsize>(n)) {
    throw std::runtime_error("checkpoint is truncated");
  }
}

void write_u32(std::ostream& out, std::uint32_t v) { write_raw(out, &v, sizeof v); }
std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  read_raw(in, &v, sizeof v);
  return v;
}

constexpr char kNetMagic[8] = {'M', 'L', 'P', 'N', 'E', 'T', '0', '1'};
constexpr char kAdamMagic[8] = {'A', 'D', 'A', 'M', 'S', 'T', '0', '1'};
constexpr std::uint32_t kMaxDim = 1u << 20;

}  // namespace

MlpNet MlpNet::make(const std::vector<int>& dims, Activation output_act, Rng& rng) {
  if (dims.size() < 2) {
    throw std::invalid_argument("a net needs at least input and output dims");
  }
  for (int d : dims) {
    if (d <= 0) throw std::invalid_argument("layer dims must be positive");
  }
  MlpNet net;
  net.output_act = output_act;
  net.layers.resize(dims.size() - 1);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    DenseLayer& layer = net.layers[l];
    layer.w = Matrix(dims[l + 1], dims[l]);
    layer.b.assign(static_cast<std::size_t>(dims[l + 1]), 0.0);
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims[l]));
    for (double& v : layer.w.data) v = rng.uniform(-bound, bound);
    for (double& v : layer.b) v = rng.uniform(-bound, bound);
  }
  return net;
}

Matrix forward(const MlpNet& net, const Matrix& input, ForwardCache* cache) {
  if (net.layers.empty()) throw std::invalid_argument("forward: empty net");
  if (input.cols != net.input_dim()) {
    throw std::invalid_argument("forward: input has " + std::to_string(input.cols) +
                                " columns, net expects " + std::to_string(net.input_dim()));
  }
  if (cache) {
    cache->net = &net;
    cache->revision = net.revision;
    cache->input = input;
    cache->pre.assign(net.layers.size(), Matrix{});
    cache->post.assign(net.layers.size(), Matrix{});
  }
  Matrix x = input;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    Matrix z;
    affine(x, net.layers[l], z);
    const Activation act =
        l + 1 == net.layers.size() ? net.output_act : net.hidden_act;
    Matrix y;
    apply_activation(act, z, y);
    if (cache) {
      cache->pre[l] = std::move(z);
      cache->post[l] = y;
    }
    x = std::move(y);
  }
  return x;
}

std::vector<double> forward(const MlpNet& net, const std::vector<double>& input) {
  Matrix m(1, static_cast<int>(input.size()));
  for (std::size_t i = 0; i < input.size(); ++i) m.data[i] = input[i];
  const Matrix out = forward(net, m);
  return out.data;
}

NetGrads backward(const MlpNet& net, const ForwardCache& cache, const Matrix& out_grad,
                  bool want_param_grads) {
  if (cache.net != &net || cache.revision != net.revision ||
      cache.pre.size() != net.layers.size()) {
    throw std::logic_error("backward: forward cache is stale or belongs to another net");
  }
  const int batch = cache.input.rows;
  if (out_grad.rows != batch || out_grad.cols != net.output_dim()) {
    throw std::invalid_argument("backward: out_grad shape mismatch");
  }

  NetGrads grads;
  if (want_param_grads) {
    grads.layers.resize(net.layers.size());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      grads.layers[l].w = Matrix(net.layers[l].w.rows, net.layers[l].w.cols);
      grads.layers[l].b.assign(net.layers[l].b.size(), 0.0);
    }
  }

  // gradient w.r.t. the current layer's pre-activation
  Matrix g = out_grad;
  for (int l = static_cast<int>(net.layers.size()) - 1; l >= 0; --l) {
    const Activation act =
        l + 1 == static_cast<int>(net.layers.size()) ? net.output_act : net.hidden_act;
    const Matrix& pre = cache.pre[l];
    const Matrix& post = cache.post[l];
    for (int i = 0; i < batch; ++i) {
      double* gi = g.row(i);
      const double* zi = pre.row(i);
      const double* yi = post.row(i);
      for (int o = 0; o < g.cols; ++o) gi[o] *= activation_grad(act, zi[o], yi[o]);
    }

    const Matrix& x = l == 0 ? cache.input : cache.post[l - 1];
    const DenseLayer& layer = net.layers[l];
    if (want_param_grads) {
      LayerGrads& lg = grads.layers[l];
      for (int i = 0; i < batch; ++i) {
        const double* gi = g.row(i);
        const double* xi = x.row(i);
        for (int o = 0; o < layer.w.rows; ++o) {
          const double go = gi[o];
          if (go == 0.0) continue;  // ReLU zeroed it; nothing to accumulate
          double* wo = lg.w.row(o);
          for (int k = 0; k < layer.w.cols; ++k) wo[k] += go * xi[k];
          lg.b[o] += go;
        }
      }
    }

    Matrix dx(batch, layer.w.cols);
    for (int i = 0; i < batch; ++i) {
      const double* gi = g.row(i);
      double* dxi = dx.row(i);
      for (int o = 0; o < layer.w.rows; ++o) {
        const double go = gi[o];
        if (go == 0.0) continue;
        const double* wo = layer.w.row(o);
        for (int k = 0; k < layer.w.cols; ++k) dxi[k] += go * wo[k];
      }
    }
    g = std::move(dx);
  }
  grads.input = std::move(g);
  return grads;
}

AdamState make_adam(const MlpNet& net, double lr) {
  if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  AdamState s;
  s.lr = lr;
  s.m.resize(net.layers.size());
  s.v.resize(net.layers.size());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    s.m[l].w = Matrix(net.layers[l].w.rows, net.layers[l].w.cols);
    s.m[l].b.assign(net.layers[l].b.size(), 0.0);
    s.v[l].w = Matrix(net.layers[l].w.rows, net.layers[l].w.cols);
    s.v[l].b.assign(net.layers[l].b.size(), 0.0);
  }
  return s;
}

void adam_step(MlpNet& net, const NetGrads& grads, AdamState& state) {
  check_same_shape(net, state.m, "adam_step");
  if (grads.layers.size() != net.layers.size()) {
    throw std::invalid_argument("adam_step: gradient layer count mismatch");
  }
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    if (grads.layers[l].w.rows != net.layers[l].w.rows ||
        grads.layers[l].w.cols != net.layers[l].w.cols ||
        grads.layers[l].b.size() != net.layers[l].b.size()) {
      throw std::invalid_argument("adam_step: gradient shape mismatch at layer " +
                                  std::to_string(l));
    }
    for (double v : grads.layers[l].w.data) {
      if (!std::isfinite(v)) throw std::invalid_argument("adam_step: non-finite gradient");
    }
    for (double v : grads.layers[l].b) {
      if (!std::isfinite(v)) throw std::invalid_argument("adam_step: non-finite gradient");
    }
  }

  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    auto update = [&](double& p, double& m, double& v, double g) {
      m = state.beta1 * m + (1.0 - state.beta1) * g;
      v = state.beta2 * v + (1.0 - state.beta2) * g * g;
      p -= state.lr * (m / bc1) / (std::sqrt(v / bc2) + state.eps);
    };
    DenseLayer& layer = net.layers[l];
    const LayerGrads& g = grads.layers[l];
    for (std::size_t i = 0; i < layer.w.data.size(); ++i) {
      update(layer.w.data[i], state.m[l].w.data[i], state.v[l].w.data[i], g.w.data[i]);
    }
    for (std::size_t i = 0; i < layer.b.size(); ++i) {
      update(layer.b[i], state.m[l].b[i], state.v[l].b[i], g.b[i]);
    }
  }
  net.revision += 1;
}

void soft_update(MlpNet& target, const MlpNet& source, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) {
    throw std::invalid_argument("soft_update: tau must lie in [0, 1]");
  }
  if (target.layers.size() != source.layers.size()) {
    throw std::invalid_argument("soft_update: layer count mismatch");
  }
  for (std::size_t l = 0; l < target.layers.size(); ++l) {
    DenseLayer& t = target.layers[l];
    const DenseLayer& s = source.layers[l];
    if (t.w.rows != s.w.rows || t.w.cols != s.w.cols || t.b.size() != s.b.size()) {
      throw std::invalid_argument("soft_update: shape mismatch at layer " +
                                  std::to_string(l));
    }
    for (std::size_t i = 0; i < t.w.data.size(); ++i) {
      t.w.data[i] = tau * s.w.data[i] + (1.0 - tau) * t.w.data[i];
    }
    for (std::size_t i = 0; i < t.b.size(); ++i) {
      t.b[i] = tau * s.b[i] + (1.0 - tau) * t.b[i];
    }
  }
  target.revision += 1;
}

void save_net(std::ostream& out, const MlpNet& net) {
  write_raw(out, kNetMagic, sizeof kNetMagic);
  write_u32(out, static_cast<std::uint32_t>(net.layers.size()));
  const std::uint8_t acts[2] = {static_cast<std::uint8_t>(net.hidden_act),
                                static_cast<std::uint8_t>(net.output_act)};
  write_raw(out, acts, sizeof acts);
  for (const auto& l : net.layers) {
    write_u32(out, static_cast<std::uint32_t>(l.w.rows));
    write_u32(out, static_cast<std::uint32_t>(l.w.cols));
  }
  for (const auto& l : net.layers) {
    write_raw(out, l.w.data.data(), l.w.data.size() * sizeof(double));
    write_raw(out, l.b.data(), l.b.size() * sizeof(double));
  }
}

MlpNet load_net(std::istream& in) {
  char magic[8] = {};
  read_raw(in, magic, sizeof magic);
  if (std::memcmp(magic, kNetMagic, sizeof magic) != 0) {
    throw std::runtime_error("not a network checkpoint (bad magic)");
  }
  const std::uint32_t n_layers = read_u32(in);
  if (n_layers == 0 || n_layers > 64) {
    throw std::runtime_error("network checkpoint has an implausible layer count");
  }
  std::uint8_t acts[2] = {};
  read_raw(in, acts, sizeof acts);
  if (acts[0] > 2 || acts[1] > 2) {
    throw std::runtime_error("network checkpoint has an unknown activation code");
  }
  MlpNet net;
  net.hidden_act = static_cast<Activation>(acts[0]);
  net.output_act = static_cast<Activation>(acts[1]);
  net.layers.resize(n_layers);
  for (auto& l : net.layers) {
    const std::uint32_t rows = read_u32(in);
    const std::uint32_t cols = read_u32(in);
    if (rows == 0 || cols == 0 || rows > kMaxDim || cols > kMaxDim) {
      throw std::runtime_error("network checkpoint has an implausible layer shape");
    }
    l.w = Matrix(static_cast<int>(rows), static_cast<int>(cols));
    l.b.assign(rows, 0.0);
  }
  for (auto& l : net.layers) {
    read_raw(in, l.w.data.data(), l.w.data.size() * sizeof(double));
    read_raw(in, l.b.data(), l.b.size() * sizeof(double));
  }
  return net;
}

void save_adam(std::ostream& out, const AdamState& state) {
  write_raw(out, kAdamMagic, sizeof kAdamMagic);
  const double scalars[4] = {state.lr, state.beta1, state.beta2, state.eps};
  write_raw(out, scalars, sizeof scalars);
  write_raw(out, &state.step, sizeof state.step);
  write_u32(out, static_cast<std::uint32_t>(state.m.size()));
  for (std::size_t l = 0; l < state.m.size(); ++l) {
    write_u32(out, static_cast<std::uint32_t>(state.m[l].w.rows));
    write_u32(out, static_cast<std::uint32_t>(state.m[l].w.cols));
    write_raw(out, state.m[l].w.data.data(), state.m[l].w.data.size() * sizeof(double));
    write_raw(out, state.m[l].b.data(), state.m[l].b.size() * sizeof(double));
    write_raw(out, state.v[l].w.data.data(), state.v[l].w.data.size() * sizeof(double));
    write_raw(out, state.v[l].b.data(), state.v[l].b.size() * sizeof(double));
  }
}

AdamState load_adam(std::istream& in, const MlpNet& net) {
  char magic[8] = {};
  read_raw(in, magic, sizeof magic);
  if (std::memcmp(magic, kAdamMagic, sizeof magic) != 0) {
    throw std::runtime_error("not an optimizer checkpoint (bad magic)");
  }
  double scalars[4] = {};
  read_raw(in, scalars, sizeof scalars);
  AdamState s = make_adam(net, scalars[0]);
  s.beta1 = scalars[1];
  s.beta2 = scalars[2];
  s.eps = scalars[3];
  read_raw(in, &s.step, sizeof s.step);
  const std::uint32_t n = read_u32(in);
  if (n != net.layers.size()) {
    throw std::runtime_error("optimizer checkpoint does not match the network layout");
  }
  for (std::size_t l = 0; l < s.m.size(); ++l) {
    const std::uint32_t rows = read_u32(in);
    const std::uint32_t cols = read_u32(in);
    if (rows != static_cast<std::uint32_t>(s.m[l].w.rows) ||
        cols != static_cast<std::uint32_t>(s.m[l].w.cols)) {
      throw std::runtime_error("optimizer checkpoint does not match the network layout");
    }
    read_raw(in, s.m[l].w.data.data(), s.m[l].w.data.size() * sizeof(double));
    read_raw(in, s.m[l].b.data(), s.m[l].b.size() * sizeof(double));
    read_raw(in, s.v[l].w.data.data(), s.v[l].w.data.size() * sizeof(double));
    read_raw(in, s.v[l].b.data(), s.v[l].b.size() * sizeof(double));
  }
  return s;
}

}  // namespace sen
