#include "rlplan/neural.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "rlplan/error.hpp"

namespace rlplan {

namespace {

constexpr char kMagic[8] = {'R', 'L', 'P', 'M', 'L', 'P', '0', '1'};

void check_sizes(const std::vector<int>& sizes) {
  if (sizes.size() < 2) throw Error(ErrorCode::shape_mismatch, "network needs at least one layer");
  for (int s : sizes) {
    if (s <= 0) throw Error(ErrorCode::shape_mismatch, "layer sizes must be positive");
  }
}

void require_same_shape(const MlpParams& p, const MlpGrads& g) {
  if (g.weights.size() != p.weights.size() || g.biases.size() != p.biases.size()) {
    throw Error(ErrorCode::shape_mismatch, "layer count differs");
  }
  for (std::size_t i = 0; i < p.weights.size(); ++i) {
    if (g.weights[i].rows() != p.weights[i].rows() || g.weights[i].cols() != p.weights[i].cols() ||
        g.biases[i].size() != p.biases[i].size()) {
      throw Error(ErrorCode::shape_mismatch, "layer " + std::to_string(i) + " shape differs");
    }
  }
}

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw Error(ErrorCode::corrupt_checkpoint, path + ": truncated header");
  }
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

double get_f64(std::istream& in, const std::string& path) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) {
    throw Error(ErrorCode::corrupt_checkpoint, path + ": truncated parameters");
  }
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) n += weights[i].size() + biases[i].size();
  return n;
}

MlpParams MlpParams::zeros(std::vector<int> sizes, OutputActivation output) {
  check_sizes(sizes);
  MlpParams p;
  p.sizes = std::move(sizes);
  p.output = output;
  for (std::size_t i = 0; i + 1 < p.sizes.size(); ++i) {
    p.weights.push_back(Eigen::MatrixXd::Zero(p.sizes[i + 1], p.sizes[i]));
    p.biases.push_back(Eigen::VectorXd::Zero(p.sizes[i + 1]));
  }
  return p;
}

MlpParams MlpParams::init(std::vector<int> sizes, OutputActivation output, Rng& rng,
                          double final_scale) {
  MlpParams p = zeros(std::move(sizes), output);
  for (std::size_t i = 0; i < p.weights.size(); ++i) {
    const bool last = i + 1 == p.weights.size();
    const double bound = last ? final_scale : 1.0 / std::sqrt(static_cast<double>(p.sizes[i]));
    for (Eigen::Index c = 0; c < p.weights[i].cols(); ++c) {
      for (Eigen::Index r = 0; r < p.weights[i].rows(); ++r) p.weights[i](r, c) = uniform(rng, -bound, bound);
    }
    for (Eigen::Index r = 0; r < p.biases[i].size(); ++r) p.biases[i](r) = uniform(rng, -bound, bound);
  }
  return p;
}

MlpGrads MlpGrads::zeros_like(const MlpParams& p) {
  MlpGrads g;
  for (std::size_t i = 0; i < p.weights.size(); ++i) {
    g.weights.push_back(Eigen::MatrixXd::Zero(p.weights[i].rows(), p.weights[i].cols()));
    g.biases.push_back(Eigen::VectorXd::Zero(p.biases[i].size()));
  }
  return g;
}

Eigen::MatrixXd forward(const MlpParams& p, const Eigen::MatrixXd& x, ForwardCache* cache) {
  if (x.rows() != p.input_size()) {
    throw Error(ErrorCode::dimension_mismatch, "input has " + std::to_string(x.rows()) +
                                                   " rows, network expects " +
                                                   std::to_string(p.input_size()));
  }
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  Eigen::MatrixXd a = x;
  for (std::size_t i = 0; i < p.weights.size(); ++i) {
    Eigen::MatrixXd z = p.weights[i] * a;
    z.colwise() += p.biases[i];
    if (cache) {
      cache->inputs.push_back(std::move(a));
      cache->pre.push_back(z);
    }
    const bool last = i + 1 == p.weights.size();
    if (!last) {
      a = z.cwiseMax(0.0);
    } else if (p.output == OutputActivation::tanh) {
      a = z.array().tanh().matrix();
    } else {
      a = std::move(z);
    }
  }
  if (cache) cache->output = a;
  return a;
}

Eigen::VectorXd forward(const MlpParams& p, const Eigen::VectorXd& x, ForwardCache* cache) {
  return forward(p, Eigen::MatrixXd(x), cache).col(0);
}

BackwardResult backward(const MlpParams& p, const ForwardCache& cache,
                        const Eigen::MatrixXd& output_grad) {
  if (cache.inputs.size() != p.weights.size() || cache.pre.size() != p.weights.size()) {
    throw Error(ErrorCode::cache_mismatch, "cache layer count differs from network");
  }
  const Eigen::Index batch = cache.output.cols();
  if (output_grad.rows() != p.output_size() || output_grad.cols() != batch) {
    throw Error(ErrorCode::cache_mismatch, "output gradient shape differs from cached output");
  }
  for (std::size_t i = 0; i < p.weights.size(); ++i) {
    if (cache.inputs[i].rows() != p.weights[i].cols() || cache.pre[i].rows() != p.weights[i].rows()) {
      throw Error(ErrorCode::cache_mismatch, "cache was produced by a different architecture");
    }
  }

  BackwardResult res;
  res.grads = MlpGrads::zeros_like(p);
  Eigen::MatrixXd delta;
  const std::size_t last = p.weights.size() - 1;
  if (p.output == OutputActivation::tanh) {
    delta = output_grad.array() * (1.0 - cache.output.array().square());
  } else {
    delta = output_grad;
  }
  for (std::size_t i = last + 1; i-- > 0;) {
    if (i != last) delta = delta.array() * (cache.pre[i].array() > 0.0).cast<double>();
    res.grads.weights[i].noalias() = delta * cache.inputs[i].transpose();
    res.grads.biases[i] = delta.rowwise().sum();
    delta = p.weights[i].transpose() * delta;
  }
  res.input_grad = std::move(delta);
  return res;
}

OptimizerState OptimizerState::for_params(const MlpParams& p, double learning_rate) {
  OptimizerState st;
  st.first = MlpGrads::zeros_like(p);
  st.second = MlpGrads::zeros_like(p);
  st.learning_rate = learning_rate;
  return st;
}

void optimizer_step(MlpParams& p, const MlpGrads& grads, OptimizerState& st) {
  require_same_shape(p, grads);
  require_same_shape(p, st.first);
  require_same_shape(p, st.second);
  ++st.step;
  const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  const double lr = st.learning_rate;
  auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
    m = st.beta1 * m + (1.0 - st.beta1) * g;
    v = st.beta2 * v + (1.0 - st.beta2) * g.cwiseProduct(g);
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + st.epsilon);
  };
  for (std::size_t i = 0; i < p.weights.size(); ++i) {
    update(p.weights[i], grads.weights[i], st.first.weights[i], st.second.weights[i]);
    update(p.biases[i], grads.biases[i], st.first.biases[i], st.second.biases[i]);
  }
}

void soft_update(MlpParams& target, const MlpParams& online, double tau) {
  if (target.sizes != online.sizes) throw Error(ErrorCode::shape_mismatch, "network sizes differ");
  for (std::size_t i = 0; i < target.weights.size(); ++i) {
    target.weights[i] = tau * online.weights[i] + (1.0 - tau) * target.weights[i];
    target.biases[i] = tau * online.biases[i] + (1.0 - tau) * target.biases[i];
  }
}

void save_mlp(const MlpParams& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path);
  out.write(kMagic, sizeof kMagic);
  put_u32(out, static_cast<std::uint32_t>(p.sizes.size()));
  for (int s : p.sizes) put_u32(out, static_cast<std::uint32_t>(s));
  put_u32(out, p.output == OutputActivation::tanh ? 1u : 0u);
  for (std::size_t i = 0; i < p.weights.size(); ++i) {
    for (Eigen::Index r = 0; r < p.weights[i].rows(); ++r) {
      for (Eigen::Index c = 0; c < p.weights[i].cols(); ++c) put_f64(out, p.weights[i](r, c));
    }
    for (Eigen::Index r = 0; r < p.biases[i].size(); ++r) put_f64(out, p.biases[i](r));
  }
  if (!out) throw Error(ErrorCode::io, "write failed for " + path);

  std::ofstream manifest(path + ".manifest");
  manifest << "format RLPMLP01\nbyte_order little\nlayers";
  for (int s : p.sizes) manifest << ' ' << s;
  manifest << "\nhidden_activation relu\noutput_activation "
           << (p.output == OutputActivation::tanh ? "tanh" : "identity")
           << "\nparameters " << p.parameter_count() << '\n';
}

MlpParams load_mlp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path);
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw Error(ErrorCode::corrupt_checkpoint, path + ": bad magic");
  }
  const std::uint32_t count = get_u32(in, path);
  if (count < 2 || count > 64) throw Error(ErrorCode::corrupt_checkpoint, path + ": bad layer count");
  std::vector<int> sizes;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t s = get_u32(in, path);
    if (s == 0 || s > (1u << 20)) throw Error(ErrorCode::corrupt_checkpoint, path + ": bad layer size");
    sizes.push_back(static_cast<int>(s));
  }
  const std::uint32_t act = get_u32(in, path);
  if (act > 1) throw Error(ErrorCode::corrupt_checkpoint, path + ": bad activation tag");
  MlpParams p = MlpParams::zeros(sizes, act == 1 ? OutputActivation::tanh : OutputActivation::identity);
  for (std::size_t i = 0; i < p.weights.size(); ++i) {
    for (Eigen::Index r = 0; r < p.weights[i].rows(); ++r) {
      for (Eigen::Index c = 0; c < p.weights[i].cols(); ++c) p.weights[i](r, c) = get_f64(in, path);
    }
    for (Eigen::Index r = 0; r < p.biases[i].size(); ++r) p.biases[i](r) = get_f64(in, path);
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorCode::corrupt_checkpoint, path + ": trailing bytes after parameters");
  }
  return p;
}

}  // namespace rlplan
