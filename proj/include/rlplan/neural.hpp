#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "rlplan/rng.hpp"

namespace rlplan {

enum class OutputActivation { identity, tanh };

// Fully connected network: rectified-linear hidden layers, identity or tanh
// output. Layer i maps sizes[i] -> sizes[i + 1]; weights[i] is
// sizes[i + 1] x sizes[i].
struct MlpParams {
  std::vector<int> sizes;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  OutputActivation output = OutputActivation::identity;

  int input_size() const { return sizes.front(); }
  int output_size() const { return sizes.back(); }
  std::size_t layer_count() const { return weights.size(); }
  std::size_t parameter_count() const;

  static MlpParams zeros(std::vector<int> sizes, OutputActivation output);
  // Fan-in uniform init for hidden layers, +-final_scale for the last layer.
  static MlpParams init(std::vector<int> sizes, OutputActivation output, Rng& rng,
                        double final_scale = 3e-3);
};

// Same shapes as MlpParams; used for gradients and optimizer moments.
struct MlpGrads {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  static MlpGrads zeros_like(const MlpParams& p);
};

// Column-per-sample activations saved for backward.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;  // input to each layer
  std::vector<Eigen::MatrixXd> pre;     // pre-activation of each layer
  Eigen::MatrixXd output;
};

/// Batched forward pass; X holds one sample per column.
Eigen::MatrixXd forward(const MlpParams& p, const Eigen::MatrixXd& x, ForwardCache* cache);

// Single-sample convenience overload.
Eigen::VectorXd forward(const MlpParams& p, const Eigen::VectorXd& x, ForwardCache* cache);

struct BackwardResult {
  MlpGrads grads;
  Eigen::MatrixXd input_grad;  // dL/dX, one column per sample
};

/// Exact gradients of a loss whose derivative w.r.t. the network output is
/// `output_grad`. Parameter gradients are summed over the batch columns.
BackwardResult backward(const MlpParams& p, const ForwardCache& cache,
                        const Eigen::MatrixXd& output_grad);

struct OptimizerState {
  MlpGrads first;
  MlpGrads second;
  long step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static OptimizerState for_params(const MlpParams& p, double learning_rate);
};

/// Adaptive-moment update with bias correction.
void optimizer_step(MlpParams& p, const MlpGrads& grads, OptimizerState& st);

/// target <- tau * online + (1 - tau) * target, elementwise.
void soft_update(MlpParams& target, const MlpParams& online, double tau);

// Little-endian binary layout:
//   8 bytes  magic "RLPMLP01"
//   u32      number of sizes L+1, then L+1 x u32 layer sizes
//   u32      output activation (0 identity, 1 tanh)
//   per layer: rows*cols f64 weights row-major, then rows f64 biases
// A text manifest with the same header information is written next to it as
// `<path>.manifest`.
void save_mlp(const MlpParams& p, const std::string& path);
MlpParams load_mlp(const std::string& path);

}  // namespace rlplan
