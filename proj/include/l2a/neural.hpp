#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

namespace l2a::neural {

enum class Activation { Identity, Relu };

/// Row-major dense matrix, rows = fan_out, cols = fan_in.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  bool operator==(const Matrix&) const = default;
};

struct Layer {
  Matrix weight;
  std::vector<double> bias;
  Activation activation = Activation::Identity;
  bool operator==(const Layer&) const = default;
};

/// Fully connected network. Also used as the container for gradients and
/// momentum buffers, which share the parameter layout.
struct MlpParams {
  std::vector<Layer> layers;

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t parameter_count() const;

  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
  /// Same layout, all zeros.
  MlpParams zeros_like() const;
  bool same_layout(const MlpParams& other) const;
  /// Throws ShapeError on incompatible layers, DomainError on non-finite values.
  void validate() const;

  bool operator==(const MlpParams&) const = default;
};

/// ReLU hidden layers and an identity output layer. dims = {in, h1, ..., out}.
/// Weights ~ U(-sqrt(6/(fan_in+fan_out)), +sqrt(...)), biases zero.
MlpParams make_mlp(std::span<const std::size_t> dims, std::uint64_t seed);

struct ForwardCache {
  std::vector<std::vector<double>> inputs;  // input fed to each layer
  std::vector<std::vector<double>> pre;     // pre-activation of each layer
};

std::vector<double> forward(const MlpParams& params, std::span<const double> x, ForwardCache* cache = nullptr);

/// Accumulates d(loss)/d(params) into grads. When dinput is non-null it
/// receives d(loss)/d(x).
void backward(const MlpParams& params, const ForwardCache& cache, std::span<const double> dlogits, MlpParams& grads,
              std::vector<double>* dinput = nullptr);

std::vector<double> softmax(std::span<const double> logits);

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

/// -sum_k target_k * log softmax(logits)_k and its gradient softmax - target.
LossGrad soft_cross_entropy(std::span<const double> logits, std::span<const double> target);

struct SgdSettings {
  double lr0 = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-3;
  std::size_t total_steps = 1;
};

struct OptimState {
  MlpParams velocity;
  SgdSettings settings;
};

OptimState make_optimizer(const MlpParams& params, const SgdSettings& settings);

/// lr0 * 0.5 * (1 + cos(pi * step / total)), clamped to zero past the end.
double cosine_lr(double lr0, std::size_t step, std::size_t total);

/// v <- momentum * v + (g + wd * p); p <- p - lr(step) * v.
void sgd_step(MlpParams& params, const MlpParams& grads, OptimState& opt, std::size_t step);

/// Loss evaluated at params. When grads is non-null it must also accumulate
/// the analytic gradient into it.
using LossFn = std::function<double(const MlpParams& params, MlpParams* grads)>;

struct GradCheckReport {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::size_t worst_index = 0;
  double norm_relative_error = 0.0;  // |analytic - numeric| / max(|analytic|, |numeric|) over the whole vector
};

/// Relative error with a small floor on the denominator so that entries whose
/// true gradient is ~0 are judged by absolute error.
double relative_error(double analytic, double numeric, double floor = 1e-6);

/// Central differences over every parameter against the analytic gradient.
GradCheckReport grad_check(const MlpParams& params, const LossFn& loss, double epsilon);

/// Feature vectors with soft targets; the unit both heads are trained on.
struct LabeledSet {
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> targets;
  std::size_t size() const { return inputs.size(); }
  void append(std::vector<double> x, std::vector<double> y) {
    inputs.push_back(std::move(x));
    targets.push_back(std::move(y));
  }
};

/// Mean soft cross-entropy over the set (0 for an empty set).
double mean_loss(const MlpParams& params, const LabeledSet& data);

/// Adds the gradient of the mean loss over data[indices] into grads and
/// returns that mean loss.
double accumulate_gradient(const MlpParams& params, const LabeledSet& data, std::span<const std::size_t> indices,
                           MlpParams& grads);

std::size_t argmax(std::span<const double> values);

/// Fraction of inputs whose argmax logit matches the label.
double accuracy(const MlpParams& params, const std::vector<std::vector<double>>& inputs,
                std::span<const std::size_t> labels);

// Checkpoint: one f64 container per weight/bias tensor plus meta.json.
void save_checkpoint(const std::filesystem::path& dir, const MlpParams& params, const nlohmann::json& meta);
MlpParams load_checkpoint(const std::filesystem::path& dir, nlohmann::json* meta = nullptr);

}  // namespace l2a::neural
