#include "l2a/neural.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

#include "l2a/common.hpp"
#include "l2a/tensor.hpp"

namespace l2a::neural {

std::size_t MlpParams::input_dim() const { return layers.empty() ? 0 : layers.front().weight.cols; }

std::size_t MlpParams::output_dim() const { return layers.empty() ? 0 : layers.back().weight.rows; }

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.weight.values.size() + layer.bias.size();
  return n;
}

std::vector<double> MlpParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto& layer : layers) {
    flat.insert(flat.end(), layer.weight.values.begin(), layer.weight.values.end());
    flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
  }
  return flat;
}

void MlpParams::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw ShapeError("flat parameter vector has the wrong length");
  std::size_t pos = 0;
  for (auto& layer : layers) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), layer.weight.values.size(),
                layer.weight.values.begin());
    pos += layer.weight.values.size();
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), layer.bias.size(), layer.bias.begin());
    pos += layer.bias.size();
  }
}

MlpParams MlpParams::zeros_like() const {
  MlpParams out = *this;
  for (auto& layer : out.layers) {
    std::fill(layer.weight.values.begin(), layer.weight.values.end(), 0.0);
    std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
  }
  return out;
}

bool MlpParams::same_layout(const MlpParams& other) const {
  if (layers.size() != other.layers.size()) return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].weight.rows != other.layers[i].weight.rows || layers[i].weight.cols != other.layers[i].weight.cols ||
        layers[i].bias.size() != other.layers[i].bias.size()) {
      return false;
    }
  }
  return true;
}

void MlpParams::validate() const {
  if (layers.empty()) throw ShapeError("network has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& layer = layers[i];
    if (layer.weight.values.size() != layer.weight.rows * layer.weight.cols || layer.bias.size() != layer.weight.rows) {
      throw ShapeError("layer " + std::to_string(i) + " has inconsistent weight/bias sizes");
    }
    if (i > 0 && layer.weight.cols != layers[i - 1].weight.rows) {
      throw ShapeError("layer " + std::to_string(i) + " input does not match previous output");
    }
    for (double v : layer.weight.values) {
      if (!std::isfinite(v)) throw DomainError("non-finite weight");
    }
    for (double v : layer.bias) {
      if (!std::isfinite(v)) throw DomainError("non-finite bias");
    }
  }
}

MlpParams make_mlp(std::span<const std::size_t> dims, std::uint64_t seed) {
  if (dims.size() < 2) throw ShapeError("an MLP needs at least input and output dimensions");
  Rng rng(seed);
  MlpParams params;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const std::size_t fan_in = dims[i];
    const std::size_t fan_out = dims[i + 1];
    if (fan_in == 0 || fan_out == 0) throw ShapeError("layer dimensions must be positive");
    Layer layer;
    layer.weight = Matrix(fan_out, fan_in);
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto& w : layer.weight.values) w = rng.uniform(-limit, limit);
    layer.bias.assign(fan_out, 0.0);
    layer.activation = (i + 2 == dims.size()) ? Activation::Identity : Activation::Relu;
    params.layers.push_back(std::move(layer));
  }
  return params;
}

std::vector<double> forward(const MlpParams& params, std::span<const double> x, ForwardCache* cache) {
  if (params.layers.empty()) throw ShapeError("network has no layers");
  if (x.size() != params.input_dim()) {
    throw ShapeError("input has dimension " + std::to_string(x.size()) + ", network expects " +
                     std::to_string(params.input_dim()));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw DomainError("non-finite network input");
  }
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  std::vector<double> current(x.begin(), x.end());
  for (const auto& layer : params.layers) {
    const auto& w = layer.weight;
    std::vector<double> z(layer.bias);
    for (std::size_t r = 0; r < w.rows; ++r) {
      const double* row = w.values.data() + r * w.cols;
      double acc = 0.0;
      for (std::size_t c = 0; c < w.cols; ++c) acc += row[c] * current[c];
      z[r] += acc;
    }
    std::vector<double> out = z;
    if (layer.activation == Activation::Relu) {
      for (auto& v : out) v = v > 0.0 ? v : 0.0;
    }
    if (cache) {
      cache->inputs.push_back(std::move(current));
      cache->pre.push_back(std::move(z));
    }
    current = std::move(out);
  }
  return current;
}

void backward(const MlpParams& params, const ForwardCache& cache, std::span<const double> dlogits, MlpParams& grads,
              std::vector<double>* dinput) {
  const std::size_t n = params.layers.size();
  if (cache.inputs.size() != n || cache.pre.size() != n) throw ShapeError("stale forward cache");
  if (!grads.same_layout(params)) throw ShapeError("gradient buffer layout does not match parameters");
  if (dlogits.size() != params.output_dim()) throw ShapeError("upstream gradient has the wrong dimension");

  std::vector<double> upstream(dlogits.begin(), dlogits.end());
  for (std::size_t li = n; li-- > 0;) {
    const auto& layer = params.layers[li];
    const auto& w = layer.weight;
    const auto& in = cache.inputs[li];
    const auto& z = cache.pre[li];
    if (in.size() != w.cols || z.size() != w.rows) throw ShapeError("stale forward cache");

    if (layer.activation == Activation::Relu) {
      for (std::size_t r = 0; r < w.rows; ++r) {
        if (z[r] <= 0.0) upstream[r] = 0.0;
      }
    }
    auto& gw = grads.layers[li].weight;
    auto& gb = grads.layers[li].bias;
    for (std::size_t r = 0; r < w.rows; ++r) {
      const double g = upstream[r];
      gb[r] += g;
      if (g == 0.0) continue;
      double* grow = gw.values.data() + r * w.cols;
      for (std::size_t c = 0; c < w.cols; ++c) grow[c] += g * in[c];
    }
    if (li == 0 && !dinput) break;
    std::vector<double> down(w.cols, 0.0);
    for (std::size_t r = 0; r < w.rows; ++r) {
      const double g = upstream[r];
      if (g == 0.0) continue;
      const double* row = w.values.data() + r * w.cols;
      for (std::size_t c = 0; c < w.cols; ++c) down[c] += g * row[c];
    }
    upstream = std::move(down);
  }
  if (dinput) *dinput = std::move(upstream);
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw ShapeError("softmax of an empty vector");
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    p[k] = std::exp(logits[k] - m);
    sum += p[k];
  }
  for (auto& v : p) v /= sum;
  return p;
}

LossGrad soft_cross_entropy(std::span<const double> logits, std::span<const double> target) {
  if (logits.size() != target.size()) throw ShapeError("logits and target differ in dimension");
  if (!is_simplex(target)) throw DomainError("cross-entropy target is not on the simplex");
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - m);
  const double log_norm = m + std::log(sum);

  LossGrad out;
  out.grad.resize(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) {
    const double log_p = logits[k] - log_norm;
    if (target[k] != 0.0) out.loss -= target[k] * log_p;
    out.grad[k] = std::exp(log_p) - target[k];
  }
  return out;
}

OptimState make_optimizer(const MlpParams& params, const SgdSettings& settings) {
  if (settings.total_steps == 0) throw ConfigError("optimizer needs at least one scheduled step");
  return OptimState{params.zeros_like(), settings};
}

double cosine_lr(double lr0, std::size_t step, std::size_t total) {
  if (total == 0 || step >= total) return 0.0;
  return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) / static_cast<double>(total)));
}

void sgd_step(MlpParams& params, const MlpParams& grads, OptimState& opt, std::size_t step) {
  if (!grads.same_layout(params) || !opt.velocity.same_layout(params)) {
    throw ShapeError("optimizer buffers do not match parameters");
  }
  const double lr = cosine_lr(opt.settings.lr0, step, opt.settings.total_steps);
  const double mu = opt.settings.momentum;
  const double wd = opt.settings.weight_decay;
  auto update = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& v) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (!std::isfinite(g[i])) throw DomainError("non-finite gradient");
      v[i] = mu * v[i] + (g[i] + wd * p[i]);
      p[i] -= lr * v[i];
    }
  };
  for (std::size_t li = 0; li < params.layers.size(); ++li) {
    update(params.layers[li].weight.values, grads.layers[li].weight.values, opt.velocity.layers[li].weight.values);
    update(params.layers[li].bias, grads.layers[li].bias, opt.velocity.layers[li].bias);
  }
}

double relative_error(double analytic, double numeric, double floor) {
  const double scale = std::max({std::fabs(analytic), std::fabs(numeric), floor});
  return std::fabs(analytic - numeric) / scale;
}

GradCheckReport grad_check(const MlpParams& params, const LossFn& loss, double epsilon) {
  MlpParams analytic = params.zeros_like();
  loss(params, &analytic);
  const std::vector<double> grad = analytic.flatten();

  std::vector<double> flat = params.flatten();
  MlpParams probe = params;
  GradCheckReport report;
  double diff2 = 0.0, analytic2 = 0.0, numeric2 = 0.0;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    const double original = flat[i];
    flat[i] = original + epsilon;
    probe.assign(flat);
    const double up = loss(probe, nullptr);
    flat[i] = original - epsilon;
    probe.assign(flat);
    const double down = loss(probe, nullptr);
    flat[i] = original;

    const double numeric = (up - down) / (2.0 * epsilon);
    const double rel = relative_error(grad[i], numeric);
    diff2 += (grad[i] - numeric) * (grad[i] - numeric);
    analytic2 += grad[i] * grad[i];
    numeric2 += numeric * numeric;
    report.max_absolute_error = std::max(report.max_absolute_error, std::fabs(grad[i] - numeric));
    if (rel > report.max_relative_error) {
      report.max_relative_error = rel;
      report.worst_index = i;
    }
  }
  const double scale = std::sqrt(std::max(analytic2, numeric2));
  report.norm_relative_error = scale > 0.0 ? std::sqrt(diff2) / scale : 0.0;
  return report;
}

double mean_loss(const MlpParams& params, const LabeledSet& data) {
  if (data.size() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    total += soft_cross_entropy(forward(params, data.inputs[i]), data.targets[i]).loss;
  }
  return total / static_cast<double>(data.size());
}

double accumulate_gradient(const MlpParams& params, const LabeledSet& data, std::span<const std::size_t> indices,
                           MlpParams& grads) {
  if (indices.empty()) return 0.0;
  const double scale = 1.0 / static_cast<double>(indices.size());
  ForwardCache cache;
  double total = 0.0;
  for (std::size_t i : indices) {
    const auto logits = forward(params, data.inputs.at(i), &cache);
    auto lg = soft_cross_entropy(logits, data.targets[i]);
    total += lg.loss;
    for (auto& g : lg.grad) g *= scale;
    backward(params, cache, lg.grad, grads);
  }
  return total * scale;
}

std::size_t argmax(std::span<const double> values) {
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

double accuracy(const MlpParams& params, const std::vector<std::vector<double>>& inputs,
                std::span<const std::size_t> labels) {
  if (inputs.size() != labels.size()) throw ShapeError("inputs and labels differ in count");
  if (inputs.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) hits += argmax(forward(params, inputs[i])) == labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(inputs.size());
}

void save_checkpoint(const std::filesystem::path& dir, const MlpParams& params, const nlohmann::json& meta) {
  params.validate();
  std::filesystem::create_directories(dir);
  nlohmann::json doc = meta;
  doc["layers"] = nlohmann::json::array();
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const auto& layer = params.layers[i];
    const std::string w_name = "layer" + std::to_string(i) + "_weight.l2t";
    const std::string b_name = "layer" + std::to_string(i) + "_bias.l2t";
    write_param_tensor(dir / w_name, ParamTensor{{layer.weight.rows, layer.weight.cols}, layer.weight.values});
    write_param_tensor(dir / b_name, ParamTensor{{layer.bias.size()}, layer.bias});
    doc["layers"].push_back({{"weight", w_name},
                             {"bias", b_name},
                             {"activation", layer.activation == Activation::Relu ? "relu" : "identity"}});
  }
  std::ofstream out(dir / "meta.json", std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint metadata in '" + dir.string() + "'");
  out << doc.dump(1) << "\n";
}

MlpParams load_checkpoint(const std::filesystem::path& dir, nlohmann::json* meta) {
  std::ifstream in(dir / "meta.json");
  if (!in) throw IoError("cannot open checkpoint metadata in '" + dir.string() + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint metadata is not valid JSON: ") + e.what());
  }
  MlpParams params;
  try {
    for (const auto& entry : doc.at("layers")) {
      const auto w = read_param_tensor(dir / entry.at("weight").get<std::string>());
      const auto b = read_param_tensor(dir / entry.at("bias").get<std::string>());
      if (w.shape.size() != 2 || b.shape.size() != 1) throw FormatError("checkpoint tensor has the wrong rank");
      Layer layer;
      layer.weight.rows = w.shape[0];
      layer.weight.cols = w.shape[1];
      layer.weight.values = w.values;
      layer.bias = b.values;
      const auto act = entry.at("activation").get<std::string>();
      if (act == "relu") {
        layer.activation = Activation::Relu;
      } else if (act == "identity") {
        layer.activation = Activation::Identity;
      } else {
        throw FormatError("unknown activation '" + act + "'");
      }
      params.layers.push_back(std::move(layer));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint metadata schema violation: ") + e.what());
  }
  params.validate();
  if (meta) {
    doc.erase("layers");
    *meta = std::move(doc);
  }
  return params;
}

}  // namespace l2a::neural
