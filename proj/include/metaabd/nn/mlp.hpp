#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace metaabd::nn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;  // instances are columns

// Feed-forward classifier: rectifier hidden layers, softmax output.
class MLP {
 public:
  MLP() = default;
  // dims = {input, hidden..., classes}; uniform +-sqrt(6/(fan_in+fan_out)) init.
  MLP(std::vector<std::size_t> dims, std::uint64_t seed);
  static MLP zeros(std::vector<std::size_t> dims);

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t input_dim() const { return dims_.front(); }
  std::size_t classes() const { return dims_.back(); }
  std::size_t layers() const { return weights_.size(); }

  Matrix logits(const Matrix& X) const;
  Vector predict(const Vector& x) const;
  Matrix predict_batch(const Matrix& X) const;
  Matrix log_predict_batch(const Matrix& X) const;

  // Mean cross-entropy, weighted by w when given (normalised by sum of w).
  double loss(const Matrix& X, std::span<const int> labels, std::span<const double> w = {}) const;

  struct Gradient {
    std::vector<Matrix> dW;
    std::vector<Vector> db;
  };
  Gradient gradient(const Matrix& X, std::span<const int> labels, std::span<const double> w = {}) const;
  // Backpropagates a given dL/dlogits (one column per instance).
  Gradient backward(const Matrix& X, Matrix delta) const;

  // Flat parameter view, weights then biases per layer.
  std::size_t parameter_count() const;
  double& parameter(std::size_t i);
  double parameter(std::size_t i) const;
  static double flat(const Gradient& g, std::size_t i);

  Matrix& weight(std::size_t l) { return weights_[l]; }
  const Matrix& weight(std::size_t l) const { return weights_[l]; }
  Vector& bias(std::size_t l) { return biases_[l]; }
  const Vector& bias(std::size_t l) const { return biases_[l]; }

  bool finite() const;

  void save(const std::filesystem::path& path) const;
  // Throws std::runtime_error on a bad file or when dims differ from `expect`.
  static MLP load(const std::filesystem::path& path, const std::vector<std::size_t>& expect = {});

  friend bool operator==(const MLP& a, const MLP& b);

 private:
  void check_input(Eigen::Index rows) const;
  std::vector<Matrix> forward(const Matrix& X) const;  // activations per layer, last = logits
  Gradient backprop(const std::vector<Matrix>& acts, Matrix delta) const;

  std::vector<std::size_t> dims_;
  std::vector<Matrix> weights_;
  std::vector<Vector> biases_;
};

struct FitOptions {
  std::size_t epochs = 1;
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::size_t batch_size = 32;  // 0 = full batch
  double weight_decay = 0.0;
  std::uint64_t seed = 1;
};

struct FitReport {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::size_t steps = 0;
};

// SGD with momentum; one velocity buffer per parameter tensor.
class Sgd {
 public:
  Sgd(const MLP& model, const FitOptions& opts);
  void step(MLP& model, const MLP::Gradient& g);

 private:
  FitOptions opts_;
  std::vector<Matrix> vW_;
  std::vector<Vector> vb_;
};

// Mini-batch SGD with momentum on weighted cross-entropy. Throws
// std::runtime_error if the loss or the parameters stop being finite.
FitReport fit(MLP& model, const Matrix& X, std::span<const int> labels, const FitOptions& opts,
              std::span<const double> weights = {});

// Max relative error between backprop and central differences over
// `samples` randomly chosen parameters.
double grad_check(const MLP& model, const Vector& x, int label, std::size_t samples = 20, std::uint64_t seed = 0,
                  double step = 1e-5);

// One labelled instance per class, index = class.
FitReport pretrain_few_shot(MLP& model, const std::vector<Vector>& per_class, std::size_t epochs,
                            double learning_rate = 0.05, std::uint64_t seed = 1);

// Softmax classifier of accuracy on labelled data.
double accuracy(const MLP& model, const Matrix& X, std::span<const int> labels);

}  // namespace metaabd::nn
