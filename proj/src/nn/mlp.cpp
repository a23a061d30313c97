#include "metaabd/nn/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace metaabd::nn {
namespace {

constexpr char kMagic[8] = {'M', 'A', 'B', 'D', 'M', 'L', 'P', '1'};
constexpr std::uint32_t kVersion = 1;

Matrix softmax_cols(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const double m = logits.col(j).maxCoeff();
    out.col(j) = (logits.col(j).array() - m).exp();
    out.col(j) /= out.col(j).sum();
  }
  return out;
}

Matrix log_softmax_cols(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const double m = logits.col(j).maxCoeff();
    const double lse = m + std::log((logits.col(j).array() - m).exp().sum());
    out.col(j) = logits.col(j).array() - lse;
  }
  return out;
}

std::vector<double> normalised_weights(std::span<const double> w, std::size_t n) {
  std::vector<double> out(n, 1.0 / static_cast<double>(n));
  if (w.empty()) return out;
  if (w.size() != n) throw std::invalid_argument("weight count does not match batch size");
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(total > 0.0)) throw std::invalid_argument("weights must have a positive sum");
  for (std::size_t i = 0; i < n; ++i) out[i] = w[i] / total;
  return out;
}

void check_labels(std::span<const int> labels, std::size_t n, std::size_t classes) {
  if (labels.size() != n) throw std::invalid_argument("label count does not match batch size");
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= classes) throw std::invalid_argument("label out of range");
  }
}

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw std::runtime_error("checkpoint truncated");
  return v;
}

}  // namespace

MLP::MLP(std::vector<std::size_t> dims, std::uint64_t seed) : dims_(std::move(dims)) {
  if (dims_.size() < 2) throw std::invalid_argument("MLP needs at least input and output dims");
  for (std::size_t d : dims_) {
    if (d == 0) throw std::invalid_argument("MLP layer dims must be positive");
  }
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    const double a = std::sqrt(6.0 / static_cast<double>(dims_[l] + dims_[l + 1]));
    std::uniform_real_distribution<double> u(-a, a);
    Matrix w(dims_[l + 1], dims_[l]);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = u(rng);
    }
    weights_.push_back(std::move(w));
    biases_.push_back(Vector::Zero(static_cast<Eigen::Index>(dims_[l + 1])));
  }
}

MLP MLP::zeros(std::vector<std::size_t> dims) {
  MLP m(std::move(dims), 0);
  for (auto& w : m.weights_) w.setZero();
  return m;
}

void MLP::check_input(Eigen::Index rows) const {
  if (dims_.empty()) throw std::logic_error("MLP is not initialised");
  if (static_cast<std::size_t>(rows) != input_dim()) {
    throw std::invalid_argument("input has " + std::to_string(rows) + " features, model expects " +
                                std::to_string(input_dim()));
  }
}

std::vector<Matrix> MLP::forward(const Matrix& X) const {
  check_input(X.rows());
  std::vector<Matrix> acts;
  acts.reserve(weights_.size() + 1);
  acts.push_back(X);
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Matrix z = (weights_[l] * acts.back()).colwise() + biases_[l];
    if (l + 1 < weights_.size()) z = z.cwiseMax(0.0);
    acts.push_back(std::move(z));
  }
  return acts;
}

Matrix MLP::logits(const Matrix& X) const { return forward(X).back(); }

Vector MLP::predict(const Vector& x) const { return predict_batch(Matrix(x)).col(0); }

Matrix MLP::predict_batch(const Matrix& X) const { return softmax_cols(forward(X).back()); }

Matrix MLP::log_predict_batch(const Matrix& X) const { return log_softmax_cols(forward(X).back()); }

double MLP::loss(const Matrix& X, std::span<const int> labels, std::span<const double> w) const {
  const auto n = static_cast<std::size_t>(X.cols());
  check_labels(labels, n, classes());
  const auto wn = normalised_weights(w, n);
  const Matrix lp = log_predict_batch(X);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (wn[i] != 0.0) total -= wn[i] * lp(labels[i], static_cast<Eigen::Index>(i));
  }
  return total;
}

MLP::Gradient MLP::gradient(const Matrix& X, std::span<const int> labels, std::span<const double> w) const {
  const auto n = static_cast<std::size_t>(X.cols());
  check_labels(labels, n, classes());
  const auto wn = normalised_weights(w, n);
  const auto acts = forward(X);
  // dL/dlogits = (softmax - onehot) * weight
  Matrix delta = softmax_cols(acts.back());
  for (std::size_t i = 0; i < n; ++i) {
    delta(labels[i], static_cast<Eigen::Index>(i)) -= 1.0;
    delta.col(static_cast<Eigen::Index>(i)) *= wn[i];
  }
  return backprop(acts, std::move(delta));
}

MLP::Gradient MLP::backward(const Matrix& X, Matrix delta) const {
  const auto acts = forward(X);
  if (delta.rows() != acts.back().rows() || delta.cols() != X.cols()) {
    throw std::invalid_argument("logit gradient has the wrong shape");
  }
  return backprop(acts, std::move(delta));
}

MLP::Gradient MLP::backprop(const std::vector<Matrix>& acts, Matrix delta) const {
  Gradient g;
  g.dW.resize(weights_.size());
  g.db.resize(weights_.size());
  for (std::size_t l = weights_.size(); l-- > 0;) {
    g.dW[l] = delta * acts[l].transpose();
    g.db[l] = delta.rowwise().sum();
    if (l == 0) break;
    Matrix back = weights_[l].transpose() * delta;
    delta = back.cwiseProduct((acts[l].array() > 0.0).cast<double>().matrix());
  }
  return g;
}

std::size_t MLP::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) n += weights_[l].size() + biases_[l].size();
  return n;
}

double& MLP::parameter(std::size_t i) {
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const auto nw = static_cast<std::size_t>(weights_[l].size());
    if (i < nw) return weights_[l].data()[i];
    i -= nw;
    const auto nb = static_cast<std::size_t>(biases_[l].size());
    if (i < nb) return biases_[l].data()[i];
    i -= nb;
  }
  throw std::out_of_range("parameter index");
}

double MLP::parameter(std::size_t i) const { return const_cast<MLP*>(this)->parameter(i); }

double MLP::flat(const Gradient& g, std::size_t i) {
  for (std::size_t l = 0; l < g.dW.size(); ++l) {
    const auto nw = static_cast<std::size_t>(g.dW[l].size());
    if (i < nw) return g.dW[l].data()[i];
    i -= nw;
    const auto nb = static_cast<std::size_t>(g.db[l].size());
    if (i < nb) return g.db[l].data()[i];
    i -= nb;
  }
  throw std::out_of_range("gradient index");
}

bool MLP::finite() const {
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    if (!weights_[l].allFinite() || !biases_[l].allFinite()) return false;
  }
  return true;
}

void MLP::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof kMagic);
  write_pod(out, kVersion);
  write_pod(out, static_cast<std::uint32_t>(dims_.size()));
  for (std::size_t d : dims_) write_pod(out, static_cast<std::uint64_t>(d));
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    for (Eigen::Index r = 0; r < weights_[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < weights_[l].cols(); ++c) write_pod(out, weights_[l](r, c));
    }
    for (Eigen::Index r = 0; r < biases_[l].size(); ++r) write_pod(out, biases_[l](r));
  }
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

MLP MLP::load(const std::filesystem::path& path, const std::vector<std::size_t>& expect) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw std::runtime_error("not a model checkpoint");
  if (read_pod<std::uint32_t>(in) != kVersion) throw std::runtime_error("unsupported checkpoint version");
  const auto n = read_pod<std::uint32_t>(in);
  if (n < 2 || n > 64) throw std::runtime_error("bad layer count in checkpoint");
  std::vector<std::size_t> dims;
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto d = read_pod<std::uint64_t>(in);
    if (d == 0 || d > (1u << 24)) throw std::runtime_error("bad layer size in checkpoint");
    dims.push_back(static_cast<std::size_t>(d));
  }
  if (!expect.empty() && dims != expect) {
    std::ostringstream msg;
    msg << "checkpoint dims";
    for (auto d : dims) msg << ' ' << d;
    msg << " do not match model dims";
    for (auto d : expect) msg << ' ' << d;
    throw std::runtime_error(msg.str());
  }
  MLP m = zeros(dims);
  for (std::size_t l = 0; l < m.weights_.size(); ++l) {
    for (Eigen::Index r = 0; r < m.weights_[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < m.weights_[l].cols(); ++c) m.weights_[l](r, c) = read_pod<double>(in);
    }
    for (Eigen::Index r = 0; r < m.biases_[l].size(); ++r) m.biases_[l](r) = read_pod<double>(in);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw std::runtime_error("trailing bytes in checkpoint");
  return m;
}

bool operator==(const MLP& a, const MLP& b) {
  if (a.dims_ != b.dims_) return false;
  for (std::size_t l = 0; l < a.weights_.size(); ++l) {
    if (a.weights_[l] != b.weights_[l] || a.biases_[l] != b.biases_[l]) return false;
  }
  return true;
}

Sgd::Sgd(const MLP& model, const FitOptions& opts) : opts_(opts) {
  for (std::size_t l = 0; l < model.layers(); ++l) {
    vW_.push_back(Matrix::Zero(model.weight(l).rows(), model.weight(l).cols()));
    vb_.push_back(Vector::Zero(model.bias(l).size()));
  }
}

void Sgd::step(MLP& model, const MLP::Gradient& g) {
  for (std::size_t l = 0; l < model.layers(); ++l) {
    Matrix dw = g.dW[l];
    if (opts_.weight_decay != 0.0) dw += opts_.weight_decay * model.weight(l);
    vW_[l] = opts_.momentum * vW_[l] - opts_.learning_rate * dw;
    vb_[l] = opts_.momentum * vb_[l] - opts_.learning_rate * g.db[l];
    model.weight(l) += vW_[l];
    model.bias(l) += vb_[l];
  }
}

FitReport fit(MLP& model, const Matrix& X, std::span<const int> labels, const FitOptions& opts,
              std::span<const double> weights) {
  const auto n = static_cast<std::size_t>(X.cols());
  if (n == 0) throw std::invalid_argument("fit needs a nonempty batch");
  check_labels(labels, n, model.classes());
  if (!weights.empty() && weights.size() != n) throw std::invalid_argument("weight count does not match batch size");

  FitReport report;
  report.initial_loss = model.loss(X, labels, weights);
  Sgd sgd(model, opts);
  std::mt19937_64 rng(opts.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t bs = opts.batch_size == 0 ? n : std::min(opts.batch_size, n);

  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    if (bs < n) std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += bs) {
      const std::size_t m = std::min(bs, n - start);
      Matrix xb(X.rows(), static_cast<Eigen::Index>(m));
      std::vector<int> lb(m);
      std::vector<double> wb;
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t k = order[start + i];
        xb.col(static_cast<Eigen::Index>(i)) = X.col(static_cast<Eigen::Index>(k));
        lb[i] = labels[k];
        if (!weights.empty()) wb.push_back(weights[k]);
      }
      if (!wb.empty() && std::accumulate(wb.begin(), wb.end(), 0.0) <= 0.0) continue;
      sgd.step(model, model.gradient(xb, lb, wb));
      ++report.steps;
    }
    if (!model.finite()) {
      throw std::runtime_error("training diverged at epoch " + std::to_string(epoch + 1) +
                               ": non-finite parameters (learning rate " + std::to_string(opts.learning_rate) + ")");
    }
  }
  report.final_loss = model.loss(X, labels, weights);
  if (!std::isfinite(report.final_loss)) {
    throw std::runtime_error("training produced a non-finite loss (initial " + std::to_string(report.initial_loss) +
                             ")");
  }
  return report;
}

double grad_check(const MLP& model, const Vector& x, int label, std::size_t samples, std::uint64_t seed, double step) {
  const Matrix X = x;
  const int labels[] = {label};
  const auto g = model.gradient(X, labels);
  MLP probe = model;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, model.parameter_count() - 1);
  double worst = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const std::size_t i = pick(rng);
    const double orig = probe.parameter(i);
    probe.parameter(i) = orig + step;
    const double up = probe.loss(X, labels);
    probe.parameter(i) = orig - step;
    const double down = probe.loss(X, labels);
    probe.parameter(i) = orig;
    const double numeric = (up - down) / (2 * step);
    const double analytic = MLP::flat(g, i);
    const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
    worst = std::max(worst, std::abs(numeric - analytic) / scale);
  }
  return worst;
}

FitReport pretrain_few_shot(MLP& model, const std::vector<Vector>& per_class, std::size_t epochs,
                            double learning_rate, std::uint64_t seed) {
  if (per_class.size() != model.classes()) {
    throw std::invalid_argument("few-shot pretraining needs exactly one instance per class (" +
                                std::to_string(model.classes()) + "), got " + std::to_string(per_class.size()));
  }
  Matrix X(static_cast<Eigen::Index>(model.input_dim()), static_cast<Eigen::Index>(per_class.size()));
  std::vector<int> labels;
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    X.col(static_cast<Eigen::Index>(c)) = per_class[c];
    labels.push_back(static_cast<int>(c));
  }
  FitOptions opts;
  opts.epochs = epochs;
  opts.learning_rate = learning_rate;
  opts.batch_size = 0;
  opts.seed = seed;
  return fit(model, X, labels, opts);
}

double accuracy(const MLP& model, const Matrix& X, std::span<const int> labels) {
  if (X.cols() == 0) return 0.0;
  const Matrix p = model.predict_batch(X);
  std::size_t ok = 0;
  for (Eigen::Index j = 0; j < p.cols(); ++j) {
    Eigen::Index arg;
    p.col(j).maxCoeff(&arg);
    if (arg == labels[static_cast<std::size_t>(j)]) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(X.cols());
}

}  // namespace metaabd::nn
