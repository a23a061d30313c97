#include "metaabd/nn/dyadic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace metaabd::nn {
namespace {

Matrix stack(const std::vector<Vector>& xs, std::size_t dim) {
  Matrix X(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (static_cast<std::size_t>(xs[i].size()) != dim) throw std::invalid_argument("pair item dimension mismatch");
    X.col(static_cast<Eigen::Index>(i)) = xs[i];
  }
  return X;
}

// log sigmoid, stable for large |d|
double log_sigmoid(double d) { return d >= 0 ? -std::log1p(std::exp(-d)) : d - std::log1p(std::exp(d)); }

double sigmoid(double d) { return d >= 0 ? 1.0 / (1.0 + std::exp(-d)) : std::exp(d) / (1.0 + std::exp(d)); }

void check_pairs(const std::vector<Vector>& a, const std::vector<Vector>& b, const std::vector<int>& holds) {
  if (a.size() != b.size() || a.size() != holds.size()) throw std::invalid_argument("pair list sizes differ");
  if (a.empty()) throw std::invalid_argument("no pairs given");
}

}  // namespace

DyadicModel::DyadicModel(std::size_t item_dim, std::size_t hidden, std::uint64_t seed)
    : net_({item_dim, hidden, 1}, seed) {}

DyadicModel::DyadicModel(MLP scorer) : net_(std::move(scorer)) {
  if (net_.classes() != 1) throw std::invalid_argument("pair scorer must have a single output");
}

double DyadicModel::score(const Vector& x) const { return net_.logits(Matrix(x))(0, 0); }

double DyadicModel::predict_pair(const Vector& a, const Vector& b) const {
  if (static_cast<std::size_t>(a.size()) != item_dim() || static_cast<std::size_t>(b.size()) != item_dim()) {
    throw std::invalid_argument("pair item dimension mismatch");
  }
  if (a == b) return 0.5;
  // q = sigmoid(|d|) lies in [0.5, 1], where 1 - q is exact, so the two
  // orientations sum to exactly 1
  const double d = score(a) - score(b);
  const double q = sigmoid(std::abs(d));
  return d >= 0 ? q : 1.0 - q;
}

double DyadicModel::loss(const std::vector<Vector>& a, const std::vector<Vector>& b,
                         const std::vector<int>& holds) const {
  check_pairs(a, b, holds);
  const Matrix ga = net_.logits(stack(a, item_dim()));
  const Matrix gb = net_.logits(stack(b, item_dim()));
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = ga(0, static_cast<Eigen::Index>(i)) - gb(0, static_cast<Eigen::Index>(i));
    total -= holds[i] ? log_sigmoid(d) : log_sigmoid(-d);
  }
  return total / static_cast<double>(a.size());
}

MLP::Gradient DyadicModel::gradient(const std::vector<Vector>& a, const std::vector<Vector>& b,
                                    const std::vector<int>& holds) const {
  check_pairs(a, b, holds);
  const Matrix A = stack(a, item_dim()), B = stack(b, item_dim());
  const Matrix ga = net_.logits(A), gb = net_.logits(B);
  const auto n = static_cast<double>(a.size());
  // dL/dd = sigmoid(d) - holds; d = g(a) - g(b)
  Matrix da(1, A.cols());
  for (Eigen::Index i = 0; i < A.cols(); ++i) {
    da(0, i) = (sigmoid(ga(0, i) - gb(0, i)) - holds[static_cast<std::size_t>(i)]) / n;
  }
  MLP::Gradient g = net_.backward(A, da);
  const MLP::Gradient gneg = net_.backward(B, -da);
  for (std::size_t l = 0; l < g.dW.size(); ++l) {
    g.dW[l] += gneg.dW[l];
    g.db[l] += gneg.db[l];
  }
  return g;
}

FitReport DyadicModel::fit(const std::vector<Vector>& a, const std::vector<Vector>& b, const std::vector<int>& holds,
                           const FitOptions& opts) {
  check_pairs(a, b, holds);
  FitReport report;
  report.initial_loss = loss(a, b, holds);
  Sgd sgd(net_, opts);
  std::mt19937_64 rng(opts.seed);
  std::vector<std::size_t> order(a.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t n = a.size();
  const std::size_t bs = opts.batch_size == 0 ? n : std::min(opts.batch_size, n);
  std::vector<Vector> ba, bb;
  std::vector<int> bh;
  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    if (bs < n) std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += bs) {
      ba.clear();
      bb.clear();
      bh.clear();
      for (std::size_t i = start; i < std::min(n, start + bs); ++i) {
        ba.push_back(a[order[i]]);
        bb.push_back(b[order[i]]);
        bh.push_back(holds[order[i]]);
      }
      sgd.step(net_, gradient(ba, bb, bh));
      ++report.steps;
    }
    if (!net_.finite()) {
      throw std::runtime_error("pair model diverged at epoch " + std::to_string(epoch + 1) +
                               ": non-finite parameters (learning rate " + std::to_string(opts.learning_rate) + ")");
    }
  }
  report.final_loss = loss(a, b, holds);
  if (!std::isfinite(report.final_loss)) throw std::runtime_error("pair model produced a non-finite loss");
  return report;
}

double grad_check(const DyadicModel& model, const Vector& a, const Vector& b, int holds, std::size_t samples,
                  std::uint64_t seed, double step) {
  const std::vector<Vector> va{a}, vb{b};
  const std::vector<int> vh{holds};
  const auto g = model.gradient(va, vb, vh);
  DyadicModel probe = model;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, model.net().parameter_count() - 1);
  double worst = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const std::size_t i = pick(rng);
    const double orig = probe.net().parameter(i);
    probe.net().parameter(i) = orig + step;
    const double up = probe.loss(va, vb, vh);
    probe.net().parameter(i) = orig - step;
    const double down = probe.loss(va, vb, vh);
    probe.net().parameter(i) = orig;
    const double numeric = (up - down) / (2 * step);
    const double analytic = MLP::flat(g, i);
    const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
    worst = std::max(worst, std::abs(numeric - analytic) / scale);
  }
  return worst;
}

}  // namespace metaabd::nn
