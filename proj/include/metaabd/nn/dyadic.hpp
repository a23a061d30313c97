#pragma once

#include "metaabd/nn/mlp.hpp"

namespace metaabd::nn {

// Binary relation p(a,b) = sigmoid(g(a) - g(b)) with g a scalar-output MLP.
// p(a,b) + p(b,a) = 1 and p(a,a) = 1/2 hold by construction, and the learned
// relation is always a (soft) total order.
class DyadicModel {
 public:
  DyadicModel() = default;
  DyadicModel(std::size_t item_dim, std::size_t hidden, std::uint64_t seed);
  explicit DyadicModel(MLP scorer);  // scorer must have one output

  std::size_t item_dim() const { return net_.input_dim(); }
  double score(const Vector& x) const;
  double predict_pair(const Vector& a, const Vector& b) const;

  // Mean cross-entropy of holds[i] under p(a[i], b[i]).
  double loss(const std::vector<Vector>& a, const std::vector<Vector>& b, const std::vector<int>& holds) const;
  MLP::Gradient gradient(const std::vector<Vector>& a, const std::vector<Vector>& b,
                         const std::vector<int>& holds) const;

  FitReport fit(const std::vector<Vector>& a, const std::vector<Vector>& b, const std::vector<int>& holds,
                const FitOptions& opts);

  const MLP& net() const { return net_; }
  MLP& net() { return net_; }

 private:
  MLP net_;
};

// Max relative error between backprop and central differences for one pair.
double grad_check(const DyadicModel& model, const Vector& a, const Vector& b, int holds, std::size_t samples = 20,
                  std::uint64_t seed = 0, double step = 1e-5);

}  // namespace metaabd::nn
