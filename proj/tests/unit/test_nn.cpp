#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "metaabd/nn/dyadic.hpp"
#include "metaabd/nn/mlp.hpp"

using namespace metaabd::nn;

namespace {

Matrix random_inputs(std::size_t d, std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix X(d, n);
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    for (Eigen::Index i = 0; i < X.rows(); ++i) X(i, j) = u(rng);
  }
  return X;
}

// two Gaussian blobs either side of a random hyperplane
void separable(std::size_t n, unsigned seed, Matrix& X, std::vector<int>& y) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Vector normal(4);
  for (auto& v : normal) v = g(rng);
  X = Matrix(4, n);
  y.assign(n, 0);
  for (std::size_t j = 0; j < n; ++j) {
    Vector x(4);
    for (auto& v : x) v = g(rng);
    const double side = x.dot(normal);
    if (std::abs(side) < 0.3) x += (side < 0 ? -0.5 : 0.5) * normal.normalized();
    X.col(j) = x;
    y[j] = x.dot(normal) > 0 ? 1 : 0;
  }
}

}  // namespace

TEST_CASE("zero weights give a uniform distribution") {
  MLP m = MLP::zeros({5, 8, 10});
  Vector p = m.predict(Vector(Vector::Ones(5)));
  for (Eigen::Index i = 0; i < p.size(); ++i) CHECK(p(i) == doctest::Approx(0.1));
}

TEST_CASE("predictions are normalised") {
  MLP m({6, 16, 10}, 3);
  Matrix P = m.predict_batch(random_inputs(6, 50, 1));
  for (Eigen::Index j = 0; j < P.cols(); ++j) {
    CHECK(std::abs(P.col(j).sum() - 1.0) < 1e-9);
    CHECK(P.col(j).minCoeff() >= 0.0);
  }
  CHECK_THROWS_AS(m.predict(Vector(Vector::Ones(5))), std::invalid_argument);
}

TEST_CASE("fits a linearly separable toy set") {
  Matrix X;
  std::vector<int> y;
  separable(200, 4, X, y);
  MLP m({4, 16, 2}, 9);
  FitOptions o;
  o.epochs = 60;
  fit(m, X, y, o);
  CHECK(accuracy(m, X, y) >= 0.95);
}

TEST_CASE("memorises a single example") {
  MLP m({6, 16, 10}, 5);
  Matrix X = random_inputs(6, 1, 2);
  const int y[] = {7};
  FitOptions o;
  o.epochs = 200;
  fit(m, X, y, o);
  CHECK(m.predict(Vector(X.col(0)))(7) > 0.99);
}

TEST_CASE("full-batch descent with a small step lowers the loss") {
  MLP m({6, 16, 10}, 6);
  Matrix X = random_inputs(6, 40, 3);
  std::vector<int> y(40);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<int>(i % 10);
  FitOptions o;
  o.batch_size = 0;
  o.learning_rate = 1e-3;
  o.momentum = 0.0;
  o.epochs = 5;
  auto r = fit(m, X, y, o);
  CHECK(r.final_loss <= r.initial_loss);
}

TEST_CASE("zero weights drop examples from the gradient") {
  MLP m({6, 16, 10}, 7);
  Matrix X = random_inputs(6, 10, 4);
  std::vector<int> y = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<double> w(10, 1.0);
  for (std::size_t i = 5; i < 10; ++i) w[i] = 0.0;
  auto g = m.gradient(X, y, w);
  auto h = m.gradient(X.leftCols(5), std::span<const int>(y).first(5));
  for (std::size_t i = 0; i < m.parameter_count(); ++i) CHECK(MLP::flat(g, i) == doctest::Approx(MLP::flat(h, i)).epsilon(1e-12));
}

TEST_CASE("backprop agrees with finite differences") {
  for (auto dims : {std::vector<std::size_t>{6, 16, 10}, std::vector<std::size_t>{32, 64, 10},
                    std::vector<std::size_t>{64, 64, 2}}) {
    MLP m(dims, 11);
    Vector x = random_inputs(dims[0], 1, 12).col(0);
    const double err = grad_check(m, x, 1, 40, 3);
    CHECK(err < 1e-4);
    CHECK(err == grad_check(m, x, 1, 40, 3));
  }
}

TEST_CASE("seeded fits are bitwise reproducible") {
  Matrix X = random_inputs(6, 30, 5);
  std::vector<int> y(30);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<int>(i % 3);
  MLP a({6, 8, 3}, 1), b({6, 8, 3}, 1);
  FitOptions o;
  o.epochs = 3;
  o.batch_size = 7;
  fit(a, X, y, o);
  fit(b, X, y, o);
  CHECK(a == b);
}

TEST_CASE("divergence is reported") {
  MLP m({6, 16, 10}, 2);
  Matrix X = random_inputs(6, 20, 6);
  X(2, 4) = std::nan("");
  std::vector<int> y(20, 3);
  FitOptions o;
  CHECK_THROWS_AS(fit(m, X, y, o), std::runtime_error);
}

TEST_CASE("checkpoint round trip and dimension checks") {
  const auto dir = std::filesystem::temp_directory_path() / "metaabd_nn_test";
  std::filesystem::create_directories(dir);
  MLP m({6, 16, 10}, 8);
  m.save(dir / "m.bin");
  CHECK(MLP::load(dir / "m.bin") == m);
  CHECK(MLP::load(dir / "m.bin", {6, 16, 10}) == m);
  CHECK_THROWS_AS(MLP::load(dir / "m.bin", {6, 32, 10}), std::runtime_error);
  std::ofstream(dir / "bad.bin") << "garbage";
  CHECK_THROWS_AS(MLP::load(dir / "bad.bin"), std::runtime_error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("dyadic wrapper is exactly antisymmetric") {
  DyadicModel dm(4, 8, 3);
  Matrix A = random_inputs(4, 30, 7), B = random_inputs(4, 30, 8);
  for (Eigen::Index j = 0; j < A.cols(); ++j) {
    const Vector a = A.col(j), b = B.col(j);
    CHECK(dm.predict_pair(a, b) + dm.predict_pair(b, a) == 1.0);
  }
  CHECK(dm.predict_pair(A.col(0), A.col(0)) == 0.5);
}

TEST_CASE("pair model gradients match finite differences") {
  DyadicModel dm(5, 7, 2);
  Matrix A = random_inputs(5, 4, 1), B = random_inputs(5, 4, 2);
  for (int holds : {0, 1}) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) CHECK(grad_check(dm, A.col(j), B.col(j), holds, 40, 3) < 1e-4);
  }
  CHECK_THROWS_AS(DyadicModel(MLP({4, 3, 2}, 1)), std::invalid_argument);
}

TEST_CASE("dyadic model learns a greater-than relation") {
  // item = one-hot-ish code of a value 0..9 with noise
  std::mt19937 rng(1);
  std::normal_distribution<double> g(0.0, 0.05);
  auto item = [&](int v) {
    Vector x = Vector::Zero(10);
    x(v) = 1.0;
    for (auto& e : x) e = std::clamp(e + g(rng), 0.0, 1.0);
    return x;
  };
  auto pairs = [&](std::size_t n, std::vector<Vector>& a, std::vector<Vector>& b, std::vector<int>& h) {
    std::uniform_int_distribution<int> u(0, 9);
    while (a.size() < n) {
      int p = u(rng), q = u(rng);
      if (p == q) continue;
      a.push_back(item(p));
      b.push_back(item(q));
      h.push_back(p > q ? 1 : 0);
    }
  };
  std::vector<Vector> a, b, ta, tb;
  std::vector<int> h, th;
  pairs(2000, a, b, h);
  pairs(500, ta, tb, th);
  DyadicModel dm(10, 32, 4);
  FitOptions o;
  o.epochs = 30;
  dm.fit(a, b, h, o);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < ta.size(); ++i) ok += (dm.predict_pair(ta[i], tb[i]) > 0.5) == (th[i] == 1);
  CHECK(static_cast<double>(ok) / ta.size() >= 0.9);
}

TEST_CASE("few-shot pretraining needs one instance per class") {
  MLP m({6, 16, 10}, 1);
  std::vector<Vector> few(9, Vector::Zero(6));
  CHECK_THROWS_AS(pretrain_few_shot(m, few, 10), std::invalid_argument);
  few.push_back(Vector::Ones(6));
  pretrain_few_shot(m, few, 10);
  CHECK(std::abs(m.predict(Vector(Vector::Ones(6))).sum() - 1.0) < 1e-9);
}
