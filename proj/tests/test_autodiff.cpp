#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hfn/autodiff.hpp"
#include "testutil.hpp"

using hfn::Mat;
using hfn::Rng;
using namespace hfn::ad;

namespace {

// Gradient-checks a scalar-valued graph builder against central
// finite differences on every input matrix.
double gradcheck(std::vector<Mat>& inputs, const std::function<Var(Tape&, std::vector<Var>&)>& build) {
  auto loss = [&]() {
    Tape tape;
    std::vector<Var> vars;
    for (const Mat& m : inputs) vars.push_back(tape.leaf(m, true));
    Var out = build(tape, vars);
    return tape.value(out)(0, 0);
  };
  Tape tape;
  std::vector<Var> vars;
  for (const Mat& m : inputs) vars.push_back(tape.leaf(m, true));
  Var out = build(tape, vars);
  tape.backward(out);
  double worst = 0.0;
  for (size_t i = 0; i < inputs.size(); ++i)
    worst = std::max(worst, testutil::check_mat_gradient(inputs[i], tape.grad(vars[i]), loss));
  return worst;
}

// Reduce any matrix to a scalar with non-uniform weights so gradient
// structure is exercised.
Var weighted_sum(Tape& tape, Var x) {
  const Mat& v = tape.value(x);
  Mat w(v.rows, v.cols);
  for (int i = 0; i < v.rows; ++i)
    for (int j = 0; j < v.cols; ++j) w(i, j) = 0.3 + 0.1 * i + 0.07 * j;
  Var weighted = tape.mul_const(x, w);
  Var rowsum = tape.mean_rows(weighted);
  // collapse 1×c to scalar with a second mean after transpose-free trick:
  Mat ones(tape.value(rowsum).cols, 1, 1.0);
  return tape.matmul(rowsum, tape.constant(ones));
}

}  // namespace

TEST_CASE("matmul forward and backward") {
  Rng rng(7);
  std::vector<Mat> in = {testutil::random_mat(3, 4, rng), testutil::random_mat(4, 2, rng)};
  double err = gradcheck(in, [](Tape& t, std::vector<Var>& v) {
    return weighted_sum(t, t.matmul(v[0], v[1]));
  });
  CHECK(err < 1e-6);

  Tape t;
  Mat a = Mat::identity(3);
  Mat b = testutil::random_mat(3, 3, rng);
  Var p = t.matmul(t.leaf(a, false), t.leaf(b, false));
  for (size_t i = 0; i < b.a.size(); ++i) CHECK(t.value(p).a[i] == b.a[i]);
}

TEST_CASE("matmul_nt matches explicit transpose") {
  Rng rng(8);
  Mat a = testutil::random_mat(3, 5, rng);
  Mat b = testutil::random_mat(4, 5, rng);
  Tape t;
  Var r = t.matmul_nt(t.leaf(a, false), t.leaf(b, false));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) {
      double s = 0.0;
      for (int k = 0; k < 5; ++k) s += a(i, k) * b(j, k);
      CHECK(t.value(r)(i, j) == Catch::Approx(s).margin(1e-12));
    }
  std::vector<Mat> in = {a, b};
  double err = gradcheck(in, [](Tape& tp, std::vector<Var>& v) {
    return weighted_sum(tp, tp.matmul_nt(v[0], v[1]));
  });
  CHECK(err < 1e-6);
}

TEST_CASE("elementwise ops gradients") {
  Rng rng(9);
  std::vector<Mat> in = {testutil::random_mat(2, 3, rng), testutil::random_mat(2, 3, rng)};
  for (auto op : {0, 1, 2}) {
    double err = gradcheck(in, [op](Tape& t, std::vector<Var>& v) {
      Var x = op == 0 ? t.add(v[0], v[1]) : op == 1 ? t.sub(v[0], v[1]) : t.hadamard(v[0], v[1]);
      return weighted_sum(t, x);
    });
    CHECK(err < 1e-6);
  }
}

TEST_CASE("activations gradients") {
  Rng rng(10);
  std::vector<Mat> in = {testutil::random_mat(2, 4, rng, 2.0)};
  for (auto op : {0, 1, 2}) {
    double err = gradcheck(in, [op](Tape& t, std::vector<Var>& v) {
      Var x = op == 0 ? t.relu(v[0]) : op == 1 ? t.tanh_fn(v[0]) : t.sigmoid_fn(v[0]);
      return weighted_sum(t, x);
    });
    CHECK(err < 1e-5);
  }
}

TEST_CASE("softmax rows is a distribution and differentiates") {
  Rng rng(11);
  Mat x = testutil::random_mat(3, 5, rng, 3.0);
  Tape t;
  Var s = t.softmax_rows(t.leaf(x, false));
  for (int i = 0; i < 3; ++i) {
    double sum = 0.0;
    for (int j = 0; j < 5; ++j) {
      sum += t.value(s)(i, j);
      CHECK(t.value(s)(i, j) >= 0.0);
    }
    CHECK(sum == Catch::Approx(1.0).margin(1e-12));
  }
  std::vector<Mat> in = {x};
  double err = gradcheck(in, [](Tape& tp, std::vector<Var>& v) {
    return weighted_sum(tp, tp.softmax_rows(v[0]));
  });
  CHECK(err < 1e-5);
}

TEST_CASE("masked softmax gives masked keys exactly zero mass") {
  Rng rng(12);
  Mat x = testutil::random_mat(2, 4, rng, 2.0);
  std::vector<uint8_t> mask = {0, 1, 0, 1};
  Tape t;
  Var s = t.softmax_rows(t.leaf(x, false), mask);
  for (int i = 0; i < 2; ++i) {
    CHECK(t.value(s)(i, 1) == 0.0);
    CHECK(t.value(s)(i, 3) == 0.0);
    CHECK(t.value(s)(i, 0) + t.value(s)(i, 2) == Catch::Approx(1.0).margin(1e-12));
  }
  std::vector<uint8_t> all = {1, 1, 1, 1};
  CHECK_THROWS_AS(t.softmax_rows(t.leaf(x, false), all), hfn::Error);
}

TEST_CASE("layer norm value and gradient") {
  Tape t;
  Mat x = Mat::row_vector({1.0, 3.0});
  Var y = t.layer_norm(t.leaf(x, false), 1e-5);
  // mean 2, population variance 1, eps-corrected
  double expect = 1.0 / std::sqrt(1.0 + 1e-5);
  CHECK(t.value(y)(0, 0) == Catch::Approx(-expect).margin(1e-12));
  CHECK(t.value(y)(0, 1) == Catch::Approx(expect).margin(1e-12));

  Rng rng(13);
  std::vector<Mat> in = {testutil::random_mat(3, 6, rng, 2.0)};
  double err = gradcheck(in, [](Tape& tp, std::vector<Var>& v) {
    return weighted_sum(tp, tp.layer_norm(v[0], 1e-5));
  });
  CHECK(err < 1e-5);
}

TEST_CASE("shape ops gradients") {
  Rng rng(14);
  std::vector<Mat> in = {testutil::random_mat(3, 4, rng), testutil::random_mat(3, 2, rng),
                         testutil::random_mat(1, 4, rng), testutil::random_mat(3, 1, rng)};
  double err = gradcheck(in, [](Tape& t, std::vector<Var>& v) {
    Var cat = t.concat_cols(v[0], v[1]);          // 3×6
    Var sl = t.slice_cols(cat, 1, 5);              // 3×4
    Var biased = t.add_row_broadcast(sl, v[2]);    // bias
    Var scaled = t.scale_rows(biased, v[3]);       // row scaling
    Var row = t.take_row(scaled, 1);
    Var stacked = t.concat_rows({row, t.take_row(scaled, 2), t.mean_rows(scaled)});
    return weighted_sum(t, stacked);
  });
  CHECK(err < 1e-5);
}

TEST_CASE("mul_row_broadcast gradient") {
  Rng rng(15);
  std::vector<Mat> in = {testutil::random_mat(3, 4, rng), testutil::random_mat(1, 4, rng)};
  double err = gradcheck(in, [](Tape& t, std::vector<Var>& v) {
    return weighted_sum(t, t.mul_row_broadcast(v[0], v[1]));
  });
  CHECK(err < 1e-5);
}

TEST_CASE("softmax cross entropy value and gradient") {
  Tape t;
  Mat logits = Mat::row_vector({1.0, 0.0});
  Var loss = t.softmax_xent(t.leaf(logits, false), 0);
  double p0 = std::exp(1.0) / (std::exp(1.0) + 1.0);
  CHECK(t.value(loss)(0, 0) == Catch::Approx(-std::log(p0)).margin(1e-12));

  Rng rng(16);
  std::vector<Mat> in = {testutil::random_mat(1, 4, rng, 2.0)};
  double err = gradcheck(in, [](Tape& tp, std::vector<Var>& v) {
    return tp.softmax_xent(v[0], 2);
  });
  CHECK(err < 1e-6);
}

TEST_CASE("dropout scales by keep probability and is identity-free in the graph") {
  Rng rng(17);
  Mat x(4, 8, 1.0);
  Tape t;
  Rng drop(99);
  Var y = t.dropout(t.leaf(x, false), 0.5, drop);
  for (double v : t.value(y).a) CHECK((v == 0.0 || v == Catch::Approx(2.0)));
}

TEST_CASE("scale and constants") {
  Rng rng(18);
  Mat x = testutil::random_mat(2, 2, rng);
  Mat c = testutil::random_mat(2, 2, rng);
  Tape t;
  Var v = t.leaf(x, true);
  Var y = t.add_const(t.scale(v, 2.5), c);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(t.value(y)(i, j) == Catch::Approx(2.5 * x(i, j) + c(i, j)).margin(1e-12));
  std::vector<Mat> in = {x};
  double err = gradcheck(in, [&c](Tape& tp, std::vector<Var>& vars) {
    return weighted_sum(tp, tp.add_const(tp.scale(vars[0], 2.5), c));
  });
  CHECK(err < 1e-6);
}

TEST_CASE("backward requires scalar root") {
  Tape t;
  Var x = t.leaf(Mat(2, 2, 1.0), true);
  CHECK_THROWS_AS(t.backward(x), hfn::Error);
}
