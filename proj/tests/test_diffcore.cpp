#include <doctest.h>

#include <cmath>
#include <fstream>

#include "testutil.hpp"
#include "tommy/error.hpp"
#include "tommy/nn.hpp"
#include "tommy/params.hpp"
#include "tommy/tensor.hpp"

using namespace tommy;
using testutil::max_rel_err;
using testutil::random_tensor;

TEST_CASE("matmul identity and orthogonal cases") {
  Tensor eye = Tensor::from({2, 2}, {1, 0, 0, 1});
  Tensor a = Tensor::from({2, 2}, {1, 2, 3, 4});
  CHECK(matmul(eye, a).values() == std::vector<double>{1, 2, 3, 4});

  Tensor row = Tensor::from({1, 2}, {1, 0});
  Tensor col = Tensor::from({2, 1}, {0, 1});
  CHECK(matmul(row, col).values() == std::vector<double>{0});

  try {
    matmul(Tensor::from({1, 2}, {1, 2}), Tensor::from({3, 1}, {1, 2, 3}));
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::dimension);
    CHECK(std::string(e.what()).find("[1,2]") != std::string::npos);
    CHECK(std::string(e.what()).find("[3,1]") != std::string::npos);
  }
}

TEST_CASE("matmul gradients match central differences") {
  Rng rng(7);
  Tensor a = random_tensor({3, 4}, rng, true);
  Tensor b = random_tensor({4, 2}, rng, true);
  Tensor w = random_tensor({3, 2}, rng);  // fixed scalarizer
  double err = max_rel_err({a, b}, [&]() { return dot(matmul(a, b), w); });
  CHECK(err <= 1e-6);

  Tensor v = random_tensor({4}, rng, true);
  Tensor wv = random_tensor({3}, rng);
  err = max_rel_err({a, v}, [&]() { return dot(matmul(a, v), wv); });
  CHECK(err <= 1e-6);
}

TEST_CASE("softmax_temp examples") {
  Tensor equal = Tensor::from({3}, {2.5, 2.5, 2.5});
  for (double beta : {0.1, 1.0, 10.0}) {
    Tensor s = softmax_temp(equal, beta);
    for (int i = 0; i < 3; ++i)
      CHECK(s.at(i) == doctest::Approx(1.0 / 3).epsilon(1e-12));
  }

  Tensor x = Tensor::from({2}, {1.0, 0.0});
  Tensor s = softmax_temp(x, 1.0);
  double e = std::exp(1.0);
  CHECK(s.at(0) == doctest::Approx(e / (e + 1)).epsilon(1e-12));
  CHECK(s.at(1) == doctest::Approx(1 / (e + 1)).epsilon(1e-12));

  Tensor hot = softmax_temp(x, 1e6);
  CHECK(hot.at(0) == doctest::Approx(0.5).epsilon(1e-5));
  CHECK(hot.at(1) == doctest::Approx(0.5).epsilon(1e-5));

  CHECK_THROWS_AS(softmax_temp(x, 0.0), Error);
  try {
    softmax_temp(x, -1.0);
    CHECK(false);
  } catch (const Error& e2) {
    CHECK(e2.kind() == ErrorKind::temperature);
  }
}

TEST_CASE("softmax normalization and positivity over random draws") {
  Rng rng(11);
  for (int it = 0; it < 1000; ++it) {
    int n = uniform_int(rng, 1, 12);
    Tensor x = random_tensor({n}, rng, false, -30.0, 30.0);
    Tensor s = softmax_temp(x, uniform_real(rng, 0.1, 5.0));
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      CHECK(s.at(i) > 0.0);
      CHECK(s.at(i) <= 1.0);
      total += s.at(i);
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }
}

TEST_CASE("cosine examples and invariants") {
  Rng rng(13);
  Tensor a = random_tensor({5}, rng);
  CHECK(cosine_sim(a, a).item() == doctest::Approx(1.0).epsilon(1e-9));

  Tensor ex = Tensor::from({2}, {1, 0});
  Tensor ey = Tensor::from({2}, {0, 1});
  CHECK(cosine_sim(ex, ey).item() == doctest::Approx(0.0));

  Tensor d = Tensor::from({2}, {1, 1});
  CHECK(cosine_sim(d, ex).item() ==
        doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));

  Tensor zero = Tensor::zeros({2});
  CHECK(cosine_sim(zero, ex).item() == doctest::Approx(0.0));

  CHECK_THROWS_AS(cosine_sim(ex, Tensor::from({3}, {1, 2, 3})), Error);

  for (int it = 0; it < 200; ++it) {
    Tensor u = random_tensor({8}, rng);
    Tensor v = random_tensor({8}, rng);
    CHECK(std::abs(cosine_sim(u, v).item()) <= 1.0 + 1e-9);
  }
}

TEST_CASE("cosine gradients match central differences") {
  Rng rng(17);
  for (int it = 0; it < 20; ++it) {
    Tensor a = random_tensor({6}, rng, true);
    Tensor b = random_tensor({6}, rng, true);
    double err = max_rel_err({a, b}, [&]() { return cosine_sim(a, b); });
    CHECK(err <= 1e-6);
  }
}

TEST_CASE("lstm_step zero weights give zero hidden state") {
  ParameterSet ps(1);
  LstmCell cell = make_lstm(ps, "z", {3}, 4);
  std::fill(cell.w.values().begin(), cell.w.values().end(), 0.0);
  std::fill(cell.b.values().begin(), cell.b.values().end(), 0.0);
  Rng rng(3);
  Tensor x = random_tensor({3}, rng);
  auto [h, c] = lstm_step(cell, x, lstm_zero_state(4));
  for (int i = 0; i < 4; ++i) {
    CHECK(h.at(i) == doctest::Approx(0.0));
    CHECK(c.at(i) == doctest::Approx(0.0));
  }
  CHECK_THROWS_AS(lstm_step(cell, random_tensor({5}, rng), lstm_zero_state(4)),
                  Error);
}

TEST_CASE("lstm_step single step gradients match finite differences") {
  ParameterSet ps(5);
  LstmCell cell = make_lstm(ps, "lstm", {3}, 4);
  Rng rng(5);
  Tensor x = random_tensor({3}, rng);
  double err = max_rel_err(ps, [&]() {
    auto [h, c] = lstm_step(cell, x, lstm_zero_state(4));
    return sum(mul(h, h));
  });
  CHECK(err <= 1e-5);
}

TEST_CASE("lstm 3-step unrolled gradients match finite differences") {
  ParameterSet ps(6);
  LstmCell cell = make_lstm(ps, "lstm", {3}, 4);
  Rng rng(6);
  std::vector<Tensor> xs;
  for (int t = 0; t < 3; ++t) xs.push_back(random_tensor({3}, rng));
  double err = max_rel_err(ps, [&]() {
    LstmState st = lstm_zero_state(4);
    for (const Tensor& x : xs) st = lstm_step(cell, x, st);
    return sum(mul(st.h, st.h));
  });
  CHECK(err <= 1e-5);
}

TEST_CASE("nll_loss examples") {
  Tensor uniform = Tensor::zeros({4});
  CHECK(nll_loss(uniform, 1).item() ==
        doctest::Approx(std::log(4.0)).epsilon(1e-12));

  Tensor sure = Tensor::from({3}, {1000, 0, 0});
  CHECK(nll_loss(sure, 0).item() == doctest::Approx(0.0).epsilon(1e-9));

  Tensor logits = Tensor::from({3}, {1, 2, 3});
  double e1 = std::exp(1.0), e2 = std::exp(2.0), e3 = std::exp(3.0);
  CHECK(nll_loss(logits, 2).item() ==
        doctest::Approx(-std::log(e3 / (e1 + e2 + e3))).epsilon(1e-12));

  try {
    nll_loss(logits, 3);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::index);
  }
}

TEST_CASE("backward on linear and quadratic forms") {
  Rng rng(23);
  Tensor x = random_tensor({5}, rng, true);
  {
    x.zero_grad();
    Tape tape;
    Tape::Scope scope(tape);
    tape.backward(sum(x));
    for (int i = 0; i < 5; ++i)
      CHECK(x.grad()[static_cast<size_t>(i)] == doctest::Approx(1.0));
  }
  {
    x.zero_grad();
    Tape tape;
    Tape::Scope scope(tape);
    tape.backward(dot(x, x));
    for (int i = 0; i < 5; ++i)
      CHECK(x.grad()[static_cast<size_t>(i)] == doctest::Approx(2.0 * x.at(i)));
  }
  {
    Tape tape;
    Tape::Scope scope(tape);
    Tensor v = add(x, x);
    CHECK_THROWS_AS(tape.backward(v), Error);
  }
}

TEST_CASE("unreachable parameters keep zero grads after backward") {
  Rng rng(27);
  Tensor x = random_tensor({3}, rng, true);
  Tensor unused = random_tensor({3}, rng, true);
  x.zero_grad();
  unused.zero_grad();
  Tape tape;
  Tape::Scope scope(tape);
  tape.backward(sum(x));
  for (double g : unused.grad()) CHECK(g == 0.0);
}

TEST_CASE("tape topology survives backward") {
  Rng rng(29);
  Tensor x = random_tensor({4}, rng, true);
  Tape tape;
  Tape::Scope scope(tape);
  Tensor loss = sum(sigmoid(mul(x, x)));
  size_t nodes = tape.size();
  tape.backward(loss);
  CHECK(tape.size() == nodes);
}

TEST_CASE("every op matches finite differences over 100 random seeds") {
  for (uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed + 1000);
    Tensor a = random_tensor({6}, rng, true);
    Tensor b = random_tensor({6}, rng, true);
    Tensor w = random_tensor({6, 3}, rng, true);
    Tensor bias = random_tensor({3}, rng, true);
    std::vector<double> target{0.2, 0.5, 0.3};
    double err = max_rel_err({a, b, w, bias}, [&]() {
      Tensor s1 = sigmoid(slice(a, 0, 3));
      Tensor s2 = tanh_t(slice(a, 3, 3));
      Tensor s3 = relu(sub(s1, s2));
      Tensor aff = affine(w, bias, {concat({s1, s2})});
      Tensor soft = softmax_temp(aff, 0.7);
      Tensor ws = weighted_sum(
          soft, {slice(b, 0, 2), slice(b, 2, 2), slice(b, 4, 2)});
      Tensor parts = add_n({mul(ws, ws), scale(ws, 0.3)});
      Tensor terms =
          concat({sum(parts), cosine_sim(a, b), nll_loss(aff, 1),
                  cross_entropy_logits(aff, target), dot(s3, s3)});
      return sum(terms);
    });
    CHECK(err <= 1e-4);
  }
}

TEST_CASE("forward passes are deterministic") {
  Rng rng1(31), rng2(31);
  Tensor a1 = random_tensor({16}, rng1);
  Tensor a2 = random_tensor({16}, rng2);
  CHECK(softmax_temp(sigmoid(a1), 0.3).values() ==
        softmax_temp(sigmoid(a2), 0.3).values());
}

TEST_CASE("parameter set checkpoints round-trip bit-exactly") {
  ParameterSet ps(42);
  ps.create_uniform("lstm.w", {7, 5}, -0.3, 0.3);
  ps.create_uniform("lstm.b", {5}, -0.3, 0.3);
  ps.create_uniform("head.w", {5, 2}, -1.0, 1.0);
  ps.save("/tmp/tommy_test_ckpt.bin");

  ParameterSet loaded(0);
  loaded.create_zero("lstm.w", {7, 5});
  loaded.create_zero("lstm.b", {5});
  loaded.create_zero("head.w", {5, 2});
  loaded.load("/tmp/tommy_test_ckpt.bin");
  for (const std::string& name : ps.names())
    CHECK(loaded.at(name).values() == ps.at(name).values());

  CHECK_THROWS_AS(ps.create_zero("lstm.w", {1}), Error);

  ParameterSet wrong(0);
  wrong.create_zero("lstm.w", {7, 5});
  CHECK_THROWS_AS(wrong.load("/tmp/tommy_test_ckpt.bin"), Error);
}

TEST_CASE("checkpoint header is validated") {
  {
    std::ofstream bad("/tmp/tommy_bad_ckpt.bin", std::ios::binary);
    bad << "not-a-checkpoint-format-at-all";
  }
  ParameterSet ps(0);
  ps.create_zero("x", {1});
  try {
    ps.load("/tmp/tommy_bad_ckpt.bin");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::schema);
    CHECK(std::string(e.what()).find("tommy-ckpt-v1") != std::string::npos);
  }
}
