#include <doctest.h>

#include "qoie/blocks.hpp"
#include "qoie/numerics/gradcheck.hpp"
#include "qoie/numerics/ops.hpp"
#include "qoie/rng.hpp"

#include <cmath>

using namespace qoie;
using namespace qoie::blocks;
using numerics::Index;

namespace {

Matrix random_matrix(Rng& rng, Index r, Index c) {
  Matrix m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
  return m;
}

void set_identity(Parameter* p) { p->value = Matrix::Identity(p->value.rows(), p->value.cols()); }

Matrix plain_layer_norm(const Matrix& x) {
  const Index d = x.cols();
  return numerics::layer_norm_rows(Tensor::constant(x), Tensor::constant(Matrix::Ones(1, d)),
                                   Tensor::constant(Matrix::Zero(1, d)))
      .value();
}

}  // namespace

TEST_CASE("position embedding") {
  const Matrix p = position_embedding(5, 8);
  CHECK(p.rows() == 5);
  CHECK(p.cols() == 8);
  for (Index j = 0; j < 8; ++j) CHECK(p(0, j) == (j % 2 == 0 ? 0.0 : 1.0));
  CHECK(position_embedding(2, 4)(1, 0) == doctest::Approx(0.841471).epsilon(1e-6));
  CHECK(position_embedding(3, 4)(2, 3) == doctest::Approx(std::cos(2.0 / 100.0)));
  CHECK_THROWS_AS(position_embedding(3, 5), std::invalid_argument);
  CHECK_THROWS_AS(position_embedding(0, 4), std::invalid_argument);
}

TEST_CASE("causal mask") {
  CHECK(causal_mask(1)(0, 0));
  const numerics::Mask m = causal_mask(3);
  for (int i = 0; i < 3; ++i) {
    CHECK(m.row(i).count() == i + 1);
    for (int j = 0; j < 3; ++j) CHECK(m(i, j) == (j <= i));
  }
}

TEST_CASE("key padding mask") {
  const std::vector<std::uint8_t> valid{1, 1, 0};
  const numerics::Mask m = key_padding_mask(2, valid);
  CHECK(m.rows() == 2);
  CHECK(m(1, 1));
  CHECK_FALSE(m(0, 2));
}

TEST_CASE("multi-head attention") {
  Rng rng(7);
  ParameterSet params;
  const AttentionWeights w = make_attention(params, "attn", 4, 4, 4, 2, rng);
  CHECK(params.find("attn.wq") != nullptr);
  CHECK(params.find("attn.wo") != nullptr);

  SUBCASE("a single key passes its value through W_O") {
    set_identity(w.wq);
    set_identity(w.wk);
    set_identity(w.wv);
    set_identity(w.wo);
    Graph g(false);
    const Tensor q = Tensor::constant(random_matrix(rng, 3, 4));
    const Tensor kv = Tensor::constant(random_matrix(rng, 1, 4));
    const Matrix out = multi_head_attention(g, q, kv, kv, nullptr, w).value();
    for (Index r = 0; r < 3; ++r) CHECK((out.row(r) - kv.value().row(0)).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("constant scores average the values") {
    w.wq->value.setZero();
    set_identity(w.wv);
    set_identity(w.wo);
    Graph g(false);
    const Tensor q = Tensor::constant(random_matrix(rng, 2, 4));
    const Tensor kv = Tensor::constant(random_matrix(rng, 5, 4));
    const Matrix out = multi_head_attention(g, q, kv, kv, nullptr, w).value();
    const Matrix mean = kv.value().colwise().mean();
    for (Index r = 0; r < 2; ++r) CHECK((out.row(r) - mean).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("causal rows ignore later keys") {
    const Matrix x = random_matrix(rng, 4, 4);
    Matrix y = x;
    y.row(2) += random_matrix(rng, 1, 4);
    y.row(3) -= random_matrix(rng, 1, 4);
    const numerics::Mask m = causal_mask(4);
    Graph g(false);
    const Matrix a = multi_head_attention(g, Tensor::constant(x), Tensor::constant(x), Tensor::constant(x), &m, w).value();
    const Matrix b = multi_head_attention(g, Tensor::constant(x), Tensor::constant(y), Tensor::constant(y), &m, w).value();
    CHECK((a.topRows(2) - b.topRows(2)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((a.row(2) - b.row(2)).cwiseAbs().maxCoeff() > 1e-6);
  }
  SUBCASE("a query row with every key forbidden is an error") {
    numerics::Mask m = numerics::Mask::Constant(2, 3, true);
    m.row(1).setConstant(false);
    Graph g(false);
    const Tensor x = Tensor::constant(random_matrix(rng, 3, 4));
    const Tensor q = Tensor::constant(random_matrix(rng, 2, 4));
    CHECK_THROWS(multi_head_attention(g, q, x, x, &m, w));
  }
  SUBCASE("heads must divide the model width") {
    ParameterSet p2;
    CHECK_THROWS_AS(make_attention(p2, "bad", 4, 4, 6, 4, rng), std::invalid_argument);
  }
}

TEST_CASE("mh_block") {
  Rng rng(8);
  ParameterSet params;
  const BlockConfig cfg{4, 2, 8, 1e-5, 0.0};
  const AttentionWeights w = make_attention(params, "attn", 4, 6, 4, 2, rng);
  const LayerNormWeights ln = make_layer_norm(params, "ln", 4);
  const Matrix qm = random_matrix(rng, 3, 4);
  const Matrix kvm = random_matrix(rng, 5, 6);

  SUBCASE("zero values reduce to layer norm of the query") {
    w.wv->value.setZero();
    Graph g(false);
    const Matrix out =
        mh_block(g, Tensor::constant(qm), Tensor::constant(kvm), Tensor::constant(kvm), nullptr, w, ln, cfg).value();
    CHECK((out - plain_layer_norm(qm)).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("shape") {
    Graph g(false);
    const Tensor out = mh_block(g, Tensor::constant(qm), Tensor::constant(kvm), Tensor::constant(kvm), nullptr, w, ln, cfg);
    CHECK(out.rows() == 3);
    CHECK(out.cols() == 4);
  }
  SUBCASE("residual width mismatch") {
    Graph g(false);
    const Tensor narrow = Tensor::constant(random_matrix(rng, 3, 3));
    CHECK_THROWS_AS(mh_block(g, narrow, Tensor::constant(kvm), Tensor::constant(kvm), nullptr, w, ln, cfg),
                    std::invalid_argument);
  }
  SUBCASE("gradients reach inputs and every projection") {
    ParameterSet inputs;
    inputs.add("q", qm);
    inputs.add("kv", kvm);
    Graph g;
    const Tensor q = g.bind(inputs[0]);
    const Tensor kv = g.bind(inputs[1]);
    const Tensor out = mh_block(g, q, kv, kv, nullptr, w, ln, cfg);
    numerics::backward(numerics::sum(numerics::mul(out, Tensor::constant(random_matrix(rng, 3, 4)))));
    inputs.zero_grad();
    params.zero_grad();
    g.accumulate_gradients(inputs);
    g.accumulate_gradients(params);
    CHECK(inputs[0].grad.cwiseAbs().maxCoeff() > 0.0);
    CHECK(inputs[1].grad.cwiseAbs().maxCoeff() > 0.0);
    for (const Parameter* p : {w.wq, w.wk, w.wv, w.wo}) CHECK(p->grad.cwiseAbs().maxCoeff() > 0.0);

    // A constant probe would sum a normalized row to zero; use a random one.
    const Matrix probe = random_matrix(rng, 3, 4);
    auto f = [&](Graph& graph) {
      const Tensor qq = graph.bind(inputs[0]);
      const Tensor kk = graph.bind(inputs[1]);
      return numerics::sum(numerics::mul(mh_block(graph, qq, kk, kk, nullptr, w, ln, cfg),
                                         Tensor::constant(probe)));
    };
    CHECK(numerics::finite_difference_check(f, params).max_relative_error < 1e-4);
    CHECK(numerics::finite_difference_check(f, inputs).max_relative_error < 1e-4);
  }
}

TEST_CASE("ffn_block") {
  Rng rng(12);
  ParameterSet params;
  const BlockConfig cfg{4, 2, 4, 1e-5, 0.0};
  const FeedForwardWeights ffn = make_feed_forward(params, "ffn", 4, 4, rng);
  const LayerNormWeights ln = make_layer_norm(params, "ln", 4);
  const Matrix x = random_matrix(rng, 3, 4);

  SUBCASE("zero weights reduce to layer norm") {
    ffn.w1->value.setZero();
    ffn.w2->value.setZero();
    Graph g(false);
    CHECK((ffn_block(g, Tensor::constant(x), ffn, ln, cfg).value() - plain_layer_norm(x)).cwiseAbs().maxCoeff() <
          1e-12);
  }
  SUBCASE("relu annihilates negative rows") {
    set_identity(ffn.w1);
    set_identity(ffn.w2);
    const Matrix neg = -(x.cwiseAbs().array() + 0.1).matrix();
    Graph g(false);
    CHECK((ffn_block(g, Tensor::constant(neg), ffn, ln, cfg).value() - plain_layer_norm(neg)).cwiseAbs().maxCoeff() <
          1e-12);
  }
  SUBCASE("shape and gradient") {
    Graph g(false);
    const Tensor out = ffn_block(g, Tensor::constant(x), ffn, ln, cfg);
    CHECK(out.rows() == 3);
    CHECK(out.cols() == 4);
    const Matrix probe = random_matrix(rng, 3, 4);
    auto f = [&](Graph& graph) {
      return numerics::sum(numerics::mul(ffn_block(graph, Tensor::constant(x), ffn, ln, cfg),
                                         Tensor::constant(probe)));
    };
    CHECK(numerics::finite_difference_check(f, params).max_relative_error < 1e-4);
  }
}

TEST_CASE("block config validation") {
  CHECK_NOTHROW(BlockConfig{}.validate());
  CHECK_THROWS_AS((BlockConfig{6, 4, 24, 1e-5, 0.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((BlockConfig{8, 2, 4, 1e-5, 0.0}.validate()), std::invalid_argument);
}

TEST_CASE("attention rows are distributions over allowed keys") {
  // Scores alone: with W_V = I and one-hot values, outputs are the weights.
  Rng rng(21);
  ParameterSet params;
  const AttentionWeights w = make_attention(params, "attn", 5, 5, 5, 1, rng);
  set_identity(w.wv);
  set_identity(w.wo);
  const Matrix q = random_matrix(rng, 5, 5);
  const Matrix onehot = Matrix::Identity(5, 5);
  const numerics::Mask m = causal_mask(5);
  Graph g(false);
  const Matrix out = multi_head_attention(g, Tensor::constant(q), Tensor::constant(onehot), Tensor::constant(onehot), &m, w).value();
  for (Index r = 0; r < 5; ++r) {
    CHECK(std::abs(out.row(r).sum() - 1.0) < 1e-12);
    for (Index c = r + 1; c < 5; ++c) CHECK(out(r, c) == 0.0);
  }
}
