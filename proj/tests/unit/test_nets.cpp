#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "aquagan/checkpoint.hpp"
#include "aquagan/errors.hpp"
#include "aquagan/nets.hpp"
#include "aquagan/nn_ops.hpp"
#include "aquagan/rng.hpp"
#include "gradcheck.hpp"
#include "synthetic.hpp"

using namespace aquagan;
using namespace aquagan::ops;

namespace {

Tensor random_batch(Shape s, std::uint64_t seed) { return synth::random_tensor(s, seed, 0.0, 1.0).cast<float>(); }

double dot(const TensorD& a, const TensorD& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) s += a[i] * b[i];
  return s;
}

GeneratorSpec tiny_generator() {
  GeneratorSpec s;
  s.input_size = 32;
  s.encoder_channels = {4, 6, 8, 8, 8};
  return s;
}

}  // namespace

TEST_CASE("conv2d matches a direct summation") {
  const TensorD x = synth::random_tensor({2, 3, 7, 6}, 1, -1, 1);
  const TensorD w = synth::random_tensor({4, 3, 3, 3}, 2, -1, 1);
  const TensorD b = synth::random_tensor({1, 4, 1, 1}, 3, -1, 1);
  const ConvGeometry g{3, 2, 1};
  const TensorD y = conv2d(x, w, &b, g);
  REQUIRE(y.shape() == Shape{2, 4, 4, 3});
  for (int n = 0; n < 2; ++n)
    for (int o = 0; o < 4; ++o)
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 3; ++j) {
          double acc = b[o];
          for (int c = 0; c < 3; ++c)
            for (int ki = 0; ki < 3; ++ki)
              for (int kj = 0; kj < 3; ++kj) {
                const int yy = i * 2 - 1 + ki, xx = j * 2 - 1 + kj;
                if (yy >= 0 && yy < 7 && xx >= 0 && xx < 6) acc += w(o, c, ki, kj) * x(n, c, yy, xx);
              }
          CHECK(y(n, o, i, j) == doctest::Approx(acc).epsilon(1e-12));
        }
}

TEST_CASE("transposed convolution is the adjoint of convolution") {
  const ConvGeometry g{4, 2, 1};
  const TensorD x = synth::random_tensor({1, 3, 8, 8}, 4, -1, 1);
  const TensorD w = synth::random_tensor({5, 3, 4, 4}, 5, -1, 1);
  const TensorD z = synth::random_tensor({1, 5, 4, 4}, 6, -1, 1);
  // <conv(x), z> == <x, conv^T(z)> with the same kernel (Cout x Cin reinterpreted as Cin' x Cout').
  const TensorD cx = conv2d<double>(x, w, nullptr, g);
  const TensorD tz = conv_transpose2d<double>(z, w, nullptr, g);
  REQUIRE(tz.shape() == x.shape());
  CHECK(dot(cx, z) == doctest::Approx(dot(x, tz)).epsilon(1e-12));
  CHECK(conv_transpose_output_size(4, g) == 8);
  CHECK(conv_output_size(8, g) == 4);
}

TEST_CASE("op gradients match central differences") {
  const TensorD r = synth::random_tensor({2, 4, 4, 4}, 7, -1, 1);
  auto weighted = [&](const TensorD& y) { return dot(y, r); };

  SUBCASE("conv2d") {
    const ConvGeometry g{3, 1, 1};
    const TensorD x = synth::random_tensor({2, 3, 4, 4}, 8, -1, 1);
    const TensorD w = synth::random_tensor({4, 3, 3, 3}, 9, -1, 1);
    const TensorD b = synth::random_tensor({1, 4, 1, 1}, 10, -1, 1);
    TensorD gx(x.shape()), gw(w.shape()), gb(b.shape());
    conv2d_backward(x, w, r, g, &gx, gw, &gb);
    CHECK(gradcheck::compare([&](const TensorD& t) { return weighted(conv2d(t, w, &b, g)); }, x, gx).max_rel < 1e-6);
    CHECK(gradcheck::compare([&](const TensorD& t) { return weighted(conv2d(x, t, &b, g)); }, w, gw).max_rel < 1e-6);
    CHECK(gradcheck::compare([&](const TensorD& t) { return weighted(conv2d(x, w, &t, g)); }, b, gb).max_rel < 1e-6);
  }
  SUBCASE("transposed conv2d") {
    const ConvGeometry g{4, 2, 1};
    const TensorD x = synth::random_tensor({2, 3, 2, 2}, 11, -1, 1);
    const TensorD w = synth::random_tensor({3, 4, 4, 4}, 12, -1, 1);
    const TensorD b = synth::random_tensor({1, 4, 1, 1}, 13, -1, 1);
    TensorD gx(x.shape()), gw(w.shape()), gb(b.shape());
    conv_transpose2d_backward(x, w, r, g, &gx, gw, &gb);
    CHECK(gradcheck::compare([&](const TensorD& t) { return weighted(conv_transpose2d(t, w, &b, g)); }, x, gx).max_rel < 1e-6);
    CHECK(gradcheck::compare([&](const TensorD& t) { return weighted(conv_transpose2d(x, t, &b, g)); }, w, gw).max_rel < 1e-6);
    CHECK(gradcheck::compare([&](const TensorD& t) { return weighted(conv_transpose2d(x, w, &t, g)); }, b, gb).max_rel < 1e-6);
  }
  SUBCASE("batch norm, training statistics") {
    const TensorD x = synth::random_tensor({2, 4, 4, 4}, 14, -1, 1);
    const TensorD gamma = synth::random_tensor({1, 4, 1, 1}, 15, 0.5, 1.5);
    const TensorD beta = synth::random_tensor({1, 4, 1, 1}, 16, -1, 1);
    auto f = [&](const TensorD& xx, const TensorD& gg, const TensorD& bb) {
      BatchNormCache<double> c;
      return weighted(batch_norm_train<double>(xx, gg, bb, nullptr, nullptr, c));
    };
    BatchNormCache<double> cache;
    batch_norm_train<double>(x, gamma, beta, nullptr, nullptr, cache);
    TensorD gx(x.shape()), gg(gamma.shape()), gb(beta.shape());
    batch_norm_train_backward(gamma, cache, r, gx, &gg, &gb);
    CHECK(gradcheck::compare([&](const TensorD& t) { return f(t, gamma, beta); }, x, gx).max_rel < 1e-5);
    CHECK(gradcheck::compare([&](const TensorD& t) { return f(x, t, beta); }, gamma, gg).max_rel < 1e-6);
    CHECK(gradcheck::compare([&](const TensorD& t) { return f(x, gamma, t); }, beta, gb).max_rel < 1e-6);
  }
  SUBCASE("activations and pooling") {
    TensorD x = synth::random_tensor({2, 4, 4, 4}, 17, -1, 1);
    for (double& v : x.values())
      if (std::abs(v) < 1e-3) v = 0.5;
    const TensorD ly = leaky_relu(x, 0.2);
    CHECK(gradcheck::compare([&](const TensorD& t) { return weighted(leaky_relu(t, 0.2)); }, x,
                             leaky_relu_backward(ly, r, 0.2)).max_rel < 1e-6);
    const TensorD sy = sigmoid(x);
    CHECK(gradcheck::compare([&](const TensorD& t) { return weighted(sigmoid(t)); }, x,
                             sigmoid_backward(sy, r)).max_rel < 1e-6);
    const TensorD rp = synth::random_tensor({2, 4, 1, 1}, 18, -1, 1);
    CHECK(gradcheck::compare([&](const TensorD& t) { return dot(global_avg_pool(t), rp); }, x,
                             global_avg_pool_backward(x.shape(), rp)).max_rel < 1e-6);
  }
}

TEST_CASE("batch norm running statistics") {
  const TensorD x = synth::random_tensor({4, 2, 3, 3}, 19, 0, 2);
  TensorD gamma(Shape{1, 2, 1, 1}, 1.0), beta(Shape{1, 2, 1, 1}, 0.0);
  TensorD mean(Shape{1, 2, 1, 1}, 0.0), var(Shape{1, 2, 1, 1}, 1.0);
  BatchNormCache<double> c;
  batch_norm_train<double>(x, gamma, beta, &mean, &var, c);
  double m = 0.0, ss = 0.0;
  const int count = 4 * 9;
  for (int n = 0; n < 4; ++n)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m += x(n, 0, i, j);
  m /= count;
  for (int n = 0; n < 4; ++n)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) ss += (x(n, 0, i, j) - m) * (x(n, 0, i, j) - m);
  CHECK(mean[0] == doctest::Approx(0.1 * m).epsilon(1e-12));
  CHECK(var[0] == doctest::Approx(0.9 + 0.1 * ss / (count - 1)).epsilon(1e-12));
}

TEST_CASE("generator activation shapes") {
  const Generator g{GeneratorSpec{}};
  const ParamSet p = g.init_params(1);
  GeneratorTrace trace;
  const Tensor y = g.forward(p, Tensor(Shape{1, 3, 256, 256}, 0.5f), &trace);
  CHECK(y.shape() == Shape{1, 3, 256, 256});
  CHECK(trace.bottleneck == Shape{1, 256, 8, 8});
  REQUIRE(trace.encoder.size() == 5);
  CHECK(trace.encoder[0] == Shape{1, 32, 128, 128});
  CHECK(trace.decoder.back().h == 256);

  GeneratorSpec small;
  small.input_size = 64;
  const Generator g64(small);
  GeneratorTrace t64;
  const Tensor y64 = g64.forward(g64.init_params(1), Tensor(Shape{2, 3, 64, 64}, 0.2f), &t64);
  CHECK(t64.bottleneck == Shape{2, 256, 2, 2});
  CHECK(y64.shape() == Shape{2, 3, 64, 64});
  CHECK(small.decoder_channels() == std::vector<int>{256, 128, 64, 32, 32});
}

TEST_CASE("generator input checks") {
  GeneratorSpec s;
  s.input_size = 64;
  const Generator g(s);
  const ParamSet p = g.init_params(0);
  CHECK_THROWS_AS(g.forward(p, Tensor(Shape{1, 3, 48, 48})), DimensionError);
  CHECK_THROWS_AS(g.forward(p, Tensor(Shape{1, 1, 64, 64})), DimensionError);
  GeneratorSpec odd;
  odd.input_size = 100;
  CHECK_THROWS(odd.validate());
}

TEST_CASE("initialization is seed-deterministic") {
  const Generator g(tiny_generator());
  CHECK(g.init_params(5) == g.init_params(5));
  CHECK_FALSE(g.init_params(5) == g.init_params(6));
  const ParamSet p = g.init_params(5);
  CHECK(p.contains("e1.weight"));
  CHECK(p.contains("d1.up.bias"));
  CHECK(p.contains("d6.weight"));
  CHECK_FALSE(p.at("e1.bn.running_mean").values().empty());
  // Kaiming-uniform bound for e1: sqrt(6 / (3 * 16)).
  const double bound = std::sqrt(6.0 / 48.0);
  for (float v : p.at("e1.weight").values()) CHECK(std::abs(v) <= bound);
}

TEST_CASE("generator outputs are sigmoid-bounded and deterministic") {
  const Generator g(tiny_generator());
  const ParamSet p = g.init_params(2);
  const Tensor x = random_batch({2, 3, 32, 32}, 3);
  const Tensor a = g.forward(p, x);
  CHECK(a == g.forward(p, x));
  for (float v : a.values()) CHECK((v > 0.0f && v < 1.0f));
}

TEST_CASE("inference leaves parameters untouched; training updates running statistics") {
  const Generator g(tiny_generator());
  ParamSet p = g.init_params(2);
  const ParamSet before = p;
  const Tensor x = random_batch({2, 3, 32, 32}, 4);
  g.forward(p, x);
  CHECK(p == before);
  NetCache cache;
  g.forward_train(p, x, cache);
  CHECK_FALSE(p.at("e1.bn.running_mean") == before.at("e1.bn.running_mean"));
  CHECK(p.at("e1.weight") == before.at("e1.weight"));
}

TEST_CASE("generator backward agrees with central differences") {
  const Generator g(tiny_generator());
  const ParamSet p = g.init_params(3);
  const Tensor x = random_batch({2, 3, 32, 32}, 5);
  const Tensor r = synth::random_tensor({2, 3, 32, 32}, 6, -0.5, 0.5).cast<float>();
  auto f = [&](const ParamSet& q) {
    ParamSet scratch = q;
    NetCache c;
    const Tensor y = g.forward_train(scratch, x, c);
    double s = 0.0;
    for (std::size_t i = 0; i < y.numel(); ++i) s += static_cast<double>(y[i]) * r[i];
    return s;
  };
  ParamSet scratch = p;
  NetCache cache;
  g.forward_train(scratch, x, cache);
  ParamSet grads = p.zeros_like();
  Tensor gin;
  g.backward(p, cache, r, grads, &gin);
  CHECK(gin.shape() == x.shape());

  // Float network with ReLU kinks. Entries whose one-sided differences
  // disagree sit on a kink and are skipped; the rest use the median of three
  // central differences.
  const double f0 = f(p);
  int checked = 0, kinked = 0;
  for (const auto& e : p.entries()) {
    if (!e.trainable) continue;
    for (std::size_t i : {std::size_t{0}, e.value.numel() / 2}) {
      std::vector<double> estimates;
      bool smooth = true;
      for (float h : {1e-3f, 3e-4f, 1e-4f}) {
        ParamSet up = p, down = p;
        up.at(e.name)[i] += h;
        down.at(e.name)[i] -= h;
        const double fu = f(up), fd = f(down);
        const double fwd = (fu - f0) / h, bwd = (f0 - fd) / h;
        smooth = smooth && std::abs(fwd - bwd) <= 0.2 * std::max(std::abs(fwd), std::abs(bwd)) + 0.05;
        estimates.push_back((fu - fd) / (2.0 * h));
      }
      ++checked;
      if (!smooth) {
        ++kinked;
        continue;
      }
      std::sort(estimates.begin(), estimates.end());
      const double numeric = estimates[1];
      const double analytic = grads.at(e.name)[i];
      INFO(e.name, "[", i, "] analytic ", analytic, " numeric ", numeric);
      CHECK(std::abs(analytic - numeric) <= 0.1 * std::max(std::abs(analytic), std::abs(numeric)) + 0.03);
    }
  }
  CHECK(kinked * 5 <= checked);
}

TEST_CASE("generator output regression values") {
  const Generator g(tiny_generator());
  const ParamSet p = g.init_params(42);
  const Tensor y = g.forward(p, Tensor(Shape{1, 3, 32, 32}, 0.5f));
  CHECK(y(0, 0, 0, 0) == doctest::Approx(0.513404).epsilon(1e-4));
  CHECK(y(0, 1, 16, 16) == doctest::Approx(0.505967).epsilon(1e-4));
  CHECK(y(0, 2, 31, 5) == doctest::Approx(0.525706).epsilon(1e-4));
}

TEST_CASE("classifier parameter count and scores") {
  ClassifierSpec s;
  s.input_size = 64;
  const Classifier c(s);
  const ParamSet p = c.init_params(1);
  // 4 conv blocks (no bias) + batch-norm scale/shift + 1x1 head with bias.
  CHECK(p.parameter_count() == 432 + 4608 + 18432 + 73728 + 2 * (16 + 32 + 64 + 128) + 129);
  const Tensor scores = c.forward(p, random_batch({3, 3, 64, 64}, 2));
  CHECK(scores.shape() == Shape{3, 1, 1, 1});
  for (float v : scores.values()) CHECK((v > 0.0f && v < 1.0f));
  CHECK_THROWS_AS(c.forward(p, random_batch({1, 3, 32, 32}, 2)), DimensionError);
}

TEST_CASE("classifier logit gradient agrees with a directional difference") {
  ClassifierSpec s;
  s.input_size = 32;
  s.channels = {4, 8};
  const Classifier net(s);
  const ParamSet p = net.init_params(4);
  const Tensor x = random_batch({3, 3, 32, 32}, 7);
  auto f = [&](const ParamSet& q) {
    NetCache c;
    net.forward(q, x, &c);
    const Tensor& z = net.logits(c);
    return static_cast<double>(z[0]) - 2.0 * z[1] + 0.5 * z[2];
  };
  NetCache cache;
  net.forward(p, x, &cache);
  Tensor gz(Shape{3, 1, 1, 1});
  gz[0] = 1.0f;
  gz[1] = -2.0f;
  gz[2] = 0.5f;
  ParamSet grads = p.zeros_like();
  Tensor gin;
  net.backward_logits(p, cache, gz, &grads, &gin);
  for (const char* name : {"head.weight", "head.bias", "block1.weight"}) {
    if (!p.contains(name)) continue;
    const Tensor& w = p.at(name);
    for (std::size_t i = 0; i < std::min<std::size_t>(w.numel(), 4); ++i) {
      ParamSet up = p, down = p;
      up.at(name)[i] += 1e-3f;
      down.at(name)[i] -= 1e-3f;
      CHECK(grads.at(name)[i] == doctest::Approx((f(up) - f(down)) / 2e-3).epsilon(0.05).scale(1e-2));
    }
  }
}

TEST_CASE("backbone identifiers") {
  CHECK(backbone_from_string(to_string(BackboneId::kReferenceSmallCnn)) == BackboneId::kReferenceSmallCnn);
  CHECK(backbone_from_string("inception-v3-adapted") == BackboneId::kInceptionV3Adapted);
  ClassifierSpec s;
  s.backbone = BackboneId::kInceptionV3Adapted;
  CHECK_THROWS_AS(Classifier{s}, Error);
  CHECK(is_good_quality(0.49));
  CHECK_FALSE(is_good_quality(0.51));
  CHECK_FALSE(is_good_quality(0.5));
}

TEST_CASE("checkpoint round trip") {
  const auto dir = synth::temp_dir("nets_ckpt");
  const Generator g(tiny_generator());
  Checkpoint ck{g.spec(), g.init_params(8), {}};
  ck.meta.variant = "L2A";
  ck.meta.epoch = 12;
  ck.meta.weights = loss_variant(VariantTag::kL2A).weights;
  ck.meta.config = {{"batch_size", 8}};
  save_checkpoint(dir / "g.ckpt", ck);
  const Checkpoint back = load_generator(dir / "g.ckpt", tiny_generator());
  CHECK(back.params == ck.params);
  CHECK(std::get<GeneratorSpec>(back.spec) == tiny_generator());
  CHECK(back.meta.variant == "L2A");
  CHECK(back.meta.epoch == 12);
  CHECK(*back.meta.weights == *ck.meta.weights);
  CHECK(back.meta.config["batch_size"] == 8);
  CHECK_THROWS_AS(load_generator(dir / "g.ckpt", GeneratorSpec{}), CheckpointError);
  CHECK_THROWS_AS(load_classifier(dir / "g.ckpt"), CheckpointError);

  nlohmann::json j = *ck.meta.weights;
  CHECK(j.contains("lambda_ang"));
  CHECK_FALSE(j.contains("lambda_gdl"));
}

TEST_CASE("corrupted checkpoints are rejected") {
  const auto dir = synth::temp_dir("nets_corrupt");
  ClassifierSpec s;
  s.input_size = 32;
  const Classifier c(s);
  save_checkpoint(dir / "c.ckpt", Checkpoint{s, c.init_params(1), {"classifier", 3, {}, {}}});
  CHECK_NOTHROW(load_classifier(dir / "c.ckpt", s));

  std::ifstream in(dir / "c.ckpt", std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream(dir / name, std::ios::binary) << content;
    return dir / name;
  };
  std::string flipped = bytes;
  flipped[flipped.size() / 2] ^= 0x10;
  CHECK_THROWS_AS(load_checkpoint(write("flip.ckpt", flipped)), CheckpointError);
  CHECK_THROWS_AS(load_checkpoint(write("short.ckpt", bytes.substr(0, bytes.size() - 9))), CheckpointError);
  CHECK_THROWS_AS(load_checkpoint(write("magic.ckpt", "XXXXXXXX" + bytes.substr(8))), CheckpointError);
  CHECK_THROWS_AS(load_checkpoint(dir / "none.ckpt"), CheckpointError);
}
