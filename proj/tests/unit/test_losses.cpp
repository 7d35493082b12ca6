#include <doctest.h>

#include <cmath>
#include <numbers>

#include "aquagan/errors.hpp"
#include "aquagan/losses.hpp"
#include "aquagan/rng.hpp"
#include "gradcheck.hpp"
#include "synthetic.hpp"

using namespace aquagan;

namespace {

const Shape kSmall{2, 3, 8, 8};

TensorD rnd(std::uint64_t seed, Shape s = kSmall) { return synth::random_tensor(s, seed, 0.0, 1.0); }

// Smallest distance of any GDL difference term from a kink in the generated image.
double gdl_kink_distance(const TensorD& g, const TensorD& y) {
  const Shape s = g.shape();
  double best = 1e9;
  auto visit = [&](double dg, double dy) {
    best = std::min({best, std::abs(dg), std::abs(std::abs(dg) - std::abs(dy))});
  };
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int i = 0; i < s.h; ++i)
        for (int j = 0; j < s.w; ++j) {
          if (j + 1 < s.w) visit(g(n, c, i, j + 1) - g(n, c, i, j), y(n, c, i, j + 1) - y(n, c, i, j));
          if (i + 1 < s.h) visit(g(n, c, i + 1, j) - g(n, c, i, j), y(n, c, i + 1, j) - y(n, c, i, j));
        }
  return best;
}

}  // namespace

TEST_CASE("simple loss values") {
  const TensorD a(Shape{1, 3, 2, 2}, 0.25);
  const TensorD b(Shape{1, 3, 2, 2}, 0.75);
  CHECK(l1_loss(a, b).value == doctest::Approx(0.5));
  CHECK(l2_loss(a, b).value == doctest::Approx(0.25));
  // Parallel RGB vectors.
  CHECK(angular_loss(a, b).value < 1e-3);
  CHECK_THROWS_AS(l1_loss(a, TensorD(Shape{1, 3, 2, 3})), DimensionError);
}

TEST_CASE("angular loss of orthogonal colours is pi/2") {
  TensorD red(Shape{1, 3, 2, 2}), green(Shape{1, 3, 2, 2});
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x) {
      red(0, 0, y, x) = 1.0;
      green(0, 1, y, x) = 1.0;
    }
  CHECK(angular_loss(red, green).value == doctest::Approx(std::numbers::pi / 2).epsilon(1e-12));
}

TEST_CASE("angular loss ignores black pixels") {
  TensorD a(Shape{1, 3, 1, 2}), b(Shape{1, 3, 1, 2});
  a(0, 0, 0, 0) = 1.0;
  b(0, 1, 0, 0) = 1.0;
  // Second pixel: a is black, contributes 0.
  b(0, 2, 0, 1) = 1.0;
  const auto v = angular_loss(a, b);
  CHECK(v.value == doctest::Approx(std::numbers::pi / 4).epsilon(1e-12));
  for (int c = 0; c < 3; ++c) CHECK(v.grad(0, c, 0, 1) == 0.0);
}

TEST_CASE("angular value is symmetric, gradient is for the first argument") {
  const TensorD a = rnd(1), b = rnd(2);
  CHECK(angular_loss(a, b).value == doctest::Approx(angular_loss(b, a).value).epsilon(1e-14));
  CHECK(gdl_loss(a, b).value == doctest::Approx(gdl_loss(b, a).value).epsilon(1e-14));
  CHECK_FALSE(angular_loss(a, b).grad == angular_loss(b, a).grad);
}

TEST_CASE("gdl on a 1x2 image and degenerate input") {
  // Horizontal differences only: | |0.9-0.1| - |0.5-0.5| | = 0.8.
  TensorD g(Shape{1, 1, 1, 2}), y(Shape{1, 1, 1, 2});
  g[0] = 0.5;
  g[1] = 0.5;
  y[0] = 0.1;
  y[1] = 0.9;
  CHECK(gdl_loss(g, y).value == doctest::Approx(0.8));
  CHECK_THROWS_AS(gdl_loss(TensorD(Shape{1, 3, 1, 1}), TensorD(Shape{1, 3, 1, 1})), DimensionError);
}

TEST_CASE("gdl ignores constant offsets") {
  const TensorD a = rnd(3);
  TensorD b = a;
  for (double& v : b.values()) v += 0.1;
  CHECK(gdl_loss(a, b).value == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("losses vanish at the target") {
  const TensorD y = rnd(4);
  CHECK(l1_loss(y, y).value == 0.0);
  CHECK(l2_loss(y, y).value == 0.0);
  CHECK(gdl_loss(y, y).value == 0.0);
  CHECK(angular_loss(y, y).value <= 1e-3);
}

TEST_CASE("losses are non-negative on fuzzed inputs") {
  Rng rng(77);
  for (int t = 0; t < 200; ++t) {
    const Shape s{1 + static_cast<int>(rng() % 2), 3, 2 + static_cast<int>(rng() % 5),
                  2 + static_cast<int>(rng() % 5)};
    const TensorD a = synth::random_tensor(s, rng(), -0.5, 1.5);
    const TensorD b = synth::random_tensor(s, rng(), -0.5, 1.5);
    CHECK(l1_loss(a, b).value >= 0.0);
    CHECK(l2_loss(a, b).value >= 0.0);
    CHECK(angular_loss(a, b).value >= 0.0);
    CHECK(gdl_loss(a, b).value >= 0.0);
  }
}

TEST_CASE("analytic gradients match central differences") {
  const TensorD y = rnd(10);
  TensorD g = rnd(11);
  for (std::uint64_t s = 12; gdl_kink_distance(g, y) < 3e-4; ++s) g = rnd(s);

  auto check = [&](auto fn) {
    const auto v = fn(g);
    const auto r = gradcheck::compare([&](const TensorD& t) { return fn(t).value; }, g, v.grad);
    CHECK(r.max_rel < 1e-3);
  };
  check([&](const TensorD& t) { return l2_loss(t, y); });
  check([&](const TensorD& t) { return l1_loss(t, y); });
  check([&](const TensorD& t) { return angular_loss(t, y); });
  check([&](const TensorD& t) { return gdl_loss(t, y); });
}

TEST_CASE("adversarial losses") {
  const std::vector<double> s{0.2, 0.5};
  const auto g = adversarial_generator_loss(s);
  CHECK(g.value == doctest::Approx((-std::log(0.8) - std::log(0.5)) / 2));
  CHECK(g.grad[0] == doctest::Approx(1.0 / (2 * 0.8)));
  const auto d = adversarial_discriminator_loss(std::vector<double>{0.1}, std::vector<double>{0.7});
  CHECK(d.value == doctest::Approx(-std::log(0.9) - std::log(0.7)));
  CHECK(d.grad_real[0] == doctest::Approx(1.0 / 0.9));
  CHECK(d.grad_fake[0] == doctest::Approx(-1.0 / 0.7));
  // Clamped scores stay finite and carry no gradient.
  const auto sat = adversarial_generator_loss(std::vector<double>{1.0});
  CHECK(std::isfinite(sat.value));
  CHECK(sat.grad[0] == 0.0);
}

TEST_CASE("variant names round trip") {
  for (VariantTag t : kAllVariants) CHECK(variant_from_string(to_string(t)) == t);
  CHECK(variant_from_string("l2agr") == VariantTag::kL2AGR);
  CHECK_THROWS_AS(variant_from_string("l3"), Error);
}

TEST_CASE("variant definitions") {
  const auto adv = loss_variant(VariantTag::kAdv);
  CHECK(adv.self_similarity);
  CHECK_FALSE(adv.requires_pairs);
  CHECK(adv.similarity == SimilarityKind::kL1);
  CHECK(loss_variant(VariantTag::kL1).similarity == SimilarityKind::kL1);
  CHECK(loss_variant(VariantTag::kL2).similarity == SimilarityKind::kL2);
  CHECK_FALSE(loss_variant(VariantTag::kL2).weights.lambda_ang);
  const auto l2a = loss_variant(VariantTag::kL2A);
  CHECK(*l2a.weights.lambda_ang == 0.8);
  CHECK_FALSE(l2a.weights.lambda_gdl);
  const auto l2ag = loss_variant(VariantTag::kL2AG);
  CHECK(*l2ag.weights.lambda_ang == 0.8);
  CHECK(*l2ag.weights.lambda_gdl == 0.4);
  CHECK_FALSE(l2ag.trains_discriminator);
  const auto r = loss_variant(VariantTag::kL2AGR);
  CHECK(r.trains_discriminator);
  CHECK(r.weights == l2ag.weights);
  LossWeights bad;
  bad.lambda_ang = -1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("composite loss terms follow the variant") {
  const TensorD x = rnd(20), y = rnd(21), g = rnd(22);
  const std::vector<double> scores{0.3, 0.6};
  for (VariantTag t : kAllVariants) {
    const auto v = loss_variant(t);
    const auto c = composite_loss<double>(v, x, &y, g, scores);
    CHECK(c.terms.gan.has_value());
    CHECK(c.terms.sim.has_value());
    CHECK(c.terms.ang.has_value() == v.weights.lambda_ang.has_value());
    CHECK(c.terms.gdl.has_value() == v.weights.lambda_gdl.has_value());
    CHECK(c.total == doctest::Approx(c.terms.sum()).epsilon(1e-15));
    CHECK(std::abs(c.total - c.terms.sum()) < 1e-9);
  }
  const auto adv = composite_loss<double>(loss_variant(VariantTag::kAdv), x, nullptr, g, scores);
  CHECK(adv.terms.sim->raw == doctest::Approx(l1_loss(g, x).value));
  const auto l2 = composite_loss<double>(loss_variant(VariantTag::kL2), x, &y, g, scores);
  CHECK(l2.terms.sim->raw == doctest::Approx(l2_loss(g, y).value));
  const auto l2ag = composite_loss<double>(loss_variant(VariantTag::kL2AG), x, &y, g, scores);
  CHECK(l2ag.terms.ang->weight == 0.8);
  CHECK(l2ag.terms.gdl->weight == 0.4);
  CHECK(l2ag.terms.gdl->raw == doctest::Approx(gdl_loss(g, y).value));
  CHECK_THROWS_AS(composite_loss<double>(loss_variant(VariantTag::kL2), x, nullptr, g, scores),
                  DataError);
}

TEST_CASE("composite gradient matches central differences") {
  const TensorD x = rnd(30), y = rnd(31);
  TensorD g = rnd(32);
  for (std::uint64_t s = 33; gdl_kink_distance(g, y) < 3e-4; ++s) g = rnd(s);
  const std::vector<double> scores{0.3, 0.6};
  const auto v = loss_variant(VariantTag::kL2AG);
  const auto c = composite_loss<double>(v, x, &y, g, scores);
  const auto r = gradcheck::compare(
      [&](const TensorD& t) { return composite_loss<double>(v, x, &y, t, scores).total; }, g,
      c.grad_generated);
  CHECK(r.max_rel < 1e-3);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    auto up = scores, down = scores;
    up[i] += 1e-6;
    down[i] -= 1e-6;
    const double num = (composite_loss<double>(v, x, &y, g, up).total -
                        composite_loss<double>(v, x, &y, g, down).total) / 2e-6;
    CHECK(c.grad_scores[i] == doctest::Approx(num).epsilon(1e-5));
  }
}
