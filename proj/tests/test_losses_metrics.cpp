#include "gradcheck.hpp"
#include "lfsr/losses.hpp"
#include "lfsr/metrics.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace lfsr;
using gradcheck::random_tensor;

namespace {

LightField<double> random_lf(Index m, Index n, Index h, Index w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return LightField<double>(random_tensor({m, n, h, w}, rng, 0.0, 1.0));
}

Image<double> random_image(Index h, Index w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return random_tensor({1, 1, h, w}, rng, 0.0, 1.0).plane(0, 0);
}

/// Four EPI gradient terms by explicit enumeration of every EPI.
std::array<double, 4> epi_terms_by_hand(const LightField<double>& p, const LightField<double>& g) {
  const Index M = p.angular_rows(), N = p.angular_cols(), H = p.height(), W = p.width();
  double gx = 0, gu = 0, gy = 0, gv = 0;
  Index cx = 0, cu = 0, cy = 0, cv = 0;
  for (Index m = 0; m < M; ++m)
    for (Index y = 0; y < H; ++y) {
      const auto ep = epi_slice(p, EpiOrientation::horizontal, y, m).data;
      const auto eg = epi_slice(g, EpiOrientation::horizontal, y, m).data;
      for (Index n = 0; n < N; ++n)
        for (Index x = 0; x + 1 < W; ++x, ++cx) gx += std::abs((ep(n, x + 1) - ep(n, x)) - (eg(n, x + 1) - eg(n, x)));
      for (Index n = 0; n + 1 < N; ++n)
        for (Index x = 0; x < W; ++x, ++cu) gu += std::abs((ep(n + 1, x) - ep(n, x)) - (eg(n + 1, x) - eg(n, x)));
    }
  for (Index n = 0; n < N; ++n)
    for (Index x = 0; x < W; ++x) {
      const auto ep = epi_slice(p, EpiOrientation::vertical, x, n).data;
      const auto eg = epi_slice(g, EpiOrientation::vertical, x, n).data;
      for (Index m = 0; m < M; ++m)
        for (Index y = 0; y + 1 < H; ++y, ++cy) gy += std::abs((ep(m, y + 1) - ep(m, y)) - (eg(m, y + 1) - eg(m, y)));
      for (Index m = 0; m + 1 < M; ++m)
        for (Index y = 0; y < H; ++y, ++cv) gv += std::abs((ep(m + 1, y) - ep(m, y)) - (eg(m + 1, y) - eg(m, y)));
    }
  return {gx / cx, gu / cu, gy / cy, gv / cv};
}

/// Direct 3x3 Sobel with clamped borders.
double sobel_at(const Image<double>& e, Index i, Index j) {
  auto at = [&](Index a, Index b) {
    return e(std::clamp<Index>(a, 0, e.rows() - 1), std::clamp<Index>(b, 0, e.cols() - 1));
  };
  static const int kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
  double gx = 0, gy = 0;
  for (int a = -1; a <= 1; ++a)
    for (int b = -1; b <= 1; ++b) {
      gx += kx[a + 1][b + 1] * at(i + a, j + b);
      gy += kx[b + 1][a + 1] * at(i + a, j + b);
    }
  return std::hypot(gx, gy);
}

}  // namespace

TEST_CASE("l_v and l_r") {
  const auto a = random_image(9, 7, 1), b = random_image(9, 7, 2);
  CHECK(loss_view(a, a).value == 0.0);
  const Image<double> shifted = a.array() + 0.1;
  CHECK(loss_view(shifted, a).value == doctest::Approx(0.1).epsilon(1e-12));
  double acc = 0;
  for (Index i = 0; i < a.size(); ++i) acc += std::abs(a.data()[i] - b.data()[i]);
  const auto lv = loss_view(a, b);
  CHECK(lv.value == doctest::Approx(acc / a.size()).epsilon(1e-14));
  CHECK(lv.components.at("l_v") == lv.value);
  CHECK_THROWS_AS(loss_view(a, Image<double>(9, 6)), Error);

  const auto p = random_lf(2, 3, 4, 5, 3), g = random_lf(2, 3, 4, 5, 4);
  CHECK(loss_reg(g, g).value == 0.0);
  LightField<double> g1 = g;
  g1.data().array() += 0.1;
  CHECK(loss_reg(g1, g).value == doctest::Approx(0.1).epsilon(1e-12));
  double sum = 0;
  for (Index m = 0; m < 2; ++m)
    for (Index n = 0; n < 3; ++n)
      for (Index y = 0; y < 4; ++y)
        for (Index x = 0; x < 5; ++x) sum += std::abs(p.data()(m, n, y, x) - g.data()(m, n, y, x));
  CHECK(loss_reg(p, g).value == doctest::Approx(sum / 120).epsilon(1e-14));
  CHECK_THROWS_AS(loss_reg(p, random_lf(2, 3, 4, 4, 5)), Error);
}

TEST_CASE("l_e on a hand-listed 2x2x2x2 light field") {
  LightField<double> p(2, 2, 2, 2), g(2, 2, 2, 2);
  const double pv[16] = {0.1, 0.5, 0.9, 0.2, 0.4, 0.4, 0.0, 1.0, 0.3, 0.8, 0.6, 0.6, 0.7, 0.1, 0.2, 0.5};
  const double gvv[16] = {0.2, 0.2, 0.7, 0.3, 0.9, 0.1, 0.5, 0.5, 0.0, 0.6, 0.4, 0.8, 0.3, 0.3, 1.0, 0.0};
  std::copy(pv, pv + 16, p.data().data());
  std::copy(gvv, gvv + 16, g.data().data());
  const auto r = loss_epi_gradient(p, g);
  const auto hand = epi_terms_by_hand(p, g);
  CHECK(r.components.at("grad_x") == doctest::Approx(hand[0]).epsilon(1e-15));
  CHECK(r.components.at("grad_u") == doctest::Approx(hand[1]).epsilon(1e-15));
  CHECK(r.components.at("grad_y") == doctest::Approx(hand[2]).epsilon(1e-15));
  CHECK(r.components.at("grad_v") == doctest::Approx(hand[3]).epsilon(1e-15));
  CHECK(r.value == doctest::Approx(hand[0] + hand[1] + hand[2] + hand[3]).epsilon(1e-15));
  // First term spelled out: horizontal EPIs, x differences, 8 of them.
  // p x-diffs: .4 -.7 0 1 .5 0 -.6 .3, g x-diffs: 0 -.4 -.8 0 .6 .4 0 -1
  CHECK(hand[0] == doctest::Approx((0.4 + 0.3 + 0.8 + 1.0 + 0.1 + 0.4 + 0.6 + 1.3) / 8).epsilon(1e-14));
}

TEST_CASE("l_e invariances and larger brute force") {
  const auto p = random_lf(3, 4, 5, 6, 6), g = random_lf(3, 4, 5, 6, 7);
  const auto r = loss_epi_gradient(p, g);
  const auto hand = epi_terms_by_hand(p, g);
  CHECK(r.value == doctest::Approx(hand[0] + hand[1] + hand[2] + hand[3]).epsilon(1e-13));
  CHECK(r.value > 0.0);
  CHECK(loss_epi_gradient(g, g).value == 0.0);

  LightField<double> shifted = p;
  shifted.data().array() += 0.37;
  CHECK(loss_epi_gradient(shifted, g).value == doctest::Approx(r.value).epsilon(1e-12));
  LightField<double> both = g;
  both.data().array() += 0.37;
  CHECK(loss_epi_gradient(shifted, both).value == doctest::Approx(r.value).epsilon(1e-12));
  LightField<double> g_plus = g;
  g_plus.data().array() -= 0.25;
  CHECK(loss_epi_gradient(g_plus, g).value <= 1e-12);

  CHECK_THROWS_AS(loss_epi_gradient(random_lf(1, 3, 4, 4, 1), random_lf(1, 3, 4, 4, 2)), Error);
  CHECK_THROWS_AS(loss_epi_gradient(p, random_lf(3, 4, 5, 5, 1)), Error);
}

TEST_CASE("differentiable losses match their plain forms and finite differences") {
  const auto p = random_lf(2, 3, 4, 5, 8), g = random_lf(2, 3, 4, 5, 9);
  Tape<double> t(false);
  CHECK(l1_loss(t, t.constant(p.data()), g.data())->value(0, 0, 0, 0) == doctest::Approx(loss_reg(p, g).value).epsilon(1e-13));
  CHECK(epi_gradient_loss(t, t.constant(p.data()), g.data())->value(0, 0, 0, 0) ==
        doctest::Approx(loss_epi_gradient(p, g).value).epsilon(1e-13));

  auto lv = [&](Tape<double>& tp, const Var<double>& x) { return l1_loss(tp, x, g.data()); };
  CHECK_GRAD(gradcheck::input_gradient(p.data(), lv));
  auto le = [&](Tape<double>& tp, const Var<double>& x) { return epi_gradient_loss(tp, x, g.data()); };
  CHECK_GRAD(gradcheck::input_gradient(p.data(), le));
  // The (M*N, 1, H, W) layout used by the regularizer.
  auto le_stack = [&](Tape<double>& tp, const Var<double>& x) { return epi_gradient_loss(tp, x, g.data()); };
  CHECK_GRAD(gradcheck::input_gradient(p.data().reshaped({6, 1, 4, 5}), le_stack));
}

TEST_CASE("psnr") {
  const auto a = random_image(8, 8, 10);
  const Image<double> off = a.array() + 0.1;
  CHECK(psnr(off, a) == doctest::Approx(20.0).epsilon(1e-10));
  CHECK(std::isinf(psnr(a, a)));
  const Image<double> a255 = 255.0 * a, off255 = 255.0 * off;
  CHECK(psnr(off255, a255, 255.0) == doctest::Approx(psnr(off, a)).epsilon(1e-12));
  double last = std::numeric_limits<double>::infinity();
  for (double e : {0.01, 0.02, 0.05, 0.1}) {
    const Image<double> b = a.array() + e;
    CHECK(psnr(b, a) < last);
    last = psnr(b, a);
  }
  CHECK_THROWS_AS(psnr(a, Image<double>(8, 7)), Error);

  int excluded = 0;
  CHECK(finite_mean({1.0, std::numeric_limits<double>::infinity(), 3.0}, &excluded) == 2.0);
  CHECK(excluded == 1);
}

TEST_CASE("ssim") {
  const auto a = random_image(16, 16, 11);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  Image<double> binary = (a.array() > 0.5).cast<double>();
  const Image<double> inv = 1.0 - binary.array();
  const double s = ssim(binary, inv);
  CHECK(s >= -1.0);
  CHECK(s <= 1.0);
  CHECK(s < 0.0);
  CHECK_THROWS_AS(ssim(Image<double>(10, 16), Image<double>(10, 16)), Error);

  // Reference value from an independent implementation (Gaussian window,
  // sigma 1.5, population covariances, data range 1).
  Image<double> x(16, 16), y(16, 16);
  for (Index i = 0; i < 16; ++i)
    for (Index j = 0; j < 16; ++j) {
      x(i, j) = 0.5 + 0.4 * std::sin(0.7 * j + 0.3 * i);
      y(i, j) = x(i, j) + 0.1 * std::cos(1.3 * j - 0.5 * i);
    }
  CHECK(std::abs(ssim(x, y) - 0.9595399240307001) <= 1e-6);
  const Image<double> z = (1.0 - x.array()).max(0.0).min(1.0);
  CHECK(std::abs(ssim(x, z) - (-0.8469388765155008)) <= 1e-6);
}

TEST_CASE("per-view psnr grid") {
  const auto g = random_lf(5, 5, 6, 6, 12);
  const auto same = per_view_psnr_grid(g, g);
  CHECK(same.grid.rows() == 5);
  CHECK(same.grid.array().isInf().all());

  LightField<double> p = g;
  p.view({0, 0}).array() += 0.1;
  const auto r = per_view_psnr_grid(p, g);
  for (Index m = 0; m < 5; ++m)
    for (Index n = 0; n < 5; ++n) CHECK(std::isinf(r.grid(m, n)) == !(m == 0 && n == 0));

  LightField<double> q = g;
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.01, 0.1);
  for (Index m = 0; m < 5; ++m)
    for (Index n = 0; n < 5; ++n) q.view({m, n}).array() += u(rng);
  const auto rq = per_view_psnr_grid(q, g);
  double center = 0;
  for (Index m = 1; m <= 3; ++m)
    for (Index n = 1; n <= 3; ++n) center += rq.grid(m, n);
  const double corners = (rq.grid(0, 0) + rq.grid(0, 4) + rq.grid(4, 0) + rq.grid(4, 4)) / 4;
  CHECK(rq.center_corner_gap == doctest::Approx(center / 9 - corners).epsilon(1e-12));
  CHECK(rq.min == rq.grid.minCoeff());
  CHECK(rq.max == rq.grid.maxCoeff());
  CHECK_THROWS_AS(per_view_psnr_grid(q, random_lf(5, 5, 6, 5, 1)), Error);
}

TEST_CASE("parallax precision-recall stand-in") {
  const auto g = random_lf(3, 3, 8, 8, 14);
  const auto same = parallax_pr_curve(g, g, {kReferenceEdgeThreshold});
  REQUIRE(same.size() == 1);
  CHECK(same[0].recall == 1.0);
  CHECK(same[0].precision == 1.0);

  LightField<double> flat(3, 3, 8, 8);
  flat.data().array() = 0.5;
  for (const auto& pt : parallax_pr_curve(flat, g, default_pr_thresholds())) {
    CHECK(pt.recall == 0.0);
    CHECK(pt.precision == 1.0);
  }

  // Vertical step edge at x = 4 in the ground truth; the prediction has the
  // edge one pixel later in the last angular column and a faint ramp.
  LightField<double> gt(3, 3, 8, 8), pred(3, 3, 8, 8);
  for (Index m = 0; m < 3; ++m)
    for (Index n = 0; n < 3; ++n)
      for (Index y = 0; y < 8; ++y)
        for (Index x = 0; x < 8; ++x) {
          gt.data()(m, n, y, x) = x >= 4 ? 0.8 : 0.2;
          pred.data()(m, n, y, x) = (x >= (n == 2 ? 5 : 4) ? 0.75 : 0.2) + 0.01 * y;
        }
  const double t = 0.9;
  std::size_t both = 0, predicted = 0, truth = 0;
  auto tally = [&](const Image<double>& ep, const Image<double>& eg) {
    for (Index i = 0; i < ep.rows(); ++i)
      for (Index j = 0; j < ep.cols(); ++j) {
        const bool pp = sobel_at(ep, i, j) > t, gg = sobel_at(eg, i, j) > kReferenceEdgeThreshold;
        predicted += pp;
        truth += gg;
        both += pp && gg;
      }
  };
  for (Index m = 0; m < 3; ++m)
    for (Index y = 0; y < 8; ++y)
      tally(epi_slice(pred, EpiOrientation::horizontal, y, m).data, epi_slice(gt, EpiOrientation::horizontal, y, m).data);
  for (Index n = 0; n < 3; ++n)
    for (Index x = 0; x < 8; ++x)
      tally(epi_slice(pred, EpiOrientation::vertical, x, n).data, epi_slice(gt, EpiOrientation::vertical, x, n).data);
  REQUIRE(predicted > 0);
  REQUIRE(truth > 0);
  const auto pr = parallax_pr_curve(pred, gt, {t});
  CHECK(pr[0].precision == doctest::Approx(static_cast<double>(both) / predicted).epsilon(1e-15));
  CHECK(pr[0].recall == doctest::Approx(static_cast<double>(both) / truth).epsilon(1e-15));
  CHECK(pr[0].recall < 1.0);

  const auto th = default_pr_thresholds();
  CHECK(th.size() == 24);
  CHECK(std::is_sorted(th.rbegin(), th.rend()));
}

TEST_CASE("precision-recall domination") {
  const std::vector<PrPoint> good{{1.0, 0.2, 1.0}, {0.5, 0.6, 0.9}, {0.1, 0.9, 0.7}};
  const std::vector<PrPoint> bad{{1.0, 0.1, 0.9}, {0.5, 0.5, 0.6}, {0.1, 0.8, 0.4}};
  CHECK(pr_dominates(good, bad));
  CHECK_FALSE(pr_dominates(bad, good));
  CHECK(pr_dominates(good, good));
  CHECK(interpolated_precision(good, 0.55) == 0.9);
  CHECK(interpolated_precision(good, 0.95) == 0.0);

  // Random curves against a brute-force scan of every shared recall level.
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<PrPoint> a(1 + trial % 7), b(1 + trial % 5);
    for (auto* c : {&a, &b})
      for (auto& p : *c) p = {u(rng), u(rng), u(rng)};
    double lo = 0, hi = 1;
    for (const auto* c : {&a, &b}) {
      double clo = 1, chi = 0;
      for (const auto& p : *c) {
        clo = std::min(clo, p.recall);
        chi = std::max(chi, p.recall);
      }
      lo = std::max(lo, clo);
      hi = std::min(hi, chi);
    }
    double worst = std::numeric_limits<double>::infinity();
    for (const auto* c : {&a, &b})
      for (const auto& p : *c)
        if (p.recall >= lo && p.recall <= hi)
          worst = std::min(worst, interpolated_precision(a, p.recall) - interpolated_precision(b, p.recall));
    CHECK(pr_margin(a, b).first == worst);
    CHECK(pr_dominates(a, b) == (worst >= 0));
    const InterpolatedPrecision ia(a);
    for (double r : {0.0, 0.3, 0.7, 1.0}) CHECK(ia(r) == interpolated_precision(a, r));
  }
}

TEST_CASE("full precision-recall curve") {
  const auto gt = random_lf(3, 3, 8, 8, 31);
  auto pred = gt;
  std::mt19937_64 rng(32);
  std::normal_distribution<double> noise(0.0, 0.1);
  for (Index i = 0; i < pred.data().size(); ++i) pred.data().data()[i] += noise(rng);

  const auto full = parallax_pr_curve_full(pred, gt);
  REQUIRE(!full.empty());
  for (std::size_t i = 1; i < full.size(); ++i) {
    CHECK(full[i].threshold < full[i - 1].threshold);
    CHECK(full[i].recall >= full[i - 1].recall);
  }
  CHECK(full.back().recall == 1.0);

  // A cutoff t selects strengths > t, i.e. the full-curve point at the
  // smallest strength above t.
  for (const auto& g : parallax_pr_curve(pred, gt, default_pr_thresholds(40, 3.0, 0.01))) {
    const PrPoint* match = nullptr;
    for (const auto& p : full)
      if (p.threshold > g.threshold) match = &p;
    if (!match) {
      CHECK(g.recall == 0.0);
      continue;
    }
    CHECK(match->precision == doctest::Approx(g.precision).epsilon(1e-15));
    CHECK(match->recall == doctest::Approx(g.recall).epsilon(1e-15));
  }

  const auto self = parallax_pr_curve_full(gt, gt);
  CHECK(interpolated_precision(self, 1.0) == 1.0);
  CHECK(pr_dominates(self, full));
}
