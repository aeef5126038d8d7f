#include "lfsr/io.hpp"
#include "lfsr/light_field.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numbers>
#include <filesystem>
#include <random>

using namespace lfsr;
namespace fs = std::filesystem;

namespace {

LightField<double> random_lf(Index m, Index n, Index h, Index w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  LightField<double> lf(m, n, h, w);
  for (Index i = 0; i < lf.data().size(); ++i) lf.data().data()[i] = d(rng);
  return lf;
}

Image<double> random_image(Index h, Index w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  Image<double> img(h, w);
  for (Index i = 0; i < img.size(); ++i) img.data()[i] = d(rng);
  return img;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("lfsr_core_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("light field shape and views") {
  LightField<float> lf(7, 7, 64, 64);
  CHECK(lf.data().shape() == Shape4{7, 7, 64, 64});
  CHECK_THROWS_AS(LightField<float>(0, 7, 4, 4), Error);

  LightField<double> c(3, 4, 5, 6);
  c.data().array() = 0.1;
  c.view({2, 3}).setConstant(0.5);
  CHECK((extract_view(c, {2, 3}).array() == 0.5).all());
  CHECK_THROWS_AS(extract_view(c, {3, 0}), std::out_of_range);
  CHECK_THROWS_AS(extract_view(c, {0, -1}), std::out_of_range);

  // The copy does not alias storage.
  auto v = extract_view(c, {1, 1});
  v.setConstant(9.0);
  CHECK(c.data()(1, 1, 0, 0) == doctest::Approx(0.1));
}

TEST_CASE("partition identity: views reassemble the data exactly") {
  const auto lf = random_lf(3, 4, 5, 6, 1);
  LightField<double> rebuilt(3, 4, 5, 6);
  for (Index m = 0; m < 3; ++m)
    for (Index n = 0; n < 4; ++n) set_view(rebuilt, {m, n}, extract_view(lf, {m, n}));
  CHECK((rebuilt.data().array() == lf.data().array()).all());
}

TEST_CASE("epi slices follow the index convention") {
  const auto lf = random_lf(3, 4, 5, 6, 2);
  const auto h = epi_slice(lf, EpiOrientation::horizontal, 2, 1);
  REQUIRE(h.data.rows() == 4);
  REQUIRE(h.data.cols() == 6);
  for (Index n = 0; n < 4; ++n)
    for (Index x = 0; x < 6; ++x) CHECK(h.data(n, x) == lf.data()(1, n, 2, x));
  const auto v = epi_slice(lf, EpiOrientation::vertical, 4, 3);
  REQUIRE(v.data.rows() == 3);
  REQUIRE(v.data.cols() == 5);
  for (Index m = 0; m < 3; ++m)
    for (Index y = 0; y < 5; ++y) CHECK(v.data(m, y) == lf.data()(m, 3, y, 4));
  CHECK_THROWS_AS(epi_slice(lf, EpiOrientation::horizontal, 5, 0), std::out_of_range);
  CHECK_THROWS_AS(epi_slice(lf, EpiOrientation::vertical, 0, 4), std::out_of_range);

  LightField<double> flat(3, 3, 4, 4);
  flat.data().array() = 0.3;
  CHECK((epi_slice(flat, EpiOrientation::horizontal, 1, 1).data.array() == 0.3).all());
}

TEST_CASE("synthetic light field: zero disparity reproduces the texture") {
  SynthSpec<double> spec;
  spec.texture = random_image(40, 44, 3);
  spec.disparity = 0.0;
  spec.angular_rows = 5;
  spec.angular_cols = 5;
  const auto lf = synth_lightfield(spec);
  const Index mg = synth_margin(0.0, 5, 5);
  const Image<double> center = spec.texture.block(mg, mg, 40 - 2 * mg, 44 - 2 * mg);
  for (Index m = 0; m < 5; ++m)
    for (Index n = 0; n < 5; ++n) CHECK((extract_view(lf, {m, n}) - center).cwiseAbs().maxCoeff() == 0.0);
  for (Index y = 0; y < lf.height(); ++y) {
    const auto e = epi_slice(lf, EpiOrientation::horizontal, y, 2).data;
    for (Index n = 1; n < e.rows(); ++n) CHECK((e.row(n) - e.row(0)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("synthetic light field: integer disparity is an exact shift") {
  SynthSpec<double> spec;
  spec.texture = random_image(48, 48, 4);
  spec.disparity = 1.0;
  spec.angular_rows = 3;
  spec.angular_cols = 3;
  const auto lf = synth_lightfield(spec);
  const Index h = lf.height(), w = lf.width();
  // Views (0,0) and (2,2) are two angular steps apart in both axes.
  const auto a = extract_view(lf, {0, 0});
  const auto b = extract_view(lf, {2, 2});
  CHECK((a.block(0, 0, h - 2, w - 2) - b.block(2, 2, h - 2, w - 2)).cwiseAbs().maxCoeff() == 0.0);

  // EPI line property for every k.
  SynthSpec<double> s7 = spec;
  s7.angular_rows = s7.angular_cols = 5;
  s7.texture = random_image(64, 64, 5);
  const auto lf7 = synth_lightfield(s7);
  double worst = 0.0;
  for (Index y = 0; y < lf7.height(); ++y) {
    const auto e = epi_slice(lf7, EpiOrientation::horizontal, y, 2).data;
    for (Index k = 1; k < 5; ++k)
      for (Index n = 0; n + k < 5; ++n)
        for (Index x = 0; x + k < e.cols(); ++x) worst = std::max(worst, std::abs(e(n, x) - e(n + k, x + k)));
  }
  CHECK(worst == 0.0);
  const auto v = epi_slice(lf7, EpiOrientation::vertical, 10, 1).data;
  for (Index m = 0; m + 1 < 5; ++m)
    for (Index y = 0; y + 1 < v.cols(); ++y) CHECK(v(m, y) == v(m + 1, y + 1));
}

TEST_CASE("synthetic light field: fractional disparity shears back within tolerance") {
  // Smooth texture so that bicubic resampling error stays small.
  Image<double> tex(72, 72);
  for (Index y = 0; y < 72; ++y)
    for (Index x = 0; x < 72; ++x) tex(y, x) = 0.5 + 0.3 * std::sin(0.31 * x + 0.17 * y) + 0.1 * std::cos(0.23 * y);
  SynthSpec<double> spec;
  spec.texture = tex;
  spec.disparity = 0.5;
  const auto lf = synth_lightfield(spec);
  const Index c = 3;
  double worst = 0.0;
  for (Index y = 0; y < lf.height(); ++y) {
    const auto e = epi_slice(lf, EpiOrientation::horizontal, y, c).data;
    Image<double> row(1, e.cols());
    row.row(0) = e.row(c);
    for (Index n = 0; n < 7; ++n) {
      const double shift = 0.5 * static_cast<double>(n - c);
      // Sample row n at x + shift, which lands on the centre row's x.
      Image<double> en(1, e.cols());
      en.row(0) = e.row(n);
      for (Index x = 4; x + 4 < e.cols(); ++x)
        worst = std::max(worst, std::abs(sample_bicubic(en, 0.0, x + shift) - row(0, x)));
    }
  }
  CHECK(worst <= 1e-2);
}

TEST_CASE("synthetic light field precondition and disparity maps") {
  SynthSpec<double> spec;
  spec.texture = random_image(32, 32, 6);
  spec.disparity = 2.0;  // 2 * 7 >= 32 / 4
  CHECK_THROWS_AS(synth_lightfield(spec), Error);

  spec.disparity = 0.5;
  const Index mg = synth_margin(0.5, 7, 7);
  spec.disparity = Image<double>::Constant(32 - 2 * mg, 32 - 2 * mg, 0.5);
  const auto from_map = synth_lightfield(spec);
  spec.disparity = 0.5;
  const auto from_scalar = synth_lightfield(spec);
  CHECK((from_map.data().array() == from_scalar.data().array()).all());
}

TEST_CASE("BT.601 full-range colour conversion") {
  ColorImage<double> white{Image<double>::Ones(2, 2), Image<double>::Ones(2, 2), Image<double>::Ones(2, 2)};
  CHECK(rgb_to_y(white)(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  ColorImage<double> red{Image<double>::Ones(1, 1), Image<double>::Zero(1, 1), Image<double>::Zero(1, 1)};
  CHECK(rgb_to_y(red)(0, 0) == doctest::Approx(0.299));

  ColorImage<double> rgb{random_image(9, 7, 1), random_image(9, 7, 2), random_image(9, 7, 3)};
  const auto back = ycbcr_merge(ycbcr_split(rgb));
  for (int c = 0; c < 3; ++c) CHECK((back[c] - rgb[c]).cwiseAbs().maxCoeff() <= 1e-6);

  CHECK_THROWS_AS(planes_from_interleaved(Image<double>(2, 8), 4), Error);
}

TEST_CASE("bicubic: constants, linearity and hand-computed weights") {
  const Image<double> flat = Image<double>::Constant(8, 12, 0.7);
  for (int a : {2, 4}) {
    CHECK((bicubic_upsample(flat, a).array() - 0.7).abs().maxCoeff() <= 1e-12);
    CHECK((bicubic_downsample(flat, a).array() - 0.7).abs().maxCoeff() <= 1e-12);
  }

  const auto x = random_image(16, 12, 7), y = random_image(16, 12, 8);
  for (int a : {2, 4}) {
    const Image<double> lhs = bicubic_downsample(Image<double>(0.3 * x + 1.7 * y), a, Clamp::no);
    const Image<double> rhs = 0.3 * bicubic_downsample(x, a, Clamp::no) + 1.7 * bicubic_downsample(y, a, Clamp::no);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-6);
    const Image<double> ul = bicubic_upsample(Image<double>(0.3 * x - 0.2 * y), a, Clamp::no);
    const Image<double> ur = 0.3 * bicubic_upsample(x, a, Clamp::no) - 0.2 * bicubic_upsample(y, a, Clamp::no);
    CHECK((ul - ur).cwiseAbs().maxCoeff() <= 1e-6);
  }

  // 4x4 one-hot at (1, 2), downsampled by 2. The kernel is stretched by 2 and
  // sampled at offsets (j - 0.5) / 2 and (j - 2.5) / 2, borders replicated:
  // output 0 weights (0.5, 0.43359375, 0.11328125, -0.046875) on inputs 0..3,
  // output 1 the mirror image.
  Image<double> one_hot = Image<double>::Zero(4, 4);
  one_hot(1, 2) = 1.0;
  const auto d = bicubic_downsample(one_hot, 2);
  const double w0[4] = {0.5, 0.43359375, 0.11328125, -0.046875};
  const double w1[4] = {-0.046875, 0.11328125, 0.43359375, 0.5};
  const double* w[2] = {w0, w1};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(d(i, j) == doctest::Approx(w[i][1] * w[j][2]).epsilon(1e-14));
  CHECK(d(0, 0) == doctest::Approx(0.0491180419921875));

  CHECK_THROWS_AS(bicubic_downsample(Image<double>(6, 8), 4), Error);
}

TEST_CASE("bicubic: up then down on a band-limited image") {
  Image<double> img(32, 32);
  for (Index y = 0; y < 32; ++y)
    for (Index x = 0; x < 32; ++x)
      img(y, x) = 0.5 + 0.25 * std::cos(2 * std::numbers::pi * x / 16.0) * std::cos(2 * std::numbers::pi * y / 20.0);
  for (int a : {2, 4}) {
    const auto rt = bicubic_downsample(bicubic_upsample(img, a), a);
    CHECK((rt - img).cwiseAbs().maxCoeff() <= 1e-2);
  }
}

TEST_CASE("spatial/angular reshape") {
  // 2x2 spatial, 2x2 angular, c = 1, F_s[y,x,0,m*2+n] = 1000y + 100x + 10m + n.
  Tensor4<double> fs(2, 2, 1, 4);
  for (Index y = 0; y < 2; ++y)
    for (Index x = 0; x < 2; ++x)
      for (Index m = 0; m < 2; ++m)
        for (Index n = 0; n < 2; ++n) fs(y, x, 0, m * 2 + n) = 1000.0 * y + 100.0 * x + 10.0 * m + n;
  const auto fa = reshape_spatial_to_angular(fs, 2, 2);
  REQUIRE(fa.shape() == Shape4{2, 2, 1, 4});
  int checked = 0;
  for (Index m = 0; m < 2; ++m)
    for (Index n = 0; n < 2; ++n)
      for (Index y = 0; y < 2; ++y)
        for (Index x = 0; x < 2; ++x, ++checked) CHECK(fa(m, n, 0, y * 2 + x) == 1000.0 * y + 100.0 * x + 10.0 * m + n);
  CHECK(checked == 16);

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1, 1);
  Tensor4<double> r(3, 5, 4, 6);
  for (Index i = 0; i < r.size(); ++i) r.data()[i] = u(rng);
  const auto back = reshape_angular_to_spatial(reshape_spatial_to_angular(r, 2, 3), 3, 5);
  CHECK((back.array() == r.array()).all());

  CHECK((reshape_spatial_to_angular(Tensor4<double>::Constant({2, 3, 2, 4}, 1.0), 2, 2).array() == 1.0).all());
  CHECK_THROWS_AS(reshape_spatial_to_angular(r, 2, 2), Error);
  CHECK_THROWS_AS(reshape_angular_to_spatial(reshape_spatial_to_angular(r, 2, 3), 4, 4), Error);
}

TEST_CASE("scene directories") {
  const auto dir = scratch("scene");
  Scene s;
  s.name = "tiny";
  s.luma = LightField<float>(2, 3, 4, 5);
  for (Index i = 0; i < s.luma.data().size(); ++i) s.luma.data().data()[i] = static_cast<float>(i % 256) / 255.0f;
  s.disparity = 0.5;
  save_scene(dir, s);
  CHECK(fs::exists(dir / "view_01_02.png"));
  CHECK(fs::exists(dir / "meta.json"));

  const Scene back = load_scene(dir);
  CHECK(back.name == "tiny");
  REQUIRE(back.disparity.has_value());
  CHECK(*back.disparity == 0.5);
  CHECK(back.luma.data().shape() == Shape4{2, 3, 4, 5});
  CHECK((back.luma.data().array() - s.luma.data().array()).abs().maxCoeff() <= 1e-6f);

  // 8-bit 255 is exactly 1.0.
  write_png(dir / "white.png", Image<float>::Ones(2, 2));
  CHECK(read_png(dir / "white.png").planes[0](1, 1) == 1.0f);

  fs::remove(dir / "view_01_02.png");
  CHECK_THROWS_WITH_AS(load_lightfield(dir), doctest::Contains("incomplete light field: (1,2)"), Error);

  // Unpadded names are accepted too.
  const auto dir2 = scratch("unpadded");
  save_scene(dir2, s);
  fs::rename(dir2 / "view_01_02.png", dir2 / "view_1_2.png");
  CHECK(load_lightfield(dir2).data().shape() == Shape4{2, 3, 4, 5});

  // A view of the wrong size is named.
  write_png(dir2 / "view_1_2.png", Image<float>::Zero(3, 3));
  CHECK_THROWS_WITH_AS(load_lightfield(dir2), doctest::Contains("view_1_2.png"), Error);
}

TEST_CASE("colour scenes keep chroma") {
  const auto dir = scratch("colour");
  Scene s;
  s.name = "rgb";
  s.luma = LightField<float>(1, 2, 3, 3);
  s.luma.data().array() = 0.5f;
  LightField<float> cb(1, 2, 3, 3), cr(1, 2, 3, 3);
  cb.data().array() = 0.4f;
  cr.data().array() = 0.6f;
  s.chroma = std::array{cb, cr};
  save_scene(dir, s);
  const auto png = read_png(dir / "view_00_01.png");
  CHECK(png.channels == 3);
  const Scene back = load_scene(dir);
  REQUIRE(back.chroma.has_value());
  CHECK(std::abs(back.luma.data()(0, 1, 1, 1) - 0.5f) < 3e-3f);
  CHECK(std::abs((*back.chroma)[0].data()(0, 1, 1, 1) - 0.4f) < 6e-3f);
}

TEST_CASE("array container round trip and errors") {
  const auto dir = scratch("array");
  Tensor4<float> t(2, 3, 4, 5);
  for (Index i = 0; i < t.size(); ++i) t.data()[i] = static_cast<float>(std::sin(i * 0.37));
  write_array(dir / "a.bin", t);
  const auto back = read_array(dir / "a.bin");
  CHECK(back.shape() == t.shape());
  CHECK(std::memcmp(back.data(), t.data(), sizeof(float) * static_cast<std::size_t>(t.size())) == 0);

  const auto size = fs::file_size(dir / "a.bin");
  fs::resize_file(dir / "a.bin", size - 7);
  CHECK_THROWS_WITH_AS(read_array(dir / "a.bin"), doctest::Contains("container truncated"), Error);
}
