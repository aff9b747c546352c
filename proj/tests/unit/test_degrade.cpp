#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "degradelab/degrade.hpp"
#include "degradelab/error.hpp"

using namespace degradelab;
using namespace testutil;
namespace fs = std::filesystem;

TEST_CASE("convolve2d") {
  SUBCASE("constant image stays constant") {
    const Image x(12, 12, ValueDomain::Unit, 0.37);
    const Kernel2D k = random_kernel(5, 1);
    const Image y = convolve2d(x, k);
    for (double v : y.data) CHECK(std::abs(v - 0.37) < 1e-14);
  }
  SUBCASE("unit 1x1 kernel is the identity") {
    const Image x = random_unit(7, 9, 2);
    CHECK(convolve2d(x, Kernel2D(1, 1.0)).data == x.data);
  }
  SUBCASE("valid mode against a direct loop with k3") {
    const Image x = random_unit(28, 26, 3);
    const Kernel2D k = benchmark_kernel(3);
    const Image y = convolve2d(x, k, Boundary::Valid);
    REQUIRE(y.height == 9);
    REQUIRE(y.width == 7);
    double worst = 0.0;
    for (int c = 0; c < 3; ++c)
      for (int i = 0; i < y.height; ++i)
        for (int j = 0; j < y.width; ++j) {
          double acc = 0.0;
          for (int a = 0; a < 20; ++a)
            for (int b = 0; b < 20; ++b) acc += k(a, b) * x.at(c, i + a, j + b);
          worst = std::max(worst, std::abs(acc - y.at(c, i, j)));
        }
    CHECK(worst < 1e-12);
  }
  SUBCASE("odd p - s with a padded boundary is rejected") {
    const Image x = random_unit(16, 16, 4);
    CHECK_THROWS_AS(convolve2d(x, benchmark_kernel(3)), Error);
    CHECK_THROWS_AS(degrade(x, Kernel2D(3, 1.0 / 9), 2), Error);
  }
  SUBCASE("kernel larger than the image is rejected") {
    CHECK_THROWS_AS(convolve2d(random_unit(8, 8, 1), Kernel2D(9, 1.0 / 81),
                               Boundary::Valid),
                    Error);
  }
}

TEST_CASE("decimate") {
  const Image x = random_unit(8, 12, 5);
  CHECK(decimate(x, 1).data == x.data);
  SUBCASE("ramp picks even rows and columns") {
    Image ramp(4, 4);
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < 4; ++y)
        for (int xx = 0; xx < 4; ++xx) ramp.at(c, y, xx) = 10 * y + xx;
    const Image d = decimate(ramp, 2);
    CHECK(d.at(0, 0, 0) == 0.0);
    CHECK(d.at(0, 0, 1) == 2.0);
    CHECK(d.at(0, 1, 0) == 20.0);
    CHECK(d.at(2, 1, 1) == 22.0);
    const Image ph = decimate(ramp, 2, {1, 1});
    CHECK(ph.at(0, 0, 0) == 11.0);
  }
  SUBCASE("stride 2 twice is stride 4") {
    CHECK(decimate(decimate(x, 2), 2).data == decimate(x, 4).data);
  }
  SUBCASE("indivisible dims are rejected") {
    CHECK_THROWS_AS(decimate(x, 5), Error);
    CHECK_THROWS_AS(decimate(x, 2, {2, 0}), Error);
  }
}

TEST_CASE("degrade") {
  SUBCASE("2x2 box equals average pooling") {
    const Image x = random_unit(10, 14, 6);
    const Image y = degrade(x, Kernel2D(2, 0.25), 2);
    REQUIRE(y.height == 5);
    REQUIRE(y.width == 7);
    for (int c = 0; c < 3; ++c)
      for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 7; ++j) {
          const double avg = (x.at(c, 2 * i, 2 * j) + x.at(c, 2 * i + 1, 2 * j) +
                              x.at(c, 2 * i, 2 * j + 1) +
                              x.at(c, 2 * i + 1, 2 * j + 1)) / 4;
          CHECK(std::abs(y.at(c, i, j) - avg) < 1e-15);
        }
  }
  SUBCASE("constant image gives a constant image") {
    const Image y = degrade(Image(24, 24, ValueDomain::Unit, -0.25),
                            benchmark_kernel(2), 2);
    CHECK(y.height == 12);
    for (double v : y.data) CHECK(std::abs(v + 0.25) < 1e-14);
  }
  SUBCASE("anisotropic k4 against a straight-loop reference") {
    const Image x = random_unit(40, 36, 7);
    const Kernel2D k = benchmark_kernel(4);
    CHECK(max_abs_diff(degrade(x, k, 2), brute_degrade(x, k, 2)) < 1e-10);
    const Kernel2D r = random_kernel(6, 8);  // asymmetric taps pin correlation
    CHECK(max_abs_diff(degrade(x, r, 2), brute_degrade(x, r, 2)) < 1e-12);
    CHECK(max_abs_diff(degrade(x, random_kernel(8, 9), 4),
                       brute_degrade(x, random_kernel(8, 9), 4)) < 1e-12);
  }
  SUBCASE("linearity") {
    const Image a = random_unit(24, 24, 10), b = random_unit(24, 24, 11);
    Image mix = a;
    for (std::size_t i = 0; i < mix.data.size(); ++i) {
      mix.data[i] = 0.7 * a.data[i] - 1.3 * b.data[i];
    }
    const Kernel2D k = benchmark_kernel(4);
    const Image da = degrade(a, k, 2), db = degrade(b, k, 2);
    const Image dm = degrade(mix, k, 2);
    double worst = 0.0;
    for (std::size_t i = 0; i < dm.data.size(); ++i) {
      worst = std::max(worst, std::abs(dm.data[i] - (0.7 * da.data[i] - 1.3 * db.data[i])));
    }
    CHECK(worst < 1e-10);
  }
  SUBCASE("adjoint identity <D x, y> = <x, D^T y>") {
    for (Boundary bd : {Boundary::Reflect, Boundary::Periodic}) {
      const Image x = random_unit(20, 24, 12), g = random_unit(10, 12, 13);
      const Kernel2D k = random_kernel(6, 14);
      const Image dx = degrade(x, k, 2, bd);
      const Image dtg = degrade_adjoint(g, k, 2, 20, 24, bd);
      double lhs = 0.0, rhs = 0.0;
      for (std::size_t i = 0; i < g.data.size(); ++i) lhs += dx.data[i] * g.data[i];
      for (std::size_t i = 0; i < x.data.size(); ++i) rhs += x.data[i] * dtg.data[i];
      CHECK(std::abs(lhs - rhs) < 1e-12 * std::max(1.0, std::abs(lhs)));
    }
  }
  SUBCASE("indivisible input is rejected") {
    CHECK_THROWS_AS(degrade(random_unit(9, 8, 1), Kernel2D(2, 0.25), 2), Error);
  }
}

TEST_CASE("upsampling and cropping") {
  const Image x(5, 7, ValueDomain::Unit, 0.4);
  const Image up = upsample_bicubic(x, 2);
  CHECK(up.height == 10);
  CHECK(up.width == 14);
  for (double v : up.data) CHECK(std::abs(v - 0.4) < 1e-14);
  const Image c = crop_to_multiple(random_unit(11, 9, 1), 4);
  CHECK(c.height == 8);
  CHECK(c.width == 8);
}

TEST_CASE("synthesize_dataset") {
  const fs::path dir = scratch_dir("synth");
  const fs::path src = dir / "src";
  fs::create_directories(src);
  for (int i = 0; i < 4; ++i) {
    save_png(denormalize(make_texture(32, 100 + i)),
             src / ("img" + std::to_string(i) + ".png"));
  }
  const Kernel2D k = benchmark_kernel(1);
  const DatasetSplit a = synthesize_dataset(src, k, "k1", 2, 0.5, 5, dir / "a");
  const DatasetSplit b = synthesize_dataset(src, k, "k1", 2, 0.5, 5, dir / "b");

  CHECK(a.hr_set.size() == 2);
  CHECK(a.lr_set.size() == 2);
  std::set<fs::path> hr_src, lr_src;
  for (const auto& e : a.entries) (e.role == "hr" ? hr_src : lr_src).insert(e.source);
  for (const auto& s : hr_src) CHECK(lr_src.count(s) == 0);

  std::ifstream ma(dir / "a" / "manifest.tsv"), mb(dir / "b" / "manifest.tsv");
  const std::string ta((std::istreambuf_iterator<char>(ma)), {});
  const std::string tb((std::istreambuf_iterator<char>(mb)), {});
  CHECK(!ta.empty());
  CHECK(ta == tb);
  CHECK(ta.find("\tk1\t2") != std::string::npos);

  const auto entries = read_manifest(dir / "a" / "manifest.tsv");
  REQUIRE(entries.size() == 4);
  for (const auto& e : entries) {
    if (e.role != "lr") continue;
    const Image lr = load_png(dir / "a" / e.relative_path);
    const Image ref = degrade(load_png(e.source), k, 2);
    CHECK(psnr_rgb(lr, to_byte(ref)) >= 50.0);
  }

  SUBCASE("too few images") {
    const fs::path one = dir / "one";
    fs::create_directories(one);
    fs::copy_file(src / "img0.png", one / "img0.png");
    CHECK_THROWS_AS(synthesize_dataset(one, k, "k1", 2, 0.5, 0, dir / "o"), Error);
    CHECK_THROWS_AS(synthesize_dataset(dir / "empty_missing", k, "k1", 2, 0.5, 0,
                                       dir / "o"),
                    Error);
  }
  fs::remove_all(dir);
}
