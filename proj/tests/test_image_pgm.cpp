#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "kpnp/image.hpp"
#include "kpnp/pgm.hpp"

using namespace kpnp;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/kpnp_test_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("psnr reference values") {
  Vec ref(16, 0.5), x0(16, 0.0), x1(16, 1.0);
  CHECK(psnr(ref, ref) == std::numeric_limits<double>::infinity());
  // MSE 0.25 -> 10*log10(4)
  CHECK(std::abs(psnr(x0, ref) - 6.020599913279624) < 1e-12);
  Vec ones_ref(16, 1.0);
  CHECK(psnr(x0, ones_ref) == 0.0);
  CHECK_THROWS_AS(psnr(x0, Vec(4, 0.0)), Error);
}

TEST_CASE("clamp01 clips out-of-range intensities") {
  CHECK(clamp01({-0.5, 0.25, 1.5}) == Vec{0.0, 0.25, 1.0});
}

TEST_CASE("synthetic image is deterministic and in range") {
  Image a = synthetic_image(16, 12), b = synthetic_image(16, 12);
  CHECK(a.data == b.data);
  CHECK(a.width == 16);
  CHECK(a.height == 12);
  for (double v : a.data) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  // not constant, otherwise it is useless as a guide
  CHECK(*std::max_element(a.data.begin(), a.data.end()) >
        *std::min_element(a.data.begin(), a.data.end()) + 0.1);
}

TEST_CASE("pgm binary roundtrip is lossless on the 8-bit grid") {
  Image img(7, 5);
  for (std::size_t i = 0; i < img.size(); ++i) img.data[i] = double(i % 256) / 255.0;
  TempFile f("roundtrip.pgm");
  write_pgm(f.path, img);
  Image back = read_pgm(f.path);
  REQUIRE(back.width == 7);
  REQUIRE(back.height == 5);
  for (std::size_t i = 0; i < img.size(); ++i)
    CHECK(std::abs(back.data[i] - img.data[i]) < 1e-12);
}

TEST_CASE("ascii pgm with comments parses") {
  TempFile f("ascii.pgm");
  {
    std::ofstream out(f.path);
    out << "P2\n# a comment\n3 2\n# another\n255\n0 128 255\n64 32 16\n";
  }
  Image img = read_pgm(f.path);
  REQUIRE(img.width == 3);
  REQUIRE(img.height == 2);
  CHECK(img.at(0, 0) == 0.0);
  CHECK(img.at(2, 0) == 1.0);
  CHECK(std::abs(img.at(1, 0) - 128.0 / 255.0) < 1e-15);
}

TEST_CASE("16-bit binary pgm scales by its maxval") {
  TempFile f("wide.pgm");
  {
    std::ofstream out(f.path, std::ios::binary);
    out << "P5\n2 1\n65535\n";
    unsigned char bytes[4] = {0xFF, 0xFF, 0x00, 0x00};
    out.write(reinterpret_cast<char*>(bytes), 4);
  }
  Image img = read_pgm(f.path);
  CHECK(img.data[0] == 1.0);
  CHECK(img.data[1] == 0.0);
}

TEST_CASE("malformed pgm inputs raise i/o errors") {
  TempFile f("bad.pgm");
  {
    std::ofstream out(f.path);
    out << "P6\n2 2\n255\n";
  }
  CHECK_THROWS_AS(read_pgm(f.path), IoError);
  {
    std::ofstream out(f.path);
    out << "P5\n2 2\n255\nab";  // truncated payload
  }
  CHECK_THROWS_AS(read_pgm(f.path), IoError);
  {
    std::ofstream out(f.path);
    out << "P2\n2 1\n255\n300 0\n";  // sample above maxval
  }
  CHECK_THROWS_AS(read_pgm(f.path), IoError);
  CHECK_THROWS_AS(read_pgm("/nonexistent/path.pgm"), IoError);
}

TEST_CASE("write clamps and quantizes to 255 levels") {
  Image img(2, 1);
  img.data = {1.7, -0.3};
  TempFile f("clamp.pgm");
  write_pgm(f.path, img);
  Image back = read_pgm(f.path);
  CHECK(back.data[0] == 1.0);
  CHECK(back.data[1] == 0.0);
}
