#include <catch2/catch.hpp>

#include "stv/util.hpp"
#include "stv/volume.hpp"

using namespace stv;

TEST_CASE("volume indexing and crop carry origins", "[volume]") {
  ScalarVolume v(4, 3, 2);
  REQUIRE(v.size() == 24);
  v.at(1, 2, 1) = 7.5;
  REQUIRE(v(1, 2, 1) == 7.5);

  ScalarVolume c = v.crop(1, 3, 1, 2, 0, 1);
  REQUIRE(c.width() == 3);
  REQUIRE(c.height() == 2);
  REQUIRE(c.frames() == 2);
  REQUIRE(c.origin_x == 1);
  REQUIRE(c.origin_y == 1);
  REQUIRE(c.at_abs(1, 2, 1) == 7.5);
}

TEST_CASE("splitmix64 is stable and uniform helpers stay in range", "[volume]") {
  SplitMix64 a(42), b(42);
  for (int i = 0; i < 100; ++i) REQUIRE(a.next() == b.next());
  SplitMix64 r(7);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    REQUIRE(r.bounded(13) < 13);
  }
}

TEST_CASE("fnv1a64 distinguishes content and chains", "[volume]") {
  REQUIRE(fnv1a64("abc") != fnv1a64("abd"));
  REQUIRE(fnv1a64("b", fnv1a64("a")) == fnv1a64("ab"));
  REQUIRE(hex16(0).size() == 16);
}

TEST_CASE("binary packing round-trips", "[volume]") {
  std::string buf;
  put_u16(buf, 65535);
  put_u32(buf, 123456789u);
  put_i32(buf, -42);
  put_f64(buf, -0.1234567890123456789);
  ByteReader rd(buf, "test");
  REQUIRE(rd.u16() == 65535);
  REQUIRE(rd.u32() == 123456789u);
  REQUIRE(rd.i32() == -42);
  REQUIRE(rd.f64() == -0.1234567890123456789);
}
