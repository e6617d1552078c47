#include <doctest.h>

#include <cmath>
#include <random>

#include "hyperlearn/error.hpp"
#include "hyperlearn/text.hpp"

using namespace hyperlearn;

TEST_CASE("format_real round-trips every double it prints") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss(0.0, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double v = gauss(rng) * std::pow(10.0, i % 40 - 20);
    CHECK(text::parse_real(text::format_real(v), "v") == v);
  }
  CHECK(text::format_real(0.5) == "0.5");
  CHECK(text::format_real(3.0) == "3");
}

TEST_CASE("strict parses reject trailing junk") {
  CHECK(text::parse_real(" 1.5 ", "x") == 1.5);
  CHECK(text::parse_real("+2", "x") == 2.0);
  CHECK_THROWS_AS(text::parse_real("1.5x", "x"), InvalidArgument);
  CHECK_THROWS_AS(text::parse_real("", "x"), InvalidArgument);
  CHECK(text::parse_uint("42", "n") == 42);
  CHECK_THROWS_AS(text::parse_uint("-1", "n"), InvalidArgument);
  CHECK_THROWS_AS(text::parse_uint("4.0", "n"), InvalidArgument);
  CHECK(text::parse_bool("true", "b"));
  CHECK_FALSE(text::parse_bool("0", "b"));
  CHECK_THROWS_AS(text::parse_bool("maybe", "b"), InvalidArgument);
}

TEST_CASE("split keeps empty fields, fields collapses whitespace") {
  CHECK(text::split("a,,b", ',').size() == 3);
  CHECK(text::split("", ',').size() == 1);
  const auto f = text::fields("  a \t b  c ");
  REQUIRE(f.size() == 3);
  CHECK(f[2] == "c");
  CHECK(text::trim(" \tx y\r\n") == "x y");
}

TEST_CASE("fnv1a reference values") {
  // Published FNV-1a 64-bit test vectors.
  CHECK(text::fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(text::fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(text::fnv1a("foobar") == 0x85944171f73967e8ULL);
}
