#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "wildfire/rng.hpp"
#include "wildfire/timeutil.hpp"

using namespace wildfire;

TEST_CASE("rng streams are deterministic and distinct") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());

  Rng base(7);
  Rng s0 = base.stream(0);
  Rng s1 = base.stream(1);
  REQUIRE(s0.next_u64() != s1.next_u64());

  // stream() does not consume parent state
  Rng c(7), d(7);
  (void)c.stream(3);
  REQUIRE(c.next_u64() == d.next_u64());
}

TEST_CASE("uniform_below covers the range exactly") {
  Rng rng(1);
  std::set<uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    uint64_t v = rng.uniform_below(7);
    REQUIRE(v < 7);
    seen.insert(v);
  }
  REQUIRE(seen.size() == 7);
  REQUIRE(Rng(9).uniform_below(1) == 0);
}

TEST_CASE("uniform_real stays in [0,1)") {
  Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    double v = rng.uniform_real();
    REQUIRE(v >= 0.0);
    REQUIRE(v < 1.0);
  }
}

TEST_CASE("normal draws have sane moments") {
  Rng rng(5);
  double sum = 0, sum2 = 0;
  int n = 20000;
  for (int i = 0; i < n; ++i) {
    double v = rng.normal();
    sum += v;
    sum2 += v * v;
  }
  double mean = sum / n;
  double var = sum2 / n - mean * mean;
  REQUIRE(std::abs(mean) < 0.05);
  REQUIRE(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("index permutation is a permutation") {
  Rng rng(11);
  auto perm = index_permutation(257, rng);
  std::set<uint32_t> ids(perm.begin(), perm.end());
  REQUIRE(ids.size() == 257);
  REQUIRE(*ids.begin() == 0);
  REQUIRE(*ids.rbegin() == 256);

  Rng rng2(11);
  auto perm2 = index_permutation(257, rng2);
  REQUIRE(perm == perm2);
}

TEST_CASE("iso8601 round trip") {
  const char* samples[] = {
      "2014-09-13T00:00:00Z", "1970-01-01T00:00:00Z", "1969-12-31T23:59:59Z",
      "2000-02-29T12:30:45Z", "2017-10-09T06:00:00Z", "2099-12-31T23:59:59Z",
  };
  for (const char* s : samples) REQUIRE(format_iso8601(parse_iso8601(s)) == s);

  REQUIRE(parse_iso8601("1970-01-01T00:00:00Z") == 0);
  REQUIRE(parse_iso8601("1970-01-02T00:00:00Z") == kSecondsPerDay);
  REQUIRE(parse_iso8601("2014-09-13T01:00:00Z") -
              parse_iso8601("2014-09-13T00:00:00Z") ==
          kSecondsPerHour);
}

TEST_CASE("iso8601 rejects malformed input") {
  REQUIRE_THROWS_AS(parse_iso8601("2014-09-13 00:00:00Z"), TimeParseError);
  REQUIRE_THROWS_AS(parse_iso8601("2014-09-13T00:00:00"), TimeParseError);
  REQUIRE_THROWS_AS(parse_iso8601("2014-13-01T00:00:00Z"), TimeParseError);
  REQUIRE_THROWS_AS(parse_iso8601("not a date"), TimeParseError);
}
