// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "favf/csv.hpp"
#include "favf/date.hpp"
#include "favf/error.hpp"
#include "favf/rng.hpp"

using namespace favf;

TEST(Rng, SplitMixReferenceStream) {
  // Reference outputs of SplitMix64 seeded with 0 (first three draws).
  Rng r(0);
  EXPECT_EQ(r.next_u64(), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(r.next_u64(), 0x6E789E6AA1B965F4ULL);
  EXPECT_EQ(r.next_u64(), 0x06C45D188009454FULL);
}

TEST(Rng, UniformInUnitInterval) {
  Rng r(123);
  double lo = 1.0, hi = 0.0, sum = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  EXPECT_NEAR(sum / 20000, 0.5, 0.01);
  EXPECT_LT(lo, 0.001);
  EXPECT_GT(hi, 0.999);
}

TEST(Rng, NormalMoments) {
  Rng r(99);
  double s = 0.0, s2 = 0.0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    ASSERT_TRUE(std::isfinite(z));
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.02);
  EXPECT_NEAR(s2 / n, 1.0, 0.03);
}

TEST(Rng, NormalIsCosineBranchOfBoxMuller) {
  Rng a(5), b(5);
  const double u1 = 1.0 - a.uniform();
  const double u2 = a.uniform();
  const double expected = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  EXPECT_DOUBLE_EQ(b.normal(), expected);
}

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(Date, RoundTrip) {
  for (const char* s : {"1970-01-01", "2000-02-29", "2019-12-31", "2024-06-01"}) {
    EXPECT_EQ(format_date(parse_date(s)), s);
  }
}

TEST(Date, RejectsMalformed) {
  for (const char* s : {"", "2019-13-01", "2019-02-30", "19-01-01", "2019/01/01", "2019-01-01x"}) {
    EXPECT_THROW(parse_date(s), Error) << s;
  }
}

TEST(Date, MillisecondConversion) {
  const Date d = parse_date("2021-03-04");
  EXPECT_EQ(date_from_ms(date_to_ms(d)), d);
  EXPECT_EQ(date_from_ms(date_to_ms(d) + 86399999), d);
  EXPECT_EQ(date_from_ms(date_to_ms(d) - 1), parse_date("2021-03-03"));
}

TEST(Csv, FormatDoubleRoundTrips) {
  Rng r(7);
  for (int i = 0; i < 2000; ++i) {
    const double v = std::ldexp(r.normal(), static_cast<int>(r.next_u64() % 80) - 40);
    double back = 0.0;
    ASSERT_TRUE(csv::parse_double(csv::format_double(v), back));
    ASSERT_EQ(back, v);
  }
  EXPECT_EQ(csv::format_double(0.5), "0.5");
}

TEST(Csv, StrictParse) {
  double v = 0.0;
  EXPECT_TRUE(csv::parse_double("1e-3", v));
  EXPECT_DOUBLE_EQ(v, 1e-3);
  EXPECT_FALSE(csv::parse_double("", v));
  EXPECT_FALSE(csv::parse_double("1.5x", v));
  EXPECT_FALSE(csv::parse_double("abc", v));
}

TEST(Csv, SkipsCommentsAndBlankLines) {
  std::istringstream in("# provenance\ndate,a\n\n2020-01-01,1\n# note\n2020-01-02,2\n");
  const auto t = csv::parse(in, "mem");
  ASSERT_EQ(t.header.size(), 2u);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[1][1], "2");
  EXPECT_EQ(t.line_numbers[1], 6u);
  EXPECT_EQ(t.column("a"), 1u);
  EXPECT_THROW(t.column("missing"), Error);
}
