#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "lingdiv/common.hpp"
#include "lingdiv/csv.hpp"
#include "lingdiv/rng.hpp"
#include "lingdiv/utc.hpp"

using namespace lingdiv;

TEST_CASE("trim and split") {
    CHECK(trim("  a b  ") == "a b");
    CHECK(trim("\t\r\n") == "");
    CHECK(split("a,b,,c", ',') == std::vector<std::string>{"a", "b", "", "c"});
    CHECK(split("", ',') == std::vector<std::string>{""});
}

TEST_CASE("language code shape") {
    CHECK(is_language_code("eng"));
    CHECK(is_language_code("und"));
    CHECK_FALSE(is_language_code("en"));
    CHECK_FALSE(is_language_code("ENG"));
    CHECK_FALSE(is_language_code("e1g"));
    CHECK_FALSE(is_language_code("engl"));
}

TEST_CASE("hash functions match frozen values") {
    CHECK(fnv1a64("abc") == 16654208175385433931ull);
    CHECK(splitmix64(42) == 13679457532755275413ull);
    CHECK(derive_seed(7, "a") == 18268711025061130002ull);
}

TEST_CASE("rng stream is bit-stable across runs") {
    Rng r(12345);
    CHECK(r.next_u64() == 6597103971274460346ull);
    CHECK(r.next_u64() == 7386862472818278521ull);
    CHECK(r.next_u64() == 12716877617435052285ull);
    Rng u(12345);
    CHECK(u.uniform01() == Catch::Approx(0.35762972288842587).epsilon(0.0));
}

TEST_CASE("rng same seed same stream, different seed different stream") {
    Rng a(99), b(99), c(100);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 64; ++i) {
        auto x = a.next_u64(), y = b.next_u64(), z = c.next_u64();
        all_equal = all_equal && (x == y);
        any_diff = any_diff || (x != z);
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("uniform_below stays in range and covers all residues") {
    Rng r(7);
    std::vector<int> hits(5, 0);
    for (int i = 0; i < 5000; ++i) {
        auto v = r.uniform_below(5);
        REQUIRE(v < 5);
        ++hits[static_cast<std::size_t>(v)];
    }
    for (int h : hits) CHECK(h > 800);
}

TEST_CASE("uniform01 bounds and mean") {
    Rng r(11);
    double sum = 0.0;
    for (int i = 0; i < 20000; ++i) {
        double v = r.uniform01();
        REQUIRE(v >= 0.0);
        REQUIRE(v < 1.0);
        sum += v;
    }
    CHECK(sum / 20000.0 == Catch::Approx(0.5).margin(0.01));
}

TEST_CASE("normal and gamma moments") {
    Rng r(13);
    double sum = 0.0, sq = 0.0;
    const int n = 50000;
    for (int i = 0; i < n; ++i) {
        double v = r.normal();
        sum += v;
        sq += v * v;
    }
    CHECK(sum / n == Catch::Approx(0.0).margin(0.02));
    CHECK(sq / n == Catch::Approx(1.0).margin(0.03));

    double gsum = 0.0;
    for (int i = 0; i < n; ++i) gsum += r.gamma(2.0, 0.5);
    CHECK(gsum / n == Catch::Approx(1.0).margin(0.02));
    double bsum = 0.0;
    for (int i = 0; i < n; ++i) bsum += r.gamma(0.5, 2.0);
    CHECK(bsum / n == Catch::Approx(1.0).margin(0.03));
}

TEST_CASE("pick_cumulative respects weights") {
    Rng r(21);
    auto cum = cumulative_weights(std::vector<double>{1.0, 3.0, 6.0});
    std::vector<int> hits(3, 0);
    for (int i = 0; i < 10000; ++i) ++hits[r.pick_cumulative(cum)];
    CHECK(hits[0] / 10000.0 == Catch::Approx(0.1).margin(0.02));
    CHECK(hits[1] / 10000.0 == Catch::Approx(0.3).margin(0.02));
    CHECK(hits[2] / 10000.0 == Catch::Approx(0.6).margin(0.02));
}

TEST_CASE("csv quoted fields round-trip") {
    std::string line = R"(a,"b,c","say ""hi""",d)";
    auto fields = csv::parse_line(line);
    REQUIRE(fields == std::vector<std::string>{"a", "b,c", "say \"hi\"", "d"});
    std::ostringstream out;
    csv::write_row(out, fields);
    auto back = csv::parse_line(out.str().substr(0, out.str().size() - 1));
    CHECK(back == fields);
}

TEST_CASE("csv table header lookup") {
    std::istringstream in("lang,count\r\neng,10\nmri,2\n");
    auto table = csv::read(in);
    REQUIRE(table.rows.size() == 2);
    CHECK(table.column("lang") == 0);
    CHECK(table.column("count") == 1);
    CHECK(table.rows[0][1] == "10");
    CHECK_FALSE(table.has_column("nope"));
    CHECK_THROWS_AS(table.column("nope"), data_error);
}

TEST_CASE("format_fraction prints six decimals") {
    CHECK(csv::format_fraction(0.0) == "0.000000");
    CHECK(csv::format_fraction(0.97) == "0.970000");
    CHECK(csv::format_fraction(1.0) == "1.000000");
    CHECK(csv::format_fraction(1.0 / 3.0) == "0.333333");
}

TEST_CASE("strict numeric parsing") {
    CHECK(csv::parse_double("0.5", "x") == 0.5);
    CHECK(csv::parse_int("42", "x") == 42);
    CHECK_THROWS_AS(csv::parse_double("0.5x", "x"), data_error);
    CHECK_THROWS_AS(csv::parse_int("", "x"), data_error);
    CHECK_THROWS_AS(csv::parse_int("1.5", "x"), data_error);
}

TEST_CASE("utc parse and format round-trip") {
    CHECK(utc::parse_instant("1970-01-01T00:00:00Z") == 0);
    CHECK(utc::parse_instant("2020-06-15T10:00:00Z") == 1592215200);
    CHECK(utc::parse_instant("2020-06-15T10:00:00+02:00") == 1592215200 - 7200);
    CHECK(utc::parse_instant("2020-06-15T10:00:00.123Z") == 1592215200);
    CHECK(utc::format_instant(1592215200) == "2020-06-15T10:00:00Z");
    for (std::int64_t t : {0L, 951782400L, 1592215200L, 4102444799L}) {
        CHECK(utc::parse_instant(utc::format_instant(t)) == t);
    }
}

TEST_CASE("utc rejects malformed timestamps") {
    CHECK_THROWS_AS(utc::parse_instant("2020-06-15"), data_error);
    CHECK_THROWS_AS(utc::parse_instant("2020-13-01T00:00:00Z"), data_error);
    CHECK_THROWS_AS(utc::parse_instant("2020-02-30T00:00:00Z"), data_error);
    CHECK_THROWS_AS(utc::parse_instant("2020-06-15T24:00:00Z"), data_error);
    CHECK_THROWS_AS(utc::parse_instant("2020-06-15T10:00:00"), data_error);
    CHECK_THROWS_AS(utc::parse_instant("2020-06-15 10:00:00Z"), data_error);
}

TEST_CASE("month keys split on UTC month boundaries") {
    CHECK(utc::month_key(utc::parse_instant("2020-06-30T23:59:59Z")) == "2020-06");
    CHECK(utc::month_key(utc::parse_instant("2020-07-01T00:00:00Z")) == "2020-07");
    CHECK(utc::year_of(utc::parse_instant("2019-12-31T23:59:59Z")) == 2019);
    CHECK(utc::year_of(utc::parse_instant("2020-01-01T00:00:00Z")) == 2020);
}

TEST_CASE("month_bounds covers the whole month") {
    auto [lo, hi] = utc::month_bounds("2020-02");
    CHECK(lo == utc::parse_instant("2020-02-01T00:00:00Z"));
    CHECK(hi == utc::parse_instant("2020-03-01T00:00:00Z"));
    CHECK(hi - lo == 29 * 86400);  // leap year
    CHECK_THROWS_AS(utc::month_bounds("2020-13"), config_error);
    CHECK_THROWS_AS(utc::month_bounds("202-01"), config_error);
}
