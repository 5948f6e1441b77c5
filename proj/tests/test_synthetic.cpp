#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lingdiv/synthetic.hpp"

using namespace lingdiv;

namespace {

synthetic::PopulationSpec two_region_spec() {
    synthetic::PopulationSpec spec;
    spec.regions["02"] = {{{"eng", 0.70}, {"mri", 0.20}, {"smo", 0.10}}, {-36.8485, 174.7633}};
    spec.regions["09"] = {{{"eng", 0.80}, {"mri", 0.15}, {"fra", 0.05}}, {-41.2866, 174.7756}};
    return spec;
}

}  // namespace

TEST_CASE("population specs are validated") {
    CHECK_NOTHROW(two_region_spec().validate());

    synthetic::PopulationSpec empty;
    CHECK_THROWS_WITH(empty.validate(), Catch::Matchers::ContainsSubstring("no regions"));

    auto off = two_region_spec();
    off.regions["02"].shares["eng"] = 0.75;
    CHECK_THROWS_WITH(off.validate(), Catch::Matchers::ContainsSubstring("sum"));

    auto bad_code = two_region_spec();
    bad_code.regions["02"].shares.erase("smo");
    bad_code.regions["02"].shares["English"] = 0.10;
    CHECK_THROWS_AS(bad_code.validate(), config_error);

    auto neg = two_region_spec();
    neg.adoption["eng"] = -0.5;
    CHECK_THROWS_AS(neg.validate(), config_error);

    auto disp = two_region_spec();
    disp.activity_dispersion = -1.0;
    CHECK_THROWS_AS(disp.validate(), config_error);
}

TEST_CASE("spec json round-trips through from_json") {
    auto spec = two_region_spec();
    spec.adoption["mri"] = 0.8;
    spec.activity_dispersion = 0.5;
    auto j = synthetic::spec_json(spec);
    auto back = synthetic::PopulationSpec::from_json(j);
    CHECK(synthetic::spec_json(back).dump() == j.dump());
}

TEST_CASE("the fixture spec file loads") {
    auto spec = synthetic::PopulationSpec::load(
        (std::filesystem::path(LINGDIV_FIXTURES) / "population.json").string());
    CHECK(spec.regions.size() == 2);
    CHECK(spec.regions.at("02").shares.at("eng") == 0.70);
    CHECK(spec.multiplier("mri") == 0.8);
    CHECK(spec.multiplier("zzz") == 1.0);
    CHECK(spec.activity_dispersion == 0.0);
}

TEST_CASE("effective shares renormalize share times adoption") {
    synthetic::PopulationSpec spec;
    spec.regions["02"] = {{{"eng", 0.5}, {"mri", 0.5}}, {-36.8, 174.8}};
    spec.adoption["mri"] = 0.5;
    auto eff = synthetic::effective_shares(spec, "02");
    CHECK(eff.at("eng") == Catch::Approx(2.0 / 3.0).margin(1e-12));
    CHECK(eff.at("mri") == Catch::Approx(1.0 / 3.0).margin(1e-12));

    double total = 0.0;
    for (const auto& [_, s] : eff) total += s;
    CHECK(total == Catch::Approx(1.0).margin(1e-12));

    // doubling every multiplier changes nothing after renormalization
    auto doubled = spec;
    doubled.adoption["eng"] = 2.0;
    doubled.adoption["mri"] = 1.0;
    auto eff2 = synthetic::effective_shares(doubled, "02");
    CHECK(eff2.at("eng") == Catch::Approx(eff.at("eng")).margin(1e-12));

    spec.adoption["eng"] = 0.0;
    auto zeroed = synthetic::effective_shares(spec, "02");
    CHECK(zeroed.count("eng") == 0);
    CHECK(zeroed.at("mri") == 1.0);

    spec.adoption["mri"] = 0.0;
    CHECK_THROWS_AS(synthetic::effective_shares(spec, "02"), data_error);
    CHECK_THROWS_AS(synthetic::effective_shares(spec, "99"), config_error);
}

TEST_CASE("even quotas split with the remainder on the first keys") {
    std::vector<std::string> keys = {"a", "b", "c"};
    auto q = synthetic::even_quotas(keys, 10);
    CHECK(q.at("a") == 4);
    CHECK(q.at("b") == 3);
    CHECK(q.at("c") == 3);

    auto exact = synthetic::even_quotas(keys, 9);
    CHECK(exact.at("a") == 3);
    CHECK(exact.at("c") == 3);

    auto sparse = synthetic::even_quotas(keys, 2);
    CHECK(sparse.at("a") == 1);
    CHECK(sparse.at("b") == 1);
    CHECK(sparse.at("c") == 0);
}

TEST_CASE("generation is deterministic and honors count and months") {
    auto spec = two_region_spec();
    auto a = synthetic::generate(spec, 1000, {"2020-03", "2020-01", "2020-02"}, 42);
    auto b = synthetic::generate(spec, 1000, {"2020-01", "2020-02", "2020-03", "2020-02"}, 42);
    REQUIRE(a.size() == 1000);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i] == b[i]);

    std::ostringstream sa, sb;
    corpus::serialize_records(sa, a);
    corpus::serialize_records(sb, b);
    CHECK(sa.str() == sb.str());

    auto c = synthetic::generate(spec, 1000, {"2020-01", "2020-02", "2020-03"}, 43);
    bool differs = false;
    for (std::size_t i = 0; i < a.size() && !differs; ++i) differs = !(a[i] == c[i]);
    CHECK(differs);

    std::set<std::string> ids;
    std::set<std::string> months_seen;
    for (const auto& rec : a) {
        CHECK(ids.insert(rec.id).second);
        months_seen.insert(utc::month_key(rec.timestamp));
        CHECK((rec.lat == spec.regions.at("02").centre.lat ||
               rec.lat == spec.regions.at("09").centre.lat));
        REQUIRE(rec.lang.has_value());
    }
    CHECK(months_seen == std::set<std::string>{"2020-01", "2020-02", "2020-03"});

    CHECK_THROWS_AS(synthetic::generate(spec, 0, {"2020-01"}, 1), config_error);
    CHECK_THROWS_AS(synthetic::generate(spec, 10, {}, 1), config_error);
    CHECK_THROWS_AS(synthetic::generate(spec, 10, {"June 2020"}, 1), config_error);
}

TEST_CASE("generated records survive the ingest and assignment path") {
    auto spec = two_region_spec();
    auto records = synthetic::generate(spec, 500, {"2021-06"}, 7);

    std::ostringstream stream;
    corpus::serialize_records(stream, records);
    std::istringstream in(stream.str());
    auto parsed = corpus::parse_records(in);
    CHECK(parsed.report.rejected == 0);
    REQUIRE(parsed.records.size() == records.size());

    std::vector<geo::PopulationCentre> centres = {
        {"auckland", "Auckland", -36.8485, 174.7633, "02"},
        {"wellington", "Wellington", -41.2866, 174.7756, "09"},
    };
    for (const auto& rec : parsed.records) {
        auto a = geo::assign_centre(rec.id, rec.point(), centres, 50.0);
        REQUIRE(a.assigned());
        CHECK(a.distance_km <= 0.001);
    }
}

TEST_CASE("adoption zero removes a language from the stream") {
    auto spec = two_region_spec();
    spec.adoption["mri"] = 0.0;
    auto records = synthetic::generate(spec, 2000, {"2020-01"}, 5);
    for (const auto& rec : records) CHECK(*rec.lang != "mri");
}

TEST_CASE("sample shares converge to the effective distribution") {
    auto spec = two_region_spec();
    const std::size_t count = 100000;
    auto records = synthetic::generate(spec, count, {"2020-01"}, 1234);
    REQUIRE(records.size() == count);

    std::map<std::string, double> sample;
    for (const auto& rec : records) sample[*rec.lang] += 1.0;
    for (auto& [_, v] : sample) v /= static_cast<double>(count);

    auto pooled = synthetic::pooled_effective_shares(spec, count);
    double pooled_total = 0.0;
    for (const auto& [lang, p] : pooled) {
        pooled_total += p;
        if (p < 0.02) continue;
        const double tol = 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(count));
        INFO("lang " << lang << " pop " << p << " sample " << sample[lang] << " tol " << tol);
        CHECK(std::abs(sample[lang] - p) <= std::max(tol, 0.01));
    }
    CHECK(pooled_total == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("estimator error is small without bias at scale") {
    auto spec = two_region_spec();
    auto records = synthetic::generate(spec, 100000, {"2020-01", "2020-02"}, 99);
    auto err = synthetic::estimator_error(spec, records, 2);
    CHECK(err.abs_error < 0.01);
    CHECK(err.abs_error == Catch::Approx(std::abs(err.cr_true - err.cr_est)).margin(1e-15));

    // with all multipliers at 1, the effective distribution is the population
    auto plain = two_region_spec();
    auto pooled = synthetic::pooled_effective_shares(plain, 100);
    CHECK(synthetic::cr_of_shares(pooled, 2) ==
          Catch::Approx(0.5 * (0.70 + 0.20) + 0.5 * (0.80 + 0.15)).margin(1e-12));

    CHECK_THROWS_AS(synthetic::estimator_error(spec, {}, 2), data_error);
    CHECK_THROWS_AS(synthetic::cr_of_shares(pooled, 0), config_error);
}

TEST_CASE("activity dispersion skews users but honors quotas") {
    auto spec = two_region_spec();
    spec.activity_dispersion = 2.0;
    auto records = synthetic::generate(spec, 999, {"2020-01", "2020-02"}, 11);
    REQUIRE(records.size() == 999);

    std::map<std::pair<std::string, std::string>, std::size_t> cell;
    for (const auto& rec : records) {
        std::string region = rec.lat == spec.regions.at("02").centre.lat ? "02" : "09";
        ++cell[{region, utc::month_key(rec.timestamp)}];
    }
    // region quotas 500/499, then 250/250 and 250/249 across the two months
    CHECK(cell.at({"02", "2020-01"}) == 250);
    CHECK(cell.at({"02", "2020-02"}) == 250);
    CHECK(cell.at({"09", "2020-01"}) == 250);
    CHECK(cell.at({"09", "2020-02"}) == 249);

    auto again = synthetic::generate(spec, 999, {"2020-01", "2020-02"}, 11);
    for (std::size_t i = 0; i < records.size(); ++i) REQUIRE(records[i] == again[i]);
}

TEST_CASE("seed corpora supply the text field") {
    auto spec = two_region_spec();
    synthetic::SeedCorpora corpora;
    corpora["eng"] = {"good morning wellington", "lovely day in the capital"};
    corpora["mri"] = {"kia ora koutou katoa"};
    auto records = synthetic::generate(spec, 300, {"2020-01"}, 21, corpora);
    for (const auto& rec : records) {
        if (*rec.lang == "eng")
            CHECK((rec.text == corpora["eng"][0] || rec.text == corpora["eng"][1]));
        else if (*rec.lang == "mri")
            CHECK(rec.text == corpora["mri"][0]);
        else
            CHECK(rec.text.find(*rec.lang) != std::string::npos);
    }
}
