#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lingdiv/lang_id.hpp"

using namespace lingdiv;

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::string line;
    std::vector<std::string> out;
    while (std::getline(in, line)) {
        std::string t{trim(line)};
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

std::string long_doc(char c) { return std::string(250, c) + " text sample"; }

std::vector<std::pair<std::string, std::string>> fixture_docs() {
    std::vector<std::pair<std::string, std::string>> docs;
    for (const char* code : {"deu", "eng", "fra", "mri", "spa"})
        docs.emplace_back(code,
                          read_file(std::filesystem::path(LINGDIV_DATA) / "corpora" /
                                    (std::string(code) + ".txt")));
    return docs;
}

}  // namespace

TEST_CASE("train builds one profile per language") {
    std::vector<std::pair<std::string, std::string>> docs = {{"aaa", long_doc('a')},
                                                             {"bbb", long_doc('b')}};
    auto model = lang_id::LanguageProfileSet::train(docs);
    CHECK(model.profiles().size() == 2);
    CHECK(model.codes() == std::vector<std::string>{"aaa", "bbb"});
    CHECK(model.vocabulary_size() > 0);
}

TEST_CASE("training preconditions are enforced") {
    std::vector<std::pair<std::string, std::string>> one = {{"aaa", long_doc('a')}};
    CHECK_THROWS_WITH(lang_id::LanguageProfileSet::train(one),
                      Catch::Matchers::ContainsSubstring(">=2 languages"));

    std::vector<std::pair<std::string, std::string>> shorty = {{"aaa", long_doc('a')},
                                                               {"bbb", "too short"}};
    CHECK_THROWS_WITH(lang_id::LanguageProfileSet::train(shorty),
                      Catch::Matchers::ContainsSubstring("'bbb'"));

    std::vector<std::pair<std::string, std::string>> split = {
        {"aaa", long_doc('a')}, {"bbb", std::string(150, 'b')}, {"bbb", std::string(150, 'c')}};
    CHECK_NOTHROW(lang_id::LanguageProfileSet::train(split));

    std::vector<std::pair<std::string, std::string>> und = {{"aaa", long_doc('a')},
                                                            {"und", long_doc('u')}};
    CHECK_THROWS_AS(lang_id::LanguageProfileSet::train(und), config_error);

    std::vector<std::pair<std::string, std::string>> docs = {{"aaa", long_doc('a')},
                                                             {"bbb", long_doc('b')}};
    CHECK_THROWS_AS(lang_id::LanguageProfileSet::train(docs, {.ngram_order_max = 0}), config_error);
    CHECK_THROWS_AS(lang_id::LanguageProfileSet::train(docs, {.alpha = 0.0}), config_error);
    CHECK_THROWS_AS(lang_id::LanguageProfileSet::train(docs, {.min_chars = 0}), config_error);
}

TEST_CASE("training is deterministic") {
    auto docs = fixture_docs();
    auto a = lang_id::LanguageProfileSet::train(docs);
    auto b = lang_id::LanguageProfileSet::train(docs);
    CHECK(a.to_json().dump() == b.to_json().dump());
}

TEST_CASE("short texts classify as und") {
    std::vector<std::pair<std::string, std::string>> docs = {{"aaa", long_doc('a')},
                                                             {"bbb", long_doc('b')}};
    auto model = lang_id::LanguageProfileSet::train(docs);
    auto r = model.classify("");
    CHECK(r.code == "und");
    CHECK(r.score == 0.0);
    CHECK(model.classify("aaa aaa").code == "und");  // 7 chars < 10
    CHECK(model.classify("aaaa aaaaaa").code == "aaa");
}

TEST_CASE("classification is deterministic and closed over trained codes") {
    auto model = lang_id::LanguageProfileSet::train(fixture_docs());
    const std::string sample = "the weather is lovely this morning in the city";
    auto r1 = model.classify(sample);
    auto r2 = model.classify(sample);
    CHECK(r1.code == r2.code);
    CHECK(r1.score == r2.score);
    CHECK(r1.code == "eng");

    auto codes = model.codes();
    for (const std::string& text :
         {std::string("kia ora koutou katoa e hoa ma"), std::string("das wetter ist heute gut"),
          std::string("il fait beau aujourd'hui a paris")}) {
        auto r = model.classify(text);
        CHECK(std::find(codes.begin(), codes.end(), r.code) != codes.end());
    }
}

TEST_CASE("classify agrees with classifying the normalized text") {
    auto model = lang_id::LanguageProfileSet::train(fixture_docs());
    for (const std::string& s :
         {std::string("Kia Ora #Aotearoa te reo @someone"), std::string("THE Weather IS Fine TODAY"),
          std::string("Bonjour   tout le  monde http://x.fr")}) {
        auto direct = model.classify(s);
        auto pre = model.classify(text::normalize_text(s));
        CHECK(direct.code == pre.code);
        CHECK(direct.score == Catch::Approx(pre.score).margin(1e-12));
    }
}

TEST_CASE("argmax is invariant under a uniform score shift") {
    auto model = lang_id::LanguageProfileSet::train(fixture_docs());
    const std::string sample = "he tino pai te ra nei ki a koutou";
    auto sc = model.scores(sample);
    REQUIRE_FALSE(sc.empty());
    auto argmax = [](const std::map<std::string, double>& m) {
        std::string best;
        double bs = 0.0;
        bool first = true;
        for (const auto& [k, v] : m)
            if (first || v > bs) {
                best = k;
                bs = v;
                first = false;
            }
        return best;
    };
    std::map<std::string, double> shifted = sc;
    for (auto& [k, v] : shifted) v += 123.456;
    CHECK(argmax(sc) == argmax(shifted));
    CHECK(argmax(sc) == model.classify(sample).code);
}

TEST_CASE("exact ties break toward the ascending code") {
    std::vector<std::pair<std::string, std::string>> docs = {{"bbb", long_doc('x')},
                                                             {"aaa", long_doc('x')}};
    auto model = lang_id::LanguageProfileSet::train(docs);
    auto sc = model.scores("xxxx xxxx xxxx");
    REQUIRE(sc.size() == 2);
    CHECK(sc.at("aaa") == sc.at("bbb"));
    CHECK(model.classify("xxxx xxxx xxxx").code == "aaa");
}

TEST_CASE("held-out sentences classify with at least 90 percent accuracy") {
    auto model = lang_id::LanguageProfileSet::train(fixture_docs());
    std::size_t total = 0, correct = 0;
    for (const char* code : {"deu", "eng", "fra", "mri", "spa"}) {
        auto lines = read_lines(std::filesystem::path(LINGDIV_FIXTURES) / "heldout" /
                                (std::string(code) + ".txt"));
        REQUIRE(lines.size() >= 10);
        for (const auto& line : lines) {
            REQUIRE(text::cp_count(text::normalize_text(line)) >= 40);
            ++total;
            if (model.classify(line).code == code) ++correct;
        }
    }
    INFO("accuracy " << correct << "/" << total);
    CHECK(static_cast<double>(correct) / static_cast<double>(total) >= 0.90);
}

TEST_CASE("models round-trip through disk byte-identically") {
    auto model = lang_id::LanguageProfileSet::train(fixture_docs());
    const std::string path = "lang_id_roundtrip.tmp.json";
    model.save(path);
    auto loaded = lang_id::LanguageProfileSet::load(path);
    CHECK(loaded.to_json().dump() == model.to_json().dump());
    CHECK(loaded.config().ngram_order_max == model.config().ngram_order_max);
    CHECK(loaded.vocabulary_size() == model.vocabulary_size());
    std::remove(path.c_str());
}

TEST_CASE("mismatched model versions are rejected") {
    auto j = lang_id::LanguageProfileSet::train(fixture_docs()).to_json();
    j["version"] = "lingdiv-lid/0";
    CHECK_THROWS_WITH(lang_id::LanguageProfileSet::from_json(j),
                      Catch::Matchers::ContainsSubstring("version"));
    nlohmann::json naked = {{"profiles", nlohmann::json::object()}};
    CHECK_THROWS_AS(lang_id::LanguageProfileSet::from_json(naked), data_error);
}

TEST_CASE("label_records honors the policy") {
    auto model = lang_id::LanguageProfileSet::train(fixture_docs());
    std::vector<corpus::TextRecord> records;
    records.push_back({"1", 0, -41.0, 174.0, std::nullopt, "das wetter ist heute wirklich gut", "eng"});
    records.push_back(
        {"2", 0, -41.0, 174.0, std::nullopt, "the weather is lovely today", std::nullopt});

    auto reused = lang_id::label_records(model, records, lang_id::LabelPolicy::reuse_existing);
    CHECK(reused[0].lang == "eng");
    CHECK(reused[1].lang == "eng");

    auto overwritten = lang_id::label_records(model, records, lang_id::LabelPolicy::overwrite);
    CHECK(overwritten[0].lang == "deu");
    CHECK(overwritten[1].lang == "eng");
    for (const auto& rec : overwritten) CHECK(rec.lang.has_value());

    CHECK(lang_id::parse_policy("reuse_existing") == lang_id::LabelPolicy::reuse_existing);
    CHECK(lang_id::parse_policy("overwrite") == lang_id::LabelPolicy::overwrite);
    CHECK_THROWS_AS(lang_id::parse_policy("sometimes"), config_error);
}

TEST_CASE("classifier agreement reports") {
    std::map<std::string, std::string> a = {{"1", "eng"}, {"2", "mri"}, {"3", "eng"}};
    std::map<std::string, std::string> same = a;
    auto identical = lang_id::compare_classifiers(a, same);
    CHECK(identical.agreement_rate == 1.0);
    CHECK(identical.n_records == 3);
    CHECK(std::isnan(identical.per_region_cr_correlation));

    std::map<std::string, std::string> flipped = {{"1", "mri"}, {"2", "eng"}, {"3", "mri"}};
    CHECK(lang_id::compare_classifiers(a, flipped).agreement_rate == 0.0);

    std::map<std::string, std::string> partial = {{"1", "eng"}, {"2", "eng"}, {"3", "eng"}};
    auto rep = lang_id::compare_classifiers(a, partial);
    CHECK(rep.agreement_rate == Catch::Approx(2.0 / 3.0).margin(1e-12));
    std::uint64_t confusion_total = 0;
    for (const auto& [_, n] : rep.confusion) confusion_total += n;
    CHECK(confusion_total == rep.n_records);

    std::map<std::string, std::string> off = {{"1", "eng"}, {"4", "eng"}, {"5", "eng"}};
    CHECK_THROWS_WITH(lang_id::compare_classifiers(a, off),
                      Catch::Matchers::ContainsSubstring("4"));
}

TEST_CASE("per-region CR correlation reproduces the published LID1 vs LID2 figure") {
    const std::vector<double> lid1 = {0.56, 0.79, 0.81, 0.80, 0.88, 0.95, 0.49, 0.71,
                                      0.90, 0.66, 0.79, 0.93, 0.89, 0.58, 0.83};
    const std::vector<double> lid2 = {0.52, 0.73, 0.75, 0.73, 0.48, 0.86, 0.44, 0.66,
                                      0.83, 0.60, 0.72, 0.87, 0.81, 0.54, 0.75};
    std::map<std::string, std::string> a = {{"1", "eng"}, {"2", "eng"}};
    auto rep = lang_id::compare_classifiers(a, a, lid1, lid2);
    CHECK(rep.per_region_cr_correlation == Catch::Approx(0.80).margin(0.015));
    CHECK(rep.per_region_cr_correlation == Catch::Approx(0.804092).margin(5e-7));
}
