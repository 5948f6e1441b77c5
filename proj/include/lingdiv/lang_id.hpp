#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lingdiv/common.hpp"
#include "lingdiv/corpus.hpp"
#include "lingdiv/metrics.hpp"
#include "lingdiv/text.hpp"

namespace lingdiv::lang_id {

inline constexpr const char* kModelVersion = "lingdiv-lid/1";

struct LangIdConfig {
    int ngram_order_max = 3;
    double alpha = 1.0;       // additive smoothing
    int min_chars = 10;       // shorter normalized texts classify as "und"
};

struct ClassifyResult {
    std::string code;
    double score = 0.0;  // log-probability per character; 0 for "und"
};

namespace detail {

inline void count_ngrams(const std::string& normalized, int order_max,
                         std::map<std::string, std::uint64_t>& counts, std::uint64_t& total) {
    auto cps = text::decode_utf8(normalized);
    for (int k = 1; k <= order_max; ++k) {
        if (cps.size() < static_cast<std::size_t>(k)) break;
        for (std::size_t i = 0; i + static_cast<std::size_t>(k) <= cps.size(); ++i) {
            std::string gram;
            for (std::size_t j = 0; j < static_cast<std::size_t>(k); ++j)
                text::append_utf8(gram, cps[i + j]);
            ++counts[gram];
            ++total;
        }
    }
}

} // namespace detail

// Character n-gram profiles (orders 1..ngram_order_max) with additive
// smoothing over the pooled vocabulary. Immutable once trained.
class LanguageProfileSet {
public:
    struct Profile {
        std::map<std::string, std::uint64_t> counts;
        std::uint64_t total = 0;
    };

    static LanguageProfileSet train(std::span<const std::pair<std::string, std::string>> docs,
                                    LangIdConfig cfg = {}) {
        if (cfg.ngram_order_max < 1 || cfg.ngram_order_max > 8)
            throw config_error("lang_id: ngram_order_max must be in [1,8]");
        if (!(cfg.alpha > 0.0)) throw config_error("lang_id: alpha must be > 0");
        if (cfg.min_chars < 1) throw config_error("lang_id: min_chars must be >= 1");

        LanguageProfileSet model;
        model.cfg_ = cfg;
        std::map<std::string, std::uint64_t> norm_chars;
        for (const auto& [code, doc] : docs) {
            if (!is_language_code(code) || code == kUndetermined)
                throw config_error("lang_id: invalid training language code '" + code + "'");
            std::string norm = text::normalize_text(doc);
            norm_chars[code] += text::cp_count(norm);
            auto& prof = model.profiles_[code];
            detail::count_ngrams(norm, cfg.ngram_order_max, prof.counts, prof.total);
        }
        if (model.profiles_.size() < 2) throw config_error("lang_id: need >=2 languages to train");
        for (const auto& [code, n] : norm_chars)
            if (n < kMinTrainingChars)
                throw config_error("lang_id: language '" + code + "' has only " + std::to_string(n) +
                                   " training characters (need >= " +
                                   std::to_string(kMinTrainingChars) + ")");
        model.rebuild_vocabulary();
        return model;
    }

    // Smoothed log-likelihood per language, normalized per character.
    // Empty map when the text is below min_chars.
    std::map<std::string, double> scores(const std::string& text_in) const {
        std::map<std::string, double> out;
        std::string norm = text::normalize_text(text_in);
        const std::size_t n_cp = text::cp_count(norm);
        if (n_cp < static_cast<std::size_t>(cfg_.min_chars)) return out;
        std::map<std::string, std::uint64_t> grams;
        std::uint64_t n_grams = 0;
        detail::count_ngrams(norm, cfg_.ngram_order_max, grams, n_grams);
        const double v = static_cast<double>(vocabulary_);
        for (const auto& [code, prof] : profiles_) {
            double ll = 0.0;
            const double denom = static_cast<double>(prof.total) + cfg_.alpha * v;
            for (const auto& [gram, n] : grams) {
                auto it = prof.counts.find(gram);
                const double c = it == prof.counts.end() ? 0.0 : static_cast<double>(it->second);
                ll += static_cast<double>(n) * std::log((c + cfg_.alpha) / denom);
            }
            out[code] = ll / static_cast<double>(n_cp);
        }
        return out;
    }

    ClassifyResult classify(const std::string& text_in) const {
        auto sc = scores(text_in);
        if (sc.empty()) return {kUndetermined, 0.0};
        // map order is ascending code, so keeping strict maxima breaks ties
        // toward the lower code
        const std::string* best = nullptr;
        double best_score = 0.0;
        for (const auto& [code, s] : sc) {
            if (!best || s > best_score) {
                best = &code;
                best_score = s;
            }
        }
        return {*best, best_score};
    }

    const LangIdConfig& config() const { return cfg_; }
    std::size_t vocabulary_size() const { return vocabulary_; }
    const std::map<std::string, Profile>& profiles() const { return profiles_; }

    std::vector<std::string> codes() const {
        std::vector<std::string> out;
        for (const auto& [code, _] : profiles_) out.push_back(code);
        return out;
    }

    nlohmann::json to_json() const {
        nlohmann::json profiles;
        for (const auto& [code, prof] : profiles_) {
            nlohmann::json counts;
            for (const auto& [gram, n] : prof.counts) counts[gram] = n;
            profiles[code] = {{"total", prof.total}, {"counts", counts}};
        }
        return nlohmann::json{{"version", kModelVersion},
                              {"config",
                               {{"ngram_order_max", cfg_.ngram_order_max},
                                {"alpha", cfg_.alpha},
                                {"min_chars", cfg_.min_chars}}},
                              {"profiles", profiles}};
    }

    static LanguageProfileSet from_json(const nlohmann::json& j) {
        if (!j.is_object() || !j.contains("version") || !j["version"].is_string())
            throw data_error("lang_id model: missing version");
        if (j["version"].get<std::string>() != kModelVersion)
            throw data_error("lang_id model: unsupported version '" +
                             j["version"].get<std::string>() + "' (expected " + kModelVersion + ")");
        LanguageProfileSet model;
        const auto& cfg = j.at("config");
        model.cfg_.ngram_order_max = cfg.at("ngram_order_max").get<int>();
        model.cfg_.alpha = cfg.at("alpha").get<double>();
        model.cfg_.min_chars = cfg.at("min_chars").get<int>();
        for (const auto& [code, pj] : j.at("profiles").items()) {
            Profile prof;
            prof.total = pj.at("total").get<std::uint64_t>();
            for (const auto& [gram, n] : pj.at("counts").items())
                prof.counts[gram] = n.get<std::uint64_t>();
            if (prof.total == 0) throw data_error("lang_id model: profile '" + code + "' is empty");
            model.profiles_[code] = std::move(prof);
        }
        if (model.profiles_.size() < 2) throw data_error("lang_id model: fewer than 2 profiles");
        model.rebuild_vocabulary();
        return model;
    }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw config_error("cannot write model file '" + path + "'");
        out << to_json().dump() << '\n';
    }

    static LanguageProfileSet load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw config_error("cannot open model file '" + path + "'");
        nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
        if (j.is_discarded()) throw data_error("lang_id model '" + path + "': invalid JSON");
        return from_json(j);
    }

    static constexpr std::uint64_t kMinTrainingChars = 200;

private:
    void rebuild_vocabulary() {
        std::set<std::string> vocab;
        for (const auto& [_, prof] : profiles_)
            for (const auto& [gram, __] : prof.counts) vocab.insert(gram);
        vocabulary_ = vocab.size();
    }

    LangIdConfig cfg_;
    std::map<std::string, Profile> profiles_;
    std::size_t vocabulary_ = 0;
};

enum class LabelPolicy { reuse_existing, overwrite };

inline LabelPolicy parse_policy(std::string_view s) {
    if (s == "reuse_existing") return LabelPolicy::reuse_existing;
    if (s == "overwrite") return LabelPolicy::overwrite;
    throw config_error("unknown lid policy '" + std::string(s) + "'");
}

// Every output record carries a language label (possibly "und").
inline std::vector<corpus::TextRecord> label_records(const LanguageProfileSet& model,
                                                     std::span<const corpus::TextRecord> records,
                                                     LabelPolicy policy) {
    std::vector<corpus::TextRecord> out;
    out.reserve(records.size());
    for (const auto& rec : records) {
        corpus::TextRecord copy = rec;
        if (policy == LabelPolicy::overwrite || !copy.lang)
            copy.lang = model.classify(copy.text).code;
        out.push_back(std::move(copy));
    }
    return out;
}

struct AgreementReport {
    std::size_t n_records = 0;
    double agreement_rate = 0.0;
    std::map<std::pair<std::string, std::string>, std::uint64_t> confusion;
    double per_region_cr_correlation = 0.0;  // NaN when no CR vectors given
};

// The LID1-vs-LID2 style comparison: label agreement plus Pearson r of the
// two per-region CR vectors.
inline AgreementReport compare_classifiers(const std::map<std::string, std::string>& labels_a,
                                           const std::map<std::string, std::string>& labels_b,
                                           std::span<const double> per_region_cr_a = {},
                                           std::span<const double> per_region_cr_b = {}) {
    std::size_t sym_diff = 0;
    for (const auto& [id, _] : labels_a)
        if (!labels_b.count(id)) ++sym_diff;
    for (const auto& [id, _] : labels_b)
        if (!labels_a.count(id)) ++sym_diff;
    if (sym_diff > 0)
        throw data_error("compare_classifiers: id sets differ in " + std::to_string(sym_diff) +
                         " records");
    AgreementReport rep;
    rep.n_records = labels_a.size();
    std::size_t agree = 0;
    for (const auto& [id, a] : labels_a) {
        const std::string& b = labels_b.at(id);
        ++rep.confusion[{a, b}];
        if (a == b) ++agree;
    }
    rep.agreement_rate =
        rep.n_records == 0 ? 0.0 : static_cast<double>(agree) / static_cast<double>(rep.n_records);
    if (per_region_cr_a.empty() && per_region_cr_b.empty())
        rep.per_region_cr_correlation = std::numeric_limits<double>::quiet_NaN();
    else
        rep.per_region_cr_correlation = metrics::pearson(per_region_cr_a, per_region_cr_b);
    return rep;
}

} // namespace lingdiv::lang_id
