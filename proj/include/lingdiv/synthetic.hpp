#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lingdiv/common.hpp"
#include "lingdiv/corpus.hpp"
#include "lingdiv/geo.hpp"
#include "lingdiv/metrics.hpp"
#include "lingdiv/rng.hpp"
#include "lingdiv/utc.hpp"

namespace lingdiv::synthetic {

struct RegionSpec {
    std::map<std::string, double> shares;  // population language shares, sum 1
    geo::LatLon centre;
};

// Ground-truth population with a platform-adoption bias knob: record
// language probability is share * adoption, renormalized. Activity
// dispersion adds per-user post-count skew (gamma with unit mean).
struct PopulationSpec {
    std::map<std::string, RegionSpec> regions;
    std::map<std::string, double> adoption;  // per-language multiplier, default 1.0
    double activity_dispersion = 0.0;

    double multiplier(const std::string& lang) const {
        auto it = adoption.find(lang);
        return it == adoption.end() ? 1.0 : it->second;
    }

    void validate() const {
        if (regions.empty()) throw config_error("population spec: no regions");
        for (const auto& [code, region] : regions) {
            if (region.shares.empty())
                throw config_error("population spec: region '" + code + "' has no shares");
            double sum = 0.0;
            for (const auto& [lang, share] : region.shares) {
                if (!is_language_code(lang) || lang == kUndetermined)
                    throw config_error("population spec: bad language code '" + lang + "'");
                if (share < 0.0) throw config_error("population spec: negative share for " + lang);
                sum += share;
            }
            if (std::abs(sum - 1.0) > 1e-9)
                throw config_error("population spec: region '" + code + "' shares sum to " +
                                   std::to_string(sum) + ", expected 1.0");
        }
        for (const auto& [lang, m] : adoption)
            if (m < 0.0) throw config_error("population spec: negative adoption multiplier for " + lang);
        if (activity_dispersion < 0.0)
            throw config_error("population spec: activity_dispersion must be >= 0");
    }

    static PopulationSpec from_json(const nlohmann::json& j) {
        PopulationSpec spec;
        for (const auto& [code, rj] : j.at("regions").items()) {
            RegionSpec region;
            for (const auto& [lang, share] : rj.at("shares").items())
                region.shares[lang] = share.get<double>();
            region.centre.lat = rj.at("centre").at("lat").get<double>();
            region.centre.lon = rj.at("centre").at("lon").get<double>();
            spec.regions[code] = std::move(region);
        }
        if (j.contains("adoption"))
            for (const auto& [lang, m] : j["adoption"].items()) spec.adoption[lang] = m.get<double>();
        if (j.contains("activity_dispersion"))
            spec.activity_dispersion = j["activity_dispersion"].get<double>();
        spec.validate();
        return spec;
    }

    static PopulationSpec load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw config_error("cannot open population spec '" + path + "'");
        nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
        if (j.is_discarded()) throw data_error("population spec '" + path + "': invalid JSON");
        return from_json(j);
    }
};

// share * adoption, renormalized; the distribution the platform sample
// actually draws from.
inline std::map<std::string, double> effective_shares(const PopulationSpec& spec,
                                                      const std::string& region_code) {
    auto it = spec.regions.find(region_code);
    if (it == spec.regions.end())
        throw config_error("population spec: unknown region '" + region_code + "'");
    std::map<std::string, double> eff;
    double total = 0.0;
    for (const auto& [lang, share] : it->second.shares) {
        double w = share * spec.multiplier(lang);
        if (w > 0.0) {
            eff[lang] = w;
            total += w;
        }
    }
    if (total <= 0.0)
        throw data_error("population spec: all-zero effective probabilities in region '" +
                         region_code + "'");
    for (auto& [_, w] : eff) w /= total;
    return eff;
}

// Even deterministic split of count across keys in ascending order;
// the remainder goes to the first keys.
inline std::map<std::string, std::size_t> even_quotas(std::span<const std::string> keys,
                                                      std::size_t count) {
    std::map<std::string, std::size_t> out;
    const std::size_t base = count / keys.size();
    std::size_t rem = count % keys.size();
    for (const auto& k : keys) {
        out[k] = base + (rem > 0 ? 1 : 0);
        if (rem > 0) --rem;
    }
    return out;
}

using SeedCorpora = std::map<std::string, std::vector<std::string>>;  // lang -> sentences

namespace detail {

inline std::string synth_text(const std::string& lang, const SeedCorpora& corpora, Rng& rng) {
    auto it = corpora.find(lang);
    if (it != corpora.end() && !it->second.empty())
        return it->second[rng.uniform_below(it->second.size())];
    // no seed corpus: a deterministic filler that still parses and labels
    std::size_t words = 3 + rng.uniform_below(5);
    std::string out;
    for (std::size_t i = 0; i < words; ++i) {
        if (i) out.push_back(' ');
        out += lang;
    }
    return out;
}

} // namespace detail

// Deterministic record stream: independent substreams per (region, month),
// concatenated in ascending (region, month) order. Records carry the true
// language code so downstream stages can be validated against known truth.
inline std::vector<corpus::TextRecord> generate(const PopulationSpec& spec, std::size_t count,
                                                std::vector<std::string> months, std::uint64_t seed,
                                                const SeedCorpora& corpora = {}) {
    spec.validate();
    if (count < 1) throw config_error("generate: count must be >= 1");
    if (months.empty()) throw config_error("generate: months must be non-empty");
    std::sort(months.begin(), months.end());
    months.erase(std::unique(months.begin(), months.end()), months.end());
    for (const auto& m : months) utc::month_bounds(m);  // validate format early

    std::vector<std::string> region_codes;
    for (const auto& [code, _] : spec.regions) region_codes.push_back(code);
    auto region_quota = even_quotas(region_codes, count);

    std::vector<corpus::TextRecord> out;
    out.reserve(count);
    for (const auto& region : region_codes) {
        if (region_quota[region] == 0) continue;
        auto eff = effective_shares(spec, region);
        std::vector<std::string> langs;
        std::vector<double> weights;
        for (const auto& [lang, w] : eff) {
            langs.push_back(lang);
            weights.push_back(w);
        }
        auto cum = cumulative_weights(weights);
        const geo::LatLon centre = spec.regions.at(region).centre;
        auto month_quota = even_quotas(months, region_quota[region]);
        for (const auto& month : months) {
            const std::size_t quota = month_quota[month];
            if (quota == 0) continue;
            auto [t_begin, t_end] = utc::month_bounds(month);
            Rng rng(derive_seed(seed, region + "\x1f" + month));
            std::size_t emitted = 0;
            while (emitted < quota) {
                const std::string& lang = langs[rng.pick_cumulative(cum)];
                std::size_t posts = 1;
                if (spec.activity_dispersion > 0.0) {
                    double g = rng.gamma(1.0 / spec.activity_dispersion, spec.activity_dispersion);
                    posts = static_cast<std::size_t>(std::max(1.0, std::round(g)));
                }
                posts = std::min(posts, quota - emitted);
                for (std::size_t p = 0; p < posts; ++p) {
                    corpus::TextRecord rec;
                    ++emitted;
                    rec.id = "syn-" + region + "-" + month + "-" + std::to_string(emitted);
                    rec.timestamp =
                        t_begin + static_cast<std::int64_t>(rng.uniform_below(
                                      static_cast<std::uint64_t>(t_end - t_begin)));
                    rec.lat = centre.lat;
                    rec.lon = centre.lon;
                    rec.lang = lang;
                    rec.text = detail::synth_text(lang, corpora, rng);
                    out.push_back(std::move(rec));
                }
            }
        }
    }
    return out;
}

// The record-weighted mixture of per-region effective distributions, i.e.
// the distribution `generate` draws languages from overall.
inline std::map<std::string, double> pooled_effective_shares(const PopulationSpec& spec,
                                                             std::size_t count) {
    spec.validate();
    std::vector<std::string> region_codes;
    for (const auto& [code, _] : spec.regions) region_codes.push_back(code);
    auto quota = even_quotas(region_codes, count);
    std::map<std::string, double> pooled;
    for (const auto& region : region_codes) {
        const double w = static_cast<double>(quota[region]) / static_cast<double>(count);
        if (w == 0.0) continue;
        for (const auto& [lang, p] : effective_shares(spec, region)) pooled[lang] += w * p;
    }
    return pooled;
}

// CR_n straight over a share map (shares assumed to sum to ~1).
inline double cr_of_shares(const std::map<std::string, double>& shares, std::size_t n) {
    if (n == 0) throw config_error("cr_of_shares: n must be >= 1");
    std::vector<double> vals;
    vals.reserve(shares.size());
    for (const auto& [_, s] : shares) vals.push_back(s);
    std::sort(vals.begin(), vals.end(), std::greater<>());
    double cr = 0.0;
    for (std::size_t i = 0; i < vals.size() && i < n; ++i) cr += vals[i];
    return std::min(cr, 1.0);
}

struct EstimatorError {
    double cr_true = 0.0;
    double cr_est = 0.0;
    double abs_error = 0.0;
};

// How far the sample CR sits from the CR of the distribution the sample
// was actually drawn from.
inline EstimatorError estimator_error(const PopulationSpec& spec,
                                      std::span<const corpus::TextRecord> records, std::size_t n) {
    if (records.empty()) throw data_error("estimator_error: no records");
    EstimatorError out;
    out.cr_true = cr_of_shares(pooled_effective_shares(spec, records.size()), n);
    metrics::Counts counts;
    for (const auto& rec : records) {
        if (!rec.lang) throw std::logic_error("estimator_error: unlabeled record");
        ++counts[*rec.lang];
    }
    out.cr_est = metrics::concentration_ratio(metrics::share_table(counts), n);
    out.abs_error = std::abs(out.cr_true - out.cr_est);
    return out;
}

inline nlohmann::json spec_json(const PopulationSpec& spec) {
    nlohmann::json regions;
    for (const auto& [code, region] : spec.regions) {
        nlohmann::json shares;
        for (const auto& [lang, s] : region.shares) shares[lang] = s;
        regions[code] = {{"shares", shares},
                         {"centre", {{"lat", region.centre.lat}, {"lon", region.centre.lon}}}};
    }
    nlohmann::json adoption;
    for (const auto& [lang, m] : spec.adoption) adoption[lang] = m;
    return nlohmann::json{{"regions", regions},
                          {"adoption", adoption},
                          {"activity_dispersion", spec.activity_dispersion}};
}

} // namespace lingdiv::synthetic
