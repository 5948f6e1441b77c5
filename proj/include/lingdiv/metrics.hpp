#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "lingdiv/common.hpp"

namespace lingdiv::metrics {

// (region or NATIONAL, period or ALL) cell identity for a share table.
struct Scope {
    std::string region_code = "NATIONAL";
    std::string period = "ALL";

    std::string str() const { return region_code + "/" + period; }
    bool operator==(const Scope&) const = default;
};

using Counts = std::map<std::string, std::uint64_t>;

struct ShareEntry {
    std::string lang;
    std::uint64_t count = 0;
    double share = 0.0;
};

class ShareTable {
public:
    // Normalizes counts into shares. Empty or all-zero input is an error;
    // "und" must have been excluded upstream.
    static ShareTable from_counts(const Counts& counts, Scope scope = {}) {
        ShareTable t;
        t.scope_ = std::move(scope);
        std::uint64_t total = 0;
        for (const auto& [lang, count] : counts) {
            if (lang == kUndetermined)
                throw data_error("share_table: 'und' is not a language share");
            total += count;
        }
        if (total == 0) throw data_error("share_table: empty cell");
        t.total_ = total;
        for (const auto& [lang, count] : counts) {
            if (count == 0) continue;
            t.entries_.push_back({lang, count, static_cast<double>(count) / static_cast<double>(total)});
        }
        // descending share, ties by ascending code: the canonical rank order
        std::sort(t.entries_.begin(), t.entries_.end(), [](const ShareEntry& a, const ShareEntry& b) {
            if (a.share != b.share) return a.share > b.share;
            return a.lang < b.lang;
        });
        return t;
    }

    const Scope& scope() const { return scope_; }
    std::uint64_t total() const { return total_; }
    const std::vector<ShareEntry>& entries() const { return entries_; }
    std::size_t languages() const { return entries_.size(); }

    double share_of(const std::string& lang) const {
        for (const auto& e : entries_)
            if (e.lang == lang) return e.share;
        return 0.0;
    }

private:
    Scope scope_;
    std::uint64_t total_ = 0;
    std::vector<ShareEntry> entries_;  // sorted by descending share
};

inline ShareTable share_table(const Counts& counts, Scope scope = {}) {
    return ShareTable::from_counts(counts, std::move(scope));
}

// CRn = C1 + C2 + ... + Cn, the sum of the n largest shares. Tables with
// fewer than n languages sum everything, i.e. 1.0.
inline double concentration_ratio(const ShareTable& table, std::size_t n) {
    if (n == 0) throw config_error("concentration_ratio: n must be >= 1");
    double cr = 0.0;
    const auto& entries = table.entries();
    for (std::size_t i = 0; i < entries.size() && i < n; ++i) cr += entries[i].share;
    return std::min(cr, 1.0);
}

// Same ratio straight from a counts vector; used in resampling loops where
// building a ShareTable per replicate would dominate.
inline double concentration_ratio_from_counts(std::span<std::uint64_t> counts, std::size_t n,
                                              std::uint64_t total) {
    std::size_t k = std::min(n, counts.size());
    std::partial_sort(counts.begin(), counts.begin() + static_cast<std::ptrdiff_t>(k), counts.end(),
                      std::greater<>());
    std::uint64_t top = 0;
    for (std::size_t i = 0; i < k; ++i) top += counts[i];
    return static_cast<double>(top) / static_cast<double>(total);
}

enum class Band { LOW, MEDIUM, HIGH };

inline const char* band_name(Band b) {
    switch (b) {
        case Band::LOW: return "LOW";
        case Band::MEDIUM: return "MEDIUM";
        case Band::HIGH: return "HIGH";
    }
    return "?";
}

// Half-open bands: [0,0.40) low, [0.40,0.70) medium, [0.70,1.0] high.
inline Band classify_band(double cr) {
    if (cr < 0.0 || cr > 1.0) throw data_error("classify_band: CR outside [0,1]");
    if (cr < 0.40) return Band::LOW;
    if (cr < 0.70) return Band::MEDIUM;
    return Band::HIGH;
}

struct RankEntry {
    std::size_t rank = 0;  // 1-based
    std::string lang;
    double share = 0.0;
};

struct RankTable {
    Scope scope;
    std::vector<RankEntry> entries;
};

inline RankTable top_n_ranks(const ShareTable& table, std::size_t n) {
    if (n == 0) throw config_error("top_n_ranks: n must be >= 1");
    RankTable out;
    out.scope = table.scope();
    const auto& entries = table.entries();
    for (std::size_t i = 0; i < entries.size() && i < n; ++i)
        out.entries.push_back({i + 1, entries[i].lang, entries[i].share});
    return out;
}

inline double pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size())
        throw data_error("pearson: length mismatch (" + std::to_string(xs.size()) + " vs " +
                         std::to_string(ys.size()) + ")");
    if (xs.size() < 3) throw data_error("pearson: need at least 3 points");
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx, dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0) throw data_error("pearson: x vector is constant");
    if (syy == 0.0) throw data_error("pearson: y vector is constant");
    return sxy / std::sqrt(sxx * syy);
}

// Herfindahl-Hirschman index, the companion concentration measure.
inline double hhi(const ShareTable& table) {
    double h = 0.0;
    for (const auto& e : table.entries()) h += e.share * e.share;
    return h;
}

} // namespace lingdiv::metrics
