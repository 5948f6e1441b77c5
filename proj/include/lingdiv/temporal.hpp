#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "lingdiv/common.hpp"
#include "lingdiv/corpus.hpp"
#include "lingdiv/geo.hpp"
#include "lingdiv/metrics.hpp"
#include "lingdiv/rng.hpp"
#include "lingdiv/utc.hpp"

namespace lingdiv::temporal {

// A record that survived labelling ("und" excluded) and assignment.
struct EligibleRecord {
    std::string region_code;
    std::int64_t timestamp = 0;
    std::string lang;
};

struct EligibleResult {
    std::vector<EligibleRecord> eligible;
    std::size_t excluded_und = 0;
    std::size_t excluded_unassigned = 0;
};

// Pairs records with their assignments and filters out what the series
// layer must not see.
inline EligibleResult make_eligible(std::span<const corpus::TextRecord> records,
                                    std::span<const geo::RegionAssignment> assignments) {
    if (records.size() != assignments.size())
        throw std::logic_error("make_eligible: records/assignments size mismatch");
    EligibleResult out;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& rec = records[i];
        if (!rec.lang) throw std::logic_error("make_eligible: unlabeled record '" + rec.id + "'");
        if (*rec.lang == kUndetermined) {
            ++out.excluded_und;
            continue;
        }
        if (!assignments[i].assigned()) {
            ++out.excluded_unassigned;
            continue;
        }
        out.eligible.push_back({*assignments[i].region_code, rec.timestamp, *rec.lang});
    }
    return out;
}

struct BucketKey {
    std::string region_code;
    std::string period;  // "YYYY-MM", UTC

    auto operator<=>(const BucketKey&) const = default;
};

struct Bucket {
    std::vector<std::string> langs;  // one label per record

    std::size_t size() const { return langs.size(); }

    metrics::Counts counts() const {
        metrics::Counts c;
        for (const auto& l : langs) ++c[l];
        return c;
    }
};

using Buckets = std::map<BucketKey, Bucket>;

// Each record lands in exactly one (region, UTC calendar month) bucket.
inline Buckets bucket_monthly(std::span<const EligibleRecord> records) {
    Buckets out;
    for (const auto& r : records)
        out[{r.region_code, utc::month_key(r.timestamp)}].langs.push_back(r.lang);
    return out;
}

inline Buckets merge_buckets(const Buckets& a, const Buckets& b) {
    Buckets out = a;
    for (const auto& [key, bucket] : b) {
        auto& dst = out[key].langs;
        dst.insert(dst.end(), bucket.langs.begin(), bucket.langs.end());
    }
    return out;
}

struct BootstrapConfig {
    std::size_t B = 1000;
    double level = 0.95;
    std::uint64_t seed = 0;
};

struct CRSeriesPoint {
    std::string region_code;
    std::string period;
    std::size_t n_records = 0;
    double cr = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
};

struct DroppedBucket {
    std::string region_code;
    std::string period;
    std::size_t n_records = 0;
};

struct CRSeriesResult {
    std::vector<CRSeriesPoint> points;
    std::vector<DroppedBucket> dropped;  // below min_bucket_size
};

inline constexpr std::size_t kDefaultMinBucketSize = 30;

namespace detail {

// Empirical nearest-rank quantile over a sorted vector.
inline double quantile_sorted(std::span<const double> sorted, double q) {
    const auto b = static_cast<double>(sorted.size());
    auto idx = static_cast<std::size_t>(std::max(1.0, std::ceil(q * b))) - 1;
    if (idx >= sorted.size()) idx = sorted.size() - 1;
    return sorted[idx];
}

inline std::uint64_t bucket_stream_seed(std::uint64_t seed, const BucketKey& key) {
    return derive_seed(seed, key.region_code + "\x1f" + key.period);
}

} // namespace detail

// Point CR_n per bucket with percentile-bootstrap confidence bands:
// resample records with replacement B times, recompute CR_n, take the
// (1-level)/2 and 1-(1-level)/2 empirical quantiles. Each bucket's
// replicate stream derives only from (seed, region, period).
inline CRSeriesResult cr_series(const Buckets& buckets, std::size_t n, BootstrapConfig boot = {},
                                std::size_t min_bucket_size = kDefaultMinBucketSize) {
    if (boot.B < 100) throw config_error("bootstrap: B must be >= 100");
    if (!(boot.level > 0.0 && boot.level < 1.0))
        throw config_error("bootstrap: level must be in (0,1)");
    if (n == 0) throw config_error("cr_series: n must be >= 1");

    CRSeriesResult out;
    for (const auto& [key, bucket] : buckets) {
        if (bucket.size() < min_bucket_size) {
            out.dropped.push_back({key.region_code, key.period, bucket.size()});
            continue;
        }
        // intern labels for the resampling loop
        auto counts_map = bucket.counts();
        std::vector<std::uint64_t> base_counts;
        std::map<std::string, std::size_t> lang_ids;
        for (const auto& [lang, c] : counts_map) {
            lang_ids[lang] = base_counts.size();
            base_counts.push_back(c);
        }
        std::vector<std::size_t> record_lang(bucket.size());
        for (std::size_t i = 0; i < bucket.langs.size(); ++i)
            record_lang[i] = lang_ids[bucket.langs[i]];

        const double point =
            metrics::concentration_ratio(metrics::share_table(counts_map, {key.region_code, key.period}), n);

        Rng rng(detail::bucket_stream_seed(boot.seed, key));
        const std::size_t n_rec = bucket.size();
        std::vector<double> replicates(boot.B);
        std::vector<std::uint64_t> counts(base_counts.size());
        for (std::size_t b = 0; b < boot.B; ++b) {
            std::fill(counts.begin(), counts.end(), 0);
            for (std::size_t i = 0; i < n_rec; ++i)
                ++counts[record_lang[rng.uniform_below(n_rec)]];
            replicates[b] = metrics::concentration_ratio_from_counts(counts, n, n_rec);
        }
        std::sort(replicates.begin(), replicates.end());
        const double q = (1.0 - boot.level) / 2.0;
        out.points.push_back({key.region_code, key.period, n_rec, point,
                              detail::quantile_sorted(replicates, q),
                              detail::quantile_sorted(replicates, 1.0 - q)});
    }
    return out;
}

struct ProportionEntry {
    std::string lang;
    double share = 0.0;
};

struct ProportionPoint {
    std::string region_code;
    std::string period;
    std::size_t n_records = 0;
    std::vector<ProportionEntry> entries;  // the month's top N
    double other = 0.0;                    // 1 - sum(entries)
};

// Per-bucket top-N language shares plus the OTHER aggregate.
inline std::vector<ProportionPoint> proportions_series(const Buckets& buckets, std::size_t top_n = 10,
                                                       std::size_t min_bucket_size = kDefaultMinBucketSize) {
    if (top_n == 0) throw config_error("proportions_series: topN must be >= 1");
    std::vector<ProportionPoint> out;
    for (const auto& [key, bucket] : buckets) {
        if (bucket.size() < min_bucket_size) continue;
        auto table = metrics::share_table(bucket.counts(), {key.region_code, key.period});
        auto ranks = metrics::top_n_ranks(table, top_n);
        ProportionPoint point;
        point.region_code = key.region_code;
        point.period = key.period;
        point.n_records = bucket.size();
        double covered = 0.0;
        for (const auto& e : ranks.entries) {
            point.entries.push_back({e.lang, e.share});
            covered += e.share;
        }
        point.other = std::max(0.0, 1.0 - covered);
        out.push_back(std::move(point));
    }
    return out;
}

} // namespace lingdiv::temporal
