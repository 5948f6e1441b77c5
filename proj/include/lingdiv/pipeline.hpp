#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lingdiv/census.hpp"
#include "lingdiv/common.hpp"
#include "lingdiv/corpus.hpp"
#include "lingdiv/csv.hpp"
#include "lingdiv/geo.hpp"
#include "lingdiv/lang_id.hpp"
#include "lingdiv/metrics.hpp"
#include "lingdiv/temporal.hpp"
#include "lingdiv/utc.hpp"

namespace lingdiv::pipeline {

struct RunConfig {
    std::string records;
    std::string centres;
    std::string census;
    std::string concordance;
    std::string model;
    std::string outdir;
    double radius_km = geo::kDefaultRadiusKm;
    std::size_t cr_n = 10;
    temporal::BootstrapConfig bootstrap;
    std::size_t min_bucket_size = temporal::kDefaultMinBucketSize;
    std::vector<std::string> exclusions;
    lang_id::LabelPolicy policy = lang_id::LabelPolicy::reuse_existing;
};

namespace detail {

inline double parse_number(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw config_error("config key '" + key + "': '" + value + "' is not a number");
    }
}

inline std::size_t parse_count(const std::string& key, const std::string& value) {
    double v = parse_number(key, value);
    if (v < 0.0 || v != std::floor(v))
        throw config_error("config key '" + key + "': '" + value + "' is not a non-negative integer");
    return static_cast<std::size_t>(v);
}

} // namespace detail

inline const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "records",     "centres",         "census",          "concordance",
        "model",       "outdir",          "radius_km",       "cr_n",
        "bootstrap.B", "bootstrap.level", "bootstrap.seed",  "min_bucket_size",
        "exclusion",   "lid.policy"};
    return keys;
}

// One key, one assignment; `exclusion` appends, everything else replaces.
inline void apply_override(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "records") cfg.records = value;
    else if (key == "centres") cfg.centres = value;
    else if (key == "census") cfg.census = value;
    else if (key == "concordance") cfg.concordance = value;
    else if (key == "model") cfg.model = value;
    else if (key == "outdir") cfg.outdir = value;
    else if (key == "radius_km") cfg.radius_km = detail::parse_number(key, value);
    else if (key == "cr_n") cfg.cr_n = detail::parse_count(key, value);
    else if (key == "bootstrap.B") cfg.bootstrap.B = detail::parse_count(key, value);
    else if (key == "bootstrap.level") cfg.bootstrap.level = detail::parse_number(key, value);
    else if (key == "bootstrap.seed") cfg.bootstrap.seed = static_cast<std::uint64_t>(detail::parse_count(key, value));
    else if (key == "min_bucket_size") cfg.min_bucket_size = detail::parse_count(key, value);
    else if (key == "exclusion") cfg.exclusions.push_back(value);
    else if (key == "lid.policy") cfg.policy = lang_id::parse_policy(value);
    else throw config_error("unknown config key '" + key + "'");
}

// Flat key = value lines; '#' at line start comments; `exclusion` may repeat.
inline void parse_config(std::istream& in, RunConfig& cfg) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw config_error("config line " + std::to_string(line_no) + ": expected key = value");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw config_error("config line " + std::to_string(line_no) + ": empty key");
        try {
            apply_override(cfg, key, value);
        } catch (const config_error& e) {
            throw config_error("config line " + std::to_string(line_no) + ": " + e.what());
        }
    }
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file '" + path + "'");
    RunConfig cfg;
    parse_config(in, cfg);
    return cfg;
}

inline void require_file(const std::string& what, const std::string& path) {
    if (path.empty()) throw config_error("config: '" + what + "' path is required");
    if (!std::filesystem::exists(path))
        throw config_error("config: " + what + " file '" + path + "' does not exist");
}

inline void validate_for_run(const RunConfig& cfg) {
    require_file("records", cfg.records);
    require_file("centres", cfg.centres);
    require_file("model", cfg.model);
    if (!cfg.census.empty()) require_file("census", cfg.census);
    if (!cfg.concordance.empty()) require_file("concordance", cfg.concordance);
    if (cfg.outdir.empty()) throw config_error("config: 'outdir' is required");
    if (!(cfg.radius_km > 0.0)) throw config_error("config: radius_km must be > 0");
    if (cfg.cr_n < 1) throw config_error("config: cr_n must be >= 1");
    if (cfg.bootstrap.B < 100) throw config_error("config: bootstrap.B must be >= 100");
    if (!(cfg.bootstrap.level > 0.0 && cfg.bootstrap.level < 1.0))
        throw config_error("config: bootstrap.level must be in (0,1)");
    if (cfg.min_bucket_size < 1) throw config_error("config: min_bucket_size must be >= 1");
}

struct RegionYearRow {
    std::string region_code;
    int year = 0;
    std::size_t n_records = 0;
    double cr = 0.0;
};

inline std::vector<RegionYearRow> region_year_cr(std::span<const temporal::EligibleRecord> records,
                                                 std::size_t n) {
    std::map<std::pair<std::string, int>, metrics::Counts> cells;
    for (const auto& r : records) ++cells[{r.region_code, utc::year_of(r.timestamp)}][r.lang];
    std::vector<RegionYearRow> out;
    for (const auto& [key, counts] : cells) {
        metrics::Scope scope{key.first, std::to_string(key.second)};
        RegionYearRow row;
        row.region_code = key.first;
        row.year = key.second;
        auto table = metrics::share_table(counts, scope);
        row.n_records = static_cast<std::size_t>(table.total());
        row.cr = metrics::concentration_ratio(table, n);
        out.push_back(std::move(row));
    }
    return out;
}

inline void write_cr_series_csv(std::ostream& out, std::span<const temporal::CRSeriesPoint> points) {
    csv::write_row(out, {"region_code", "period", "n_records", "cr", "ci_lo", "ci_hi"});
    for (const auto& p : points)
        csv::write_row(out, {p.region_code, p.period, std::to_string(p.n_records),
                             csv::format_fraction(p.cr), csv::format_fraction(p.ci_lo),
                             csv::format_fraction(p.ci_hi)});
}

inline void write_proportions_csv(std::ostream& out,
                                  std::span<const temporal::ProportionPoint> points) {
    csv::write_row(out, {"region_code", "period", "lang", "share"});
    for (const auto& p : points) {
        for (const auto& e : p.entries)
            csv::write_row(out, {p.region_code, p.period, e.lang, csv::format_fraction(e.share)});
        csv::write_row(out, {p.region_code, p.period, "OTHER", csv::format_fraction(p.other)});
    }
}

inline void write_region_year_csv(std::ostream& out, std::span<const RegionYearRow> rows) {
    csv::write_row(out, {"region_code", "year", "n_records", "cr"});
    for (const auto& r : rows)
        csv::write_row(out, {r.region_code, std::to_string(r.year), std::to_string(r.n_records),
                             csv::format_fraction(r.cr)});
}

inline void write_ranks_csv(std::ostream& out, const metrics::RankTable& table) {
    csv::write_row(out, {"scope", "rank", "lang", "share"});
    for (const auto& e : table.entries)
        csv::write_row(out, {table.scope.str(), std::to_string(e.rank), e.lang,
                             csv::format_fraction(e.share)});
}

struct RunReport {
    std::size_t parsed = 0;  // input lines attempted (= labeled + rejected + filtered_removed)
    std::size_t rejected = 0;
    std::size_t filtered_removed = 0;
    std::size_t labeled = 0;
    std::size_t assigned = 0;
    std::size_t unassigned = 0;
    std::size_t excluded_und = 0;
    std::size_t eligible = 0;
    std::size_t bucket_records_kept = 0;
    std::size_t bucket_records_dropped = 0;
    corpus::ParseReport parse_report;
    geo::CoverageReport coverage;
    std::vector<temporal::DroppedBucket> dropped_buckets;
    std::map<std::string, std::size_t> rows;  // output file -> data row count

    void check_reconciliation() const {
        if (parsed != labeled + rejected + filtered_removed ||
            labeled != assigned + unassigned || assigned != excluded_und + eligible ||
            eligible != bucket_records_kept + bucket_records_dropped)
            throw std::logic_error("run report does not reconcile");
    }
};

inline nlohmann::json report_to_json(const RunReport& rep, const RunConfig& cfg) {
    nlohmann::json dropped = nlohmann::json::array();
    for (const auto& d : rep.dropped_buckets)
        dropped.push_back({{"region_code", d.region_code},
                           {"period", d.period},
                           {"n_records", d.n_records}});
    nlohmann::json errors = nlohmann::json::array();
    for (const auto& e : rep.parse_report.first_errors)
        errors.push_back({{"line", e.line}, {"reason", e.reason}});
    return nlohmann::json{
        {"config",
         {{"records", cfg.records},
          {"centres", cfg.centres},
          {"model", cfg.model},
          {"outdir", cfg.outdir},
          {"radius_km", cfg.radius_km},
          {"cr_n", cfg.cr_n},
          {"bootstrap", {{"B", cfg.bootstrap.B}, {"level", cfg.bootstrap.level}, {"seed", cfg.bootstrap.seed}}},
          {"min_bucket_size", cfg.min_bucket_size},
          {"exclusions", cfg.exclusions},
          {"lid_policy", cfg.policy == lang_id::LabelPolicy::overwrite ? "overwrite" : "reuse_existing"}}},
        {"counts",
         {{"parsed", rep.parsed},
          {"rejected", rep.rejected},
          {"filtered_removed", rep.filtered_removed},
          {"labeled", rep.labeled},
          {"assigned", rep.assigned},
          {"unassigned", rep.unassigned},
          {"excluded_und", rep.excluded_und},
          {"eligible", rep.eligible},
          {"bucket_records_kept", rep.bucket_records_kept},
          {"bucket_records_dropped", rep.bucket_records_dropped}}},
        {"per_region_assigned", rep.coverage.per_region},
        {"parse_errors", errors},
        {"dropped_buckets", dropped},
        {"rows", rep.rows}};
}

namespace detail {

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot write output file '" + path + "'");
    out << content;
    if (!out) throw data_error("short write to '" + path + "'");
}

} // namespace detail

// parse -> (filter) -> label -> assign -> bucket -> series/tables, then
// four CSVs plus report.json in outdir.
inline RunReport run_pipeline(const RunConfig& cfg) {
    validate_for_run(cfg);
    std::error_code ec;
    std::filesystem::create_directories(cfg.outdir, ec);
    if (ec) throw config_error("cannot create output directory '" + cfg.outdir + "'");

    auto centres = geo::load_centres(cfg.centres);

    std::ifstream in(cfg.records, std::ios::binary);
    if (!in) throw config_error("cannot open records file '" + cfg.records + "'");
    auto parsed = corpus::parse_records(in);

    RunReport rep;
    rep.parse_report = parsed.report;
    rep.parsed = parsed.report.parsed + parsed.report.rejected;
    rep.rejected = parsed.report.rejected;

    std::vector<corpus::TextRecord> records = std::move(parsed.records);
    if (!cfg.exclusions.empty()) {
        auto filtered = corpus::filter_strings(records, cfg.exclusions);
        rep.filtered_removed = records.size() - filtered.size();
        records = std::move(filtered);
    }

    auto model = lang_id::LanguageProfileSet::load(cfg.model);
    auto labeled = lang_id::label_records(model, records, cfg.policy);
    rep.labeled = labeled.size();

    std::vector<geo::RegionAssignment> assignments;
    assignments.reserve(labeled.size());
    for (const auto& rec : labeled)
        assignments.push_back(geo::assign_centre(rec.id, rec.point(), centres, cfg.radius_km));
    rep.coverage = geo::make_coverage(assignments);
    rep.assigned = rep.coverage.assigned;
    rep.unassigned = rep.coverage.unassigned;

    auto elig = temporal::make_eligible(labeled, assignments);
    rep.excluded_und = elig.excluded_und;
    rep.eligible = elig.eligible.size();

    auto buckets = temporal::bucket_monthly(elig.eligible);
    auto series = temporal::cr_series(buckets, cfg.cr_n, cfg.bootstrap, cfg.min_bucket_size);
    auto props = temporal::proportions_series(buckets, cfg.cr_n, cfg.min_bucket_size);
    for (const auto& p : series.points) rep.bucket_records_kept += p.n_records;
    for (const auto& d : series.dropped) rep.bucket_records_dropped += d.n_records;
    rep.dropped_buckets = series.dropped;

    auto by_year = region_year_cr(elig.eligible, cfg.cr_n);

    metrics::Counts national;
    for (const auto& r : elig.eligible) ++national[r.lang];
    metrics::RankTable ranks;
    if (!national.empty()) ranks = metrics::top_n_ranks(metrics::share_table(national), cfg.cr_n);

    std::size_t prop_rows = 0;
    for (const auto& p : props) prop_rows += p.entries.size() + 1;
    rep.rows = {{"cr_series.csv", series.points.size()},
                {"proportions.csv", prop_rows},
                {"region_year_cr.csv", by_year.size()},
                {"ranks.csv", ranks.entries.size()}};

    rep.check_reconciliation();

    const std::filesystem::path outdir(cfg.outdir);
    std::ostringstream buf;
    write_cr_series_csv(buf, series.points);
    detail::write_text_file((outdir / "cr_series.csv").string(), buf.str());
    buf.str("");
    write_proportions_csv(buf, props);
    detail::write_text_file((outdir / "proportions.csv").string(), buf.str());
    buf.str("");
    write_region_year_csv(buf, by_year);
    detail::write_text_file((outdir / "region_year_cr.csv").string(), buf.str());
    buf.str("");
    write_ranks_csv(buf, ranks);
    detail::write_text_file((outdir / "ranks.csv").string(), buf.str());
    detail::write_text_file((outdir / "report.json").string(),
                            report_to_json(rep, cfg).dump(2) + "\n");
    return rep;
}

struct CrColumn {
    std::string name;
    std::map<std::string, double> by_region;
};

// Every column besides region_code is one CR series named by its header.
inline std::vector<CrColumn> load_cr_columns(const std::string& path) {
    auto table = csv::read_file(path);
    const std::size_t region_col = table.column("region_code");
    std::vector<CrColumn> out;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (c == region_col) continue;
        out.push_back({table.header[c], {}});
    }
    if (out.empty()) throw data_error("'" + path + "': no CR columns besides region_code");
    std::set<std::string> seen;
    for (const auto& row : table.rows) {
        const std::string& region = row.at(region_col);
        if (region.empty()) throw data_error("'" + path + "': empty region_code");
        if (!seen.insert(region).second)
            throw data_error("'" + path + "': duplicate region_code '" + region +
                             "' (one row per region; filter multi-period tables first)");
        std::size_t k = 0;
        for (std::size_t c = 0; c < table.header.size(); ++c) {
            if (c == region_col) continue;
            out[k++].by_region[region] = csv::parse_double(row.at(c), table.header[c]);
        }
    }
    return out;
}

// Columns from several files; a column keeps its bare header name unless
// taken, then gets "<file-stem>." prefixed.
inline std::vector<CrColumn> load_cr_tables(std::span<const std::string> paths) {
    if (paths.empty()) throw config_error("compare: no input tables");
    std::vector<CrColumn> out;
    std::set<std::string> names;
    for (const auto& path : paths) {
        const std::string stem = std::filesystem::path(path).stem().string();
        for (auto& col : load_cr_columns(path)) {
            if (!names.insert(col.name).second) {
                col.name = stem + "." + col.name;
                if (!names.insert(col.name).second)
                    throw config_error("compare: duplicate column name '" + col.name + "'");
            }
            out.push_back(std::move(col));
        }
    }
    return out;
}

struct PairCorrelation {
    std::string a;
    std::string b;
    double r = 0.0;
    std::size_t n = 0;
};

struct CompareResult {
    std::vector<std::string> regions;  // sorted intersection
    std::vector<CrColumn> columns;
    std::vector<PairCorrelation> correlations;
    std::map<std::string, std::vector<std::string>> only_in;
};

// Pearson r for every column pair over the region intersection.
inline CompareResult compare_sources(std::vector<CrColumn> columns) {
    if (columns.size() < 2) throw config_error("compare: need at least two CR columns");
    CompareResult out;
    std::set<std::string> intersection;
    for (const auto& [region, _] : columns.front().by_region) intersection.insert(region);
    for (const auto& col : columns) {
        std::set<std::string> keep;
        for (const auto& region : intersection)
            if (col.by_region.count(region)) keep.insert(region);
        intersection = std::move(keep);
    }
    for (const auto& col : columns) {
        std::vector<std::string> extra;
        for (const auto& [region, _] : col.by_region)
            if (!intersection.count(region)) extra.push_back(region);
        if (!extra.empty()) out.only_in[col.name] = std::move(extra);
    }
    if (intersection.size() < 3)
        throw data_error("compare: region intersection has " +
                         std::to_string(intersection.size()) +
                         " regions, need >= 3 (correlation undefined)");
    out.regions.assign(intersection.begin(), intersection.end());
    for (std::size_t i = 0; i < columns.size(); ++i)
        for (std::size_t j = i + 1; j < columns.size(); ++j) {
            std::vector<double> xs, ys;
            for (const auto& region : out.regions) {
                xs.push_back(columns[i].by_region.at(region));
                ys.push_back(columns[j].by_region.at(region));
            }
            out.correlations.push_back(
                {columns[i].name, columns[j].name, metrics::pearson(xs, ys), xs.size()});
        }
    out.columns = std::move(columns);
    return out;
}

inline void write_comparison_csv(std::ostream& out, const CompareResult& cmp) {
    std::vector<std::string> header = {"region_code"};
    for (const auto& col : cmp.columns) {
        header.push_back(col.name);
        header.push_back(col.name + "_band");
    }
    for (const auto& c : cmp.correlations) header.push_back("diff_" + c.a + "_" + c.b);
    csv::write_row(out, header);
    for (const auto& region : cmp.regions) {
        std::vector<std::string> row = {region};
        for (const auto& col : cmp.columns) {
            const double v = col.by_region.at(region);
            row.push_back(csv::format_fraction(v));
            row.push_back(metrics::band_name(metrics::classify_band(v)));
        }
        for (const auto& c : cmp.correlations) {
            double diff = 0.0;
            for (const auto& col : cmp.columns) {
                if (col.name == c.a) diff += col.by_region.at(region);
                if (col.name == c.b) diff -= col.by_region.at(region);
            }
            row.push_back(csv::format_fraction(diff));
        }
        csv::write_row(out, row);
    }
}

inline void write_correlations_csv(std::ostream& out, const CompareResult& cmp) {
    csv::write_row(out, {"pair", "r", "n"});
    for (const auto& c : cmp.correlations)
        csv::write_row(out, {c.a + "|" + c.b, csv::format_fraction(c.r), std::to_string(c.n)});
}

inline nlohmann::json compare_json(const CompareResult& cmp) {
    nlohmann::json corr = nlohmann::json::array();
    for (const auto& c : cmp.correlations)
        corr.push_back({{"pair", c.a + "|" + c.b}, {"r", c.r}, {"n", c.n}});
    nlohmann::json names = nlohmann::json::array();
    for (const auto& col : cmp.columns) names.push_back(col.name);
    return nlohmann::json{{"regions", cmp.regions.size()},
                          {"columns", names},
                          {"only_in", cmp.only_in},
                          {"correlations", corr}};
}

} // namespace lingdiv::pipeline
