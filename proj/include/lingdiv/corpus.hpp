#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lingdiv/common.hpp"
#include "lingdiv/geo.hpp"
#include "lingdiv/text.hpp"
#include "lingdiv/utc.hpp"

namespace lingdiv::corpus {

// One georeferenced post. Geohash input is decoded eagerly, so lat/lon are
// always usable; the original geohash is kept for round-tripping.
struct TextRecord {
    std::string id;
    std::int64_t timestamp = 0;  // epoch seconds, UTC
    double lat = 0.0;
    double lon = 0.0;
    std::optional<std::string> geohash;
    std::string text;
    std::optional<std::string> lang;

    geo::LatLon point() const { return {lat, lon}; }
    bool operator==(const TextRecord&) const = default;
};

struct ParseError {
    std::size_t line = 0;
    std::string reason;
};

struct ParseReport {
    std::size_t parsed = 0;
    std::size_t rejected = 0;
    std::vector<ParseError> first_errors;  // capped at kMaxReportedErrors

    static constexpr std::size_t kMaxReportedErrors = 50;

    void add_error(std::size_t line, std::string reason) {
        ++rejected;
        if (first_errors.size() < kMaxReportedErrors)
            first_errors.push_back({line, std::move(reason)});
    }
};

inline nlohmann::json report_json(const ParseReport& rep) {
    nlohmann::json errs = nlohmann::json::array();
    for (const auto& e : rep.first_errors)
        errs.push_back({{"line", e.line}, {"reason", e.reason}});
    return nlohmann::json{{"parsed", rep.parsed}, {"rejected", rep.rejected}, {"first_errors", errs}};
}

struct ParseResult {
    std::vector<TextRecord> records;
    ParseReport report;
};

namespace detail {

inline TextRecord parse_row(const nlohmann::json& j) {
    TextRecord rec;
    if (!j.is_object()) throw data_error("row is not a JSON object");

    auto str_field = [&](const char* name) -> std::string {
        auto it = j.find(name);
        if (it == j.end()) throw data_error(std::string("missing field '") + name + "'");
        if (!it->is_string()) throw data_error(std::string("field '") + name + "' must be a string");
        return it->get<std::string>();
    };

    rec.id = str_field("id");
    if (rec.id.empty()) throw data_error("field 'id' is empty");
    rec.timestamp = utc::parse_instant(str_field("timestamp"));

    const bool has_latlon = j.contains("lat") || j.contains("lon");
    const bool has_geohash = j.contains("geohash");
    if (has_latlon && has_geohash) throw data_error("both lat/lon and geohash given");
    if (has_latlon) {
        if (!j.contains("lat") || !j.contains("lon")) throw data_error("lat and lon must both be given");
        if (!j["lat"].is_number() || !j["lon"].is_number())
            throw data_error("lat/lon must be numbers");
        rec.lat = j["lat"].get<double>();
        rec.lon = j["lon"].get<double>();
        if (rec.lat < -90.0 || rec.lat > 90.0 || !std::isfinite(rec.lat))
            throw data_error("lat out of range [-90,90]");
        if (rec.lon < -180.0 || rec.lon > 180.0 || !std::isfinite(rec.lon))
            throw data_error("lon out of range [-180,180]");
    } else if (has_geohash) {
        rec.geohash = str_field("geohash");
        auto p = geo::decode_geohash(*rec.geohash);
        rec.lat = p.lat;
        rec.lon = p.lon;
    } else {
        throw data_error("missing location (lat/lon or geohash)");
    }

    rec.text = str_field("text");
    if (trim(rec.text).empty()) throw data_error("field 'text' is empty");

    if (j.contains("lang")) {
        std::string lang = str_field("lang");
        if (!is_language_code(lang)) throw data_error("field 'lang' is not a three-letter code");
        rec.lang = std::move(lang);
    }
    return rec;
}

} // namespace detail

// Newline-delimited JSON, one record per line. Bad rows are counted and
// reported with their line numbers; parsing never aborts on a bad row.
inline ParseResult parse_records(std::istream& in) {
    if (!in) throw data_error("parse_records: cannot read input stream");
    ParseResult out;
    std::set<std::string> ids;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            out.report.add_error(lineno, "invalid JSON");
            continue;
        }
        try {
            TextRecord rec = detail::parse_row(j);
            if (!ids.insert(rec.id).second) throw data_error("duplicate id '" + rec.id + "'");
            out.records.push_back(std::move(rec));
            ++out.report.parsed;
        } catch (const data_error& e) {
            out.report.add_error(lineno, e.what());
        }
    }
    if (in.bad()) throw data_error("parse_records: I/O failure while reading");
    return out;
}

inline nlohmann::json record_json(const TextRecord& rec) {
    nlohmann::json j;
    j["id"] = rec.id;
    j["timestamp"] = utc::format_instant(rec.timestamp);
    if (rec.geohash) {
        j["geohash"] = *rec.geohash;
    } else {
        j["lat"] = rec.lat;
        j["lon"] = rec.lon;
    }
    j["text"] = rec.text;
    if (rec.lang) j["lang"] = *rec.lang;
    return j;
}

inline std::string serialize_record(const TextRecord& rec) { return record_json(rec).dump(); }

inline void serialize_records(std::ostream& out, std::span<const TextRecord> records) {
    for (const auto& rec : records) out << serialize_record(rec) << '\n';
}

inline std::string normalize_text(std::string_view s) { return text::normalize_text(s); }

namespace detail {

struct TokenSpan {
    std::size_t begin = 0;  // cp indices, [begin, end)
    std::size_t end = 0;
};

inline std::vector<TokenSpan> word_spans(const std::vector<char32_t>& cps) {
    std::vector<TokenSpan> spans;
    std::size_t i = 0;
    while (i < cps.size()) {
        if (!text::is_word_cp(cps[i])) {
            ++i;
            continue;
        }
        std::size_t b = i;
        while (i < cps.size() && text::is_word_cp(cps[i])) ++i;
        spans.push_back({b, i});
    }
    return spans;
}

inline std::string collapse_whitespace(const std::vector<char32_t>& cps) {
    std::string out;
    bool in_space = true;  // swallows leading whitespace
    std::string pending;
    for (char32_t cp : cps) {
        if (text::is_space_cp(cp)) {
            in_space = true;
            continue;
        }
        if (in_space && !out.empty()) out.push_back(' ');
        in_space = false;
        text::append_utf8(out, cp);
    }
    return out;
}

} // namespace detail

// Deletes excluded tokens (whole-token, case-insensitive on normalized
// form) from record text. Records whose text becomes empty are dropped;
// untouched records pass through byte-identical.
inline std::vector<TextRecord> filter_strings(std::span<const TextRecord> records,
                                              std::span<const std::string> exclusions) {
    std::set<std::string> excluded;
    for (const auto& e : exclusions) {
        std::string norm = text::normalize_text(e);
        if (norm.empty()) throw config_error("filter_strings: exclusion '" + e + "' normalizes to nothing");
        excluded.insert(norm);
    }
    std::vector<TextRecord> out;
    out.reserve(records.size());
    for (const auto& rec : records) {
        auto cps = text::decode_utf8(rec.text);
        auto spans = detail::word_spans(cps);
        std::vector<detail::TokenSpan> hits;
        for (const auto& sp : spans) {
            std::string token = text::encode_utf8(
                std::vector<char32_t>(cps.begin() + static_cast<std::ptrdiff_t>(sp.begin),
                                      cps.begin() + static_cast<std::ptrdiff_t>(sp.end)));
            if (excluded.count(text::normalize_text(token))) hits.push_back(sp);
        }
        if (hits.empty()) {
            out.push_back(rec);
            continue;
        }
        std::vector<char32_t> kept;
        kept.reserve(cps.size());
        std::size_t h = 0;
        for (std::size_t i = 0; i < cps.size();) {
            if (h < hits.size() && i == hits[h].begin) {
                i = hits[h].end;
                ++h;
            } else {
                kept.push_back(cps[i]);
                ++i;
            }
        }
        std::string new_text = detail::collapse_whitespace(kept);
        if (new_text.empty()) continue;  // record dropped
        TextRecord copy = rec;
        copy.text = std::move(new_text);
        out.push_back(std::move(copy));
    }
    return out;
}

} // namespace lingdiv::corpus
