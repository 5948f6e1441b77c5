#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lingdiv/common.hpp"
#include "lingdiv/csv.hpp"

namespace lingdiv::geo {

struct LatLon {
    double lat = 0.0;
    double lon = 0.0;
};

inline constexpr double kEarthRadiusKm = 6371.0088;  // IUGG mean radius
inline constexpr double kDefaultRadiusKm = 50.0;
inline constexpr std::string_view kGeohashAlphabet = "0123456789bcdefghjkmnpqrstuvwxyz";

namespace detail {
inline int geohash_digit(char c) {
    auto pos = kGeohashAlphabet.find(c);
    return pos == std::string_view::npos ? -1 : static_cast<int>(pos);
}
} // namespace detail

// Centre point of the geohash cell.
inline LatLon decode_geohash(std::string_view gh) {
    if (gh.empty()) throw data_error("geohash: empty string");
    double lat_lo = -90.0, lat_hi = 90.0, lon_lo = -180.0, lon_hi = 180.0;
    bool even = true;  // bits alternate lon, lat, lon, ...
    for (std::size_t i = 0; i < gh.size(); ++i) {
        int d = detail::geohash_digit(gh[i]);
        if (d < 0)
            throw data_error("geohash '" + std::string(gh) + "': invalid character at position " +
                             std::to_string(i + 1));
        for (int bit = 4; bit >= 0; --bit) {
            int b = (d >> bit) & 1;
            if (even) {
                double mid = (lon_lo + lon_hi) / 2.0;
                (b ? lon_lo : lon_hi) = mid;
            } else {
                double mid = (lat_lo + lat_hi) / 2.0;
                (b ? lat_lo : lat_hi) = mid;
            }
            even = !even;
        }
    }
    return {(lat_lo + lat_hi) / 2.0, (lon_lo + lon_hi) / 2.0};
}

inline std::string encode_geohash(LatLon p, int precision) {
    if (precision < 1 || precision > 12) throw config_error("geohash precision out of range");
    double lat_lo = -90.0, lat_hi = 90.0, lon_lo = -180.0, lon_hi = 180.0;
    std::string out;
    out.reserve(static_cast<std::size_t>(precision));
    bool even = true;
    int digit = 0, bits = 0;
    while (out.size() < static_cast<std::size_t>(precision)) {
        if (even) {
            double mid = (lon_lo + lon_hi) / 2.0;
            if (p.lon >= mid) {
                digit = (digit << 1) | 1;
                lon_lo = mid;
            } else {
                digit <<= 1;
                lon_hi = mid;
            }
        } else {
            double mid = (lat_lo + lat_hi) / 2.0;
            if (p.lat >= mid) {
                digit = (digit << 1) | 1;
                lat_lo = mid;
            } else {
                digit <<= 1;
                lat_hi = mid;
            }
        }
        even = !even;
        if (++bits == 5) {
            out.push_back(kGeohashAlphabet[static_cast<std::size_t>(digit)]);
            digit = 0;
            bits = 0;
        }
    }
    return out;
}

inline double haversine_km(LatLon a, LatLon b) {
    constexpr double deg = 3.14159265358979323846 / 180.0;
    const double la1 = a.lat * deg, la2 = b.lat * deg;
    const double dlat = (b.lat - a.lat) * deg, dlon = (b.lon - a.lon) * deg;
    const double s1 = std::sin(dlat / 2.0), s2 = std::sin(dlon / 2.0);
    const double h = s1 * s1 + std::cos(la1) * std::cos(la2) * s2 * s2;
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

struct PopulationCentre {
    std::string centre_id;
    std::string name;
    double lat = 0.0;
    double lon = 0.0;
    std::string region_code;

    LatLon point() const { return {lat, lon}; }
};

struct RegionAssignment {
    std::string record_id;
    std::optional<std::string> centre_id;  // empty -> UNASSIGNED
    std::optional<std::string> region_code;
    double distance_km = 0.0;

    bool assigned() const { return centre_id.has_value(); }
};

// Nearest centre within the radius wins; ties break by ascending centre_id,
// which makes assignment independent of centre list order.
inline RegionAssignment assign_centre(std::string_view record_id, LatLon pos,
                                      std::span<const PopulationCentre> centres,
                                      double radius_km = kDefaultRadiusKm) {
    if (centres.empty()) throw config_error("assign_centre: empty centres list");
    const PopulationCentre* best = nullptr;
    double best_d = 0.0;
    for (const auto& c : centres) {
        double d = haversine_km(pos, c.point());
        if (d > radius_km) continue;
        if (!best || d < best_d || (d == best_d && c.centre_id < best->centre_id)) {
            best = &c;
            best_d = d;
        }
    }
    RegionAssignment out;
    out.record_id = std::string(record_id);
    if (best) {
        out.centre_id = best->centre_id;
        out.region_code = best->region_code;
        out.distance_km = best_d;
    }
    return out;
}

struct CentreOverlap {
    std::string centre_a;
    std::string centre_b;
    double distance_km = 0.0;
};

// Cross-region centre pairs whose catchments can absorb each other's
// records (pairwise distance < 2 * radius), nearest first.
inline std::vector<CentreOverlap> overlap_diagnostics(std::span<const PopulationCentre> centres,
                                                      double radius_km = kDefaultRadiusKm) {
    if (centres.empty()) throw config_error("overlap_diagnostics: empty centres list");
    std::vector<CentreOverlap> out;
    for (std::size_t i = 0; i < centres.size(); ++i) {
        for (std::size_t j = i + 1; j < centres.size(); ++j) {
            if (centres[i].region_code == centres[j].region_code) continue;
            double d = haversine_km(centres[i].point(), centres[j].point());
            if (d < 2.0 * radius_km) {
                auto a = centres[i].centre_id, b = centres[j].centre_id;
                if (b < a) std::swap(a, b);
                out.push_back({a, b, d});
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const CentreOverlap& x, const CentreOverlap& y) {
        if (x.distance_km != y.distance_km) return x.distance_km < y.distance_km;
        return std::tie(x.centre_a, x.centre_b) < std::tie(y.centre_a, y.centre_b);
    });
    return out;
}

// Centres file: CSV with header centre_id,name,lat,lon,region_code.
inline std::vector<PopulationCentre> parse_centres(std::istream& in) {
    auto table = csv::read(in);
    const auto id_c = table.column("centre_id");
    const auto name_c = table.column("name");
    const auto lat_c = table.column("lat");
    const auto lon_c = table.column("lon");
    const auto region_c = table.column("region_code");
    std::vector<PopulationCentre> centres;
    std::map<std::string, bool> seen;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (row.size() != table.header.size())
            throw data_error("centres row " + std::to_string(r + 2) + ": wrong field count");
        PopulationCentre c;
        c.centre_id = trim(row[id_c]);
        c.name = row[name_c];
        c.lat = csv::parse_double(row[lat_c], "lat");
        c.lon = csv::parse_double(row[lon_c], "lon");
        c.region_code = trim(row[region_c]);
        if (c.centre_id.empty()) throw data_error("centres row " + std::to_string(r + 2) + ": empty centre_id");
        if (c.lat < -90.0 || c.lat > 90.0)
            throw data_error("centre '" + c.centre_id + "': lat out of range");
        if (c.lon < -180.0 || c.lon > 180.0)
            throw data_error("centre '" + c.centre_id + "': lon out of range");
        if (seen.count(c.centre_id))
            throw data_error("centre '" + c.centre_id + "': duplicate centre_id");
        seen[c.centre_id] = true;
        centres.push_back(std::move(c));
    }
    if (centres.empty()) throw data_error("centres file has no rows");
    return centres;
}

inline std::vector<PopulationCentre> load_centres(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open centres file '" + path + "'");
    return parse_centres(in);
}

struct CoverageReport {
    std::size_t assigned = 0;
    std::size_t unassigned = 0;
    std::map<std::string, std::size_t> per_region;
};

inline CoverageReport make_coverage(std::span<const RegionAssignment> assignments) {
    CoverageReport rep;
    for (const auto& a : assignments) {
        if (a.assigned()) {
            ++rep.assigned;
            ++rep.per_region[*a.region_code];
        } else {
            ++rep.unassigned;
        }
    }
    return rep;
}

inline nlohmann::json coverage_json(const CoverageReport& rep) {
    nlohmann::json per;
    for (const auto& [region, n] : rep.per_region) per[region] = n;
    return nlohmann::json{{"assigned", rep.assigned},
                          {"unassigned", rep.unassigned},
                          {"per_region", per}};
}

} // namespace lingdiv::geo
