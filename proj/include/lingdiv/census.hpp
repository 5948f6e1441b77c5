#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "lingdiv/common.hpp"
#include "lingdiv/csv.hpp"
#include "lingdiv/metrics.hpp"

namespace lingdiv::census {

struct CensusRow {
    int cycle = 0;  // census year, e.g. 2006/2013/2018
    std::string region_code;
    std::string region_name;
    std::string label;  // census language label, verbatim
    std::uint64_t responses = 0;
};

struct CensusTable {
    std::vector<CensusRow> rows;

    std::vector<int> cycles() const {
        std::set<int> s;
        for (const auto& r : rows) s.insert(r.cycle);
        return {s.begin(), s.end()};
    }
};

// Census CSV: header cycle,region_code,region_name,label,responses.
// Census data must be clean; any bad row aborts the parse.
inline CensusTable parse_census(std::istream& in) {
    auto table = csv::read(in);
    const auto cycle_c = table.column("cycle");
    const auto code_c = table.column("region_code");
    const auto name_c = table.column("region_name");
    const auto label_c = table.column("label");
    const auto resp_c = table.column("responses");
    CensusTable out;
    std::set<std::tuple<int, std::string, std::string>> keys;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const std::string where = "census row " + std::to_string(i + 2);
        if (row.size() != table.header.size()) throw data_error(where + ": wrong field count");
        CensusRow r;
        long long cycle = csv::parse_int(row[cycle_c], where + " cycle");
        if (cycle < 1800 || cycle > 3000) throw data_error(where + ": implausible cycle year");
        r.cycle = static_cast<int>(cycle);
        r.region_code = trim(row[code_c]);
        r.region_name = row[name_c];
        r.label = trim(row[label_c]);
        if (r.region_code.empty()) throw data_error(where + ": empty region_code");
        if (r.label.empty()) throw data_error(where + ": empty label");
        long long n = csv::parse_int(row[resp_c], where + " responses");
        if (n < 0) throw data_error(where + ": negative responses for (" + r.region_code + ", " +
                                    r.label + ")");
        r.responses = static_cast<std::uint64_t>(n);
        if (!keys.insert({r.cycle, r.region_code, r.label}).second)
            throw data_error(where + ": duplicate (cycle, region, label) = (" +
                             std::to_string(r.cycle) + ", " + r.region_code + ", " + r.label + ")");
        out.rows.push_back(std::move(r));
    }
    return out;
}

inline CensusTable load_census(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open census file '" + path + "'");
    return parse_census(in);
}

// The categories the analysis leaves out of every share computation.
inline std::vector<std::string> default_exclusions() {
    return {"New Zealand Sign Language", "Other", "None (e.g. too young to talk)"};
}

inline CensusTable apply_exclusions(const CensusTable& table,
                                    const std::vector<std::string>& excluded_labels) {
    std::set<std::string> excluded;
    for (const auto& l : excluded_labels) excluded.insert(trim(l));
    CensusTable out;
    for (const auto& r : table.rows)
        if (!excluded.count(r.label)) out.rows.push_back(r);
    return out;
}

// census label -> ISO 639-3 code, or "EXCLUDE" to drop the label.
class LabelConcordance {
public:
    static constexpr const char* kExclude = "EXCLUDE";

    static LabelConcordance parse(std::istream& in) {
        auto table = csv::read(in);
        const auto label_c = table.column("label");
        const auto code_c = table.column("code");
        LabelConcordance conc;
        for (std::size_t i = 0; i < table.rows.size(); ++i) {
            const auto& row = table.rows[i];
            if (row.size() != table.header.size())
                throw data_error("concordance row " + std::to_string(i + 2) + ": wrong field count");
            std::string label = trim(row[label_c]);
            std::string code = trim(row[code_c]);
            if (label.empty())
                throw data_error("concordance row " + std::to_string(i + 2) + ": empty label");
            if (code != kExclude && !is_language_code(code))
                throw data_error("concordance label '" + label + "': bad code '" + code + "'");
            if (conc.map_.count(label))
                throw data_error("concordance label '" + label + "' appears twice");
            conc.map_[label] = std::move(code);
        }
        return conc;
    }

    static LabelConcordance load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw config_error("cannot open concordance file '" + path + "'");
        return parse(in);
    }

    const std::map<std::string, std::string>& mapping() const { return map_; }

    void set(const std::string& label, const std::string& code) { map_[trim(label)] = code; }

private:
    std::map<std::string, std::string> map_;
};

// cycle -> region_code -> language counts. Labels mapping to the same code
// are summed; EXCLUDE-mapped labels drop out. Any unresolved label is an
// error listing every offender.
using MappedCounts = std::map<int, std::map<std::string, metrics::Counts>>;

inline MappedCounts map_labels(const CensusTable& table, const LabelConcordance& conc) {
    std::set<std::string> unresolved;
    MappedCounts out;
    for (const auto& r : table.rows) {
        auto it = conc.mapping().find(r.label);
        if (it == conc.mapping().end()) {
            unresolved.insert(r.label);
            continue;
        }
        if (it->second == LabelConcordance::kExclude) continue;
        out[r.cycle][r.region_code][it->second] += r.responses;
    }
    if (!unresolved.empty()) {
        std::string msg = "unresolved census labels:";
        for (const auto& l : unresolved) msg += " '" + l + "'";
        throw data_error(msg);
    }
    return out;
}

// National counts = responses summed over regions within one cycle.
inline metrics::Counts national_counts(const MappedCounts& mapped, int cycle) {
    auto it = mapped.find(cycle);
    if (it == mapped.end()) throw data_error("census: no rows for cycle " + std::to_string(cycle));
    metrics::Counts out;
    for (const auto& [region, counts] : it->second)
        for (const auto& [code, n] : counts) out[code] += n;
    return out;
}

// Shares use total included responses as the denominator.
inline double census_cr(const metrics::Counts& counts, std::size_t n,
                        metrics::Scope scope = {}) {
    return metrics::concentration_ratio(metrics::share_table(counts, std::move(scope)), n);
}

} // namespace lingdiv::census
