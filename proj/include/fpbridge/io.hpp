#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fpbridge/density_kernel.hpp"
#include "fpbridge/errors.hpp"
#include "fpbridge/estimators.hpp"
#include "fpbridge/version.hpp"
#include "fpbridge/walk_sim.hpp"

namespace fpbridge {

// Shortest round-trippable decimal. Output files must be byte-identical across thread
// counts, so every double goes through this one formatter.
inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

// Rows carry typed cells so the JSON mirror keeps numbers as numbers.
struct OutputTable {
    std::vector<std::string> columns;
    std::vector<std::vector<nlohmann::json>> rows;
    std::vector<std::pair<std::string, std::string>> meta; // rendered into one comment line

    void add_meta(const std::string& key, const std::string& value) {
        meta.emplace_back(key, value);
    }
    void add_row(std::vector<nlohmann::json> cells) {
        if (cells.size() != columns.size())
            throw ValidationError("OutputTable: row width does not match header");
        rows.push_back(std::move(cells));
    }
};

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::string render_cell(const nlohmann::json& cell) {
    if (cell.is_string()) return csv_escape(cell.get<std::string>());
    if (cell.is_boolean()) return cell.get<bool>() ? "true" : "false";
    if (cell.is_number_integer()) return std::to_string(cell.get<std::int64_t>());
    if (cell.is_number_unsigned()) return std::to_string(cell.get<std::uint64_t>());
    if (cell.is_number_float()) return format_double(cell.get<double>());
    if (cell.is_null()) return "";
    return cell.dump();
}

inline void write_csv(std::ostream& os, const OutputTable& t) {
    os << "#";
    os << " version=" << kVersion;
    for (const auto& [k, v] : t.meta) os << " " << k << "=" << v;
    os << "\n";
    for (std::size_t c = 0; c < t.columns.size(); ++c)
        os << (c ? "," : "") << csv_escape(t.columns[c]);
    os << "\n";
    for (const auto& row : t.rows) {
        for (std::size_t c = 0; c < row.size(); ++c)
            os << (c ? "," : "") << render_cell(row[c]);
        os << "\n";
    }
}

inline void write_json(std::ostream& os, const OutputTable& t) {
    nlohmann::json doc;
    doc["version"] = kVersion;
    for (const auto& [k, v] : t.meta) doc["meta"][k] = v;
    doc["rows"] = nlohmann::json::array();
    for (const auto& row : t.rows) {
        nlohmann::json obj;
        for (std::size_t c = 0; c < row.size(); ++c) obj[t.columns[c]] = row[c];
        doc["rows"].push_back(std::move(obj));
    }
    os << doc.dump(2) << "\n";
}

inline void append_record_row(OutputTable& t, const EstimateRecord& rec,
                              std::vector<nlohmann::json> prefix = {}) {
    prefix.push_back(rec.value);
    prefix.push_back(rec.std_error);
    prefix.push_back(rec.samples);
    prefix.push_back(method_name(rec.method));
    prefix.push_back(rec.seed);
    prefix.push_back(rec.degenerate);
    prefix.push_back(rec.note);
    t.add_row(std::move(prefix));
}

inline const std::vector<std::string>& record_columns() {
    static const std::vector<std::string> cols = {
        "value", "std_error", "samples", "method", "seed", "degenerate", "note"};
    return cols;
}

inline OutputTable sweep_table(const std::vector<SweepRow>& rows, const std::string& model,
                               const std::string& boundary) {
    OutputTable t;
    t.columns = {"model", "boundary", "n", "k", "regime", "method",
                 "estimate", "se", "l_hat", "l_hat_se", "asymptotic", "ratio", "seed", "error"};
    for (const auto& r : rows)
        t.add_row({model, boundary, r.n, r.k, regime_name(r.regime), method_name(r.method),
                   r.estimate, r.se, r.l_hat, r.l_hat_se, r.asymptotic, r.ratio, r.seed, r.error});
    return t;
}

inline OutputTable grid_table(const DensityGrid& grid) {
    OutputTable t;
    t.columns = {"x", "density"};
    t.add_meta("h", format_double(grid.h));
    t.add_meta("mass", format_double(grid.survival_mass));
    for (std::size_t j = 0; j < grid.v.size(); ++j) t.add_row({grid.x(j), grid.v[j]});
    return t;
}

inline OutputTable path_table(const WalkPath& path) {
    OutputTable t;
    t.columns = {"step", "value", "killed"};
    t.add_meta("seed", std::to_string(path.seed));
    for (std::size_t i = 0; i < path.values.size(); ++i) {
        const bool killed = path.killed_at && *path.killed_at == i + 1;
        t.add_row({i + 1, path.values[i], killed});
    }
    return t;
}

// key=value per line; blank lines and # comments skipped; whitespace trimmed.
inline std::map<std::string, std::string> parse_key_value_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("parse_key_value_file: cannot open " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ValidationError("parse_key_value_file: missing '=' on line " + std::to_string(lineno));
        std::string key = trim(s.substr(0, eq));
        std::string val = trim(s.substr(eq + 1));
        if (key.empty()) throw ValidationError("parse_key_value_file: empty key on line " + std::to_string(lineno));
        kv[key] = val;
    }
    return kv;
}

} // namespace fpbridge
