#pragma once

// Parsing and formatting helpers behind the command-line front-end: inline
// pmf/table micro-syntax, the JSON run-configuration schema, theta grids, and
// full-precision CSV/JSON row emission.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "effcap/harq.hpp"
#include "effcap/renewal.hpp"
#include "effcap/reward.hpp"

namespace effcap::cli {

inline std::vector<std::string_view> split(std::string_view text, char sep) {
    std::vector<std::string_view> parts;
    std::size_t begin = 0;
    while (begin <= text.size()) {
        const std::size_t end = text.find(sep, begin);
        if (end == std::string_view::npos) {
            parts.push_back(text.substr(begin));
            break;
        }
        parts.push_back(text.substr(begin, end - begin));
        begin = end + 1;
    }
    return parts;
}

inline double parse_double(std::string_view token, const std::string& what) {
    double value = 0.0;
    const auto* first = token.data();
    const auto* last = token.data() + token.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last)
        throw ConfigError(what, "could not parse number '" + std::string(token) +
                                    "' in " + what);
    return value;
}

inline int parse_int(std::string_view token, const std::string& what) {
    int value = 0;
    const auto* first = token.data();
    const auto* last = token.data() + token.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last)
        throw ConfigError(what, "could not parse integer '" + std::string(token) +
                                    "' in " + what);
    return value;
}

/// Inline pmf micro-syntax "k:prob[,k:prob...]", e.g. "1:0.5,2:0.5".
inline InterarrivalPmf parse_pmf(std::string_view spec) {
    std::vector<std::pair<int, double>> support;
    for (auto part : split(spec, ',')) {
        const auto kv = split(part, ':');
        if (kv.size() != 2) throw ConfigError("pmf", "pmf entries look like k:prob");
        support.emplace_back(parse_int(kv[0], "pmf"), parse_double(kv[1], "pmf"));
    }
    return InterarrivalPmf::from_support(support);
}

/// Inline table micro-syntax "k,state,prob,reward[;...]",
/// e.g. "1,S,0.6,1;2,S,0.3,1;2,F,0.1,0".
inline RewardTable parse_table(std::string_view spec) {
    std::vector<RewardEntry> entries;
    for (auto part : split(spec, ';')) {
        const auto fields = split(part, ',');
        if (fields.size() != 4)
            throw ConfigError("table", "table entries look like k,state,prob,reward");
        entries.push_back({parse_int(fields[0], "table"), std::string(fields[1]),
                           parse_double(fields[2], "table"),
                           parse_double(fields[3], "table")});
    }
    return RewardTable(std::move(entries));
}

struct ThetaGrid {
    double min = 1e-4;
    double max = 10.0;
    int points = 10;
    bool log_spaced = true;

    std::vector<double> values() const {
        if (points < 1) throw ConfigError("theta_grid", "theta_grid.points must be >= 1");
        if (!(min > 0.0) || !(max >= min))
            throw ConfigError("theta_grid", "theta_grid needs 0 < min <= max");
        std::vector<double> v;
        v.reserve(static_cast<std::size_t>(points));
        if (points == 1) return {min};
        for (int i = 0; i < points; ++i) {
            const double f = static_cast<double>(i) / static_cast<double>(points - 1);
            v.push_back(log_spaced ? std::exp(std::log(min) + f * (std::log(max) - std::log(min)))
                                   : min + f * (max - min));
        }
        return v;
    }
};

/// Grid flag micro-syntax "min,max,points[,log|lin]".
inline ThetaGrid parse_theta_grid(std::string_view spec) {
    const auto parts = split(spec, ',');
    if (parts.size() != 3 && parts.size() != 4)
        throw ConfigError("theta-grid", "theta grid looks like min,max,points[,log|lin]");
    ThetaGrid g;
    g.min = parse_double(parts[0], "theta-grid");
    g.max = parse_double(parts[1], "theta-grid");
    g.points = parse_int(parts[2], "theta-grid");
    if (parts.size() == 4) {
        if (parts[3] == "log")
            g.log_spaced = true;
        else if (parts[3] == "lin")
            g.log_spaced = false;
        else
            throw ConfigError("theta-grid", "spacing must be log or lin");
    }
    return g;
}

/// JSON run configuration. Unknown keys are rejected by name.
struct RunConfig {
    std::optional<HarqScheme> scheme;
    std::optional<int> max_rounds;
    std::optional<std::vector<double>> rates;
    std::optional<double> snr_db;
    std::optional<std::vector<NakagamiParam>> fading;
    std::optional<double> theta;
    std::optional<ThetaGrid> theta_grid;
    std::optional<std::uint64_t> samples;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output;

    static RunConfig from_json(const nlohmann::json& j) {
        static const std::vector<std::string> allowed = {
            "scheme", "max_rounds", "rates",   "snr_db", "fading",
            "theta",  "theta_grid", "samples", "seed",   "output"};
        if (!j.is_object()) throw ConfigError("config", "configuration must be a JSON object");
        for (const auto& [key, value] : j.items()) {
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
                throw ConfigError(key, "unknown configuration key: " + key);
        }
        RunConfig c;
        if (j.contains("scheme")) {
            if (!j["scheme"].is_string())
                throw ConfigError("scheme", "scheme must be a string");
            const auto s = parse_scheme(j["scheme"].get<std::string>());
            if (!s) throw ConfigError("scheme", "scheme must be one of type1|cc|ir|vr|xp");
            c.scheme = *s;
        }
        if (j.contains("max_rounds")) {
            if (!j["max_rounds"].is_number_integer())
                throw ConfigError("max_rounds", "max_rounds must be an integer");
            c.max_rounds = j["max_rounds"].get<int>();
        }
        if (j.contains("rates")) {
            if (!j["rates"].is_array())
                throw ConfigError("rates", "rates must be an array of numbers");
            c.rates = j["rates"].get<std::vector<double>>();
        }
        if (j.contains("snr_db")) {
            if (!j["snr_db"].is_number()) throw ConfigError("snr_db", "snr_db must be a number");
            c.snr_db = j["snr_db"].get<double>();
        }
        if (j.contains("fading")) {
            if (!j["fading"].is_array())
                throw ConfigError("fading", "fading must be an array of {m, omega}");
            std::vector<NakagamiParam> fading;
            for (const auto& item : j["fading"]) {
                if (!item.is_object())
                    throw ConfigError("fading", "fading entries must be objects");
                for (const auto& [key, value] : item.items())
                    if (key != "m" && key != "omega")
                        throw ConfigError(key, "unknown fading key: " + key);
                NakagamiParam p;
                if (item.contains("m")) p.m = item["m"].get<double>();
                if (item.contains("omega")) p.omega = item["omega"].get<double>();
                fading.push_back(p);
            }
            c.fading = std::move(fading);
        }
        if (j.contains("theta")) {
            if (!j["theta"].is_number()) throw ConfigError("theta", "theta must be a number");
            c.theta = j["theta"].get<double>();
        }
        if (j.contains("theta_grid")) {
            const auto& g = j["theta_grid"];
            if (!g.is_object())
                throw ConfigError("theta_grid", "theta_grid must be an object");
            ThetaGrid grid;
            for (const auto& [key, value] : g.items()) {
                if (key == "min")
                    grid.min = value.get<double>();
                else if (key == "max")
                    grid.max = value.get<double>();
                else if (key == "points")
                    grid.points = value.get<int>();
                else if (key == "log")
                    grid.log_spaced = value.get<bool>();
                else
                    throw ConfigError(key, "unknown theta_grid key: " + key);
            }
            c.theta_grid = grid;
        }
        if (j.contains("samples")) c.samples = j["samples"].get<std::uint64_t>();
        if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("output")) c.output = j["output"].get<std::string>();
        return c;
    }

    void apply(HarqConfig& config) const {
        if (scheme) config.scheme = *scheme;
        if (max_rounds) config.max_rounds = *max_rounds;
        if (rates) config.rates = *rates;
        if (snr_db) config.snr_db = *snr_db;
        if (fading) config.fading = *fading;
    }
};

/// Full-precision decimal so re-runs are byte-comparable.
inline std::string format_number(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

struct RowSink {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    void write_csv(std::ostream& os) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            os << (i ? "," : "") << header[i];
        os << '\n';
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i)
                os << (i ? "," : "") << format_number(row[i]);
            os << '\n';
        }
    }

    void write_json(std::ostream& os) const {
        os << "[\n";
        for (std::size_t r = 0; r < rows.size(); ++r) {
            os << "  {";
            for (std::size_t i = 0; i < rows[r].size(); ++i) {
                os << (i ? "," : "") << "\"" << header[i] << "\":";
                // JSON has no NaN literal
                os << (std::isnan(rows[r][i]) ? "null" : format_number(rows[r][i]));
            }
            os << (r + 1 < rows.size() ? "},\n" : "}\n");
        }
        os << "]\n";
    }
};

} // namespace effcap::cli
