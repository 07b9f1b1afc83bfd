#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rkhsid/csv.hpp"

namespace rkhsid {

class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Experiment configuration: one structured text file with named [blocks] of
// key = value lines. Unknown blocks or keys are rejected with a line-anchored
// diagnostic; CLI flags overwrite parsed values before anything runs.
class ExperimentConfig {
public:
    struct Entry {
        std::string key;
        std::string value;
        int line = 0;
    };

    static const std::map<std::string, std::set<std::string>>& schema() {
        static const std::map<std::string, std::set<std::string>> s = {
            {"kernel", {"family", "domain", "beta", "decay", "rho", "table"}},
            {"input",
             {"kind", "domain", "amplitude", "start", "length", "frequency", "phase", "seed",
              "file"}},
            {"system", {"type", "pole", "num", "den", "taps", "tail_c", "tail_r", "terms"}},
            {"samples", {"times"}},
            {"noise", {"sigma", "seed"}},
            {"fit", {"lambda", "tail_tol", "level", "grid"}},
            {"verify",
             {"checks", "tail_tol", "max_horizon", "trials", "seed", "tau", "n_max", "lo", "hi",
              "level", "probe_horizon", "probe_tol", "gap_tol"}},
            {"output", {"directory"}},
        };
        return s;
    }

    static ExperimentConfig parse_text(const std::string& text, const std::string& name) {
        ExperimentConfig cfg;
        std::istringstream in(text);
        std::string line;
        std::string section;
        int lineno = 0;
        auto fail = [&](const std::string& msg) {
            throw config_error(name + ":" + std::to_string(lineno) + ": " + msg);
        };
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            const auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            const std::string trimmed = trim(line);
            if (trimmed.empty()) continue;
            if (trimmed.front() == '[') {
                if (trimmed.back() != ']') fail("malformed section header '" + trimmed + "'");
                section = trim(trimmed.substr(1, trimmed.size() - 2));
                if (!schema().count(section)) fail("unknown section [" + section + "]");
                cfg.touch_section(section);
                continue;
            }
            const auto eq = trimmed.find('=');
            if (eq == std::string::npos) fail("expected key = value, got '" + trimmed + "'");
            if (section.empty()) fail("key outside any [section]");
            const std::string key = trim(trimmed.substr(0, eq));
            const std::string value = trim(trimmed.substr(eq + 1));
            if (!schema().at(section).count(key))
                fail("unknown key '" + key + "' in [" + section + "]");
            if (cfg.find(section, key)) fail("duplicate key '" + key + "' in [" + section + "]");
            cfg.sections_[cfg.index_of(section)].second.push_back({key, value, lineno});
        }
        return cfg;
    }

    static ExperimentConfig parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw config_error("cannot open config file '" + path + "'");
        std::ostringstream text;
        text << in.rdbuf();
        return parse_text(text.str(), path);
    }

    bool has_section(const std::string& section) const {
        for (const auto& [name, entries] : sections_)
            if (name == section) return true;
        return false;
    }

    const std::string* find(const std::string& section, const std::string& key) const {
        for (const auto& [name, entries] : sections_)
            if (name == section)
                for (const auto& e : entries)
                    if (e.key == key) return &e.value;
        return nullptr;
    }

    std::string get(const std::string& section, const std::string& key) const {
        const auto* v = find(section, key);
        if (!v) throw config_error("missing required key '" + key + "' in [" + section + "]");
        return *v;
    }

    std::string get_or(const std::string& section, const std::string& key,
                       const std::string& fallback) const {
        const auto* v = find(section, key);
        return v ? *v : fallback;
    }

    double get_number(const std::string& section, const std::string& key) const {
        return parse_number(get(section, key), "[" + section + "]." + key);
    }

    double get_number_or(const std::string& section, const std::string& key,
                         double fallback) const {
        const auto* v = find(section, key);
        return v ? parse_number(*v, "[" + section + "]." + key) : fallback;
    }

    // CLI flags land here; overrides respect the schema too.
    void set(const std::string& section, const std::string& key, const std::string& value) {
        if (!schema().count(section) || !schema().at(section).count(key))
            throw config_error("override targets unknown key [" + section + "] " + key);
        touch_section(section);
        auto& entries = sections_[index_of(section)].second;
        for (auto& e : entries) {
            if (e.key == key) {
                e.value = value;
                return;
            }
        }
        entries.push_back({key, value, 0});
    }

    // Sorted canonical dump; the reproducibility manifest hashes this.
    std::string canonical_text() const {
        std::vector<std::string> lines;
        for (const auto& [name, entries] : sections_)
            for (const auto& e : entries) lines.push_back(name + "." + e.key + " = " + e.value);
        std::sort(lines.begin(), lines.end());
        std::string out;
        for (const auto& l : lines) {
            out += l;
            out += '\n';
        }
        return out;
    }

    std::string hash() const {
        std::uint64_t h = 1469598103934665603ull;
        for (unsigned char c : canonical_text()) {
            h ^= c;
            h *= 1099511628211ull;
        }
        char buf[17];
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
        return std::string(buf);
    }

private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t");
        return s.substr(b, e - b + 1);
    }

    void touch_section(const std::string& section) {
        if (!has_section(section)) sections_.emplace_back(section, std::vector<Entry>{});
    }

    std::size_t index_of(const std::string& section) const {
        for (std::size_t i = 0; i < sections_.size(); ++i)
            if (sections_[i].first == section) return i;
        throw config_error("internal: section not found");
    }

    std::vector<std::pair<std::string, std::vector<Entry>>> sections_;
};

inline bool trimmed_empty(const std::string& s) {
    return s.find_first_not_of(" \t") == std::string::npos;
}

// "2,5,9", "1:200", or "0:63:3" -> explicit time list.
inline std::vector<double> parse_time_list(const std::string& text, const std::string& context) {
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        std::vector<double> parts;
        std::string cur;
        for (char c : text + ":") {
            if (c == ':') {
                parts.push_back(parse_number(cur, context));
                cur.clear();
            } else {
                cur += c;
            }
        }
        if (parts.size() < 2 || parts.size() > 3)
            throw config_error(context + ": range must be lo:hi or lo:hi:step");
        const double lo = parts[0], hi = parts[1];
        const double step = parts.size() == 3 ? parts[2] : 1.0;
        if (!(step > 0.0) || hi < lo) throw config_error(context + ": bad range");
        for (double t = lo; t <= hi + 1e-12; t += step) out.push_back(t);
        return out;
    }
    std::string cur;
    for (char c : text + ",") {
        if (c == ',') {
            if (!trimmed_empty(cur)) out.push_back(parse_number(cur, context));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (out.empty()) throw config_error(context + ": empty list");
    return out;
}

// Scalar, comma list, or logspace(lo,hi,n).
inline std::vector<double> parse_lambda_spec(const std::string& text, const std::string& context) {
    const std::string ls = "logspace(";
    if (text.rfind(ls, 0) == 0 && text.back() == ')') {
        const auto inner = text.substr(ls.size(), text.size() - ls.size() - 1);
        const auto parts = parse_time_list(inner, context);
        if (parts.size() != 3 || !(parts[0] > 0.0) || !(parts[1] > 0.0) || parts[2] < 1)
            throw config_error(context + ": logspace needs (lo>0, hi>0, count>=1)");
        const int n = static_cast<int>(parts[2]);
        std::vector<double> out;
        if (n == 1) return {parts[0]};
        for (int i = 0; i < n; ++i) {
            const double f = static_cast<double>(i) / static_cast<double>(n - 1);
            out.push_back(parts[0] * std::pow(parts[1] / parts[0], f));
        }
        return out;
    }
    return parse_time_list(text, context);
}

}  // namespace rkhsid
