#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jist/core/error.hpp"

// Minimal CSV for the harness outputs: no quoting, so names written here must
// not contain commas, quotes or newlines. Numbers use %.10g; non-finite and
// missing values are empty fields.

namespace jist::csv {

inline std::string num(double v) {
    if (!std::isfinite(v)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline std::string num(std::optional<double> v) { return v ? num(*v) : std::string(); }

inline bool valid_name(const std::string& s) {
    return !s.empty() && s.find_first_of(",\"\r\n") == std::string::npos;
}

inline std::string join(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += fields[i];
    }
    out += '\n';
    return out;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name, const std::string& where) const {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw FormatError(where + ": missing column \"" + name + "\"");
        return static_cast<std::size_t>(it - header.begin());
    }
};

inline std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out(1);
    for (char c : line) {
        if (c == ',')
            out.emplace_back();
        else
            out.back() += c;
    }
    return out;
}

/// Every data row must have exactly as many fields as the header.
inline Table parse(const std::string& text, const std::string& where) {
    Table t;
    std::size_t pos = 0, line_no = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.find('"') != std::string::npos)
            throw FormatError(where + ":" + std::to_string(line_no) + ": quoted fields are not supported");
        auto fields = split(line);
        if (t.header.empty()) {
            t.header = std::move(fields);
            continue;
        }
        if (fields.size() != t.header.size())
            throw FormatError(where + ":" + std::to_string(line_no) + ": expected " + std::to_string(t.header.size()) +
                              " fields, got " + std::to_string(fields.size()));
        t.rows.push_back(std::move(fields));
    }
    if (t.header.empty()) throw FormatError(where + ": missing header");
    return t;
}

/// Strict decimal parse; empty gives nullopt.
inline std::optional<double> parse_num(const std::string& s, const std::string& where) {
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw FormatError(where + ": not a number: \"" + s + "\"");
    return v;
}

inline double parse_required(const std::string& s, const std::string& where) {
    const auto v = parse_num(s, where);
    if (!v) throw FormatError(where + ": empty value");
    return *v;
}

inline bool parse_bool(const std::string& s, const std::string& where) {
    if (s == "1" || s == "true") return true;
    if (s == "0" || s == "false") return false;
    throw FormatError(where + ": expected 0 or 1, got \"" + s + "\"");
}

}  // namespace jist::csv

namespace jist::stats {

struct MeanCi {
    double mean = 0.0;
    std::optional<double> lo, hi;  // undefined below two samples
    std::size_t n = 0;
};

/// Mean with a 95% normal-approximation interval, mean ± 1.96 s/√n, where s
/// is the sample (n - 1) standard deviation.
inline std::optional<MeanCi> mean_ci(std::span<const double> xs) {
    if (xs.empty()) return std::nullopt;
    MeanCi r;
    r.n = xs.size();
    r.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(r.n);
    if (r.n >= 2) {
        double ss = 0.0;
        for (double x : xs) ss += (x - r.mean) * (x - r.mean);
        const double half = 1.96 * std::sqrt(ss / static_cast<double>(r.n - 1)) / std::sqrt(static_cast<double>(r.n));
        r.lo = r.mean - half;
        r.hi = r.mean + half;
    }
    return r;
}

/// 1-based ranks; ties share their average rank.
inline std::vector<double> ranks(std::span<const double> xs) {
    std::vector<std::size_t> idx(xs.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> r(xs.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && xs[idx[j + 1]] == xs[idx[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

/// Spearman rank correlation (Pearson on tie-averaged ranks). NaN when
/// either side is constant or fewer than two points are given.
inline double spearman(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size(), "spearman: size mismatch");
    const std::size_t n = x.size();
    if (n < 2) return std::nan("");
    const auto rx = ranks(x), ry = ranks(y);
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(n);
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return std::nan("");
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace jist::stats
