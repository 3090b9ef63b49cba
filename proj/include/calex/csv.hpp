#pragma once

// The dataset file format: CSV with header "id,score,label", scores as
// decimal floating point with full round-trip precision, label one of
// 1 / 0 / NA. Ids are opaque and must not contain commas or newlines.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "calex/core.hpp"

namespace calex {

/// Shortest decimal form that parses back to the same double (>= 17
/// significant digits when needed).
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline void write_dataset_csv(const std::filesystem::path& path,
                              std::span<const ScoredItem> items) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << "id,score,label\n";
    for (const auto& it : items) {
        out << it.id << ',' << format_double(it.score) << ',';
        if (it.label) {
            out << (*it.label == Label::positive ? '1' : '0');
        } else {
            out << "NA";
        }
        out << '\n';
    }
    if (!out) {
        throw std::runtime_error("write failed for " + path.string());
    }
}

namespace detail {

[[noreturn]] inline void csv_error(const std::filesystem::path& path,
                                   std::size_t line, const std::string& what) {
    throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": " + what);
}

}  // namespace detail

inline std::vector<ScoredItem> read_dataset_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot read " + path.string());
    }
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) {
        detail::csv_error(path, 1, "empty file, expected header id,score,label");
    }
    ++lineno;
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != "id,score,label") {
        detail::csv_error(path, lineno, "bad header '" + line +
                                            "', expected id,score,label");
    }
    std::vector<ScoredItem> items;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string::npos ? std::string::npos
                                                : line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos ||
            line.find(',', c2 + 1) != std::string::npos) {
            detail::csv_error(path, lineno, "expected exactly 3 fields");
        }
        ScoredItem item;
        item.id = line.substr(0, c1);
        const std::string score_text = line.substr(c1 + 1, c2 - c1 - 1);
        const char* begin = score_text.data();
        const char* end = begin + score_text.size();
        const auto parsed = std::from_chars(begin, end, item.score);
        if (parsed.ec != std::errc{} || parsed.ptr != end) {
            detail::csv_error(path, lineno, "score column does not parse: '" +
                                                score_text + "'");
        }
        if (!(item.score >= 0.0 && item.score <= 1.0)) {
            detail::csv_error(path, lineno, "score " + score_text +
                                                " outside [0,1]");
        }
        const std::string label_text = line.substr(c2 + 1);
        if (label_text == "1") {
            item.label = Label::positive;
        } else if (label_text == "0") {
            item.label = Label::negative;
        } else if (label_text == "NA") {
            item.label = std::nullopt;
        } else {
            detail::csv_error(path, lineno, "label column must be 1, 0 or NA, got '" +
                                                label_text + "'");
        }
        items.push_back(std::move(item));
    }
    return items;
}

}  // namespace calex
