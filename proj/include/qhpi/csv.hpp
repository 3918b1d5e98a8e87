#pragma once

// Minimal RFC-4180 reader/writer: quoted fields, doubled quotes, CRLF or LF.

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qhpi/errors.hpp"

namespace qhpi::csv {

using Row = std::vector<std::string>;

inline std::vector<Row> parse(std::string_view text) {
    std::vector<Row> rows;
    Row row;
    std::string field;
    bool in_quotes = false, field_started = false, row_has_content = false;
    std::size_t line = 1;

    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        if (row_has_content || !row.empty() || field_started) {
            end_field();
            rows.push_back(std::move(row));
        }
        row.clear();
        row_has_content = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!field.empty()) throw ParseError("stray quote in unquoted field at line " + std::to_string(line));
                in_quotes = true;
                field_started = row_has_content = true;
                break;
            case ',':
                end_field();
                row_has_content = true;
                break;
            case '\r': break;
            case '\n':
                end_row();
                ++line;
                break;
            default:
                field += c;
                field_started = row_has_content = true;
        }
    }
    if (in_quotes) throw ParseError("unterminated quoted field");
    end_row();
    return rows;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string escape(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

inline std::string format_row(const Row& row) {
    std::string out;
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ',';
        out += escape(row[i]);
    }
    return out + '\n';
}

}  // namespace qhpi::csv
