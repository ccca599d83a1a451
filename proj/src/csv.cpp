#include "engage/csv.hpp"

#include <cmath>
#include <cstdio>

#include "engage/error.hpp"

namespace engage::csv {

std::size_t Table::require_column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw SchemaError(source + ": missing column '" + std::string(name) + "'");
}

bool Table::has_column(std::string_view name) const noexcept {
    for (const auto& h : header) {
        if (h == name) return true;
    }
    return false;
}

const std::string& Table::field(const Row& row, std::size_t column) const {
    return row.fields.at(column);
}

namespace {

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

}  // namespace

Table parse(std::string_view text, std::string_view source) {
    Table table;
    table.source = std::string(source);

    if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);

    std::vector<Row> records;
    Row current;
    std::string field;
    bool in_quotes = false;
    bool field_was_quoted = false;
    std::size_t line = 1;
    current.line = 1;

    auto end_field = [&] {
        current.fields.push_back(field_was_quoted ? field : trim(field));
        field.clear();
        field_was_quoted = false;
    };
    auto end_record = [&] {
        end_field();
        const bool blank = current.fields.size() == 1 && current.fields[0].empty();
        if (!blank) records.push_back(std::move(current));
        current = Row{};
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                in_quotes = true;
                field_was_quoted = true;
                field.clear();
                break;
            case ',':
                end_field();
                break;
            case '\r':
                break;
            case '\n':
                end_record();
                ++line;
                current.line = line;
                break;
            default:
                field.push_back(c);
        }
    }
    if (in_quotes) throw ParseError(table.source, line, "", "unterminated quoted field");
    if (!field.empty() || !current.fields.empty() || field_was_quoted) end_record();

    if (records.empty()) throw SchemaError(table.source + ": empty table, header row required");

    table.header = std::move(records.front().fields);
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].fields.size() != table.header.size()) {
            throw ParseError(table.source, records[r].line, "",
                             "expected " + std::to_string(table.header.size()) + " fields, got " +
                                 std::to_string(records[r].fields.size()));
        }
        table.rows.push_back(std::move(records[r]));
    }
    return table;
}

std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void append_row(std::string& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(',');
        out += escape(fields[i]);
    }
    out.push_back('\n');
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (v == 0.0) v = 0.0;  // drop the sign of negative zero
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace engage::csv
