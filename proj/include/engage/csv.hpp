#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace engage::csv {

struct Row {
    std::size_t line = 0;  // 1-based line in the source
    std::vector<std::string> fields;
};

/// A parsed comma-delimited table with a mandatory header row.
class Table {
public:
    std::string source;
    std::vector<std::string> header;
    std::vector<Row> rows;

    /// Column position by name; throws SchemaError naming the source if absent.
    std::size_t require_column(std::string_view name) const;
    bool has_column(std::string_view name) const noexcept;

    const std::string& field(const Row& row, std::size_t column) const;
};

/// RFC 4180-style parsing: quoted fields, doubled quotes, CRLF, UTF-8 BOM.
/// Blank lines are skipped. Throws SchemaError when the header is missing and
/// ParseError on unterminated quotes or ragged rows.
Table parse(std::string_view text, std::string_view source);

std::string escape(std::string_view field);

void append_row(std::string& out, const std::vector<std::string>& fields);

/// Fixed 6-significant-digit rendering used by every numeric output column.
std::string format_number(double v);

}  // namespace engage::csv
