#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace printacc {

// Fixed-point rendering; NaN prints as "nan" and infinities as "inf"/"-inf".
std::string format_fixed(double value, int precision);

// Rounds to `precision` decimals for JSON output, so serialized numbers are
// stable across runs and platforms. Non-finite values pass through.
double round_decimals(double value, int precision);

// Splits on `sep`, trimming surrounding whitespace and '\r' from each field.
std::vector<std::string> split_fields(std::string_view line, char sep);

// Non-empty lines, '\r' stripped. Lines starting with '#' are kept.
std::vector<std::string> split_lines(std::string_view text);

// Strict number parse of a whole field ("nan" accepted); throws FormatError
// naming `what` on failure.
double parse_number(std::string_view field, std::string_view what);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Index of a header column or -1.
    int column(std::string_view name) const;
    // Like column() but throws FormatError if missing.
    std::size_t require(std::string_view name) const;
};

// Comma separated with one header row. Every row must have the header's
// field count.
CsvTable parse_csv(std::string_view text);

} // namespace printacc
