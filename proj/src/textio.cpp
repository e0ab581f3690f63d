#include "printacc/textio.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "printacc/error.hpp"

namespace printacc {

std::string format_fixed(double value, int precision)
{
    if (std::isnan(value))
        return "nan";
    if (std::isinf(value))
        return value > 0 ? "inf" : "-inf";
    char buf[64];
    const int n = std::snprintf(buf, sizeof buf, "%.*f", precision, value);
    std::string out(buf, static_cast<std::size_t>(n));
    // Avoid "-0.0000" so identical magnitudes diff cleanly.
    if (out.front() == '-' && out.find_first_not_of("-0.") == std::string::npos)
        out.erase(0, 1);
    return out;
}

double round_decimals(double value, int precision)
{
    if (!std::isfinite(value))
        return value;
    // Going through the decimal text avoids double-rounding surprises of
    // value * 10^p.
    const double r = std::strtod(format_fixed(value, precision).c_str(), nullptr);
    return r == 0.0 ? 0.0 : r;
}

namespace {

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

} // namespace

std::vector<std::string> split_fields(std::string_view line, char sep)
{
    std::vector<std::string> out;
    std::size_t pos = 0;
    for (;;) {
        const auto next = line.find(sep, pos);
        out.emplace_back(trim(line.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos)));
        if (next == std::string_view::npos)
            break;
        pos = next + 1;
    }
    return out;
}

std::vector<std::string> split_lines(std::string_view text)
{
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos)
            end = text.size();
        auto line = text.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        if (!trim(line).empty())
            out.emplace_back(line);
        pos = end + 1;
    }
    return out;
}

double parse_number(std::string_view field, std::string_view what)
{
    const std::string s(trim(field));
    if (s == "nan" || s == "NaN")
        return std::nan("");
    char* stop = nullptr;
    const double v = std::strtod(s.c_str(), &stop);
    if (s.empty() || stop != s.c_str() + s.size())
        throw FormatError(std::string(what) + ": not a number '" + s + "'");
    return v;
}

int CsvTable::column(std::string_view name) const
{
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name)
            return static_cast<int>(i);
    }
    return -1;
}

std::size_t CsvTable::require(std::string_view name) const
{
    const int c = column(name);
    if (c < 0)
        throw FormatError("csv is missing column '" + std::string(name) + "'");
    return static_cast<std::size_t>(c);
}

CsvTable parse_csv(std::string_view text)
{
    auto lines = split_lines(text);
    if (lines.empty())
        throw FormatError("csv is empty");
    CsvTable table;
    table.header = split_fields(lines.front(), ',');
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto fields = split_fields(lines[i], ',');
        if (fields.size() != table.header.size())
            throw FormatError("csv row " + std::to_string(i + 1) + " has " + std::to_string(fields.size()) +
                              " fields, header has " + std::to_string(table.header.size()));
        table.rows.push_back(std::move(fields));
    }
    return table;
}

} // namespace printacc
