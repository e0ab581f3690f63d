#pragma once

#include <cmath>

#include <json.hpp>

#include "printacc/textio.hpp"

namespace printacc {

// Rounded JSON number; non-finite values become null.
inline nlohmann::ordered_json json_number(double value, int precision)
{
    if (!std::isfinite(value))
        return nullptr;
    return round_decimals(value, precision);
}

} // namespace printacc
