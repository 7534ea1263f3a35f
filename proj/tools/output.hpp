#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace twotrait::cli {

using Json = nlohmann::ordered_json;

/// One flat output row; key order is the column order.
using Row = Json;

/// CSV with a header row. Floating values use a fixed number of decimals,
/// integers and strings are written as-is, null as an empty field.
void write_csv(std::ostream& out, const std::vector<Row>& rows, int decimals);

/// {"metadata": ..., "rows": [...]} with doubles at 17 significant digits;
/// non-finite doubles become null.
void write_json(std::ostream& out, const Json& metadata, const std::vector<Row>& rows);

/// Any JSON value with the same number formatting as write_json.
void write_json_value(std::ostream& out, const Json& value);

std::string format_fixed(double v, int decimals);

}  // namespace twotrait::cli
