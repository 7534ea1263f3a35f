#include "output.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace twotrait::cli {

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

std::string csv_value(const Json& v, int decimals) {
  if (v.is_null()) return "";
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return v.dump();
  if (v.is_number_float()) return format_fixed(v.get<double>(), decimals);
  if (v.is_string()) return csv_field(v.get<std::string>());
  return csv_field(v.dump());
}

void write_value(std::ostream& out, const Json& v, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string close_pad(static_cast<std::size_t>(indent * depth), ' ');
  if (v.is_object() || v.is_array()) {
    const bool obj = v.is_object();
    if (v.empty()) {
      out << (obj ? "{}" : "[]");
      return;
    }
    out << (obj ? "{" : "[") << '\n';
    bool first = true;
    for (auto it = v.begin(); it != v.end(); ++it) {
      if (!first) out << ",\n";
      first = false;
      out << pad;
      if (obj) out << Json(it.key()).dump() << ": ";
      write_value(out, *it, indent, depth + 1);
    }
    out << '\n' << close_pad << (obj ? "}" : "]");
    return;
  }
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (!std::isfinite(d)) {
      out << "null";
      return;
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", d);
    out << buf;
    return;
  }
  out << v.dump();
}

}  // namespace

std::string format_fixed(double v, int decimals) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s = buf;
  // "-0.000" reads as noise; print it unsigned
  if (s[0] == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

void write_csv(std::ostream& out, const std::vector<Row>& rows, int decimals) {
  if (rows.empty()) return;
  bool first = true;
  for (auto it = rows.front().begin(); it != rows.front().end(); ++it) {
    out << (first ? "" : ",") << csv_field(it.key());
    first = false;
  }
  out << '\n';
  for (const auto& row : rows) {
    first = true;
    for (auto it = rows.front().begin(); it != rows.front().end(); ++it) {
      out << (first ? "" : ",");
      first = false;
      const auto found = row.find(it.key());
      if (found != row.end()) out << csv_value(*found, decimals);
    }
    out << '\n';
  }
}

void write_json_value(std::ostream& out, const Json& value) {
  write_value(out, value, 2, 0);
  out << '\n';
}

void write_json(std::ostream& out, const Json& metadata, const std::vector<Row>& rows) {
  Json doc;
  doc["metadata"] = metadata;
  doc["rows"] = Json::array();
  for (const auto& r : rows) doc["rows"].push_back(r);
  write_value(out, doc, 2, 0);
  out << '\n';
}

}  // namespace twotrait::cli
