#pragma once

#include <iosfwd>
#include <string>

#include "qcens/field.hpp"

namespace qcens::io {

inline constexpr int schema_version = 1;

/// Self-describing JSON snapshot: grid metadata + flat value array
/// (row-major; complex values as [re, im] pairs).
std::string field_to_json(const RealField& f, const std::string& label = "");
std::string field_to_json(const ComplexField& f, const std::string& label = "");

RealField real_field_from_json(const std::string& text);
ComplexField complex_field_from_json(const std::string& text);

/// CSV export: header then one row per grid point (coordinates, value columns).
void field_to_csv(const RealField& f, std::ostream& os);
void field_to_csv(const ComplexField& f, std::ostream& os);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

/// Shortest-roundtrip decimal form used for all numeric output (deterministic).
std::string format_double(double v);

}  // namespace qcens::io
