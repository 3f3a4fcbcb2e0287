#pragma once

#include <string>

#include "json.hpp"

#include "affsurf/geodesics.hpp"
#include "affsurf/surface.hpp"

namespace affsurf {

using json = nlohmann::json;

json cx_to_json(cx z);
// Accepts [re, im] with JSON numbers or decimal strings.
cx cx_from_json(const json& j);
double number_from_json(const json& j);

// affsurf-v1 documents. Malformed input throws Error("InvalidInput").
json surface_to_json(const Surface& s);
Surface surface_from_json(const json& j);
Surface read_surface(const std::string& path);
void write_surface(const Surface& s, const std::string& path);

json report_to_json(const ValidationReport& r);
json records_to_json(const Surface& s);
json trace_to_json(const TraceResult& r);

}  // namespace affsurf
