#pragma once

#include "gridcert/network.hpp"

#include <json.hpp>

#include <string>

namespace gridcert {

/// Parse a case document. Schema:
///   { "buses": [ {"id", "kind", "V", "G", "P", "M", "D"}, ... ],
///     "lines": [ {"from", "to", "B"}, ... ] }
/// All quantities per-unit. "kind" is one of "machine", "infinite_bus",
/// "interior". M and D are required on machine buses and rejected elsewhere.
/// The G V^2 shunt term is folded into the stored net injection.
PowerNetwork parse_case(const nlohmann::json& doc);
PowerNetwork parse_case_text(const std::string& text);
PowerNetwork parse_case_file(const std::string& path);

/// Inverse of parse_case: emits the raw P (shunt term restored) so that
/// serialize/parse round-trips to an identical network.
nlohmann::json serialize_case(const PowerNetwork& net);

} // namespace gridcert
