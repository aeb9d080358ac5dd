#ifndef SFDE_IO_HPP
#define SFDE_IO_HPP

#include <string>
#include <vector>

#include <json.hpp>

#include "sfde/coeff.hpp"
#include "sfde/noise.hpp"
#include "sfde/segment.hpp"

namespace sfde {

// Segment literal: {"r0": .., "d": .., "nodes": [[theta, [v...]], ...],
//                   "jumps": [[theta, [pre...]], ...]}
nlohmann::json segment_to_json(const Segment& s);
Segment segment_from_json(const nlohmann::json& j);

// Coefficient config: either {"builtin": name, "params": {...}} or the
// expression form {"d", "m", "r0", "marks", "b", "sigma", "gamma", "barred"}.
// Missing entries default to zero; a missing "barred" copies the base.
CoefficientSet coefficients_from_json(const nlohmann::json& j);

nlohmann::json mark_measure_to_json(const MarkMeasure& m);
MarkMeasure mark_measure_from_json(const nlohmann::json& j);

// Event list: [[time, mark-label-or-index], ...] or [{"t":.., "mark":..}, ...]
std::vector<JumpEvent> events_from_json(const nlohmann::json& j, const MarkMeasure& marks);

// Realization dump for replay.
nlohmann::json noise_to_json(const NoiseRealization& n);
NoiseRealization noise_from_json(const nlohmann::json& j);

nlohmann::json load_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace sfde

#endif
