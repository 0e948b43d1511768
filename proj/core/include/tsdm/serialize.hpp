#pragma once

#include <string>
#include <string_view>
#include <utility>

#include "tsdm/classify.hpp"
#include "tsdm/config.hpp"
#include "tsdm/fb.hpp"
#include "tsdm/simplex_transform.hpp"
#include "tsdm/synth.hpp"
#include "tsdm/tsdm_model.hpp"

namespace tsdm {

/// Written into every JSON artifact; readers reject other versions.
inline constexpr int kSchemaVersion = 1;

// Doubles are written in shortest round-trip form, so load followed by
// save reproduces a file byte for byte.

std::string to_json(const TsdmModel& model);
TsdmModel tsdm_model_from_json(std::string_view text);

/// The background is embedded unchanged under "background".
std::string to_json(const FbModel& model, const FbReport& report);
std::pair<FbModel, FbReport> fb_model_from_json(std::string_view text);

std::string to_json(const SimplexTransform& transform);
SimplexTransform simplex_transform_from_json(std::string_view text);

std::string to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(std::string_view text);

std::string to_json(const PipelineConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
PipelineConfig pipeline_config_from_json(std::string_view text);

/// Metrics as JSON; undefined rates are written as null.
std::string to_json(const Metrics& metrics);

/// The "background" member of an FB model file, re-serialized.
std::string embedded_background_json(std::string_view fb_text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace tsdm
