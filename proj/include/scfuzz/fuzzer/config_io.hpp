#pragma once

#include <filesystem>

#include <json.hpp>

#include "scfuzz/fuzzer/campaign.hpp"

namespace scfuzz::fuzzer {

// JSON forms of the configuration structs. Readers start from the defaults
// (the core defaults of the named "kind" for CoreConfig), override the keys
// present, and throw Error on unknown keys or ill-typed values.
nlohmann::json core_to_json(const uarch::CoreConfig& cfg);
uarch::CoreConfig core_from_json(const nlohmann::json& j);

nlohmann::json gen_to_json(const mutator::GenConfig& cfg);
mutator::GenConfig gen_from_json(const nlohmann::json& j, mutator::GenConfig base = {});

nlohmann::json campaign_to_json(const CampaignConfig& cfg);
CampaignConfig campaign_from_json(const nlohmann::json& j, CampaignConfig base = {});

// Throws Error (with the parser's message) on unreadable or malformed files.
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace scfuzz::fuzzer
