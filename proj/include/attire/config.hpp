#pragma once

// Engine configuration: JSON file with strict key checking, every default
// documented, parse is total (error or complete config, never partial).

#include <map>
#include <string>

#include "attire/anomaly.hpp"
#include "attire/pipeline.hpp"

namespace attire {

struct EnginePaths {
    std::string tensors;             // person-stage tensor dir ("<frame_id>.ygt")
    std::string attire_tensors;      // attire-stage tensor dir ("<id>_p<k>.ygt")
    std::string frames;              // frames manifest file
    std::string person_annotations;  // scripted person detections
    std::string attire_annotations;  // scripted attire detections
    std::string policy;              // zone-policy file
    std::string out{"out"};          // output directory
};

struct EngineConfig {
    DecodeParams decode;
    std::map<std::string, ZonePolicy> zones;
    FuzzyRuleBase fuzzy;
    ThresholdParams threshold;
    TemporalParams temporal;
    double adaptation_rate{0.05};
    EnginePaths paths;
    // Alert timestamps count seconds of stream time from this instant, so a
    // rerun over the same inputs is byte-identical.
    std::string stream_epoch{"2026-01-01T00:00:00Z"};

    void validate() const;
};

EngineConfig parse_config(const std::string& path);
EngineConfig parse_config_json(const std::string& text, const std::string& origin);
std::string emit_config(const EngineConfig& cfg);

// Zone-policy file: lines "zone_id: class,class,...".
std::map<std::string, ZonePolicy> parse_policy_file(const std::string& path);

}  // namespace attire
