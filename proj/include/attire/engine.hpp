#pragma once

// Frame-stream processing: cascade detection, anomaly engine, alert log and
// per-frame result records, with deterministic output.

#include <string>
#include <vector>

#include "attire/config.hpp"

namespace attire {

struct StreamFrame {
    FrameRef frame;
    FrameContext context;
    std::string image_path;  // optional PPM for annotated output
};

// Frames manifest: lines "frame_id,width,height,zone_id,illumination[,image]".
std::vector<StreamFrame> parse_frames_manifest(const std::string& path);

struct RunSummary {
    int frames_processed{0};
    int anomalies{0};
    int alerts{0};
};

// Processes the stream end to end and writes alerts.jsonl / results.jsonl
// (plus annotated frames when images are given) under cfg.paths.out.
// Output files are flushed per frame.
RunSummary run_stream(const EngineConfig& cfg, const std::vector<StreamFrame>& frames);

}  // namespace attire
