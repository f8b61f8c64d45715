#include "attire/engine.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include <nlohmann/json.hpp>

namespace attire {

using nlohmann::json;

std::vector<StreamFrame> parse_frames_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open frames manifest: " + path);
    std::vector<StreamFrame> frames;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 5 && fields.size() != 6) {
            throw ParseError(path + ":" + std::to_string(lineno) +
                             ": expected frame_id,width,height,zone_id,illumination[,image]");
        }
        try {
            StreamFrame f;
            f.frame.frame_id = std::stoll(fields[0]);
            f.frame.width = std::stoi(fields[1]);
            f.frame.height = std::stoi(fields[2]);
            f.frame.zone_id = fields[3];
            f.context.zone_id = fields[3];
            f.context.illumination = std::stod(fields[4]);
            if (fields.size() == 6) f.image_path = fields[5];
            if (f.frame.width <= 0 || f.frame.height <= 0) {
                throw ParseError(path + ":" + std::to_string(lineno) +
                                 ": non-positive frame size");
            }
            if (f.context.illumination < 0 || f.context.illumination > 1) {
                throw ParseError(path + ":" + std::to_string(lineno) +
                                 ": illumination outside [0,1]");
            }
            frames.push_back(std::move(f));
        } catch (const std::logic_error&) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": bad number");
        }
    }
    return frames;
}

namespace {

std::time_t parse_epoch(const std::string& iso) {
    std::tm tm{};
    std::istringstream ss(iso);
    ss >> std::get_time(&tm, "%Y-%m-%dT%H:%M:%S");
    if (ss.fail()) throw ParseError("bad stream_epoch timestamp: " + iso);
    return timegm(&tm);
}

std::string format_timestamp(std::time_t t) {
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream ss;
    ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return ss.str();
}

std::unique_ptr<DetectorBackend> make_backend(const std::string& tensor_dir,
                                              const std::string& annotations,
                                              const DecodeParams& params,
                                              const std::vector<ClassLabel>& vocab,
                                              const char* stage) {
    if (!tensor_dir.empty()) {
        return std::make_unique<TensorFileBackend>(tensor_dir, params, vocab);
    }
    if (!annotations.empty()) {
        return std::make_unique<ScriptedBackend>(annotations, vocab);
    }
    throw ParseError(std::string("no ") + stage +
                     " detection source configured (tensors or annotations)");
}

void draw_border(RgbImage& img, const BoundingBox& box, uint8_t r, uint8_t g,
                 uint8_t b) {
    const int x0 = std::clamp(static_cast<int>(std::lround(box.x1())), 0, img.width - 1);
    const int y0 = std::clamp(static_cast<int>(std::lround(box.y1())), 0, img.height - 1);
    const int x1 = std::clamp(static_cast<int>(std::lround(box.x2())), 0, img.width - 1);
    const int y1 = std::clamp(static_cast<int>(std::lround(box.y2())), 0, img.height - 1);
    auto put = [&](int x, int y) {
        if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
        const size_t i = (static_cast<size_t>(y) * img.width + x) * 3;
        img.pixels[i] = r;
        img.pixels[i + 1] = g;
        img.pixels[i + 2] = b;
    };
    for (int t = 0; t < 2; ++t) {  // 2-pixel border
        for (int x = x0; x <= x1; ++x) {
            put(x, y0 + t);
            put(x, y1 - t);
        }
        for (int y = y0; y <= y1; ++y) {
            put(x0 + t, y);
            put(x1 - t, y);
        }
    }
}

}  // namespace

RunSummary run_stream(const EngineConfig& cfg, const std::vector<StreamFrame>& frames) {
    cfg.validate();
    auto zones = cfg.zones;
    if (!cfg.paths.policy.empty()) {
        for (auto& [zone, policy] : parse_policy_file(cfg.paths.policy)) {
            zones[zone] = policy;
        }
    }

    auto person_backend =
        make_backend(cfg.paths.tensors, cfg.paths.person_annotations, cfg.decode,
                     person_vocabulary(), "person");
    auto attire_backend =
        make_backend(cfg.paths.attire_tensors, cfg.paths.attire_annotations,
                     cfg.decode, attire_vocabulary(), "attire");

    std::filesystem::create_directories(cfg.paths.out);
    std::ofstream alert_log(cfg.paths.out + "/alerts.jsonl");
    std::ofstream result_log(cfg.paths.out + "/results.jsonl");
    if (!alert_log || !result_log) {
        throw Error("cannot open output files under " + cfg.paths.out);
    }

    const std::time_t epoch = parse_epoch(cfg.stream_epoch);
    FuzzyRuleBase rule_base = cfg.fuzzy;
    TrackState track_state;
    double illumination_ema = 0.5;
    bool ema_seeded = false;

    RunSummary summary;
    std::vector<StreamFrame> ordered = frames;
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const StreamFrame& l, const StreamFrame& r) {
                         return l.frame.frame_id < r.frame.frame_id;
                     });

    for (const auto& sf : ordered) {
        const auto zone_it = zones.find(sf.frame.zone_id);
        if (zone_it == zones.end()) {
            throw UnknownZone("no policy for zone '" + sf.frame.zone_id +
                              "' (frame " + std::to_string(sf.frame.frame_id) + ")");
        }
        const auto result = run_frame(sf.frame, *person_backend, *attire_backend);

        std::vector<Detection> garments;
        garments.reserve(result.attire.size());
        for (const auto& [pi, det] : result.attire) garments.push_back(det);

        auto anomalies = identify_anomalies(garments, zone_it->second);
        const auto features = context_features(sf.context);
        for (auto& a : anomalies) {
            a.adjusted_conf = fuzzy_adjust(a, features, rule_base);
        }
        const double threshold = adaptive_threshold(anomalies, features, cfg.threshold);
        const auto persistent =
            temporal_integrate(anomalies, track_state, cfg.temporal, sf.frame.frame_id);
        const auto alerts = raise_alerts(persistent, threshold, sf.frame.frame_id);

        const std::string timestamp =
            format_timestamp(epoch + static_cast<std::time_t>(sf.frame.frame_id));
        for (const auto& alert : alerts) {
            const json j = {{"timestamp", timestamp},
                            {"frame_id", alert.frame_id},
                            {"zone_id", alert.zone_id},
                            {"class", alert.class_name},
                            {"original_conf", alert.original_conf},
                            {"adjusted_conf", alert.adjusted_conf},
                            {"threshold", alert.threshold},
                            {"persistence_count", alert.persistence_count}};
            alert_log << j.dump() << "\n";
        }
        alert_log.flush();

        json anomaly_list = json::array();
        for (const auto& a : anomalies) {
            anomaly_list.push_back({{"class", a.detection.label.name},
                                    {"original_conf", a.original_conf},
                                    {"adjusted_conf", a.adjusted_conf}});
        }
        const json rec = {{"frame_id", sf.frame.frame_id},
                          {"zone_id", sf.frame.zone_id},
                          {"no_person", result.no_person},
                          {"persons", result.persons.size()},
                          {"garments", garments.size()},
                          {"anomalies", anomaly_list},
                          {"threshold", threshold},
                          {"alerts", alerts.size()}};
        result_log << rec.dump() << "\n";
        result_log.flush();

        if (!sf.image_path.empty()) {
            RgbImage img = read_ppm_file(sf.image_path);
            for (const auto& [pi, det] : result.attire) {
                if (zone_it->second.is_authorized(det.label)) {
                    draw_border(img, det.bbox, 0, 255, 0);
                } else {
                    draw_border(img, det.bbox, 255, 0, 0);
                }
            }
            write_ppm_file(cfg.paths.out + "/annotated_" +
                               std::to_string(sf.frame.frame_id) + ".ppm",
                           img);
        }

        // Environmental adaptation: illumination EMA steers the rule base.
        if (!ema_seeded) {
            illumination_ema = sf.context.illumination;
            ema_seeded = true;
        } else {
            illumination_ema = (1 - cfg.adaptation_rate) * illumination_ema +
                               cfg.adaptation_rate * sf.context.illumination;
        }
        try {
            rule_base = adapt_parameters(illumination_ema, rule_base, cfg.adaptation_rate);
        } catch (const InvariantViolation&) {
            // update rejected, previous rule base stays in force
        }

        ++summary.frames_processed;
        summary.anomalies += static_cast<int>(anomalies.size());
        summary.alerts += static_cast<int>(alerts.size());
    }
    return summary;
}

}  // namespace attire
