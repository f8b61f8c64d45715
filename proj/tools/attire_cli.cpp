// attire-engine: attire-anomaly surveillance engine CLI.
//
// Subcommands: run, eval, train-toy, augment, emit-defaults.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "attire/engine.hpp"
#include "attire/eval.hpp"
#include "attire/losstrain.hpp"

namespace fs = std::filesystem;

namespace {

attire::EngineConfig load_config(const std::string& config_path) {
    if (config_path.empty()) {
        return attire::parse_config_json("{}", "<defaults>");
    }
    return attire::parse_config(config_path);
}

std::vector<attire::Detection> load_annotations(const std::string& path,
                                                std::set<long long>* frames = nullptr) {
    std::ifstream in(path);
    if (!in) throw attire::ParseError("cannot open file: " + path);
    std::vector<attire::Detection> dets;
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
        if (fields.size() != 7) {
            throw attire::ParseError(path + ":" + std::to_string(lineno) +
                                     ": expected frame_id,class,cx,cy,w,h,score");
        }
        const auto label = attire::find_label(attire::attire_vocabulary(), fields[1]);
        if (!label) {
            throw attire::ParseError(path + ":" + std::to_string(lineno) + ": '" +
                                     fields[1] + "' is not an attire class");
        }
        attire::Detection det;
        det.label = *label;
        det.bbox = {std::stod(fields[2]), std::stod(fields[3]), std::stod(fields[4]),
                    std::stod(fields[5])};
        det.score = std::stod(fields[6]);
        dets.push_back(std::move(det));
        if (frames) frames->insert(std::stoll(fields[0]));
    }
    return dets;
}

std::set<long long> load_frame_ids(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw attire::ParseError("cannot open file: " + path);
    std::set<long long> frames;
    std::string token;
    while (in >> token) {
        if (token[0] == '#') {
            std::string rest;
            std::getline(in, rest);
            continue;
        }
        frames.insert(std::stoll(token));
    }
    return frames;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Attire-anomaly surveillance engine"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    uint64_t seed = 0;
    std::string tensors_dir, attire_tensors_dir, frames_path, annotations_path,
        attire_annotations_path, out_dir, policy_path;
    app.add_option("--config", config_path, "Engine config JSON (defaults if omitted)");
    app.add_option("--seed", seed, "Seed for all randomness (default 0)");
    app.add_option("--tensors", tensors_dir, "Person-stage tensor directory override");
    app.add_option("--attire-tensors", attire_tensors_dir,
                   "Attire-stage tensor directory override");
    app.add_option("--frames", frames_path, "Frames manifest override");
    app.add_option("--annotations", annotations_path,
                   "Person-stage annotation file override");
    app.add_option("--attire-annotations", attire_annotations_path,
                   "Attire-stage annotation file override");
    app.add_option("--out", out_dir, "Output directory override (env ATTIRE_OUT)");
    app.add_option("--policy", policy_path, "Zone-policy file override");

    auto* run = app.add_subcommand("run", "Process a frame stream and emit alerts");
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate predictions against ground truth");
    std::string pred_path, gt_path, alerts_path, anomaly_frames_path;
    double eval_iou = 0.5;
    eval_cmd->add_option("--predictions", pred_path, "Predicted detections file")
        ->required();
    eval_cmd->add_option("--ground-truth", gt_path, "Ground-truth detections file")
        ->required();
    eval_cmd->add_option("--iou", eval_iou, "IOU threshold (default 0.5)");
    eval_cmd->add_option("--alerts", alerts_path,
                         "Alert frame-id list for false alarm rate");
    eval_cmd->add_option("--anomaly-frames", anomaly_frames_path,
                         "Ground-truth anomaly frame-id list");

    auto* train = app.add_subcommand("train-toy", "Train the toy detection head");
    int epochs = 500;
    double lr = 0.05;
    train->add_option("--epochs", epochs, "Training epochs (default 500)");
    train->add_option("--lr", lr, "Learning rate (default 0.05)");

    auto* augment_cmd = app.add_subcommand("augment", "Emit color-jittered PPM variants");
    std::string input_dir;
    int count = 1;
    augment_cmd->add_option("--input", input_dir, "Directory of P6 PPM images")
        ->required();
    augment_cmd->add_option("--count", count, "Variants per image (default 1)");

    auto* defaults = app.add_subcommand("emit-defaults", "Print the default config");

    CLI11_PARSE(app, argc, argv);

    try {
        attire::EngineConfig cfg = load_config(config_path);
        if (!tensors_dir.empty()) cfg.paths.tensors = tensors_dir;
        if (!attire_tensors_dir.empty()) cfg.paths.attire_tensors = attire_tensors_dir;
        if (!frames_path.empty()) cfg.paths.frames = frames_path;
        if (!annotations_path.empty()) cfg.paths.person_annotations = annotations_path;
        if (!attire_annotations_path.empty()) {
            cfg.paths.attire_annotations = attire_annotations_path;
        }
        if (!policy_path.empty()) cfg.paths.policy = policy_path;
        if (const char* env_out = std::getenv("ATTIRE_OUT")) cfg.paths.out = env_out;
        if (!out_dir.empty()) cfg.paths.out = out_dir;

        if (defaults->parsed()) {
            std::cout << attire::emit_config(cfg);
            return 0;
        }

        if (run->parsed()) {
            if (cfg.paths.frames.empty()) {
                throw attire::ParseError("no frames manifest configured");
            }
            const auto frames = attire::parse_frames_manifest(cfg.paths.frames);
            const auto summary = attire::run_stream(cfg, frames);
            std::cout << "frames " << summary.frames_processed << ", anomalies "
                      << summary.anomalies << ", alerts " << summary.alerts << "\n";
            return 0;
        }

        if (eval_cmd->parsed()) {
            const auto preds = load_annotations(pred_path);
            const auto gts = load_annotations(gt_path);
            std::set<long long> alert_frames, anomaly_frames;
            if (!alerts_path.empty()) alert_frames = load_frame_ids(alerts_path);
            if (!anomaly_frames_path.empty()) {
                anomaly_frames = load_frame_ids(anomaly_frames_path);
            }
            const auto report =
                attire::evaluate(preds, gts, attire::attire_vocabulary(), eval_iou,
                                 alert_frames, anomaly_frames);
            std::cout << attire::format_report(report, attire::attire_vocabulary());
            fs::create_directories(cfg.paths.out);
            std::ofstream jsonl(cfg.paths.out + "/eval_report.jsonl");
            jsonl << attire::report_jsonl(report, attire::attire_vocabulary());
            return 0;
        }

        if (train->parsed()) {
            const auto problem = attire::make_separable_toy_fixture(seed);
            attire::SgdConfig sgd;
            sgd.learning_rate = lr;
            const auto result = attire::train_toy_head(problem, sgd, epochs);
            fs::create_directories(cfg.paths.out);
            std::ofstream curve(cfg.paths.out + "/loss_curve.txt");
            for (size_t i = 0; i < result.loss_curve.size(); ++i) {
                curve << i << "," << result.loss_curve[i] << "\n";
            }
            const double ratio = result.loss_curve.back() / result.loss_curve.front();
            std::cout << "final/initial loss ratio " << ratio << "\n";
            return 0;
        }

        if (augment_cmd->parsed()) {
            std::vector<fs::path> inputs;
            for (const auto& entry : fs::directory_iterator(input_dir)) {
                if (entry.path().extension() == ".ppm") inputs.push_back(entry.path());
            }
            std::sort(inputs.begin(), inputs.end());
            fs::create_directories(cfg.paths.out);
            std::ofstream factors_log(cfg.paths.out + "/jitter_factors.txt");
            std::mt19937_64 master(seed);
            for (const auto& path : inputs) {
                const auto img = attire::read_ppm_file(path.string());
                for (int v = 0; v < count; ++v) {
                    const auto f = attire::sample_factors(master());
                    const auto jittered = attire::jitter(img, f);
                    const std::string name =
                        path.stem().string() + "_aug" + std::to_string(v) + ".ppm";
                    attire::write_ppm_file(cfg.paths.out + "/" + name, jittered);
                    factors_log << name << " hue " << f.hue << " saturation "
                                << f.saturation << " brightness " << f.brightness
                                << "\n";
                }
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
