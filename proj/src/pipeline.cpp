#include "attire/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace attire {

namespace {

long long round_half_away(double v) {
    return static_cast<long long>(v < 0 ? std::ceil(v - 0.5) : std::floor(v + 0.5));
}

}  // namespace

CropExtent crop_extent(const BoundingBox& box) {
    CropExtent e;
    e.x0 = static_cast<int>(round_half_away(box.x1()));
    e.y0 = static_cast<int>(round_half_away(box.y1()));
    e.x1 = static_cast<int>(round_half_away(box.x2()));
    e.y1 = static_cast<int>(round_half_away(box.y2()));
    if (e.x1 <= e.x0 || e.y1 <= e.y0) {
        throw DegenerateCrop("rounded crop extent has zero area");
    }
    return e;
}

std::pair<RgbImage, std::pair<int, int>> crop(const RgbImage& frame_image,
                                              const BoundingBox& box) {
    const auto e = crop_extent(box);
    RgbImage out;
    out.width = e.x1 - e.x0;
    out.height = e.y1 - e.y0;
    out.pixels.resize(static_cast<size_t>(out.width) * out.height * 3);
    for (int y = 0; y < out.height; ++y) {
        const int sy = e.y0 + y;
        for (int x = 0; x < out.width; ++x) {
            const int sx = e.x0 + x;
            const size_t src = (static_cast<size_t>(sy) * frame_image.width + sx) * 3;
            const size_t dst = (static_cast<size_t>(y) * out.width + x) * 3;
            for (int c = 0; c < 3; ++c) out.pixels[dst + c] = frame_image.pixels[src + c];
        }
    }
    return {std::move(out), {e.x0, e.y0}};
}

TensorFileBackend::TensorFileBackend(std::string dir, DecodeParams params,
                                     std::vector<ClassLabel> vocab)
    : dir_(std::move(dir)), params_(params), vocab_(std::move(vocab)) {}

std::vector<Detection> TensorFileBackend::detect(const FrameRef& frame,
                                                 const CropRegion& region) {
    ++calls_;
    std::string path = dir_ + "/" + std::to_string(frame.frame_id);
    if (region.person_index >= 0) {
        path += "_p" + std::to_string(region.person_index);
    }
    path += ".ygt";
    const auto tensor = read_tensor_file(path);
    return nms(decode_grid(tensor, params_.conf_floor, vocab_), params_.nms_iou);
}

ScriptedBackend::ScriptedBackend(const std::string& path,
                                 std::vector<ClassLabel> vocab)
    : vocab_(std::move(vocab)) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open annotation file: " + path);
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
            throw ParseError(path + ":" + std::to_string(lineno) +
                             ": expected frame_id,class,cx,cy,w,h,score");
        }
        try {
            Detection det;
            const long long frame_id = std::stoll(fields[0]);
            det.label.name = fields[1];
            det.label.id = -1;  // resolved against the stage vocabulary at detect()
            det.bbox = {std::stod(fields[2]), std::stod(fields[3]),
                        std::stod(fields[4]), std::stod(fields[5])};
            det.score = std::stod(fields[6]);
            by_frame_[frame_id].push_back(std::move(det));
        } catch (const std::logic_error&) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": bad number");
        }
    }
}

std::vector<Detection> ScriptedBackend::detect(const FrameRef& frame,
                                               const CropRegion& region) {
    ++calls_;
    std::vector<Detection> out;
    const auto it = by_frame_.find(frame.frame_id);
    if (it == by_frame_.end()) return out;
    for (const auto& entry : it->second) {
        const auto label = find_label(vocab_, entry.label.name);
        if (!label) {
            throw VocabularyViolation("scripted label '" + entry.label.name +
                                      "' outside stage vocabulary (frame " +
                                      std::to_string(frame.frame_id) + ")");
        }
        Detection det = entry;
        det.label = *label;
        if (region.person_index >= 0) {
            // Attire stage: keep detections whose center lies in the crop,
            // expressed crop-locally.
            const double lx = det.bbox.cx - region.offset_x;
            const double ly = det.bbox.cy - region.offset_y;
            if (lx < 0 || lx > region.width || ly < 0 || ly > region.height) continue;
            det.bbox.cx = lx;
            det.bbox.cy = ly;
        }
        out.push_back(std::move(det));
    }
    return out;
}

std::vector<Detection> detect(const FrameRef& frame, DetectorBackend& backend,
                              const CropRegion& region) {
    return backend.detect(frame, region);
}

FrameResult run_frame(const FrameRef& frame, DetectorBackend& person_backend,
                      DetectorBackend& attire_backend) {
    FrameResult result;
    result.frame = frame;
    result.persons = person_backend.detect(frame, CropRegion{});
    if (result.persons.empty()) {
        result.no_person = true;
        return result;
    }
    for (size_t pi = 0; pi < result.persons.size(); ++pi) {
        const auto clipped = clip_to_frame(result.persons[pi].bbox, frame);
        const auto extent = crop_extent(clipped);
        CropRegion region;
        region.person_index = static_cast<int>(pi);
        region.offset_x = extent.x0;
        region.offset_y = extent.y0;
        region.width = extent.x1 - extent.x0;
        region.height = extent.y1 - extent.y0;
        auto garments = attire_backend.detect(frame, region);
        for (auto& g : garments) {
            g.bbox.cx += region.offset_x;
            g.bbox.cy += region.offset_y;
            // Keep garment boxes within the person's crop rectangle.
            const double x1 = std::max(g.bbox.x1(), region.offset_x);
            const double y1 = std::max(g.bbox.y1(), region.offset_y);
            const double x2 = std::min(g.bbox.x2(), region.offset_x + region.width);
            const double y2 = std::min(g.bbox.y2(), region.offset_y + region.height);
            if (x2 > x1 && y2 > y1) {
                g.bbox = BoundingBox::from_corners(x1, y1, x2, y2);
            }
            result.attire.emplace_back(static_cast<int>(pi), std::move(g));
        }
    }
    return result;
}

}  // namespace attire
