#include "attire/core.hpp"

#include <algorithm>

namespace attire {

const std::vector<ClassLabel>& person_vocabulary() {
    static const std::vector<ClassLabel> vocab = {{0, "Person"}};
    return vocab;
}

const std::vector<ClassLabel>& attire_vocabulary() {
    static const std::vector<ClassLabel> vocab = {
        {0, "Jacket"}, {1, "T-Shirt"}, {2, "Shorts"}, {3, "Skirt"}, {4, "Top"}};
    return vocab;
}

std::optional<ClassLabel> find_label(const std::vector<ClassLabel>& vocab,
                                     const std::string& name) {
    for (const auto& label : vocab) {
        if (label.name == name) return label;
    }
    return std::nullopt;
}

double bbox_area(const BoundingBox& b) { return b.w * b.h; }

double iou(const BoundingBox& a, const BoundingBox& b) {
    const double ix1 = std::max(a.x1(), b.x1());
    const double iy1 = std::max(a.y1(), b.y1());
    const double ix2 = std::min(a.x2(), b.x2());
    const double iy2 = std::min(a.y2(), b.y2());
    const double iw = ix2 - ix1;
    const double ih = iy2 - iy1;
    if (iw <= 0 || ih <= 0) return 0.0;
    const double inter = iw * ih;
    const double uni = bbox_area(a) + bbox_area(b) - inter;
    return uni > 0 ? inter / uni : 0.0;
}

BoundingBox clip_to_frame(const BoundingBox& b, const FrameRef& frame) {
    const double x1 = std::clamp(b.x1(), 0.0, static_cast<double>(frame.width));
    const double y1 = std::clamp(b.y1(), 0.0, static_cast<double>(frame.height));
    const double x2 = std::clamp(b.x2(), 0.0, static_cast<double>(frame.width));
    const double y2 = std::clamp(b.y2(), 0.0, static_cast<double>(frame.height));
    if (x2 - x1 <= 0 || y2 - y1 <= 0) {
        throw BoxOutsideFrame("box has no overlap with frame " +
                              std::to_string(frame.frame_id));
    }
    return BoundingBox::from_corners(x1, y1, x2, y2);
}

}  // namespace attire
