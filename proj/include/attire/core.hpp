#pragma once

// Geometry and identity types shared by every other module.
// Boxes are stored center-format (cx, cy, w, h); corner conversion is a
// helper. All geometry is double precision.

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "attire/errors.hpp"

namespace attire {

struct BoundingBox {
    double cx{0};
    double cy{0};
    double w{0};
    double h{0};

    double x1() const { return cx - w / 2.0; }
    double y1() const { return cy - h / 2.0; }
    double x2() const { return cx + w / 2.0; }
    double y2() const { return cy + h / 2.0; }

    static BoundingBox from_corners(double x1, double y1, double x2, double y2) {
        return {(x1 + x2) / 2.0, (y1 + y2) / 2.0, x2 - x1, y2 - y1};
    }
};

struct ClassLabel {
    int id{0};
    std::string name;

    bool operator==(const ClassLabel& other) const { return id == other.id; }
    bool operator<(const ClassLabel& other) const { return id < other.id; }
};

// Stage vocabularies.
const std::vector<ClassLabel>& person_vocabulary();
const std::vector<ClassLabel>& attire_vocabulary();

// Looks a label up by name in a vocabulary; nullopt if absent.
std::optional<ClassLabel> find_label(const std::vector<ClassLabel>& vocab,
                                     const std::string& name);

struct Detection {
    BoundingBox bbox;
    ClassLabel label;
    double score{0};
    std::optional<std::vector<double>> class_probs;
};

struct FrameRef {
    long long frame_id{0};
    int width{0};
    int height{0};
    std::string zone_id;
};

struct ZonePolicy {
    std::string zone_id;
    std::set<int> authorized;  // attire class ids

    bool is_authorized(const ClassLabel& label) const {
        return authorized.count(label.id) > 0;
    }
};

double bbox_area(const BoundingBox& b);

double iou(const BoundingBox& a, const BoundingBox& b);

// Clamps the box extent to [0,width]x[0,height]. Throws BoxOutsideFrame when
// the clipped box would have zero or negative extent.
BoundingBox clip_to_frame(const BoundingBox& b, const FrameRef& frame);

}  // namespace attire
