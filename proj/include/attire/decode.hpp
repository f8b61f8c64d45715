#pragma once

// Raw S x S x B grid tensors and their decoding into detections:
// sigmoid/exp box decode, softmax class probabilities, confidence
// composition, then per-class greedy NMS.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "attire/core.hpp"

namespace attire {

struct GridSpec {
    int s{0};
    int num_anchors{0};
    int num_classes{0};
    int frame_width{0};
    int frame_height{0};

    int channels() const { return 5 + num_classes; }
};

struct Anchor {
    double pw{0};
    double ph{0};
};

struct RawCellPrediction {
    double tx{0};
    double ty{0};
    double tw{0};
    double th{0};
    double t_obj{0};
    std::vector<double> class_logits;
};

struct RawGridTensor {
    GridSpec spec;
    std::vector<Anchor> anchors;
    // Row-major (cell_y, cell_x, anchor).
    std::vector<RawCellPrediction> cells;

    const RawCellPrediction& at(int cy, int cx, int a) const {
        return cells[(static_cast<size_t>(cy) * spec.s + cx) * spec.num_anchors + a];
    }
    RawCellPrediction& at(int cy, int cx, int a) {
        return cells[(static_cast<size_t>(cy) * spec.s + cx) * spec.num_anchors + a];
    }

    void validate() const;  // throws ShapeMismatch
};

struct DecodedCell {
    BoundingBox box;  // grid units
    double objectness{0};
    std::vector<double> class_probs;
};

double sigmoid(double x);
double logit(double p);  // inverse sigmoid, p in (0,1)

std::vector<double> softmax(const std::vector<double>& logits);

DecodedCell decode_cell(const RawCellPrediction& raw, const GridSpec& spec,
                        const Anchor& anchor, int cell_x, int cell_y);

RawCellPrediction encode_cell(const BoundingBox& box_grid_units, double objectness,
                              const std::vector<double>& class_probs,
                              const GridSpec& spec, const Anchor& anchor,
                              int cell_x, int cell_y);

double class_confidence(double objectness, double class_prob);

// Decodes the whole grid to pixel-space detections: one candidate per
// (cell, anchor) using the argmax class, floor-filtered, sorted by
// descending score with (cell_y, cell_x, anchor) tie-break.
std::vector<Detection> decode_grid(const RawGridTensor& tensor, double conf_floor,
                                   const std::vector<ClassLabel>& vocab);

// Greedy per-class suppression, deterministic under the decode_grid ordering.
std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_thresh);

// "YGT1" binary tensor file format.
void write_tensor(std::ostream& out, const RawGridTensor& tensor);
void write_tensor_file(const std::string& path, const RawGridTensor& tensor);
RawGridTensor read_tensor(std::istream& in);
RawGridTensor read_tensor_file(const std::string& path);

}  // namespace attire
