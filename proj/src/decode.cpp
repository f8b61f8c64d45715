#include "attire/decode.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace attire {

void RawGridTensor::validate() const {
    if (spec.s < 1 || spec.num_anchors < 1 || spec.num_classes < 1) {
        throw ShapeMismatch("invalid grid spec");
    }
    if (static_cast<int>(anchors.size()) != spec.num_anchors) {
        throw ShapeMismatch("anchor count does not match spec");
    }
    const size_t expected =
        static_cast<size_t>(spec.s) * spec.s * spec.num_anchors;
    if (cells.size() != expected) {
        throw ShapeMismatch("cell array does not match grid shape");
    }
    for (const auto& cell : cells) {
        if (static_cast<int>(cell.class_logits.size()) != spec.num_classes) {
            throw ShapeMismatch("class logit length does not match spec");
        }
    }
}

double sigmoid(double x) {
    if (x >= 0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

std::vector<double> softmax(const std::vector<double>& logits) {
    if (logits.empty()) throw EmptyVector("softmax of empty vector");
    const double m = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double sum = 0;
    for (size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - m);
        sum += out[i];
    }
    for (auto& v : out) v /= sum;
    return out;
}

DecodedCell decode_cell(const RawCellPrediction& raw, const GridSpec& spec,
                        const Anchor& anchor, int cell_x, int cell_y) {
    if (cell_x < 0 || cell_x >= spec.s || cell_y < 0 || cell_y >= spec.s) {
        throw IndexOutOfGrid("cell index outside grid");
    }
    DecodedCell out;
    out.box.cx = sigmoid(raw.tx) + cell_x;
    out.box.cy = sigmoid(raw.ty) + cell_y;
    out.box.w = anchor.pw * std::exp(raw.tw);
    out.box.h = anchor.ph * std::exp(raw.th);
    out.objectness = sigmoid(raw.t_obj);
    out.class_probs = softmax(raw.class_logits);
    return out;
}

RawCellPrediction encode_cell(const BoundingBox& box, double objectness,
                              const std::vector<double>& class_probs,
                              const GridSpec& spec, const Anchor& anchor,
                              int cell_x, int cell_y) {
    if (cell_x < 0 || cell_x >= spec.s || cell_y < 0 || cell_y >= spec.s) {
        throw IndexOutOfGrid("cell index outside grid");
    }
    const double fx = box.cx - cell_x;
    const double fy = box.cy - cell_y;
    if (fx <= 0 || fx >= 1 || fy <= 0 || fy >= 1) {
        throw CenterOutsideCell("box center not strictly inside cell");
    }
    if (objectness <= 0 || objectness >= 1) {
        throw DegenerateProbability("objectness must be in (0,1)");
    }
    RawCellPrediction raw;
    raw.tx = logit(fx);
    raw.ty = logit(fy);
    raw.tw = std::log(box.w / anchor.pw);
    raw.th = std::log(box.h / anchor.ph);
    raw.t_obj = logit(objectness);
    raw.class_logits.reserve(class_probs.size());
    for (double p : class_probs) {
        if (p <= 0) throw DegenerateProbability("class probability must be > 0");
        raw.class_logits.push_back(std::log(p));
    }
    return raw;
}

double class_confidence(double objectness, double class_prob) {
    return objectness * class_prob;
}

namespace {

struct Candidate {
    Detection det;
    int cell_y, cell_x, anchor;
};

}  // namespace

std::vector<Detection> decode_grid(const RawGridTensor& tensor, double conf_floor,
                                   const std::vector<ClassLabel>& vocab) {
    tensor.validate();
    if (static_cast<int>(vocab.size()) < tensor.spec.num_classes) {
        throw ShapeMismatch("vocabulary smaller than num_classes");
    }
    const auto& spec = tensor.spec;
    const double sx = static_cast<double>(spec.frame_width) / spec.s;
    const double sy = static_cast<double>(spec.frame_height) / spec.s;

    std::vector<Candidate> cands;
    for (int cy = 0; cy < spec.s; ++cy) {
        for (int cx = 0; cx < spec.s; ++cx) {
            for (int a = 0; a < spec.num_anchors; ++a) {
                const auto dec =
                    decode_cell(tensor.at(cy, cx, a), spec, tensor.anchors[a], cx, cy);
                const auto best = std::max_element(dec.class_probs.begin(),
                                                   dec.class_probs.end());
                const int cls = static_cast<int>(best - dec.class_probs.begin());
                const double score = class_confidence(dec.objectness, *best);
                if (score < conf_floor) continue;
                Detection det;
                det.bbox = {dec.box.cx * sx, dec.box.cy * sy, dec.box.w * sx,
                            dec.box.h * sy};
                det.label = vocab[cls];
                det.score = score;
                det.class_probs = dec.class_probs;
                cands.push_back({std::move(det), cy, cx, a});
            }
        }
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Candidate& l, const Candidate& r) {
        if (l.det.score != r.det.score) return l.det.score > r.det.score;
        if (l.cell_y != r.cell_y) return l.cell_y < r.cell_y;
        if (l.cell_x != r.cell_x) return l.cell_x < r.cell_x;
        return l.anchor < r.anchor;
    });
    std::vector<Detection> out;
    out.reserve(cands.size());
    for (auto& c : cands) out.push_back(std::move(c.det));
    return out;
}

std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_thresh) {
    std::vector<size_t> order(dets.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t l, size_t r) {
        return dets[l].score > dets[r].score;
    });
    std::vector<bool> suppressed(dets.size(), false);
    std::vector<Detection> kept;
    for (size_t i = 0; i < order.size(); ++i) {
        const size_t a = order[i];
        if (suppressed[a]) continue;
        kept.push_back(dets[a]);
        for (size_t j = i + 1; j < order.size(); ++j) {
            const size_t b = order[j];
            if (suppressed[b] || dets[b].label.id != dets[a].label.id) continue;
            if (iou(dets[a].bbox, dets[b].bbox) > iou_thresh) suppressed[b] = true;
        }
    }
    return kept;
}

namespace {

void put_u32(std::ostream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f32(std::ostream& out, float f) {
    uint32_t v;
    std::memcpy(&v, &f, 4);
    put_u32(out, v);
}

uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw ParseError("truncated tensor file");
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

float get_f32(std::istream& in) {
    const uint32_t v = get_u32(in);
    float f;
    std::memcpy(&f, &v, 4);
    return f;
}

}  // namespace

void write_tensor(std::ostream& out, const RawGridTensor& tensor) {
    tensor.validate();
    out.write("YGT1", 4);
    put_u32(out, static_cast<uint32_t>(tensor.spec.s));
    put_u32(out, static_cast<uint32_t>(tensor.spec.num_anchors));
    put_u32(out, static_cast<uint32_t>(tensor.spec.num_classes));
    put_u32(out, static_cast<uint32_t>(tensor.spec.frame_width));
    put_u32(out, static_cast<uint32_t>(tensor.spec.frame_height));
    for (const auto& a : tensor.anchors) {
        put_f32(out, static_cast<float>(a.pw));
        put_f32(out, static_cast<float>(a.ph));
    }
    for (const auto& c : tensor.cells) {
        put_f32(out, static_cast<float>(c.tx));
        put_f32(out, static_cast<float>(c.ty));
        put_f32(out, static_cast<float>(c.tw));
        put_f32(out, static_cast<float>(c.th));
        put_f32(out, static_cast<float>(c.t_obj));
        for (double l : c.class_logits) put_f32(out, static_cast<float>(l));
    }
}

void write_tensor_file(const std::string& path, const RawGridTensor& tensor) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open tensor file for writing: " + path);
    write_tensor(out, tensor);
}

RawGridTensor read_tensor(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "YGT1", 4) != 0) {
        throw ParseError("bad tensor magic, expected YGT1");
    }
    RawGridTensor t;
    t.spec.s = static_cast<int>(get_u32(in));
    t.spec.num_anchors = static_cast<int>(get_u32(in));
    t.spec.num_classes = static_cast<int>(get_u32(in));
    t.spec.frame_width = static_cast<int>(get_u32(in));
    t.spec.frame_height = static_cast<int>(get_u32(in));
    if (t.spec.s < 1 || t.spec.num_anchors < 1 || t.spec.num_classes < 1) {
        throw ParseError("invalid tensor header");
    }
    t.anchors.resize(t.spec.num_anchors);
    for (auto& a : t.anchors) {
        a.pw = get_f32(in);
        a.ph = get_f32(in);
    }
    const size_t n = static_cast<size_t>(t.spec.s) * t.spec.s * t.spec.num_anchors;
    t.cells.resize(n);
    for (auto& c : t.cells) {
        c.tx = get_f32(in);
        c.ty = get_f32(in);
        c.tw = get_f32(in);
        c.th = get_f32(in);
        c.t_obj = get_f32(in);
        c.class_logits.resize(t.spec.num_classes);
        for (auto& l : c.class_logits) l = get_f32(in);
    }
    t.validate();
    return t;
}

RawGridTensor read_tensor_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFrameData("cannot open tensor file: " + path);
    return read_tensor(in);
}

}  // namespace attire
