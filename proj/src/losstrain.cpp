#include "attire/losstrain.hpp"

#include <cmath>
#include <random>

namespace attire {

void TargetAssignment::validate(const GridSpec& spec) const {
    for (const auto& t : targets) {
        if (t.cell_x < 0 || t.cell_x >= spec.s || t.cell_y < 0 || t.cell_y >= spec.s ||
            t.anchor < 0 || t.anchor >= spec.num_anchors) {
            throw ShapeMismatch("target slot outside grid");
        }
        if (t.class_id < 0 || t.class_id >= spec.num_classes) {
            throw ShapeMismatch("target class outside vocabulary");
        }
        if (t.box.cx <= t.cell_x || t.box.cx >= t.cell_x + 1 ||
            t.box.cy <= t.cell_y || t.box.cy >= t.cell_y + 1) {
            throw ShapeMismatch("target box center not inside its cell");
        }
        if (t.box.w <= 0 || t.box.h <= 0) {
            throw ShapeMismatch("target box has non-positive extent");
        }
    }
}

namespace {

size_t slot_index(const GridSpec& spec, int cy, int cx, int a) {
    return (static_cast<size_t>(cy) * spec.s + cx) * spec.num_anchors + a;
}

// -1 means no responsible target for the slot.
std::vector<int> responsibility_map(const RawGridTensor& tensor,
                                    const TargetAssignment& targets) {
    std::vector<int> map(tensor.cells.size(), -1);
    for (size_t i = 0; i < targets.targets.size(); ++i) {
        const auto& t = targets.targets[i];
        map[slot_index(tensor.spec, t.cell_y, t.cell_x, t.anchor)] =
            static_cast<int>(i);
    }
    return map;
}

}  // namespace

double yolo_loss(const RawGridTensor& tensor, const TargetAssignment& targets,
                 const LossWeights& w) {
    tensor.validate();
    targets.validate(tensor.spec);
    const auto& spec = tensor.spec;
    const auto resp = responsibility_map(tensor, targets);

    double coord = 0, obj = 0, cls = 0;
    for (int cy = 0; cy < spec.s; ++cy) {
        for (int cx = 0; cx < spec.s; ++cx) {
            for (int a = 0; a < spec.num_anchors; ++a) {
                const auto& raw = tensor.at(cy, cx, a);
                const int ti = resp[slot_index(spec, cy, cx, a)];
                const double p_obj = sigmoid(raw.t_obj);
                const double y_obj = ti >= 0 ? 1.0 : 0.0;
                obj += -(y_obj * std::log(p_obj) + (1 - y_obj) * std::log(1 - p_obj));
                if (ti < 0) continue;
                const auto& t = targets.targets[ti];
                const auto dec = decode_cell(raw, spec, tensor.anchors[a], cx, cy);
                const double dx = dec.box.cx - t.box.cx;
                const double dy = dec.box.cy - t.box.cy;
                const double dw = std::sqrt(dec.box.w) - std::sqrt(t.box.w);
                const double dh = std::sqrt(dec.box.h) - std::sqrt(t.box.h);
                coord += dx * dx + dy * dy + dw * dw + dh * dh;
                cls += -std::log(dec.class_probs[t.class_id]);
            }
        }
    }
    return w.lambda_coord * coord + w.lambda_obj * obj + w.lambda_class * cls;
}

std::vector<double> yolo_loss_grad(const RawGridTensor& tensor,
                                   const TargetAssignment& targets,
                                   const LossWeights& w) {
    tensor.validate();
    targets.validate(tensor.spec);
    const auto& spec = tensor.spec;
    const int ch = spec.channels();
    const auto resp = responsibility_map(tensor, targets);

    std::vector<double> grad(tensor.cells.size() * ch, 0.0);
    for (int cy = 0; cy < spec.s; ++cy) {
        for (int cx = 0; cx < spec.s; ++cx) {
            for (int a = 0; a < spec.num_anchors; ++a) {
                const size_t slot = slot_index(spec, cy, cx, a);
                const size_t base = slot * ch;
                const auto& raw = tensor.at(cy, cx, a);
                const int ti = resp[slot];
                const double p_obj = sigmoid(raw.t_obj);
                const double y_obj = ti >= 0 ? 1.0 : 0.0;
                // BCE through sigmoid collapses to (p - y).
                grad[base + 4] += w.lambda_obj * (p_obj - y_obj);
                if (ti < 0) continue;
                const auto& t = targets.targets[ti];
                const auto dec = decode_cell(raw, spec, tensor.anchors[a], cx, cy);
                const double sx = sigmoid(raw.tx);
                const double sy = sigmoid(raw.ty);
                grad[base + 0] +=
                    w.lambda_coord * 2 * (dec.box.cx - t.box.cx) * sx * (1 - sx);
                grad[base + 1] +=
                    w.lambda_coord * 2 * (dec.box.cy - t.box.cy) * sy * (1 - sy);
                // d sqrt(bw)/dtw = sqrt(bw)/2
                const double rw = std::sqrt(dec.box.w);
                const double rh = std::sqrt(dec.box.h);
                grad[base + 2] +=
                    w.lambda_coord * (rw - std::sqrt(t.box.w)) * rw;
                grad[base + 3] +=
                    w.lambda_coord * (rh - std::sqrt(t.box.h)) * rh;
                for (int c = 0; c < spec.num_classes; ++c) {
                    const double y = c == t.class_id ? 1.0 : 0.0;
                    grad[base + 5 + c] += w.lambda_class * (dec.class_probs[c] - y);
                }
            }
        }
    }
    return grad;
}

std::vector<double> raw_values(const RawGridTensor& tensor) {
    const int ch = tensor.spec.channels();
    std::vector<double> out;
    out.reserve(tensor.cells.size() * ch);
    for (const auto& c : tensor.cells) {
        out.push_back(c.tx);
        out.push_back(c.ty);
        out.push_back(c.tw);
        out.push_back(c.th);
        out.push_back(c.t_obj);
        out.insert(out.end(), c.class_logits.begin(), c.class_logits.end());
    }
    return out;
}

void set_raw_values(RawGridTensor& tensor, const std::vector<double>& values) {
    const int ch = tensor.spec.channels();
    if (values.size() != tensor.cells.size() * ch) {
        throw ShapeMismatch("raw value length does not match tensor");
    }
    size_t i = 0;
    for (auto& c : tensor.cells) {
        c.tx = values[i++];
        c.ty = values[i++];
        c.tw = values[i++];
        c.th = values[i++];
        c.t_obj = values[i++];
        for (auto& l : c.class_logits) l = values[i++];
    }
}

double finite_diff_check(const RawGridTensor& tensor, const TargetAssignment& targets,
                         const LossWeights& w, double step) {
    const auto analytic = yolo_loss_grad(tensor, targets, w);
    auto values = raw_values(tensor);
    RawGridTensor probe = tensor;
    double max_rel = 0;
    for (size_t i = 0; i < values.size(); ++i) {
        const double saved = values[i];
        values[i] = saved + step;
        set_raw_values(probe, values);
        const double hi = yolo_loss(probe, targets, w);
        values[i] = saved - step;
        set_raw_values(probe, values);
        const double lo = yolo_loss(probe, targets, w);
        values[i] = saved;
        const double numeric = (hi - lo) / (2 * step);
        const double rel =
            std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(numeric));
        max_rel = std::max(max_rel, rel);
    }
    return max_rel;
}

void sgd_step(std::vector<double>& params, const std::vector<double>& grads,
              std::vector<double>& velocity, const SgdConfig& cfg) {
    if (params.size() != grads.size() || params.size() != velocity.size()) {
        throw LengthMismatch("sgd_step vector lengths differ");
    }
    for (size_t i = 0; i < params.size(); ++i) {
        velocity[i] = cfg.momentum * velocity[i] -
                      cfg.learning_rate * (grads[i] + cfg.weight_decay * params[i]);
        params[i] += velocity[i];
    }
}

namespace {

// raw = W * [feat; 1] per cell, W row per channel block of the cell's anchors.
void toy_forward(const ToyHeadProblem& p, const std::vector<double>& weights,
                 RawGridTensor& tensor) {
    const int ch = p.spec.channels();
    const int out_dim = p.spec.num_anchors * ch;
    const size_t feat_dim = p.features.front().size();
    std::vector<double> values(tensor.cells.size() * ch);
    for (int cell = 0; cell < p.spec.s * p.spec.s; ++cell) {
        const auto& feat = p.features[cell];
        for (int o = 0; o < out_dim; ++o) {
            const size_t row = static_cast<size_t>(o) * (feat_dim + 1);
            double acc = weights[row + feat_dim];  // bias
            for (size_t f = 0; f < feat_dim; ++f) acc += weights[row + f] * feat[f];
            values[static_cast<size_t>(cell) * out_dim + o] = acc;
        }
    }
    set_raw_values(tensor, values);
}

}  // namespace

ToyTrainResult train_toy_head(const ToyHeadProblem& p, const SgdConfig& cfg,
                              int epochs) {
    if (epochs < 1) throw Error("epochs must be >= 1");
    const int ch = p.spec.channels();
    const int out_dim = p.spec.num_anchors * ch;
    const size_t feat_dim = p.features.front().size();
    for (const auto& f : p.features) {
        if (f.size() != feat_dim) throw ShapeMismatch("ragged feature vectors");
    }

    RawGridTensor tensor;
    tensor.spec = p.spec;
    tensor.anchors = p.anchors;
    tensor.cells.resize(static_cast<size_t>(p.spec.s) * p.spec.s * p.spec.num_anchors);
    for (auto& c : tensor.cells) c.class_logits.resize(p.spec.num_classes);

    ToyTrainResult result;
    result.head_weights.assign(static_cast<size_t>(out_dim) * (feat_dim + 1), 0.0);
    std::vector<double> velocity(result.head_weights.size(), 0.0);
    std::vector<double> weight_grad(result.head_weights.size());

    for (int epoch = 0; epoch < epochs; ++epoch) {
        toy_forward(p, result.head_weights, tensor);
        const double loss = yolo_loss(tensor, p.targets, p.loss_weights);
        if (!std::isfinite(loss)) {
            throw DivergenceDetected("loss became non-finite at epoch " +
                                     std::to_string(epoch));
        }
        result.loss_curve.push_back(loss);
        const auto raw_grad = yolo_loss_grad(tensor, p.targets, p.loss_weights);

        std::fill(weight_grad.begin(), weight_grad.end(), 0.0);
        for (int cell = 0; cell < p.spec.s * p.spec.s; ++cell) {
            const auto& feat = p.features[cell];
            for (int o = 0; o < out_dim; ++o) {
                const double g = raw_grad[static_cast<size_t>(cell) * out_dim + o];
                const size_t row = static_cast<size_t>(o) * (feat_dim + 1);
                for (size_t f = 0; f < feat_dim; ++f) weight_grad[row + f] += g * feat[f];
                weight_grad[row + feat_dim] += g;
            }
        }
        sgd_step(result.head_weights, weight_grad, velocity, cfg);
    }
    return result;
}

ToyHeadProblem make_separable_toy_fixture(uint64_t seed) {
    ToyHeadProblem p;
    p.spec = {3, 1, 5, 416, 416};
    p.anchors = {{1.5, 2.5}};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> frac(0.2, 0.8);
    std::uniform_real_distribution<double> size(0.5, 2.0);
    std::uniform_int_distribution<int> cls(0, p.spec.num_classes - 1);

    const int cells = p.spec.s * p.spec.s;
    p.features.resize(cells);
    for (int i = 0; i < cells; ++i) {
        p.features[i].assign(cells, 0.0);
        p.features[i][i] = 1.0;  // one-hot: exact linear fit exists
    }
    for (int cy = 0; cy < p.spec.s; ++cy) {
        for (int cx = 0; cx < p.spec.s; ++cx) {
            if ((cx + cy) % 2 != 0) continue;  // half the cells hold objects
            ResponsibleTarget t;
            t.cell_x = cx;
            t.cell_y = cy;
            t.anchor = 0;
            t.box = {cx + frac(rng), cy + frac(rng), size(rng), size(rng)};
            t.class_id = cls(rng);
            p.targets.targets.push_back(t);
        }
    }
    return p;
}

}  // namespace attire
