#pragma once

// Composite detection loss (coordinate + objectness + classification) with
// analytic gradients w.r.t. the raw grid channels, a finite-difference
// verifier, and an SGD(momentum, weight decay) trainer for a toy linear
// detection head.

#include <cstdint>
#include <vector>

#include "attire/decode.hpp"

namespace attire {

struct LossWeights {
    double lambda_coord{1.0};
    double lambda_obj{1.0};
    double lambda_class{1.0};
};

struct ResponsibleTarget {
    int cell_x{0};
    int cell_y{0};
    int anchor{0};
    BoundingBox box;  // grid units, center inside (cell_x, cell_y)
    int class_id{0};
};

struct TargetAssignment {
    std::vector<ResponsibleTarget> targets;

    void validate(const GridSpec& spec) const;  // throws ShapeMismatch
};

struct SgdConfig {
    double learning_rate{0.01};
    double momentum{0.9};
    double weight_decay{0.0005};
};

double yolo_loss(const RawGridTensor& tensor, const TargetAssignment& targets,
                 const LossWeights& w);

// Gradient w.r.t. every raw channel, flattened in the tensor's
// (cell_y, cell_x, anchor, channel) order, channels (tx,ty,tw,th,t_obj,logits).
std::vector<double> yolo_loss_grad(const RawGridTensor& tensor,
                                   const TargetAssignment& targets,
                                   const LossWeights& w);

// Flatten / restore the raw channels (used by the finite-difference oracle
// and the toy head).
std::vector<double> raw_values(const RawGridTensor& tensor);
void set_raw_values(RawGridTensor& tensor, const std::vector<double>& values);

double finite_diff_check(const RawGridTensor& tensor, const TargetAssignment& targets,
                         const LossWeights& w, double step);

void sgd_step(std::vector<double>& params, const std::vector<double>& grads,
              std::vector<double>& velocity, const SgdConfig& cfg);

struct ToyHeadProblem {
    GridSpec spec;
    std::vector<Anchor> anchors;
    // One feature vector per cell, row-major (cell_y, cell_x); all the same length.
    std::vector<std::vector<double>> features;
    TargetAssignment targets;
    LossWeights loss_weights;
};

struct ToyTrainResult {
    std::vector<double> head_weights;  // (channels*(F+1)) linear map incl. bias
    std::vector<double> loss_curve;    // one entry per epoch
};

ToyTrainResult train_toy_head(const ToyHeadProblem& problem, const SgdConfig& cfg,
                              int epochs);

// Separable fixture: one-hot per-cell features, so an exact linear fit exists.
ToyHeadProblem make_separable_toy_fixture(uint64_t seed);

}  // namespace attire
