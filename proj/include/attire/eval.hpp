#pragma once

// IOU-matched TP/FP/FN accounting, precision/recall/F1, all-points AP and
// mAP, frame-wise false alarm rate, and deterministic dataset splitting.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "attire/core.hpp"

namespace attire {

struct ClassCounts {
    int tp{0};
    int fp{0};
    int fn{0};
};

struct MatchResult {
    std::map<int, ClassCounts> per_class;
    // For each prediction (input order): matched ground-truth index or nullopt.
    std::vector<std::optional<int>> matched_gt;

    ClassCounts totals() const;
};

struct PrecisionRecallF1 {
    double precision{0};
    double recall{0};
    double f1{0};
};

struct ClassMetrics {
    PrecisionRecallF1 prf;
    double ap{0};
    int ground_truth{0};
};

struct EvalReport {
    std::map<int, ClassMetrics> per_class;  // keyed by class id
    PrecisionRecallF1 aggregate;            // pooled counts
    double map{0};
    double false_alarm_rate{0};
};

// Greedy score-ordered matching at the given IOU threshold.
MatchResult match_detections(const std::vector<Detection>& preds,
                             const std::vector<Detection>& gts, double iou_thresh);

PrecisionRecallF1 precision_recall_f1(int tp, int fp, int fn);

double average_precision(const std::vector<Detection>& preds,
                         const std::vector<Detection>& gts, int class_id,
                         double iou_thresh);  // throws NoGroundTruth

// Unweighted mean over classes with >= 1 ground truth.
double mean_average_precision(const std::vector<Detection>& preds,
                              const std::vector<Detection>& gts,
                              const std::vector<ClassLabel>& vocab,
                              double iou_thresh);

// Fraction of alerting frames without a ground-truth anomaly; 0 with no alerts.
double false_alarm_rate(const std::set<long long>& alert_frames,
                        const std::set<long long>& gt_anomaly_frames);

std::pair<std::vector<int>, std::vector<int>> train_test_split(int n,
                                                               double test_fraction,
                                                               uint64_t seed);

std::vector<std::vector<int>> kfold_split(int n, int k, uint64_t seed);

EvalReport evaluate(const std::vector<Detection>& preds,
                    const std::vector<Detection>& gts,
                    const std::vector<ClassLabel>& vocab, double iou_thresh,
                    const std::set<long long>& alert_frames = {},
                    const std::set<long long>& gt_anomaly_frames = {});

// Aligned plain-text table plus a machine-readable JSON-lines rendering.
std::string format_report(const EvalReport& report,
                          const std::vector<ClassLabel>& vocab);
std::string report_jsonl(const EvalReport& report,
                         const std::vector<ClassLabel>& vocab);

}  // namespace attire
