#include "attire/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

namespace attire {

ClassCounts MatchResult::totals() const {
    ClassCounts t;
    for (const auto& [cls, c] : per_class) {
        t.tp += c.tp;
        t.fp += c.fp;
        t.fn += c.fn;
    }
    return t;
}

MatchResult match_detections(const std::vector<Detection>& preds,
                             const std::vector<Detection>& gts, double iou_thresh) {
    MatchResult result;
    result.matched_gt.assign(preds.size(), std::nullopt);
    for (const auto& gt : gts) result.per_class[gt.label.id];
    for (const auto& p : preds) result.per_class[p.label.id];

    std::vector<size_t> order(preds.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t l, size_t r) {
        return preds[l].score > preds[r].score;
    });

    std::vector<bool> gt_used(gts.size(), false);
    for (size_t pi : order) {
        const auto& p = preds[pi];
        double best_iou = iou_thresh;
        int best_gt = -1;
        for (size_t gi = 0; gi < gts.size(); ++gi) {
            if (gt_used[gi] || gts[gi].label.id != p.label.id) continue;
            const double overlap = iou(p.bbox, gts[gi].bbox);
            if (overlap >= best_iou) {
                best_iou = overlap;
                best_gt = static_cast<int>(gi);
            }
        }
        if (best_gt >= 0) {
            gt_used[best_gt] = true;
            result.matched_gt[pi] = best_gt;
            result.per_class[p.label.id].tp++;
        } else {
            result.per_class[p.label.id].fp++;
        }
    }
    for (size_t gi = 0; gi < gts.size(); ++gi) {
        if (!gt_used[gi]) result.per_class[gts[gi].label.id].fn++;
    }
    return result;
}

PrecisionRecallF1 precision_recall_f1(int tp, int fp, int fn) {
    PrecisionRecallF1 out;
    out.precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    out.recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    out.f1 = out.precision + out.recall > 0
                 ? 2 * out.precision * out.recall / (out.precision + out.recall)
                 : 0.0;
    return out;
}

double average_precision(const std::vector<Detection>& preds,
                         const std::vector<Detection>& gts, int class_id,
                         double iou_thresh) {
    std::vector<Detection> cls_gts;
    for (const auto& gt : gts) {
        if (gt.label.id == class_id) cls_gts.push_back(gt);
    }
    if (cls_gts.empty()) {
        throw NoGroundTruth("no ground truth for class " + std::to_string(class_id));
    }
    std::vector<Detection> cls_preds;
    for (const auto& p : preds) {
        if (p.label.id == class_id) cls_preds.push_back(p);
    }
    std::stable_sort(cls_preds.begin(), cls_preds.end(),
                     [](const Detection& l, const Detection& r) {
                         return l.score > r.score;
                     });

    std::vector<bool> gt_used(cls_gts.size(), false);
    std::vector<bool> is_tp(cls_preds.size(), false);
    for (size_t pi = 0; pi < cls_preds.size(); ++pi) {
        double best_iou = iou_thresh;
        int best_gt = -1;
        for (size_t gi = 0; gi < cls_gts.size(); ++gi) {
            if (gt_used[gi]) continue;
            const double overlap = iou(cls_preds[pi].bbox, cls_gts[gi].bbox);
            if (overlap >= best_iou) {
                best_iou = overlap;
                best_gt = static_cast<int>(gi);
            }
        }
        if (best_gt >= 0) {
            gt_used[best_gt] = true;
            is_tp[pi] = true;
        }
    }

    // All-points interpolation: precision envelope, exact rectangle sum.
    const double n_gt = static_cast<double>(cls_gts.size());
    std::vector<double> recalls, precisions;
    int tp = 0, fp = 0;
    for (size_t i = 0; i < cls_preds.size(); ++i) {
        is_tp[i] ? ++tp : ++fp;
        recalls.push_back(tp / n_gt);
        precisions.push_back(static_cast<double>(tp) / (tp + fp));
    }
    double ap = 0;
    double prev_recall = 0;
    for (size_t i = 0; i < recalls.size(); ++i) {
        double envelope = 0;
        for (size_t j = i; j < precisions.size(); ++j) {
            envelope = std::max(envelope, precisions[j]);
        }
        ap += (recalls[i] - prev_recall) * envelope;
        prev_recall = recalls[i];
    }
    return ap;
}

double mean_average_precision(const std::vector<Detection>& preds,
                              const std::vector<Detection>& gts,
                              const std::vector<ClassLabel>& vocab,
                              double iou_thresh) {
    double sum = 0;
    int n = 0;
    for (const auto& label : vocab) {
        try {
            sum += average_precision(preds, gts, label.id, iou_thresh);
            ++n;
        } catch (const NoGroundTruth&) {
            // classes absent from the ground truth are excluded from mAP
        }
    }
    return n > 0 ? sum / n : 0.0;
}

double false_alarm_rate(const std::set<long long>& alert_frames,
                        const std::set<long long>& gt_anomaly_frames) {
    if (alert_frames.empty()) return 0.0;
    int spurious = 0;
    for (long long f : alert_frames) {
        if (!gt_anomaly_frames.count(f)) ++spurious;
    }
    return static_cast<double>(spurious) / alert_frames.size();
}

std::pair<std::vector<int>, std::vector<int>> train_test_split(int n,
                                                               double test_fraction,
                                                               uint64_t seed) {
    if (!(test_fraction > 0 && test_fraction < 1)) {
        throw Error("test_fraction must be in (0,1)");
    }
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    const int n_test = static_cast<int>(std::lround(n * test_fraction));
    std::vector<int> test(idx.begin(), idx.begin() + n_test);
    std::vector<int> train(idx.begin() + n_test, idx.end());
    return {std::move(train), std::move(test)};
}

std::vector<std::vector<int>> kfold_split(int n, int k, uint64_t seed) {
    if (k < 2 || k > n) throw KTooLarge("need 2 <= k <= n");
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<std::vector<int>> folds(k);
    for (int i = 0; i < n; ++i) folds[i % k].push_back(idx[i]);
    return folds;
}

EvalReport evaluate(const std::vector<Detection>& preds,
                    const std::vector<Detection>& gts,
                    const std::vector<ClassLabel>& vocab, double iou_thresh,
                    const std::set<long long>& alert_frames,
                    const std::set<long long>& gt_anomaly_frames) {
    EvalReport report;
    const auto match = match_detections(preds, gts, iou_thresh);
    for (const auto& label : vocab) {
        ClassMetrics m;
        const auto it = match.per_class.find(label.id);
        const ClassCounts counts = it != match.per_class.end() ? it->second : ClassCounts{};
        m.prf = precision_recall_f1(counts.tp, counts.fp, counts.fn);
        m.ground_truth = counts.tp + counts.fn;
        if (m.ground_truth > 0) {
            m.ap = average_precision(preds, gts, label.id, iou_thresh);
        }
        report.per_class[label.id] = m;
    }
    const auto totals = match.totals();
    report.aggregate = precision_recall_f1(totals.tp, totals.fp, totals.fn);
    report.map = mean_average_precision(preds, gts, vocab, iou_thresh);
    report.false_alarm_rate = false_alarm_rate(alert_frames, gt_anomaly_frames);
    return report;
}

namespace {

std::string class_name(const std::vector<ClassLabel>& vocab, int id) {
    for (const auto& label : vocab) {
        if (label.id == id) return label.name;
    }
    return "class-" + std::to_string(id);
}

}  // namespace

std::string format_report(const EvalReport& report,
                          const std::vector<ClassLabel>& vocab) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(4);
    out << "Class       Precision  Recall  F1 Score  AP\n";
    for (const auto& [id, m] : report.per_class) {
        std::string name = class_name(vocab, id);
        name.resize(10, ' ');
        out << name << "  " << m.prf.precision << "     " << m.prf.recall << "  "
            << m.prf.f1 << "    " << m.ap << "\n";
    }
    out << "\nOverall     Precision " << report.aggregate.precision << "  Recall "
        << report.aggregate.recall << "  F1 Score " << report.aggregate.f1
        << "  False Alarm Rate " << report.false_alarm_rate << "  mAP "
        << report.map << "\n";
    return out.str();
}

std::string report_jsonl(const EvalReport& report,
                         const std::vector<ClassLabel>& vocab) {
    std::ostringstream out;
    for (const auto& [id, m] : report.per_class) {
        nlohmann::json j = {{"kind", "class"},
                            {"class", class_name(vocab, id)},
                            {"precision", m.prf.precision},
                            {"recall", m.prf.recall},
                            {"f1", m.prf.f1},
                            {"ap", m.ap},
                            {"ground_truth", m.ground_truth}};
        out << j.dump() << "\n";
    }
    nlohmann::json agg = {{"kind", "aggregate"},
                          {"precision", report.aggregate.precision},
                          {"recall", report.aggregate.recall},
                          {"f1", report.aggregate.f1},
                          {"map", report.map},
                          {"false_alarm_rate", report.false_alarm_rate}};
    out << agg.dump() << "\n";
    return out.str();
}

}  // namespace attire
