#include "attire/anomaly.hpp"

#include <algorithm>
#include <cmath>

namespace attire {

double TriangularSet::membership(double x) const {
    if (x < left || x > right) return 0.0;
    if (x < peak) {
        return peak > left ? (x - left) / (peak - left) : 1.0;
    }
    if (x > peak) {
        return right > peak ? (right - x) / (right - peak) : 1.0;
    }
    return 1.0;
}

namespace {

void check_ordered(const TriangularSet& t, const char* name) {
    if (!(t.left <= t.peak && t.peak <= t.right)) {
        throw InvariantViolation(std::string("unordered membership triple: ") + name);
    }
}

// Coverage sampled at interval midpoints: zero-measure gaps at exact set
// boundaries do not fail the check.
bool covers_unit_interval(const TriangularSet& a, const TriangularSet& b,
                          const TriangularSet& c) {
    constexpr int kSamples = 1024;
    for (int i = 0; i < kSamples; ++i) {
        const double x = (i + 0.5) / kSamples;
        if (a.membership(x) + b.membership(x) + c.membership(x) <= 0) return false;
    }
    return true;
}

}  // namespace

void FuzzyRuleBase::validate() const {
    check_ordered(illum_dark, "illum_dark");
    check_ordered(illum_normal, "illum_normal");
    check_ordered(illum_bright, "illum_bright");
    check_ordered(conf_low, "conf_low");
    check_ordered(conf_medium, "conf_medium");
    check_ordered(conf_high, "conf_high");
    check_ordered(out_attenuate, "out_attenuate");
    check_ordered(out_keep, "out_keep");
    check_ordered(out_boost, "out_boost");
    if (!(universe_lo < universe_hi) || universe_points < 2) {
        throw InvariantViolation("bad output universe");
    }
    if (!covers_unit_interval(illum_dark, illum_normal, illum_bright)) {
        throw InvariantViolation("illumination sets do not cover [0,1]");
    }
    if (!covers_unit_interval(conf_low, conf_medium, conf_high)) {
        throw InvariantViolation("confidence sets do not cover [0,1]");
    }
    if (rules.empty()) throw InvariantViolation("empty rule list");
}

const TriangularSet& FuzzyRuleBase::illum_set(IlluminationSet s) const {
    switch (s) {
        case IlluminationSet::Dark: return illum_dark;
        case IlluminationSet::Normal: return illum_normal;
        default: return illum_bright;
    }
}

const TriangularSet& FuzzyRuleBase::conf_set(ConfidenceSet s) const {
    switch (s) {
        case ConfidenceSet::Low: return conf_low;
        case ConfidenceSet::Medium: return conf_medium;
        default: return conf_high;
    }
}

const TriangularSet& FuzzyRuleBase::out_set(MultiplierSet s) const {
    switch (s) {
        case MultiplierSet::Attenuate: return out_attenuate;
        case MultiplierSet::Keep: return out_keep;
        default: return out_boost;
    }
}

FuzzyRuleBase default_rule_base() {
    FuzzyRuleBase rb;
    const IlluminationSet illums[] = {IlluminationSet::Dark, IlluminationSet::Normal,
                                      IlluminationSet::Bright};
    const ConfidenceSet confs[] = {ConfidenceSet::Low, ConfidenceSet::Medium,
                                   ConfidenceSet::High};
    for (auto il : illums) {
        for (auto cf : confs) {
            MultiplierSet out = MultiplierSet::Keep;
            if (il == IlluminationSet::Dark) out = MultiplierSet::Attenuate;
            if (il == IlluminationSet::Bright && cf == ConfidenceSet::High) {
                out = MultiplierSet::Boost;
            }
            rb.rules.push_back({il, cf, out});
        }
    }
    return rb;
}

void ThresholdParams::validate() const {
    if (!(base > 0 && base < 1) || alpha < 0 || beta < 0 ||
        !(floor > 0 && floor < ceiling && ceiling < 1)) {
        throw InvariantViolation("bad threshold parameters");
    }
}

void TemporalParams::validate() const {
    if (required < 1 || required > window || match_iou < 0 || match_iou > 1) {
        throw InvariantViolation("bad temporal parameters");
    }
}

std::vector<Anomaly> identify_anomalies(const std::vector<Detection>& dets,
                                        const ZonePolicy& policy) {
    std::vector<Anomaly> out;
    for (const auto& det : dets) {
        if (policy.is_authorized(det.label)) continue;
        Anomaly a;
        a.detection = det;
        a.zone_id = policy.zone_id;
        a.original_conf = det.score;
        a.adjusted_conf = det.score;
        out.push_back(std::move(a));
    }
    return out;
}

ContextFeatures context_features(const FrameContext& ctx) {
    ContextFeatures f;
    f.illumination = ctx.illumination;
    if (!ctx.conditions.empty()) {
        double sum = 0;
        for (const auto& [name, v] : ctx.conditions) sum += v;
        f.condition_mean = sum / ctx.conditions.size();
    }
    return f;
}

double fuzzy_multiplier(double illumination, double original_conf,
                        const FuzzyRuleBase& rb) {
    double strength_att = 0, strength_keep = 0, strength_boost = 0;
    for (const auto& rule : rb.rules) {
        const double w = std::min(rb.illum_set(rule.illumination).membership(illumination),
                                  rb.conf_set(rule.confidence).membership(original_conf));
        switch (rule.output) {
            case MultiplierSet::Attenuate: strength_att = std::max(strength_att, w); break;
            case MultiplierSet::Keep: strength_keep = std::max(strength_keep, w); break;
            case MultiplierSet::Boost: strength_boost = std::max(strength_boost, w); break;
        }
    }
    const double step = (rb.universe_hi - rb.universe_lo) / (rb.universe_points - 1);
    double num = 0, den = 0;
    for (int i = 0; i < rb.universe_points; ++i) {
        const double x = rb.universe_lo + i * step;
        const double mu =
            std::max({std::min(strength_att, rb.out_attenuate.membership(x)),
                      std::min(strength_keep, rb.out_keep.membership(x)),
                      std::min(strength_boost, rb.out_boost.membership(x))});
        num += mu * x;
        den += mu;
    }
    if (den <= 0) {
        throw EmptyRuleActivation("no rule fired; rule base coverage violated");
    }
    return num / den;
}

double fuzzy_adjust(const Anomaly& a, const ContextFeatures& f,
                    const FuzzyRuleBase& rb) {
    const double m = fuzzy_multiplier(f.illumination, a.original_conf, rb);
    return std::clamp(a.original_conf * m, 0.0, 1.0);
}

double adaptive_threshold(const std::vector<Anomaly>& adjusted,
                          const ContextFeatures& f, const ThresholdParams& tp) {
    tp.validate();
    double mean = tp.base;
    if (!adjusted.empty()) {
        double sum = 0;
        for (const auto& a : adjusted) sum += a.adjusted_conf;
        mean = sum / adjusted.size();
    }
    const double t =
        tp.base + tp.alpha * (mean - tp.base) + tp.beta * (0.5 - f.illumination);
    return std::clamp(t, tp.floor, tp.ceiling);
}

std::vector<PersistentAnomaly> temporal_integrate(const std::vector<Anomaly>& anoms,
                                                  TrackState& state,
                                                  const TemporalParams& params,
                                                  long long frame_id) {
    params.validate();
    if (frame_id <= state.last_frame_id) {
        throw NonMonotoneFrameId("frame " + std::to_string(frame_id) +
                                 " not after " + std::to_string(state.last_frame_id));
    }
    state.last_frame_id = frame_id;

    // Highest-confidence anomalies claim tracks first.
    std::vector<size_t> order(anoms.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t l, size_t r) {
        return anoms[l].adjusted_conf > anoms[r].adjusted_conf;
    });

    std::vector<bool> track_taken(state.tracks.size(), false);
    std::vector<int> assigned_track(anoms.size(), -1);
    for (size_t oi : order) {
        const auto& a = anoms[oi];
        double best_iou = params.match_iou;
        int best = -1;
        for (size_t ti = 0; ti < state.tracks.size(); ++ti) {
            if (track_taken[ti]) continue;
            const auto& track = state.tracks[ti];
            if (track.class_id != a.detection.label.id) continue;
            const double overlap = iou(track.last_box, a.detection.bbox);
            if (overlap >= best_iou) {
                best_iou = overlap;
                best = static_cast<int>(ti);
            }
        }
        if (best >= 0) {
            track_taken[best] = true;
            assigned_track[oi] = best;
        }
    }

    std::vector<PersistentAnomaly> persistent;
    for (size_t oi : order) {
        const auto& a = anoms[oi];
        Track* track;
        if (assigned_track[oi] >= 0) {
            track = &state.tracks[assigned_track[oi]];
        } else {
            state.tracks.push_back(Track{state.next_track_id++,
                                         a.detection.label.id, a.detection.bbox,
                                         frame_id, {}});
            track = &state.tracks.back();
        }
        track->last_box = a.detection.bbox;
        track->last_matched_frame = frame_id;
        track->matched_frames.push_back(frame_id);
        while (!track->matched_frames.empty() &&
               track->matched_frames.front() <= frame_id - params.window) {
            track->matched_frames.pop_front();
        }
        const int count = static_cast<int>(track->matched_frames.size());
        if (count >= params.required) {
            persistent.push_back({a, track->id, count});
        }
    }

    std::erase_if(state.tracks, [&](const Track& t) {
        return frame_id - t.last_matched_frame >= params.window;
    });
    return persistent;
}

std::vector<AlertRecord> raise_alerts(const std::vector<PersistentAnomaly>& persistent,
                                      double threshold, long long frame_id) {
    std::vector<PersistentAnomaly> ordered = persistent;
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const PersistentAnomaly& l, const PersistentAnomaly& r) {
                         if (l.anomaly.adjusted_conf != r.anomaly.adjusted_conf) {
                             return l.anomaly.adjusted_conf > r.anomaly.adjusted_conf;
                         }
                         return l.anomaly.detection.label.id <
                                r.anomaly.detection.label.id;
                     });
    std::vector<AlertRecord> alerts;
    for (const auto& p : ordered) {
        if (p.anomaly.adjusted_conf > threshold) {
            AlertRecord rec;
            rec.frame_id = frame_id;
            rec.zone_id = p.anomaly.zone_id;
            rec.class_name = p.anomaly.detection.label.name;
            rec.original_conf = p.anomaly.original_conf;
            rec.adjusted_conf = p.anomaly.adjusted_conf;
            rec.threshold = threshold;
            rec.persistence_count = p.persistence_count;
            alerts.push_back(std::move(rec));
        }
    }
    return alerts;
}

FuzzyRuleBase adapt_parameters(double illumination_ema, const FuzzyRuleBase& rb,
                               double rate) {
    if (rate < 0 || rate > 1) throw InvariantViolation("rate outside [0,1]");
    FuzzyRuleBase updated = rb;
    const double delta = rate * (illumination_ema - rb.illum_normal.peak);
    updated.illum_normal.left += delta;
    updated.illum_normal.peak += delta;
    updated.illum_normal.right += delta;
    updated.validate();  // rejects the update atomically on coverage failure
    return updated;
}

}  // namespace attire
