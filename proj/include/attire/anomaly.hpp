#pragma once

// Anomaly identification against zone policy, Mamdani fuzzy confidence
// adjustment, adaptive thresholding, m-of-n temporal persistence, alert
// emission, and environmental rule-base adaptation.

#include <deque>
#include <map>
#include <string>
#include <vector>

#include "attire/core.hpp"

namespace attire {

struct FrameContext {
    std::string zone_id;
    double illumination{0.5};                 // [0,1]
    std::map<std::string, double> conditions; // named factors in [0,1]
};

struct ContextFeatures {
    double illumination{0.5};
    double condition_mean{0.5};
    double zone_familiarity{1.0};
};

struct Anomaly {
    Detection detection;
    std::string zone_id;
    double original_conf{0};
    double adjusted_conf{0};
};

struct TriangularSet {
    double left{0};
    double peak{0};
    double right{0};

    double membership(double x) const;
};

enum class IlluminationSet { Dark, Normal, Bright };
enum class ConfidenceSet { Low, Medium, High };
enum class MultiplierSet { Attenuate, Keep, Boost };

struct FuzzyRule {
    IlluminationSet illumination;
    ConfidenceSet confidence;
    MultiplierSet output;
};

struct FuzzyRuleBase {
    TriangularSet illum_dark{0.0, 0.0, 0.4};
    TriangularSet illum_normal{0.2, 0.5, 0.8};
    TriangularSet illum_bright{0.6, 1.0, 1.0};
    TriangularSet conf_low{0.0, 0.0, 0.4};
    TriangularSet conf_medium{0.2, 0.5, 0.8};
    TriangularSet conf_high{0.6, 1.0, 1.0};
    // Output universe of confidence multipliers, discretized for centroid
    // defuzzification.
    TriangularSet out_attenuate{0.5, 0.6, 0.7};
    TriangularSet out_keep{0.9, 1.0, 1.1};
    TriangularSet out_boost{1.1, 1.2, 1.3};
    double universe_lo{0.5};
    double universe_hi{1.5};
    int universe_points{1001};
    std::vector<FuzzyRule> rules;

    void validate() const;  // throws InvariantViolation
    const TriangularSet& illum_set(IlluminationSet s) const;
    const TriangularSet& conf_set(ConfidenceSet s) const;
    const TriangularSet& out_set(MultiplierSet s) const;
};

FuzzyRuleBase default_rule_base();

struct ThresholdParams {
    double base{0.5};
    double alpha{0.5};
    double beta{0.2};
    double floor{0.05};
    double ceiling{0.95};

    void validate() const;
};

struct TemporalParams {
    int window{5};    // n
    int required{3};  // m <= n
    double match_iou{0.3};

    void validate() const;
};

struct Track {
    int id{0};
    int class_id{0};
    BoundingBox last_box;
    long long last_matched_frame{0};
    std::deque<long long> matched_frames;  // within the window
};

struct TrackState {
    std::vector<Track> tracks;
    long long last_frame_id{-1};
    int next_track_id{0};
};

struct PersistentAnomaly {
    Anomaly anomaly;
    int track_id{0};
    int persistence_count{0};
};

struct AlertRecord {
    long long frame_id{0};
    std::string zone_id;
    std::string class_name;
    double original_conf{0};
    double adjusted_conf{0};
    double threshold{0};
    int persistence_count{0};
};

std::vector<Anomaly> identify_anomalies(const std::vector<Detection>& dets,
                                        const ZonePolicy& policy);

ContextFeatures context_features(const FrameContext& ctx);

// Mamdani inference: min activation, max aggregation, centroid
// defuzzification; the resulting multiplier scales the original confidence.
double fuzzy_multiplier(double illumination, double original_conf,
                        const FuzzyRuleBase& rb);
double fuzzy_adjust(const Anomaly& a, const ContextFeatures& f,
                    const FuzzyRuleBase& rb);

double adaptive_threshold(const std::vector<Anomaly>& adjusted,
                          const ContextFeatures& f, const ThresholdParams& tp);

std::vector<PersistentAnomaly> temporal_integrate(const std::vector<Anomaly>& anoms,
                                                  TrackState& state,
                                                  const TemporalParams& params,
                                                  long long frame_id);

std::vector<AlertRecord> raise_alerts(const std::vector<PersistentAnomaly>& persistent,
                                      double threshold, long long frame_id);

// Moves the "normal" illumination set toward the illumination EMA, widths
// preserved; rejects the update atomically if coverage would break.
FuzzyRuleBase adapt_parameters(double illumination_ema, const FuzzyRuleBase& rb,
                               double rate);

}  // namespace attire
