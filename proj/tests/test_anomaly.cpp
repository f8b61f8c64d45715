#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "attire/anomaly.hpp"

using namespace attire;

namespace {

Detection make_det(const BoundingBox& box, int class_id, double score) {
    Detection d;
    d.bbox = box;
    d.label = attire_vocabulary()[class_id];
    d.score = score;
    return d;
}

Anomaly make_anomaly(const BoundingBox& box, int class_id, double conf) {
    Anomaly a;
    a.detection = make_det(box, class_id, conf);
    a.zone_id = "z";
    a.original_conf = conf;
    a.adjusted_conf = conf;
    return a;
}

// Brute-force persistence oracle over the full stored history: anomalies sit
// at fixed disjoint spots, so a spot is a track; count, per spot present in
// the last frame, how many of the last n frames contained it.
struct OracleFrame {
    long long frame_id;
    std::vector<Anomaly> anomalies;
};

std::map<double, int> persistent_oracle(const std::vector<OracleFrame>& history,
                                        const TemporalParams& params) {
    std::map<double, int> out;  // keyed by spot cx
    if (history.empty()) return out;
    const auto& last = history.back();
    for (const auto& a : last.anomalies) {
        int count = 0;
        for (const auto& f : history) {
            if (f.frame_id <= last.frame_id - params.window) continue;
            for (const auto& b : f.anomalies) {
                if (b.detection.bbox.cx == a.detection.bbox.cx) ++count;
            }
        }
        if (count >= params.required) out[a.detection.bbox.cx] = count;
    }
    return out;
}

}  // namespace

TEST_CASE("identify_anomalies") {
    ZonePolicy policy;
    policy.zone_id = "lab";
    policy.authorized = {0};  // Jacket

    SUBCASE("authorized attire is not an anomaly") {
        const auto anoms =
            identify_anomalies({make_det({5, 5, 2, 2}, 0, 0.9)}, policy);
        CHECK(anoms.empty());
    }
    SUBCASE("unauthorized attire is an anomaly") {
        const auto anoms =
            identify_anomalies({make_det({5, 5, 2, 2}, 1, 0.8)}, policy);
        REQUIRE(anoms.size() == 1);
        CHECK(anoms[0].original_conf == 0.8);
        CHECK(anoms[0].adjusted_conf == 0.8);
        CHECK(anoms[0].zone_id == "lab");
    }
    SUBCASE("empty input") {
        CHECK(identify_anomalies({}, policy).empty());
    }
    SUBCASE("equals set-difference oracle on random instances") {
        std::mt19937_64 rng(31);
        std::uniform_int_distribution<int> cls(0, 4);
        std::uniform_real_distribution<double> conf(0, 1);
        for (int iter = 0; iter < 200; ++iter) {
            std::vector<Detection> dets;
            const int n = iter % 8;
            for (int i = 0; i < n; ++i) {
                dets.push_back(make_det({double(i), double(i), 1, 1}, cls(rng), conf(rng)));
            }
            const auto anoms = identify_anomalies(dets, policy);
            size_t expected = 0;
            for (const auto& d : dets) {
                if (!policy.authorized.count(d.label.id)) ++expected;
            }
            CHECK(anoms.size() == expected);
        }
    }
}

TEST_CASE("context_features") {
    SUBCASE("neutral defaults") {
        const auto f = context_features({"z", 0.5, {}});
        CHECK(f.illumination == 0.5);
        CHECK(f.condition_mean == 0.5);
        CHECK(f.zone_familiarity == 1.0);
    }
    SUBCASE("condition mean") {
        const auto f = context_features({"z", 0.7, {{"fog", 0.2}, {"glare", 0.4}}});
        CHECK(f.condition_mean == doctest::Approx(0.3));
    }
    SUBCASE("range closure") {
        std::mt19937_64 rng(17);
        std::uniform_real_distribution<double> u(0, 1);
        for (int i = 0; i < 200; ++i) {
            const auto f = context_features({"z", u(rng), {{"a", u(rng)}, {"b", u(rng)}}});
            CHECK(f.illumination >= 0);
            CHECK(f.illumination <= 1);
            CHECK(f.condition_mean >= 0);
            CHECK(f.condition_mean <= 1);
        }
    }
}

TEST_CASE("fuzzy_adjust") {
    const auto rb = default_rule_base();
    rb.validate();

    SUBCASE("neutral fixture is an exact identity") {
        const auto a = make_anomaly({5, 5, 2, 2}, 1, 0.5);
        ContextFeatures f;
        f.illumination = 0.5;  // normal peak; confidence at medium peak
        CHECK(fuzzy_adjust(a, f, rb) == doctest::Approx(0.5).epsilon(1e-9));
    }
    SUBCASE("full darkness attenuates by 0.6") {
        const auto a = make_anomaly({5, 5, 2, 2}, 1, 0.8);
        ContextFeatures f;
        f.illumination = 0.0;
        CHECK(fuzzy_adjust(a, f, rb) == doctest::Approx(0.6 * 0.8).epsilon(1e-9));
    }
    SUBCASE("adjusted confidence stays in [0,1]") {
        std::mt19937_64 rng(23);
        std::uniform_real_distribution<double> u(0, 1);
        for (int i = 0; i < 500; ++i) {
            const auto a = make_anomaly({5, 5, 2, 2}, 1, u(rng));
            ContextFeatures f;
            f.illumination = u(rng);
            const double adj = fuzzy_adjust(a, f, rb);
            CHECK(adj >= 0);
            CHECK(adj <= 1);
        }
    }
    SUBCASE("monotone non-decreasing in illumination") {
        for (double conf : {0.2, 0.5, 0.8, 0.95}) {
            const auto a = make_anomaly({5, 5, 2, 2}, 1, conf);
            double prev = -1;
            for (int i = 0; i <= 100; ++i) {
                ContextFeatures f;
                f.illumination = i / 100.0;
                const double adj = fuzzy_adjust(a, f, rb);
                CHECK(adj >= prev - 1e-12);
                prev = adj;
            }
        }
    }
}

TEST_CASE("adaptive_threshold") {
    const ThresholdParams tp{0.5, 0.5, 0.2, 0.05, 0.95};
    ContextFeatures f;
    f.illumination = 0.5;

    SUBCASE("fixed point") {
        std::vector<Anomaly> anoms = {make_anomaly({1, 1, 1, 1}, 1, 0.5)};
        CHECK(adaptive_threshold(anoms, f, tp) == doctest::Approx(0.5));
    }
    SUBCASE("hand arithmetic") {
        const ThresholdParams tp2{0.5, 0.5, 0.0, 0.05, 0.95};
        std::vector<Anomaly> anoms = {make_anomaly({1, 1, 1, 1}, 1, 0.9)};
        CHECK(adaptive_threshold(anoms, f, tp2) == doctest::Approx(0.7));
    }
    SUBCASE("empty anomaly list yields the base") {
        CHECK(adaptive_threshold({}, f, tp) == doctest::Approx(0.5));
    }
    SUBCASE("clamp closure and monotonicity in the mean") {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(0, 1);
        double prev = -1;
        for (int i = 0; i <= 20; ++i) {
            std::vector<Anomaly> anoms = {make_anomaly({1, 1, 1, 1}, 1, i / 20.0)};
            ContextFeatures rf;
            rf.illumination = u(rng);
            const double t = adaptive_threshold(anoms, rf, tp);
            CHECK(t >= tp.floor);
            CHECK(t <= tp.ceiling);
            ContextFeatures fixed;
            fixed.illumination = 0.5;
            const double tm = adaptive_threshold(anoms, fixed, tp);
            CHECK(tm >= prev - 1e-12);
            prev = tm;
        }
    }
}

TEST_CASE("temporal_integrate") {
    const TemporalParams params{5, 3, 0.3};

    SUBCASE("1-of-5 appearance is not persistent") {
        TrackState state;
        const auto a = make_anomaly({10, 10, 4, 4}, 1, 0.8);
        auto p = temporal_integrate({a}, state, params, 1);
        CHECK(p.empty());
        for (long long f = 2; f <= 5; ++f) {
            p = temporal_integrate({}, state, params, f);
            CHECK(p.empty());
        }
    }
    SUBCASE("3 consecutive frames become persistent at frame 3") {
        TrackState state;
        const auto a = make_anomaly({10, 10, 4, 4}, 1, 0.8);
        CHECK(temporal_integrate({a}, state, params, 1).empty());
        CHECK(temporal_integrate({a}, state, params, 2).empty());
        const auto p = temporal_integrate({a}, state, params, 3);
        REQUIRE(p.size() == 1);
        CHECK(p[0].persistence_count == 3);
    }
    SUBCASE("disjoint anomalies never merge tracks") {
        TrackState state;
        const auto a = make_anomaly({10, 10, 4, 4}, 1, 0.8);
        const auto b = make_anomaly({100, 100, 4, 4}, 1, 0.7);
        temporal_integrate({a, b}, state, params, 1);
        CHECK(state.tracks.size() == 2);
        temporal_integrate({a, b}, state, params, 2);
        CHECK(state.tracks.size() == 2);
    }
    SUBCASE("non-monotone frame id throws") {
        TrackState state;
        temporal_integrate({}, state, params, 5);
        CHECK_THROWS_AS(temporal_integrate({}, state, params, 5), NonMonotoneFrameId);
    }
    SUBCASE("stale tracks are evicted") {
        TrackState state;
        const auto a = make_anomaly({10, 10, 4, 4}, 1, 0.8);
        temporal_integrate({a}, state, params, 1);
        CHECK(state.tracks.size() == 1);
        for (long long f = 2; f <= 6; ++f) temporal_integrate({}, state, params, f);
        CHECK(state.tracks.empty());
    }
    SUBCASE("incremental state equals full-history recomputation") {
        std::mt19937_64 rng(77);
        std::uniform_real_distribution<double> u(0, 1);
        std::uniform_int_distribution<int> n_anoms(0, 3);
        std::uniform_int_distribution<int> n_frames(1, 10);
        std::uniform_int_distribution<int> slot(0, 2);
        for (int iter = 0; iter < 100; ++iter) {
            // anomalies live at three fixed spots so tracks re-associate
            const BoundingBox spots[3] = {{10, 10, 4, 4}, {50, 50, 4, 4}, {90, 90, 4, 4}};
            std::vector<OracleFrame> history;
            const int frames = n_frames(rng);
            for (int f = 1; f <= frames; ++f) {
                OracleFrame of;
                of.frame_id = f;
                const int n = n_anoms(rng);
                std::vector<bool> used(3, false);
                for (int i = 0; i < n; ++i) {
                    const int s = slot(rng);
                    if (used[s]) continue;
                    used[s] = true;
                    of.anomalies.push_back(make_anomaly(spots[s], 1, 0.5 + u(rng) / 2));
                }
                history.push_back(std::move(of));
            }
            // incremental run
            TrackState state;
            std::vector<PersistentAnomaly> inc;
            for (const auto& f : history) {
                inc = temporal_integrate(f.anomalies, state, params, f.frame_id);
            }
            // full-history brute-force oracle
            const auto oracle = persistent_oracle(history, params);
            REQUIRE(inc.size() == oracle.size());
            for (const auto& p : inc) {
                const auto it = oracle.find(p.anomaly.detection.bbox.cx);
                REQUIRE(it != oracle.end());
                CHECK(p.persistence_count == it->second);
            }
        }
    }
}

TEST_CASE("raise_alerts") {
    const auto a = make_anomaly({5, 5, 2, 2}, 1, 0.8);
    PersistentAnomaly p{a, 0, 3};
    SUBCASE("above threshold alerts") {
        const auto alerts = raise_alerts({p}, 0.6, 9);
        REQUIRE(alerts.size() == 1);
        CHECK(alerts[0].frame_id == 9);
        CHECK(alerts[0].class_name == "T-Shirt");
        CHECK(alerts[0].adjusted_conf > alerts[0].threshold);
        CHECK(alerts[0].persistence_count == 3);
    }
    SUBCASE("exact threshold does not alert") {
        CHECK(raise_alerts({p}, 0.8, 9).empty());
    }
    SUBCASE("empty input") {
        CHECK(raise_alerts({}, 0.5, 1).empty());
    }
    SUBCASE("output ordered by confidence then class") {
        auto b = make_anomaly({6, 6, 2, 2}, 3, 0.9);
        const auto alerts = raise_alerts({{a, 0, 3}, {b, 1, 4}}, 0.5, 2);
        REQUIRE(alerts.size() == 2);
        CHECK(alerts[0].adjusted_conf == 0.9);
        CHECK(alerts[1].adjusted_conf == 0.8);
    }
}

TEST_CASE("adapt_parameters") {
    const auto rb = default_rule_base();
    SUBCASE("rate 0 is a no-op") {
        const auto out = adapt_parameters(0.9, rb, 0.0);
        CHECK(out.illum_normal.peak == rb.illum_normal.peak);
    }
    SUBCASE("rate 1 jumps to the ema, widths preserved") {
        const auto out = adapt_parameters(0.3, rb, 1.0);
        CHECK(out.illum_normal.peak == doctest::Approx(0.3));
        CHECK(out.illum_normal.right - out.illum_normal.left ==
              doctest::Approx(rb.illum_normal.right - rb.illum_normal.left));
    }
    SUBCASE("repeated adaptation converges geometrically") {
        auto cur = rb;
        for (int i = 0; i < 100; ++i) cur = adapt_parameters(0.3, cur, 0.2);
        CHECK(std::abs(cur.illum_normal.peak - 0.3) < 1e-6);
    }
    SUBCASE("coverage-breaking update is rejected") {
        // pushing normal far right opens a gap between dark and normal
        CHECK_THROWS_AS(adapt_parameters(5.0, rb, 1.0), InvariantViolation);
    }
    SUBCASE("invariants preserved after any accepted update") {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(0, 1);
        for (int i = 0; i < 100; ++i) {
            try {
                const auto out = adapt_parameters(u(rng), rb, u(rng));
                out.validate();
            } catch (const InvariantViolation&) {
            }
        }
    }
}
