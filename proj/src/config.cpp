#include "attire/config.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace attire {

using nlohmann::json;

namespace {

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) {
            if (key == a) {
                ok = true;
                break;
            }
        }
        if (!ok) throw ParseError("unknown key '" + key + "' in " + where);
    }
}

TriangularSet parse_triple(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 3) {
        throw ParseError(where + ": expected [left, peak, right]");
    }
    TriangularSet t{j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
    if (!(t.left <= t.peak && t.peak <= t.right)) {
        throw InvariantViolation(where + ": triple must be ordered left <= peak <= right");
    }
    return t;
}

json dump_triple(const TriangularSet& t) { return json::array({t.left, t.peak, t.right}); }

IlluminationSet parse_illum(const std::string& s, const std::string& where) {
    if (s == "dark") return IlluminationSet::Dark;
    if (s == "normal") return IlluminationSet::Normal;
    if (s == "bright") return IlluminationSet::Bright;
    throw ParseError(where + ": unknown illumination set '" + s + "'");
}

ConfidenceSet parse_conf(const std::string& s, const std::string& where) {
    if (s == "low") return ConfidenceSet::Low;
    if (s == "medium") return ConfidenceSet::Medium;
    if (s == "high") return ConfidenceSet::High;
    throw ParseError(where + ": unknown confidence set '" + s + "'");
}

MultiplierSet parse_mult(const std::string& s, const std::string& where) {
    if (s == "attenuate") return MultiplierSet::Attenuate;
    if (s == "keep") return MultiplierSet::Keep;
    if (s == "boost") return MultiplierSet::Boost;
    throw ParseError(where + ": unknown multiplier set '" + s + "'");
}

const char* illum_name(IlluminationSet s) {
    switch (s) {
        case IlluminationSet::Dark: return "dark";
        case IlluminationSet::Normal: return "normal";
        default: return "bright";
    }
}

const char* conf_name(ConfidenceSet s) {
    switch (s) {
        case ConfidenceSet::Low: return "low";
        case ConfidenceSet::Medium: return "medium";
        default: return "high";
    }
}

const char* mult_name(MultiplierSet s) {
    switch (s) {
        case MultiplierSet::Attenuate: return "attenuate";
        case MultiplierSet::Keep: return "keep";
        default: return "boost";
    }
}

ZonePolicy parse_zone(const std::string& zone_id, const json& classes,
                      const std::string& where) {
    ZonePolicy policy;
    policy.zone_id = zone_id;
    for (const auto& name : classes) {
        const auto label = find_label(attire_vocabulary(), name.get<std::string>());
        if (!label) {
            throw InvariantViolation(where + ": '" + name.get<std::string>() +
                                     "' is not an attire class");
        }
        policy.authorized.insert(label->id);
    }
    return policy;
}

}  // namespace

void EngineConfig::validate() const {
    if (decode.conf_floor < 0 || decode.conf_floor > 1 || decode.nms_iou < 0 ||
        decode.nms_iou > 1) {
        throw InvariantViolation("decode parameters outside [0,1]");
    }
    fuzzy.validate();
    threshold.validate();
    temporal.validate();
    if (adaptation_rate < 0 || adaptation_rate > 1) {
        throw InvariantViolation("adaptation_rate outside [0,1]");
    }
}

EngineConfig parse_config_json(const std::string& text, const std::string& origin) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(origin + ": " + e.what());
    }
    check_keys(root, {"decode", "zones", "fuzzy", "threshold", "temporal",
                      "adaptation_rate", "paths", "stream_epoch"},
               origin);

    EngineConfig cfg;
    cfg.fuzzy = default_rule_base();
    if (root.contains("decode")) {
        const auto& d = root["decode"];
        check_keys(d, {"conf_floor", "nms_iou"}, origin + ".decode");
        if (d.contains("conf_floor")) cfg.decode.conf_floor = d["conf_floor"].get<double>();
        if (d.contains("nms_iou")) cfg.decode.nms_iou = d["nms_iou"].get<double>();
    }
    if (root.contains("zones")) {
        for (const auto& [zone, classes] : root["zones"].items()) {
            cfg.zones[zone] = parse_zone(zone, classes, origin + ".zones." + zone);
        }
    }
    if (root.contains("fuzzy")) {
        const auto& f = root["fuzzy"];
        check_keys(f,
                   {"illum_dark", "illum_normal", "illum_bright", "conf_low",
                    "conf_medium", "conf_high", "out_attenuate", "out_keep",
                    "out_boost", "universe", "rules"},
                   origin + ".fuzzy");
        auto triple = [&](const char* key, TriangularSet& dst) {
            if (f.contains(key)) dst = parse_triple(f[key], origin + ".fuzzy." + key);
        };
        triple("illum_dark", cfg.fuzzy.illum_dark);
        triple("illum_normal", cfg.fuzzy.illum_normal);
        triple("illum_bright", cfg.fuzzy.illum_bright);
        triple("conf_low", cfg.fuzzy.conf_low);
        triple("conf_medium", cfg.fuzzy.conf_medium);
        triple("conf_high", cfg.fuzzy.conf_high);
        triple("out_attenuate", cfg.fuzzy.out_attenuate);
        triple("out_keep", cfg.fuzzy.out_keep);
        triple("out_boost", cfg.fuzzy.out_boost);
        if (f.contains("universe")) {
            const auto& u = f["universe"];
            check_keys(u, {"lo", "hi", "points"}, origin + ".fuzzy.universe");
            if (u.contains("lo")) cfg.fuzzy.universe_lo = u["lo"].get<double>();
            if (u.contains("hi")) cfg.fuzzy.universe_hi = u["hi"].get<double>();
            if (u.contains("points")) cfg.fuzzy.universe_points = u["points"].get<int>();
        }
        if (f.contains("rules")) {
            cfg.fuzzy.rules.clear();
            for (const auto& r : f["rules"]) {
                if (!r.is_array() || r.size() != 3) {
                    throw ParseError(origin + ".fuzzy.rules: expected [illum, conf, out]");
                }
                const std::string where = origin + ".fuzzy.rules";
                cfg.fuzzy.rules.push_back(
                    {parse_illum(r[0].get<std::string>(), where),
                     parse_conf(r[1].get<std::string>(), where),
                     parse_mult(r[2].get<std::string>(), where)});
            }
        }
    }
    if (root.contains("threshold")) {
        const auto& t = root["threshold"];
        check_keys(t, {"base", "alpha", "beta", "floor", "ceiling"}, origin + ".threshold");
        if (t.contains("base")) cfg.threshold.base = t["base"].get<double>();
        if (t.contains("alpha")) cfg.threshold.alpha = t["alpha"].get<double>();
        if (t.contains("beta")) cfg.threshold.beta = t["beta"].get<double>();
        if (t.contains("floor")) cfg.threshold.floor = t["floor"].get<double>();
        if (t.contains("ceiling")) cfg.threshold.ceiling = t["ceiling"].get<double>();
    }
    if (root.contains("temporal")) {
        const auto& t = root["temporal"];
        check_keys(t, {"window", "required", "match_iou"}, origin + ".temporal");
        if (t.contains("window")) cfg.temporal.window = t["window"].get<int>();
        if (t.contains("required")) cfg.temporal.required = t["required"].get<int>();
        if (t.contains("match_iou")) cfg.temporal.match_iou = t["match_iou"].get<double>();
    }
    if (root.contains("adaptation_rate")) {
        cfg.adaptation_rate = root["adaptation_rate"].get<double>();
    }
    if (root.contains("paths")) {
        const auto& p = root["paths"];
        check_keys(p,
                   {"tensors", "attire_tensors", "frames", "person_annotations",
                    "attire_annotations", "policy", "out"},
                   origin + ".paths");
        auto str = [&](const char* key, std::string& dst) {
            if (p.contains(key)) dst = p[key].get<std::string>();
        };
        str("tensors", cfg.paths.tensors);
        str("attire_tensors", cfg.paths.attire_tensors);
        str("frames", cfg.paths.frames);
        str("person_annotations", cfg.paths.person_annotations);
        str("attire_annotations", cfg.paths.attire_annotations);
        str("policy", cfg.paths.policy);
        str("out", cfg.paths.out);
    }
    if (root.contains("stream_epoch")) {
        cfg.stream_epoch = root["stream_epoch"].get<std::string>();
    }
    cfg.validate();
    return cfg;
}

EngineConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_json(buf.str(), path);
}

std::string emit_config(const EngineConfig& cfg) {
    json zones = json::object();
    for (const auto& [zone, policy] : cfg.zones) {
        json classes = json::array();
        for (const auto& label : attire_vocabulary()) {
            if (policy.authorized.count(label.id)) classes.push_back(label.name);
        }
        zones[zone] = classes;
    }
    json rules = json::array();
    for (const auto& r : cfg.fuzzy.rules) {
        rules.push_back(json::array(
            {illum_name(r.illumination), conf_name(r.confidence), mult_name(r.output)}));
    }
    const json root = {
        {"decode", {{"conf_floor", cfg.decode.conf_floor}, {"nms_iou", cfg.decode.nms_iou}}},
        {"zones", zones},
        {"fuzzy",
         {{"illum_dark", dump_triple(cfg.fuzzy.illum_dark)},
          {"illum_normal", dump_triple(cfg.fuzzy.illum_normal)},
          {"illum_bright", dump_triple(cfg.fuzzy.illum_bright)},
          {"conf_low", dump_triple(cfg.fuzzy.conf_low)},
          {"conf_medium", dump_triple(cfg.fuzzy.conf_medium)},
          {"conf_high", dump_triple(cfg.fuzzy.conf_high)},
          {"out_attenuate", dump_triple(cfg.fuzzy.out_attenuate)},
          {"out_keep", dump_triple(cfg.fuzzy.out_keep)},
          {"out_boost", dump_triple(cfg.fuzzy.out_boost)},
          {"universe",
           {{"lo", cfg.fuzzy.universe_lo},
            {"hi", cfg.fuzzy.universe_hi},
            {"points", cfg.fuzzy.universe_points}}},
          {"rules", rules}}},
        {"threshold",
         {{"base", cfg.threshold.base},
          {"alpha", cfg.threshold.alpha},
          {"beta", cfg.threshold.beta},
          {"floor", cfg.threshold.floor},
          {"ceiling", cfg.threshold.ceiling}}},
        {"temporal",
         {{"window", cfg.temporal.window},
          {"required", cfg.temporal.required},
          {"match_iou", cfg.temporal.match_iou}}},
        {"adaptation_rate", cfg.adaptation_rate},
        {"paths",
         {{"tensors", cfg.paths.tensors},
          {"attire_tensors", cfg.paths.attire_tensors},
          {"frames", cfg.paths.frames},
          {"person_annotations", cfg.paths.person_annotations},
          {"attire_annotations", cfg.paths.attire_annotations},
          {"policy", cfg.paths.policy},
          {"out", cfg.paths.out}}},
        {"stream_epoch", cfg.stream_epoch}};
    return root.dump(2) + "\n";
}

std::map<std::string, ZonePolicy> parse_policy_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open policy file: " + path);
    std::map<std::string, ZonePolicy> zones;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto colon = line.find(':');
        if (colon == std::string::npos) {
            throw ParseError(path + ":" + std::to_string(lineno) +
                             ": expected 'zone_id: class,class,...'");
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string zone = trim(line.substr(0, colon));
        if (zone.empty()) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": empty zone id");
        }
        ZonePolicy policy;
        policy.zone_id = zone;
        std::istringstream rest(line.substr(colon + 1));
        std::string item;
        while (std::getline(rest, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;
            const auto label = find_label(attire_vocabulary(), item);
            if (!label) {
                throw ParseError(path + ":" + std::to_string(lineno) + ": '" + item +
                                 "' is not an attire class");
            }
            policy.authorized.insert(label->id);
        }
        zones[zone] = policy;
    }
    return zones;
}

}  // namespace attire
