#include "ergodec/config.hpp"

#include <algorithm>
#include <utility>

#include "json.hpp"

#include "ergodec/serialize.hpp"

namespace ergodec {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ConfigError("config." + where + ": " + what);
}

const json& need(const json& j, const char* key, const std::string& where) {
    const auto it = j.find(key);
    if (it == j.end()) fail(where, std::string("missing required field '") + key + "'");
    return *it;
}

std::string need_string(const json& j, const char* key, const std::string& where) {
    const json& v = need(j, key, where);
    if (!v.is_string()) fail(where + "." + key, "expected a string");
    return v.get<std::string>();
}

double as_double(const json& v, const std::string& where) {
    if (!v.is_number()) fail(where, "expected a number");
    return v.get<double>();
}

std::uint64_t as_u64(const json& v, const std::string& where) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
        fail(where, "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

std::vector<double> as_double_vec(const json& v, const std::string& where) {
    if (!v.is_array()) fail(where, "expected an array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(as_double(v[i], where + "[" + std::to_string(i) + "]"));
    }
    return out;
}

std::vector<std::uint8_t> as_word(const json& v, const std::string& where) {
    if (!v.is_array()) fail(where, "expected an array of symbols");
    std::vector<std::uint8_t> out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const std::uint64_t s = as_u64(v[i], where + "[" + std::to_string(i) + "]");
        if (s > 255) fail(where + "[" + std::to_string(i) + "]", "symbol out of range");
        out.push_back(static_cast<std::uint8_t>(s));
    }
    return out;
}

std::vector<std::vector<double>> as_matrix(const json& v, const std::string& where) {
    if (!v.is_array()) fail(where, "expected an array of rows");
    std::vector<std::vector<double>> rows;
    rows.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        rows.push_back(as_double_vec(v[i], where + "[" + std::to_string(i) + "]"));
    }
    return rows;
}

SystemSpec parse_system(const json& j, const std::string& where) {
    if (!j.is_object()) fail(where, "expected an object");
    const std::string kind = need_string(j, "kind", where);
    if (kind == "circle_rotation") {
        const std::string alpha = need_string(j, "alpha", where);
        if (alpha == "golden") return SystemSpec::golden_rotation();
        const auto slash = alpha.find('/');
        if (slash != std::string::npos) {
            try {
                const std::uint64_t p = std::stoull(alpha.substr(0, slash));
                const std::uint64_t q = std::stoull(alpha.substr(slash + 1));
                return SystemSpec::circle_rotation_fraction(p, q);
            } catch (const std::exception&) {
                fail(where + ".alpha", "bad fraction '" + alpha + "'");
            }
        }
        return SystemSpec::circle_rotation(parse_angle(alpha));
    }
    if (kind == "full_shift") {
        const json& a = need(j, "alphabet", where);
        return SystemSpec::full_shift(static_cast<int>(as_u64(a, where + ".alphabet")));
    }
    if (kind == "markov_shift") {
        return SystemSpec::markov_shift(as_matrix(need(j, "rows", where), where + ".rows"));
    }
    if (kind == "squaring") return SystemSpec::squaring();
    if (kind == "identity") return SystemSpec::identity();
    if (kind == "doubling_via_shift") return SystemSpec::doubling_via_shift();
    fail(where + ".kind", "unknown system kind '" + kind + "'");
}

TestFunctionFamily parse_family(const json* j, const SystemSpec& sys, const std::string& where) {
    if (j == nullptr) return TestFunctionFamily::default_for(sys);
    if (!j->is_object()) fail(where, "expected an object");
    const std::string kind = need_string(*j, "kind", where);
    if (kind == "default") return TestFunctionFamily::default_for(sys);
    if (kind == "circle_trig" || kind == "interval_trig") {
        int max_freq = 8;
        if (const auto it = j->find("max_freq"); it != j->end()) {
            max_freq = static_cast<int>(as_u64(*it, where + ".max_freq"));
        }
        return kind == "circle_trig" ? TestFunctionFamily::circle_trig(max_freq)
                                     : TestFunctionFamily::interval_trig(max_freq);
    }
    if (kind == "cylinders") {
        if (!sys.symbolic()) fail(where, "cylinder family needs a symbolic system");
        int max_len = 4;
        if (const auto it = j->find("max_len"); it != j->end()) {
            max_len = static_cast<int>(as_u64(*it, where + ".max_len"));
        }
        return TestFunctionFamily::cylinders(sys.alphabet_size(), max_len);
    }
    fail(where + ".kind", "unknown family kind '" + kind + "'");
}

DetectorParams parse_detector(const json* j, const std::string& where) {
    DetectorParams det;
    if (j == nullptr) return det;
    if (!j->is_object()) fail(where, "expected an object");
    for (const auto& [key, value] : j->items()) {
        const std::string path = where + "." + key;
        if (key == "first_n") det.first_n = as_u64(value, path);
        else if (key == "ratio") det.ratio = as_u64(value, path);
        else if (key == "count") det.count = as_u64(value, path);
        else if (key == "window") det.window = as_u64(value, path);
        else if (key == "cauchy_eps") det.cauchy_eps = as_double(value, path);
        else if (key == "osc_eps") det.osc_eps = as_double(value, path);
        else fail(path, "unknown detector field");
    }
    return det;
}

MeasureSpec parse_measure(const json& j, const std::string& where) {
    if (!j.is_object()) fail(where, "expected an object");
    const std::string kind = need_string(j, "kind", where);
    if (kind == "lebesgue") return MeasureSpec::lebesgue();
    if (kind == "bernoulli") {
        return MeasureSpec::bernoulli(as_double_vec(need(j, "q", where), where + ".q"));
    }
    if (kind == "markov") {
        auto rows = as_matrix(need(j, "rows", where), where + ".rows");
        std::vector<double> stationary;
        if (const auto it = j.find("stationary"); it != j.end()) {
            stationary = as_double_vec(*it, where + ".stationary");
        }
        return MeasureSpec::markov_stationary(std::move(rows), std::move(stationary));
    }
    if (kind == "periodic_word") {
        return MeasureSpec::periodic_word(as_word(need(j, "word", where), where + ".word"));
    }
    if (kind == "periodic_angles") {
        const json& arr = need(j, "angles", where);
        if (!arr.is_array()) fail(where + ".angles", "expected an array of angle strings");
        std::vector<AnglePoint> angles;
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string path = where + ".angles[" + std::to_string(i) + "]";
            if (!arr[i].is_string()) fail(path, "expected an angle string");
            const std::string s = arr[i].get<std::string>();
            if (s == "1") {
                angles.push_back(AnglePoint{0, true});
            } else {
                angles.push_back(AnglePoint{parse_angle(s), false});
            }
        }
        return MeasureSpec::periodic_angles(std::move(angles));
    }
    if (kind == "mixture") {
        const json& arr = need(j, "components", where);
        if (!arr.is_array() || arr.empty()) fail(where + ".components", "expected components");
        std::vector<std::pair<double, MeasureSpec>> comps;
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string path = where + ".components[" + std::to_string(i) + "]";
            if (!arr[i].is_object()) fail(path, "expected an object");
            const double w = as_double(need(arr[i], "weight", path), path + ".weight");
            comps.emplace_back(w, parse_measure(need(arr[i], "measure", path), path + ".measure"));
        }
        return MeasureSpec::mixture(std::move(comps));
    }
    fail(where + ".kind", "unknown measure kind '" + kind + "'");
}

SymbolGenerator parse_generator(const json& j, const std::string& where) {
    if (!j.is_object()) fail(where, "expected an object");
    const std::string kind = need_string(j, "kind", where);
    SymbolGenerator gen;
    if (kind == "periodic") {
        gen.kind = GeneratorKind::Periodic;
        if (const auto it = j.find("word"); it != j.end()) {
            gen.word = as_word(*it, where + ".word");
        }
        return gen;
    }
    if (kind == "iid") {
        gen.kind = GeneratorKind::Iid;
        gen.q = as_double_vec(need(j, "q", where), where + ".q");
        if (const auto it = j.find("seed"); it != j.end()) gen.seed = as_u64(*it, where + ".seed");
        return gen;
    }
    if (kind == "markov") {
        gen.kind = GeneratorKind::Markov;
        gen.rows = as_matrix(need(j, "rows", where), where + ".rows");
        if (const auto it = j.find("init"); it != j.end()) {
            gen.init = as_double_vec(*it, where + ".init");
        }
        if (const auto it = j.find("seed"); it != j.end()) gen.seed = as_u64(*it, where + ".seed");
        return gen;
    }
    if (kind == "block_schedule") {
        gen.kind = GeneratorKind::BlockSchedule;
        gen.block_growth = as_u64(need(j, "growth", where), where + ".growth");
        return gen;
    }
    fail(where + ".kind", "unknown generator kind '" + kind + "'");
}

PointRequest parse_point(const json& j, const SystemSpec& sys, const std::string& where) {
    if (!j.is_object()) fail(where, "expected an object");
    const std::string kind = need_string(j, "kind", where);
    PointRequest req;
    if (kind == "angle") {
        const std::string value = need_string(j, "value", where);
        req.kind = PointRequest::Kind::Explicit;
        if (value == "1" && sys.interval_domain()) {
            req.point = PointState::angle_one();
        } else {
            req.point = PointState::angle(parse_angle(value));
        }
        req.label = "angle:" + value;
        return req;
    }
    if (kind == "stream") {
        SymbolStream s;
        if (const auto it = j.find("prefix"); it != j.end()) {
            s.prefix = as_word(*it, where + ".prefix");
        }
        s.gen = parse_generator(need(j, "generator", where), where + ".generator");
        if (const auto it = j.find("offset"); it != j.end()) {
            s.offset = as_u64(*it, where + ".offset");
        }
        req.kind = PointRequest::Kind::Explicit;
        req.point = PointState::stream(std::move(s));
        req.label = "stream:" + need(j, "generator", where).value("kind", "?");
        return req;
    }
    if (kind == "sample") {
        req.kind = PointRequest::Kind::Sample;
        req.count = as_u64(need(j, "count", where), where + ".count");
        req.label = "sample";
        return req;
    }
    if (kind == "witness") {
        req.kind = PointRequest::Kind::Witness;
        req.block_growth = 2;
        if (const auto it = j.find("block_growth"); it != j.end()) {
            req.block_growth = as_u64(*it, where + ".block_growth");
        }
        req.label = "witness:g" + std::to_string(req.block_growth);
        return req;
    }
    fail(where + ".kind", "unknown point kind '" + kind + "'");
}

FnDescriptor parse_set(const json& j, const std::string& where) {
    if (!j.is_object()) fail(where, "expected an object");
    const std::string kind = need_string(j, "kind", where);
    if (kind == "arc") {
        const std::string lo = need_string(j, "lo", where);
        const std::string hi = need_string(j, "hi", where);
        return FnDescriptor::arc(parse_angle(lo), parse_angle(hi));
    }
    if (kind == "cylinder") {
        return FnDescriptor::cylinder(as_word(need(j, "word", where), where + ".word"));
    }
    if (kind == "whole_space") return FnDescriptor::whole_space();
    fail(where + ".kind", "unknown set kind '" + kind + "'");
}

} // namespace

bool ExperimentConfig::check_requested(const std::string& name) const {
    if (checks.empty()) return true;
    return std::find(checks.begin(), checks.end(), name) != checks.end();
}

ExperimentConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");

    ExperimentConfig cfg;
    cfg.raw_text = text;

    const json& version = need(j, "version", "");
    cfg.version = static_cast<int>(as_u64(version, "version"));
    if (cfg.version != 1) {
        throw ConfigError("config.version: unsupported schema version " +
                          std::to_string(cfg.version));
    }

    if (const auto it = j.find("seed"); it != j.end()) cfg.seed = as_u64(*it, "seed");

    cfg.system = parse_system(need(j, "system", ""), "system");

    const auto fam_it = j.find("family");
    cfg.family = parse_family(fam_it != j.end() ? &*fam_it : nullptr, cfg.system, "family");

    const auto det_it = j.find("detector");
    cfg.detector = parse_detector(det_it != j.end() ? &*det_it : nullptr, "detector");

    if (const auto it = j.find("measure"); it != j.end()) {
        cfg.measure = parse_measure(*it, "measure");
    }
    if (const auto it = j.find("reference_measure"); it != j.end()) {
        cfg.reference_measure = parse_measure(*it, "reference_measure");
    }

    if (const auto it = j.find("points"); it != j.end()) {
        if (!it->is_array()) throw ConfigError("config.points: expected an array");
        for (std::size_t i = 0; i < it->size(); ++i) {
            cfg.points.push_back(
                parse_point((*it)[i], cfg.system, "points[" + std::to_string(i) + "]"));
        }
    }

    if (const auto it = j.find("sample_count"); it != j.end()) {
        cfg.sample_count = as_u64(*it, "sample_count");
    }
    if (const auto it = j.find("cluster_eps"); it != j.end()) {
        cfg.cluster_eps = as_double(*it, "cluster_eps");
    }
    if (const auto it = j.find("checks"); it != j.end()) {
        if (!it->is_array()) throw ConfigError("config.checks: expected an array of strings");
        for (std::size_t i = 0; i < it->size(); ++i) {
            if (!(*it)[i].is_string()) {
                throw ConfigError("config.checks[" + std::to_string(i) + "]: expected a string");
            }
            cfg.checks.push_back((*it)[i].get<std::string>());
        }
    }
    if (const auto it = j.find("borel_sets"); it != j.end()) {
        if (!it->is_array()) throw ConfigError("config.borel_sets: expected an array");
        for (std::size_t i = 0; i < it->size(); ++i) {
            cfg.borel_sets.push_back(parse_set((*it)[i], "borel_sets[" + std::to_string(i) + "]"));
        }
    }
    if (const auto it = j.find("affine"); it != j.end()) {
        if (!it->is_object()) throw ConfigError("config.affine: expected an object");
        if (const auto l = it->find("block_len"); l != it->end()) {
            cfg.affine_block_len = static_cast<std::uint32_t>(as_u64(*l, "affine.block_len"));
        }
        if (const auto c = it->find("coefficients"); c != it->end()) {
            cfg.affine_coefficients = as_double_vec(*c, "affine.coefficients");
        }
    }
    if (const auto it = j.find("witness"); it != j.end()) {
        if (!it->is_object()) throw ConfigError("config.witness: expected an object");
        if (const auto g = it->find("block_growth"); g != it->end()) {
            cfg.witness_block_growth = as_u64(*g, "witness.block_growth");
        }
    }

    if (cfg.measure) validate_measure_for_system(*cfg.measure, cfg.system);
    if (cfg.reference_measure) validate_measure_for_system(*cfg.reference_measure, cfg.system);
    if (!cfg.affine_coefficients.empty() &&
        cfg.affine_coefficients.size() != cfg.family->size()) {
        throw ConfigError("config.affine.coefficients: length must match the family size");
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    return parse_config(read_text_file(path));
}

} // namespace ergodec
