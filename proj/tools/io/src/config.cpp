#include "attrition_io/config.hpp"

#include "attrition/error.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace attrition::io {

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& what) {
    fail(ErrorKind::Config, "key '" + key + "': " + what);
}

const Json& need(const Json& obj, const std::string& name, const std::string& prefix) {
    const std::string key = prefix.empty() ? name : prefix + "." + name;
    if (!obj.is_object()) bad(prefix.empty() ? "<root>" : prefix, "expected an object");
    auto it = obj.find(name);
    if (it == obj.end()) bad(key, "missing");
    return *it;
}

double number(const Json& v, const std::string& key) {
    if (!v.is_number()) bad(key, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) bad(key, "must be finite");
    return x;
}

double need_number(const Json& obj, const std::string& name, const std::string& prefix) {
    return number(need(obj, name, prefix), prefix.empty() ? name : prefix + "." + name);
}

Term term_from_json(const Json& v, const std::string& key) {
    if (v.is_number()) return {Family::Constant, {number(v, key)}};
    if (!v.is_object()) bad(key, "expected a number, {family, coef} or an array of terms");
    const auto& fam = need(v, "family", key);
    if (!fam.is_string()) bad(key + ".family", "expected a string");
    const auto& coef = need(v, "coef", key);
    if (!coef.is_array()) bad(key + ".coef", "expected an array of numbers");
    Term t;
    try {
        t.family = family_from_string(fam.get<std::string>());
    } catch (const Error& e) {
        bad(key + ".family", e.what());
    }
    for (std::size_t i = 0; i < coef.size(); ++i) t.coef.push_back(number(coef[i], key + ".coef[" + std::to_string(i) + "]"));
    return t;
}

DiffusionSpec diffusion_from_json(const Json& d) {
    const auto& kind_v = need(d, "kind", "diffusion");
    if (!kind_v.is_string()) bad("diffusion.kind", "expected a string");
    const auto kind = kind_v.get<std::string>();
    if (kind == "abm")
        return DiffusionSpec::arithmetic(need_number(d, "drift", "diffusion"), need_number(d, "volatility", "diffusion"));
    if (kind == "gbm")
        return DiffusionSpec::geometric(need_number(d, "drift", "diffusion"), need_number(d, "volatility", "diffusion"));
    if (kind == "ou")
        return DiffusionSpec::ornstein_uhlenbeck(need_number(d, "speed", "diffusion"), need_number(d, "mean", "diffusion"),
                                                 need_number(d, "volatility", "diffusion"));
    if (kind == "custom") {
        std::optional<Coordinate> coord;
        if (auto it = d.find("coordinate"); it != d.end()) {
            if (*it == "linear") coord = Coordinate::Linear;
            else if (*it == "log") coord = Coordinate::Log;
            else bad("diffusion.coordinate", "expected \"linear\" or \"log\"");
        }
        constexpr double inf = std::numeric_limits<double>::infinity();
        auto bound = [&](const char* name, double dflt) -> double {
            auto it = d.find(name);
            if (it == d.end()) return dflt;
            if (it->is_string() && (*it == "-inf" || *it == "inf")) return *it == "inf" ? inf : -inf;
            return number(*it, std::string("diffusion.") + name);
        };
        return DiffusionSpec::custom(function_from_json(need(d, "drift", "diffusion"), "diffusion.drift"),
                                     function_from_json(need(d, "volatility", "diffusion"), "diffusion.volatility"),
                                     bound("state_lo", -inf), bound("state_hi", inf), coord);
    }
    bad("diffusion.kind", "unknown kind '" + kind + "' (abm, gbm, ou, custom)");
}

FirmPrimitives firm_from_json(const Json& f, const std::string& key) {
    FirmPrimitives p;
    p.r = need_number(f, "r", key);
    p.flow = function_from_json(need(f, "pi", key), key + ".pi");
    p.winner = function_from_json(need(f, "w", key), key + ".w");
    p.exit = function_from_json(need(f, "l", key), key + ".l");
    return p;
}

}  // namespace

ScalarFunction function_from_json(const Json& v, const std::string& key) {
    if (v.is_number()) return ScalarFunction::constant(number(v, key));
    std::vector<Term> terms;
    if (v.is_array()) {
        if (v.empty()) bad(key, "empty term list");
        for (std::size_t i = 0; i < v.size(); ++i) terms.push_back(term_from_json(v[i], key + "[" + std::to_string(i) + "]"));
    } else {
        terms.push_back(term_from_json(v, key));
    }
    try {
        return ScalarFunction(std::move(terms));
    } catch (const Error& e) {
        bad(key, e.what());
    }
}

Json function_to_json(const ScalarFunction& f) {
    Json arr = Json::array();
    for (const auto& t : f.terms()) arr.push_back({{"family", to_string(t.family)}, {"coef", t.coef}});
    return arr.size() == 1 ? arr[0] : arr;
}

GameModel model_from_json(const Json& doc, const ModelOverrides& ov) {
    if (!doc.is_object()) bad("<root>", "expected an object");
    if (auto it = doc.find("schema"); it != doc.end() && *it != "attrition-model/1")
        bad("schema", "unsupported schema " + it->dump());
    auto diffusion = diffusion_from_json(need(doc, "diffusion", ""));
    if (auto it = doc.find("window"); it != doc.end()) {
        if (!it->is_array() || it->size() != 2) bad("window", "expected [lo, hi]");
        const double lo = number((*it)[0], "window[0]"), hi = number((*it)[1], "window[1]");
        try {
            diffusion = diffusion.with_window({lo, hi});
        } catch (const Error& e) {
            bad("window", e.what());
        }
    }
    bool deterministic = ov.deterministic;
    if (auto it = doc.find("deterministic"); it != doc.end()) {
        if (!it->is_boolean()) bad("deterministic", "expected true or false");
        deterministic = deterministic || it->get<bool>();
    }
    if (deterministic) diffusion = diffusion.without_noise();

    if (auto it = doc.find("firms"); it != doc.end()) {
        if (!it->is_array() || it->size() != 2) bad("firms", "expected an array of two firms");
        return GameModel::heterogeneous(diffusion, firm_from_json((*it)[0], "firms[0]"),
                                        firm_from_json((*it)[1], "firms[1]"));
    }
    const double r = need_number(doc, "r", "");
    auto pi = function_from_json(need(doc, "pi", ""), "pi");
    auto w = function_from_json(need(doc, "w", ""), "w");
    const double l1 = need_number(doc, "l1", ""), l2 = need_number(doc, "l2", "");
    if (ov.heterogeneous) {
        return GameModel::heterogeneous(diffusion, {r, pi, w, ScalarFunction::constant(l1)},
                                        {r, pi, w, ScalarFunction::constant(l2)});
    }
    return GameModel::standard(diffusion, r, pi, w, l1, l2);
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Config, "cannot open '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorKind::Config, "'" + path + "' is not valid JSON: " + e.what());
    }
}

GameModel load_model(const std::string& path, const ModelOverrides& ov) {
    return model_from_json(read_json_file(path), ov);
}

Json model_to_json(const GameModel& m) {
    const auto& s = m.diffusion();
    Json d;
    static const char* const kinds[] = {"abm", "gbm", "ou", "custom"};
    d["kind"] = kinds[static_cast<int>(s.kind())];
    switch (s.kind()) {
    case DiffusionKind::Arithmetic:
    case DiffusionKind::Geometric:
        d["drift"] = s.drift_parameter();
        d["volatility"] = s.volatility_parameter();
        break;
    case DiffusionKind::OrnsteinUhlenbeck:
        d["speed"] = s.speed_parameter();
        d["mean"] = s.mean_parameter();
        d["volatility"] = s.volatility_parameter();
        break;
    case DiffusionKind::Custom:
        d["drift"] = function_to_json(s.drift());
        d["volatility"] = function_to_json(s.volatility());
        d["state_lo"] = std::isfinite(s.state_lo()) ? Json(s.state_lo()) : Json("-inf");
        d["state_hi"] = std::isfinite(s.state_hi()) ? Json(s.state_hi()) : Json("inf");
        d["coordinate"] = s.coordinate() == Coordinate::Log ? "log" : "linear";
        break;
    }
    Json out;
    out["schema"] = "attrition-model/1";
    out["diffusion"] = d;
    out["window"] = {s.window().lo, s.window().hi};
    out["deterministic"] = s.deterministic();
    if (m.heterogeneous()) {
        Json firms = Json::array();
        for (FirmId i : {1, 2}) {
            const auto& f = m.firm(i);
            firms.push_back({{"r", f.r}, {"pi", function_to_json(f.flow)}, {"w", function_to_json(f.winner)},
                             {"l", function_to_json(f.exit)}});
        }
        out["firms"] = firms;
    } else {
        out["r"] = m.r(1);
        out["pi"] = function_to_json(m.firm(1).flow);
        out["w"] = function_to_json(m.firm(1).winner);
        out["l1"] = m.l(1);
        out["l2"] = m.l(2);
    }
    return out;
}

}  // namespace attrition::io
