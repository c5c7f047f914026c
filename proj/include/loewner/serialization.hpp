#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "loewner/branching.hpp"
#include "loewner/errors.hpp"
#include "loewner/evolution.hpp"
#include "loewner/generator.hpp"
#include "loewner/measure.hpp"

namespace loewner {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Strict JSON parsing: unknown keys are rejected, required keys must be
// present with the right types.  Parsing checks structure only; semantic
// validation (sign constraints, integrability classes) is a separate step
// so that `check` can report on deliberately corrupted inputs.
// ---------------------------------------------------------------------------

namespace detail {

inline void require_keys(const json& j, const char* what,
                         std::initializer_list<const char*> required,
                         std::initializer_list<const char*> optional = {}) {
    if (!j.is_object()) throw parse_error(std::string(what) + ": expected a JSON object");
    for (const char* k : required)
        if (!j.contains(k))
            throw parse_error(std::string(what) + ": missing required key \"" + k + "\"");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : required) known = known || it.key() == k;
        for (const char* k : optional) known = known || it.key() == k;
        if (!known)
            throw parse_error(std::string(what) + ": unknown key \"" + it.key() + "\"");
    }
}

inline double get_number(const json& j, const char* what, const char* key) {
    const json& v = j.at(key);
    if (!v.is_number())
        throw parse_error(std::string(what) + ": key \"" + key + "\" must be a number");
    return v.get<double>();
}

inline double get_upper_bound(const json& j, const char* what) {
    if (!j.contains("b")) return kInf;
    const json& v = j.at("b");
    if (v.is_string()) {
        if (v.get<std::string>() == "inf") return kInf;
        throw parse_error(std::string(what) + ": \"b\" must be a number or \"inf\"");
    }
    if (!v.is_number()) throw parse_error(std::string(what) + ": \"b\" must be a number or \"inf\"");
    return v.get<double>();
}

}  // namespace detail

inline JumpMeasure parse_measure(const json& j) {
    detail::require_keys(j, "measure", {"atoms", "panels"});
    JumpMeasure m;
    if (!j.at("atoms").is_array()) throw parse_error("measure: \"atoms\" must be an array");
    for (const json& a : j.at("atoms")) {
        detail::require_keys(a, "atom", {"x", "w"});
        m.atoms.push_back({detail::get_number(a, "atom", "x"), detail::get_number(a, "atom", "w")});
    }
    if (!j.at("panels").is_array()) throw parse_error("measure: \"panels\" must be an array");
    for (const json& p : j.at("panels")) {
        if (!p.is_object() || !p.contains("kind") || !p.at("kind").is_string())
            throw parse_error("panel: missing string key \"kind\"");
        std::string kind = p.at("kind").get<std::string>();
        DensityPanel panel;
        if (kind == "power_law") {
            detail::require_keys(p, "power_law panel", {"kind", "p", "c", "a"}, {"b"});
            panel.kind = PanelKind::power_law;
            panel.p = detail::get_number(p, "panel", "p");
            panel.c = detail::get_number(p, "panel", "c");
            panel.a = detail::get_number(p, "panel", "a");
            panel.b = detail::get_upper_bound(p, "panel");
        } else if (kind == "exponential") {
            detail::require_keys(p, "exponential panel", {"kind", "r", "c", "a"}, {"b"});
            panel.kind = PanelKind::exponential;
            panel.r = detail::get_number(p, "panel", "r");
            panel.c = detail::get_number(p, "panel", "c");
            panel.a = detail::get_number(p, "panel", "a");
            panel.b = detail::get_upper_bound(p, "panel");
        } else if (kind == "tabulated") {
            detail::require_keys(p, "tabulated panel", {"kind", "nodes", "values"});
            panel.kind = PanelKind::tabulated;
            if (!p.at("nodes").is_array() || !p.at("values").is_array())
                throw parse_error("tabulated panel: nodes/values must be arrays");
            for (const json& v : p.at("nodes")) panel.nodes.push_back(v.get<double>());
            for (const json& v : p.at("values")) panel.values.push_back(v.get<double>());
        } else {
            throw parse_error("panel: unknown kind \"" + kind + "\"");
        }
        m.panels.push_back(std::move(panel));
    }
    return m;
}

inline BernsteinRepr parse_bernstein(const json& j) {
    detail::require_keys(j, "bernstein function", {"alpha", "beta", "rho"});
    return {detail::get_number(j, "bernstein", "alpha"), detail::get_number(j, "bernstein", "beta"),
            parse_measure(j.at("rho"))};
}

inline GeneratorRepr parse_generator(const json& j) {
    detail::require_keys(j, "generator", {"q", "a", "b", "pi"});
    return {detail::get_number(j, "generator", "q"), detail::get_number(j, "generator", "a"),
            detail::get_number(j, "generator", "b"), parse_measure(j.at("pi"))};
}

inline LeGallRepr parse_legall(const json& j) {
    detail::require_keys(j, "legall form", {"form", "c", "b", "pi"});
    if (j.at("form") != "legall") throw parse_error("legall form: discriminator mismatch");
    return {detail::get_number(j, "legall", "c"), detail::get_number(j, "legall", "b"),
            parse_measure(j.at("pi"))};
}

inline SubordinatorGenRepr parse_subordinator(const json& j) {
    detail::require_keys(j, "subordinator form", {"form", "q", "c", "pi"});
    if (j.at("form") != "subordinator") throw parse_error("subordinator form: discriminator mismatch");
    return {detail::get_number(j, "subordinator", "q"), detail::get_number(j, "subordinator", "c"),
            parse_measure(j.at("pi"))};
}

inline HerglotzField parse_field(const json& j) {
    detail::require_keys(j, "field", {"breakpoints", "slices"});
    HerglotzField F;
    if (!j.at("breakpoints").is_array() || !j.at("slices").is_array())
        throw parse_error("field: breakpoints/slices must be arrays");
    for (const json& v : j.at("breakpoints")) F.breakpoints.push_back(v.get<double>());
    for (const json& g : j.at("slices")) F.slices.push_back(parse_generator(g));
    return F;
}

inline MechanismSpec parse_mechanism(const json& j) {
    if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
        throw parse_error("mechanism: missing string key \"kind\"");
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "feller") {
        detail::require_keys(j, "feller mechanism", {"kind", "b"});
        return MechanismSpec::feller(detail::get_number(j, "mechanism", "b"));
    }
    if (kind == "linear") {
        detail::require_keys(j, "linear mechanism", {"kind", "a"});
        return MechanismSpec::linear(detail::get_number(j, "mechanism", "a"));
    }
    if (kind == "killing") {
        detail::require_keys(j, "killing mechanism", {"kind", "q"});
        return MechanismSpec::killing(detail::get_number(j, "mechanism", "q"));
    }
    if (kind == "stable") {
        detail::require_keys(j, "stable mechanism", {"kind", "alpha", "scale"});
        return MechanismSpec::stable(detail::get_number(j, "mechanism", "alpha"),
                                     detail::get_number(j, "mechanism", "scale"));
    }
    if (kind == "compound_poisson") {
        detail::require_keys(j, "compound_poisson mechanism", {"kind", "rate", "jump_atoms"});
        std::vector<Atom> atoms;
        for (const json& a : j.at("jump_atoms")) {
            detail::require_keys(a, "jump atom", {"x", "w"});
            atoms.push_back(
                {detail::get_number(a, "jump atom", "x"), detail::get_number(a, "jump atom", "w")});
        }
        return MechanismSpec::compound_poisson(detail::get_number(j, "mechanism", "rate"),
                                               std::move(atoms));
    }
    throw parse_error("mechanism: unknown kind \"" + kind + "\"");
}

// ---------------------------------------------------------------------------
// Serialization back to JSON objects.
// ---------------------------------------------------------------------------

inline ordered_json to_json(const JumpMeasure& m) {
    ordered_json atoms = ordered_json::array();
    for (const Atom& a : m.atoms) atoms.push_back({{"x", a.x}, {"w", a.w}});
    ordered_json panels = ordered_json::array();
    for (const DensityPanel& p : m.panels) {
        ordered_json jp;
        switch (p.kind) {
            case PanelKind::power_law:
                jp["kind"] = "power_law";
                jp["p"] = p.p;
                jp["c"] = p.c;
                jp["a"] = p.a;
                break;
            case PanelKind::exponential:
                jp["kind"] = "exponential";
                jp["r"] = p.r;
                jp["c"] = p.c;
                jp["a"] = p.a;
                break;
            case PanelKind::tabulated:
                jp["kind"] = "tabulated";
                jp["nodes"] = p.nodes;
                jp["values"] = p.values;
                break;
        }
        if (p.kind != PanelKind::tabulated) {
            if (std::isinf(p.b))
                jp["b"] = "inf";
            else
                jp["b"] = p.b;
        }
        panels.push_back(std::move(jp));
    }
    return {{"atoms", std::move(atoms)}, {"panels", std::move(panels)}};
}

inline ordered_json to_json(const BernsteinRepr& f) {
    return {{"alpha", f.alpha}, {"beta", f.beta}, {"rho", to_json(f.rho)}};
}

inline ordered_json to_json(const GeneratorRepr& g) {
    return {{"q", g.q}, {"a", g.a}, {"b", g.b}, {"pi", to_json(g.pi)}};
}

inline ordered_json to_json(const LeGallRepr& l) {
    return {{"form", "legall"}, {"c", l.c}, {"b", l.b}, {"pi", to_json(l.pi)}};
}

inline ordered_json to_json(const SubordinatorGenRepr& s) {
    return {{"form", "subordinator"}, {"q", s.q}, {"c", s.c}, {"pi", to_json(s.pi)}};
}

inline ordered_json to_json(const HerglotzField& F) {
    ordered_json slices = ordered_json::array();
    for (const GeneratorRepr& g : F.slices) slices.push_back(to_json(g));
    return {{"breakpoints", F.breakpoints}, {"slices", std::move(slices)}};
}

// ---------------------------------------------------------------------------
// Deterministic JSON emission: numbers at 17 significant digits, insertion
// key order, "." decimal separator independent of the ambient locale.
// ---------------------------------------------------------------------------

inline std::string format_number(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) return "0";  // normalize the sign of zero
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    for (char* p = buf; *p; ++p)
        if (*p == ',') *p = '.';
    return buf;
}

inline void write_json(const ordered_json& j, std::ostream& os) {
    switch (j.type()) {
        case ordered_json::value_t::object: {
            os << '{';
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) os << ',';
                first = false;
                os << '"' << it.key() << "\":";
                write_json(it.value(), os);
            }
            os << '}';
            break;
        }
        case ordered_json::value_t::array: {
            os << '[';
            bool first = true;
            for (const auto& v : j) {
                if (!first) os << ',';
                first = false;
                write_json(v, os);
            }
            os << ']';
            break;
        }
        case ordered_json::value_t::number_float: {
            double v = j.get<double>();
            if (std::isinf(v))
                os << '"' << format_number(v) << '"';
            else
                os << format_number(v);
            break;
        }
        case ordered_json::value_t::number_integer:
        case ordered_json::value_t::number_unsigned:
            os << format_number(static_cast<double>(j.get<std::int64_t>()));
            break;
        case ordered_json::value_t::boolean:
            os << (j.get<bool>() ? "true" : "false");
            break;
        case ordered_json::value_t::string:
            os << '"' << j.get<std::string>() << '"';
            break;
        default:
            os << "null";
            break;
    }
}

}  // namespace loewner
