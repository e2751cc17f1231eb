#pragma once

// Checks a JSON document against the schema keywords used in
// schema/report.schema.json: type, const, enum, required, properties,
// additionalProperties, items, minItems, maxItems, minimum, maximum,
// exclusiveMinimum, anyOf and local $ref. Unknown keywords fail loudly.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace schema_check {

using nlohmann::json;

class Checker {
public:
    explicit Checker(json root) : root_(std::move(root)) {}

    /// Human-readable violations; empty when the document conforms.
    std::vector<std::string> check(const json& doc) const {
        std::vector<std::string> errors;
        visit(root_, doc, "$", errors);
        return errors;
    }

private:
    json root_;

    const json& resolve(const std::string& ref) const {
        if (ref.rfind("#/", 0) != 0) throw std::runtime_error("only local refs supported: " + ref);
        return root_.at(json::json_pointer(ref.substr(1)));
    }

    static bool has_type(const json& v, const std::string& t) {
        if (t == "object") return v.is_object();
        if (t == "array") return v.is_array();
        if (t == "string") return v.is_string();
        if (t == "boolean") return v.is_boolean();
        if (t == "null") return v.is_null();
        if (t == "integer") return v.is_number_integer() || (v.is_number_float() && v.get<double>() == std::floor(v.get<double>()));
        if (t == "number") return v.is_number();
        throw std::runtime_error("unknown type " + t);
    }

    void visit(const json& s, const json& v, const std::string& at, std::vector<std::string>& errors) const {
        static const std::set<std::string> annotations{"$schema", "$id", "title", "description", "$defs"};
        for (const auto& [key, rule] : s.items()) {
            if (annotations.count(key)) continue;
            if (key == "$ref") {
                visit(resolve(rule.get<std::string>()), v, at, errors);
            } else if (key == "type") {
                if (!has_type(v, rule.get<std::string>())) errors.push_back(at + ": expected " + rule.get<std::string>());
            } else if (key == "const") {
                if (v != rule) errors.push_back(at + ": expected " + rule.dump());
            } else if (key == "enum") {
                if (std::find(rule.begin(), rule.end(), v) == rule.end()) errors.push_back(at + ": not in enum");
            } else if (key == "required") {
                for (const auto& name : rule)
                    if (!v.is_object() || !v.contains(name.get<std::string>()))
                        errors.push_back(at + ": missing " + name.get<std::string>());
            } else if (key == "properties") {
                if (!v.is_object()) continue;
                for (const auto& [name, sub] : rule.items())
                    if (v.contains(name)) visit(sub, v.at(name), at + "." + name, errors);
            } else if (key == "additionalProperties") {
                if (!v.is_object() || rule.get<bool>()) continue;
                const json props = s.value("properties", json::object());
                for (const auto& [name, _] : v.items())
                    if (!props.contains(name)) errors.push_back(at + ": unexpected " + name);
            } else if (key == "items") {
                if (!v.is_array()) continue;
                for (std::size_t i = 0; i < v.size(); ++i) visit(rule, v[i], at + "[" + std::to_string(i) + "]", errors);
            } else if (key == "minItems") {
                if (v.is_array() && v.size() < rule.get<std::size_t>()) errors.push_back(at + ": too few items");
            } else if (key == "maxItems") {
                if (v.is_array() && v.size() > rule.get<std::size_t>()) errors.push_back(at + ": too many items");
            } else if (key == "minimum") {
                if (v.is_number() && v.get<double>() < rule.get<double>()) errors.push_back(at + ": below minimum");
            } else if (key == "maximum") {
                if (v.is_number() && v.get<double>() > rule.get<double>()) errors.push_back(at + ": above maximum");
            } else if (key == "exclusiveMinimum") {
                if (v.is_number() && !(v.get<double>() > rule.get<double>()))
                    errors.push_back(at + ": not above exclusive minimum");
            } else if (key == "anyOf") {
                bool any = false;
                for (const auto& alt : rule) {
                    std::vector<std::string> sub;
                    visit(alt, v, at, sub);
                    any = any || sub.empty();
                }
                if (!any) errors.push_back(at + ": matches no alternative");
            } else {
                throw std::runtime_error("unsupported schema keyword " + key);
            }
        }
    }
};

inline Checker load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open schema " + path);
    return Checker(json::parse(in));
}

}  // namespace schema_check
