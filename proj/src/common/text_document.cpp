#include "fbdrift/common/text_document.hpp"

#include "fbdrift/common/errors.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace fbd {
namespace {

nlohmann::json scalar_to_json(const YAML::Node& n) {
    const std::string& s = n.Scalar();
    if (n.Tag() == "!") return s;  // quoted scalar
    if (s == "null" || s == "~" || s.empty()) return nullptr;
    if (s == "true" || s == "True") return true;
    if (s == "false" || s == "False") return false;
    {
        long long i = 0;
        if (YAML::convert<long long>::decode(n, i) && s.find_first_of(".eE") == std::string::npos &&
            s.find_first_not_of("+-0123456789") == std::string::npos)
            return i;
    }
    {
        double d = 0;
        if (YAML::convert<double>::decode(n, d)) {
            if (std::isfinite(d)) return d;
            return s;  // keep .inf spellings as strings; json_real decodes them
        }
    }
    return s;
}

nlohmann::json to_json(const YAML::Node& n) {
    switch (n.Type()) {
        case YAML::NodeType::Null:
        case YAML::NodeType::Undefined: return nullptr;
        case YAML::NodeType::Scalar: return scalar_to_json(n);
        case YAML::NodeType::Sequence: {
            auto arr = nlohmann::json::array();
            for (const auto& e : n) arr.push_back(to_json(e));
            return arr;
        }
        case YAML::NodeType::Map: {
            auto obj = nlohmann::json::object();
            for (const auto& kv : n) obj[kv.first.as<std::string>()] = to_json(kv.second);
            return obj;
        }
    }
    return nullptr;
}

void emit(YAML::Emitter& out, const nlohmann::json& j) {
    if (j.is_object()) {
        out << YAML::BeginMap;
        for (auto it = j.begin(); it != j.end(); ++it) {
            out << YAML::Key << it.key() << YAML::Value;
            emit(out, it.value());
        }
        out << YAML::EndMap;
    } else if (j.is_array()) {
        bool flat = true;
        for (const auto& e : j) flat = flat && e.is_primitive();
        if (flat) out << YAML::Flow;
        out << YAML::BeginSeq;
        for (const auto& e : j) emit(out, e);
        out << YAML::EndSeq;
    } else if (j.is_string()) {
        out << YAML::DoubleQuoted << j.get<std::string>();
    } else if (j.is_boolean()) {
        out << j.get<bool>();
    } else if (j.is_number_integer()) {
        out << j.get<long long>();
    } else if (j.is_number()) {
        out << YAML::Precision(17) << j.get<double>();
    } else {
        out << YAML::Null;
    }
}

}  // namespace

nlohmann::json parse_text_document(const std::string& text) {
    try {
        return to_json(YAML::Load(text));
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("document parse error: ") + e.what());
    }
}

nlohmann::json load_text_document(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_text_document(ss.str());
}

std::string render_text_document(const nlohmann::json& j) {
    YAML::Emitter out;
    emit(out, j);
    return std::string(out.c_str()) + "\n";
}

double json_real(const nlohmann::json& j) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (j.is_null()) return inf;
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        std::string s = j.get<std::string>();
        for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        if (s == "inf" || s == "+inf" || s == "infinity" || s == ".inf" || s == "+.inf") return inf;
        if (s == "-inf" || s == "-.inf" || s == "-infinity") return -inf;
        try {
            std::size_t pos = 0;
            const double v = std::stod(s, &pos);
            if (pos == s.size()) return v;
        } catch (...) {
        }
    }
    throw ConfigError("expected a real number, got " + j.dump());
}

nlohmann::json real_to_json(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

}  // namespace fbd
