#include "gridcert/case_io.hpp"

#include <fstream>
#include <sstream>

namespace gridcert {

using nlohmann::json;

namespace {

double number_at(const json& obj, const std::string& key, const std::string& path,
                 std::optional<double> fallback = std::nullopt) {
    if (!obj.contains(key)) {
        if (fallback) return *fallback;
        throw CaseError(path + "." + key, "missing required field");
    }
    const json& v = obj.at(key);
    if (!v.is_number()) throw CaseError(path + "." + key, "expected a number");
    return v.get<double>();
}

int integer_at(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.contains(key)) throw CaseError(path + "." + key, "missing required field");
    const json& v = obj.at(key);
    if (!v.is_number_integer()) throw CaseError(path + "." + key, "expected an integer");
    return v.get<int>();
}

BusKind kind_from_string(const std::string& s, const std::string& path) {
    if (s == "machine") return BusKind::machine;
    if (s == "infinite_bus") return BusKind::infinite_bus;
    if (s == "interior") return BusKind::interior;
    throw CaseError(path, "unknown bus kind '" + s + "'");
}

std::string kind_to_string(BusKind k) {
    switch (k) {
        case BusKind::machine: return "machine";
        case BusKind::infinite_bus: return "infinite_bus";
        case BusKind::interior: return "interior";
    }
    return "interior";
}

} // namespace

PowerNetwork parse_case(const json& doc) {
    if (!doc.is_object()) throw CaseError("", "case document must be an object");
    if (!doc.contains("buses") || !doc.at("buses").is_array())
        throw CaseError("buses", "missing or not an array");
    if (!doc.contains("lines") || !doc.at("lines").is_array())
        throw CaseError("lines", "missing or not an array");

    std::vector<Bus> buses;
    const json& jbuses = doc.at("buses");
    for (std::size_t i = 0; i < jbuses.size(); ++i) {
        const std::string path = "buses[" + std::to_string(i) + "]";
        const json& jb = jbuses[i];
        if (!jb.is_object()) throw CaseError(path, "expected an object");

        Bus b;
        b.id = integer_at(jb, "id", path);
        if (!jb.contains("kind") || !jb.at("kind").is_string())
            throw CaseError(path + ".kind", "missing or not a string");
        b.kind = kind_from_string(jb.at("kind").get<std::string>(), path + ".kind");
        b.voltage = number_at(jb, "V", path, 1.0);
        b.shunt_conductance = number_at(jb, "G", path, 0.0);
        const double raw_injection = number_at(jb, "P", path, 0.0);
        b.injection = raw_injection - b.shunt_conductance * b.voltage * b.voltage;
        if (b.kind == BusKind::machine) {
            b.inertia = number_at(jb, "M", path);
            b.damping = number_at(jb, "D", path);
        } else {
            if (jb.contains("M"))
                throw CaseError(path + ".M", "only machine buses carry inertia");
            if (jb.contains("D"))
                throw CaseError(path + ".D", "only machine buses carry damping");
        }
        buses.push_back(b);
    }

    std::vector<Line> lines;
    const json& jlines = doc.at("lines");
    for (std::size_t k = 0; k < jlines.size(); ++k) {
        const std::string path = "lines[" + std::to_string(k) + "]";
        const json& jl = jlines[k];
        if (!jl.is_object()) throw CaseError(path, "expected an object");
        Line l;
        l.from = integer_at(jl, "from", path);
        l.to = integer_at(jl, "to", path);
        l.susceptance = number_at(jl, "B", path);
        lines.push_back(l);
    }

    return PowerNetwork(std::move(buses), std::move(lines));
}

PowerNetwork parse_case_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw CaseError("", std::string("invalid case document: ") + e.what());
    }
    return parse_case(doc);
}

PowerNetwork parse_case_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CaseError("", "cannot open case file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_case_text(buf.str());
}

json serialize_case(const PowerNetwork& net) {
    json jbuses = json::array();
    for (const Bus& b : net.buses()) {
        json jb;
        jb["id"] = b.id;
        jb["kind"] = kind_to_string(b.kind);
        jb["V"] = b.voltage;
        jb["G"] = b.shunt_conductance;
        jb["P"] = b.injection + b.shunt_conductance * b.voltage * b.voltage;
        if (b.kind == BusKind::machine) {
            jb["M"] = b.inertia;
            jb["D"] = b.damping;
        }
        jbuses.push_back(jb);
    }
    json jlines = json::array();
    for (const Line& l : net.lines()) {
        jlines.push_back({{"from", l.from}, {"to", l.to}, {"B", l.susceptance}});
    }
    return json{{"buses", jbuses}, {"lines", jlines}};
}

} // namespace gridcert
