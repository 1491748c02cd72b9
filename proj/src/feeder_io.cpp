#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dsse/network.hpp"

namespace dsse {

namespace {

using nlohmann::json;

std::vector<Phase> parse_phases(const json& j, const std::string& where) {
    std::string s;
    if (j.is_string()) {
        s = j.get<std::string>();
    } else if (j.is_array()) {
        for (const auto& e : j) s += e.get<std::string>();
    } else {
        throw Error(where + ": phases must be a string like \"ABC\"");
    }
    if (s.empty()) throw Error(where + ": empty phase list");
    std::vector<Phase> out;
    for (char c : s) out.push_back(phase_from_letter(c));
    return out;
}

Eigen::MatrixXcd parse_complex_block(const json& j, int k, const std::string& where) {
    if (!j.is_array() || j.size() != static_cast<size_t>(k * k))
        throw Error(where + ": expected " + std::to_string(k * k) +
                    " [re, im] pairs (row-major), got " +
                    std::to_string(j.is_array() ? j.size() : 0));
    Eigen::MatrixXcd m(k, k);
    for (int i = 0; i < k * k; ++i) {
        const auto& pair = j[i];
        if (!pair.is_array() || pair.size() != 2)
            throw Error(where + ": entry " + std::to_string(i) + " is not a [re, im] pair");
        m(i / k, i % k) = Complex(pair[0].get<double>(), pair[1].get<double>());
    }
    return m;
}

NetworkModel parse_feeder(const json& doc, const std::string& origin) {
    auto require = [&](const char* key) -> const json& {
        if (!doc.contains(key))
            throw Error(origin + ": missing top-level key '" + std::string(key) + "'");
        return doc.at(key);
    };

    const double base_kv = require("base_kv").get<double>();
    const double base_mva = require("base_mva").get<double>();
    const std::string ref_bus = require("reference_bus").get<std::string>();
    const double ref_mag = doc.value("reference_magnitude", 1.0);

    std::vector<Bus> buses;
    for (size_t i = 0; i < require("buses").size(); ++i) {
        const auto& jb = doc["buses"][i];
        const std::string where = origin + ": buses[" + std::to_string(i) + "]";
        if (!jb.contains("name")) throw Error(where + ": missing 'name'");
        Bus b;
        b.name = jb["name"].get<std::string>();
        b.phases = parse_phases(jb.at("phases"), where);
        b.is_reference = (b.name == ref_bus);
        buses.push_back(std::move(b));
    }

    std::vector<Branch> branches;
    for (size_t i = 0; i < require("branches").size(); ++i) {
        const auto& jb = doc["branches"][i];
        const std::string where = origin + ": branches[" + std::to_string(i) + "]";
        Branch br;
        br.from_bus = jb.at("from").get<std::string>();
        br.to_bus = jb.at("to").get<std::string>();
        br.phases = parse_phases(jb.at("phases"), where);
        const int k = static_cast<int>(br.phases.size());
        br.series_impedance_ohm = parse_complex_block(jb.at("z_ohm"), k, where + ".z_ohm");
        if (jb.contains("shunt_s"))
            br.shunt_admittance_s = parse_complex_block(jb["shunt_s"], k, where + ".shunt_s");
        branches.push_back(std::move(br));
    }

    std::vector<std::tuple<std::string, Phase, double, double>> loads;
    if (doc.contains("loads")) {
        for (size_t i = 0; i < doc["loads"].size(); ++i) {
            const auto& jl = doc["loads"][i];
            const std::string where = origin + ": loads[" + std::to_string(i) + "]";
            auto phases = parse_phases(jl.at("phase"), where);
            if (phases.size() != 1) throw Error(where + ": load must name a single phase");
            loads.emplace_back(jl.at("bus").get<std::string>(), phases[0],
                               jl.at("p_kw").get<double>(), jl.at("q_kvar").get<double>());
        }
    }

    try {
        return NetworkModel(std::move(buses), std::move(branches), base_kv, base_mva, ref_mag,
                            std::move(loads), doc.value("name", origin),
                            doc.value("description", std::string{}));
    } catch (const Error& e) {
        throw Error(origin + ": " + e.what());
    }
}

}  // namespace

NetworkModel load_feeder_from_string(const std::string& text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(origin + ": " + e.what());
    }
    try {
        return parse_feeder(doc, origin);
    } catch (const json::exception& e) {
        throw Error(origin + ": " + e.what());
    }
}

NetworkModel load_feeder(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open feeder file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return load_feeder_from_string(ss.str(), path);
}

}  // namespace dsse
