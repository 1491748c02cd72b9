#include "dsse/network.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <Eigen/LU>

namespace dsse {

char phase_letter(Phase p) {
    switch (p) {
        case Phase::A: return 'A';
        case Phase::B: return 'B';
        case Phase::C: return 'C';
    }
    return '?';
}

Phase phase_from_letter(char c) {
    switch (c) {
        case 'A': case 'a': case '1': return Phase::A;
        case 'B': case 'b': case '2': return Phase::B;
        case 'C': case 'c': case '3': return Phase::C;
    }
    throw Error(std::string("unknown phase letter '") + c + "'");
}

double reference_angle(Phase p) {
    constexpr double third = 2.0 * std::numbers::pi / 3.0;
    switch (p) {
        case Phase::A: return 0.0;
        case Phase::B: return -third;
        case Phase::C: return third;
    }
    return 0.0;
}

NetworkModel::NetworkModel(std::vector<Bus> buses, std::vector<Branch> branches,
                           double base_kv, double base_mva, double reference_magnitude,
                           std::vector<std::tuple<std::string, Phase, double, double>> loads_kw_kvar,
                           std::string name, std::string notes)
    : buses_(std::move(buses)),
      branches_(std::move(branches)),
      base_kv_(base_kv),
      base_mva_(base_mva),
      reference_magnitude_(reference_magnitude),
      name_(std::move(name)),
      notes_(std::move(notes)) {
    if (base_kv_ <= 0 || base_mva_ <= 0)
        throw Error("base_kv and base_mva must be positive");
    if (reference_magnitude_ <= 0)
        throw Error("reference_magnitude must be positive");

    for (auto& b : buses_) {
        std::sort(b.phases.begin(), b.phases.end());
        b.phases.erase(std::unique(b.phases.begin(), b.phases.end()), b.phases.end());
    }
    index_nodes();

    nominal_load_ = Eigen::VectorXcd::Zero(node_count());
    for (const auto& [bus, phase, p_kw, q_kvar] : loads_kw_kvar) {
        int idx = node_index(bus, phase);
        if (is_reference_node(idx))
            throw Error("load attached to reference bus node " + bus + "." + phase_letter(phase));
        nominal_load_(idx) += Complex(p_kw, q_kvar) / (base_mva_ * 1000.0);
    }
    validate();
}

void NetworkModel::index_nodes() {
    int ref_count = 0;
    for (size_t i = 0; i < buses_.size(); ++i) {
        if (buses_[i].is_reference) {
            if (reference_bus_idx_ >= 0)
                throw Error("more than one reference bus: " + buses_[reference_bus_idx_].name +
                            " and " + buses_[i].name);
            reference_bus_idx_ = static_cast<int>(i);
            ++ref_count;
        }
        if (buses_[i].phases.empty())
            throw Error("bus " + buses_[i].name + " has no phases");
    }
    if (reference_bus_idx_ < 0) throw Error("no reference bus defined");

    // Reference bus nodes occupy the lowest indices; remaining buses keep
    // document order.
    std::vector<int> order;
    order.push_back(reference_bus_idx_);
    for (int i = 0; i < static_cast<int>(buses_.size()); ++i)
        if (i != reference_bus_idx_) order.push_back(i);

    std::vector<Bus> reordered;
    reordered.reserve(buses_.size());
    for (int i : order) reordered.push_back(std::move(buses_[i]));
    buses_ = std::move(reordered);
    reference_bus_idx_ = 0;

    bus_offset_.assign(buses_.size(), 0);
    nodes_.clear();
    for (size_t i = 0; i < buses_.size(); ++i) {
        bus_offset_[i] = static_cast<int>(nodes_.size());
        for (Phase p : buses_[i].phases)
            nodes_.push_back(NodeId{static_cast<int>(nodes_.size()), buses_[i].name, p});
    }
    reference_node_count_ = static_cast<int>(buses_[0].phases.size());
}

int NetworkModel::node_index(const std::string& bus, Phase phase) const {
    for (size_t i = 0; i < buses_.size(); ++i) {
        if (buses_[i].name != bus) continue;
        const auto& ph = buses_[i].phases;
        auto it = std::find(ph.begin(), ph.end(), phase);
        if (it == ph.end())
            throw Error("bus " + bus + " does not carry phase " + phase_letter(phase));
        return bus_offset_[i] + static_cast<int>(it - ph.begin());
    }
    throw Error("unknown bus " + bus);
}

void NetworkModel::validate() const {
    std::map<std::string, const Bus*> by_name;
    for (const auto& b : buses_) {
        if (by_name.count(b.name)) throw Error("duplicate bus name " + b.name);
        by_name[b.name] = &b;
    }

    // Reference bus must anchor every phase that appears in the model.
    std::set<Phase> present;
    for (const auto& b : buses_)
        for (Phase p : b.phases) present.insert(p);
    for (Phase p : present) {
        const auto& rp = reference_bus().phases;
        if (std::find(rp.begin(), rp.end(), p) == rp.end())
            throw Error("reference bus " + reference_bus().name + " lacks phase " +
                        phase_letter(p) + " which appears elsewhere in the model");
    }

    for (const auto& br : branches_) {
        auto check_endpoint = [&](const std::string& bus_name) {
            auto it = by_name.find(bus_name);
            if (it == by_name.end())
                throw Error("branch " + br.from_bus + "-" + br.to_bus +
                            " references unknown bus " + bus_name);
            for (Phase p : br.phases) {
                const auto& ph = it->second->phases;
                if (std::find(ph.begin(), ph.end(), p) == ph.end())
                    throw Error("branch " + br.from_bus + "-" + br.to_bus + " uses phase " +
                                phase_letter(p) + " absent from bus " + bus_name);
            }
        };
        check_endpoint(br.from_bus);
        check_endpoint(br.to_bus);
        const int k = static_cast<int>(br.phases.size());
        if (k == 0) throw Error("branch " + br.from_bus + "-" + br.to_bus + " has no phases");
        if (br.series_impedance_ohm.rows() != k || br.series_impedance_ohm.cols() != k)
            throw Error("branch " + br.from_bus + "-" + br.to_bus +
                        " impedance block does not match its phase count");
        if (br.shunt_admittance_s.size() != 0 &&
            (br.shunt_admittance_s.rows() != k || br.shunt_admittance_s.cols() != k))
            throw Error("branch " + br.from_bus + "-" + br.to_bus +
                        " shunt block does not match its phase count");
    }

    // Connectivity over buses.
    std::map<std::string, int> comp;
    int id = 0;
    for (const auto& b : buses_) comp[b.name] = id++;
    bool merged = true;
    while (merged) {
        merged = false;
        for (const auto& br : branches_) {
            int a = comp[br.from_bus], b = comp[br.to_bus];
            if (a != b) {
                int lo = std::min(a, b), hi = std::max(a, b);
                for (auto& [k, v] : comp)
                    if (v == hi) v = lo;
                merged = true;
            }
        }
    }
    for (const auto& [name, c] : comp)
        if (c != comp[buses_[0].name])
            throw Error("model is not connected: bus " + name +
                        " is not reachable from the reference bus");

    for (int i = 0; i < reference_node_count_; ++i)
        if (std::abs(nominal_load_(i)) != 0.0)
            throw Error("nominal load at reference node must be zero");
}

AdmittanceMatrix build_admittance(const NetworkModel& model) {
    const int m = model.node_count();
    Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(m, m);
    const double z_base = model.base_ohm();

    for (const auto& br : model.branches()) {
        const int k = static_cast<int>(br.phases.size());
        Eigen::MatrixXcd z_pu = br.series_impedance_ohm / z_base;
        Eigen::FullPivLU<Eigen::MatrixXcd> lu(z_pu);
        if (!lu.isInvertible())
            throw Error("branch " + br.from_bus + "-" + br.to_bus +
                        " has a singular series impedance block");
        Eigen::MatrixXcd y = lu.inverse();

        std::vector<int> fi(k), ti(k);
        for (int p = 0; p < k; ++p) {
            fi[p] = model.node_index(br.from_bus, br.phases[p]);
            ti[p] = model.node_index(br.to_bus, br.phases[p]);
        }
        for (int r = 0; r < k; ++r) {
            for (int c = 0; c < k; ++c) {
                Y(fi[r], fi[c]) += y(r, c);
                Y(ti[r], ti[c]) += y(r, c);
                Y(fi[r], ti[c]) -= y(r, c);
                Y(ti[r], fi[c]) -= y(r, c);
            }
        }
        if (br.shunt_admittance_s.size() != 0) {
            Eigen::MatrixXcd ysh = br.shunt_admittance_s * z_base;  // siemens -> per-unit
            for (int r = 0; r < k; ++r)
                for (int c = 0; c < k; ++c) {
                    Y(fi[r], fi[c]) += 0.5 * ysh(r, c);
                    Y(ti[r], ti[c]) += 0.5 * ysh(r, c);
                }
        }
    }
    return AdmittanceMatrix{std::move(Y), model.nodes()};
}

}  // namespace dsse
