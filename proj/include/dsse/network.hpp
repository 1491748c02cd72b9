#ifndef DSSE_NETWORK_HPP
#define DSSE_NETWORK_HPP

#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace dsse {

using Complex = std::complex<double>;

class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

enum class Phase : int { A = 0, B = 1, C = 2 };

char phase_letter(Phase p);
Phase phase_from_letter(char c);

// Reference phasing: A at 0, B at -120 deg, C at +120 deg.
double reference_angle(Phase p);

struct Bus {
    std::string name;
    std::vector<Phase> phases;  // canonical order A, B, C
    bool is_reference = false;
};

struct Branch {
    std::string from_bus;
    std::string to_bus;
    std::vector<Phase> phases;               // row/column order of the blocks
    Eigen::MatrixXcd series_impedance_ohm;   // k x k
    Eigen::MatrixXcd shunt_admittance_s;     // k x k total branch shunt, split half per end
};

// One energized phase of a bus; the unit of state.
struct NodeId {
    int index = -1;
    std::string bus;
    Phase phase = Phase::A;
};

class NetworkModel {
  public:
    NetworkModel(std::vector<Bus> buses, std::vector<Branch> branches,
                 double base_kv, double base_mva, double reference_magnitude,
                 std::vector<std::tuple<std::string, Phase, double, double>> loads_kw_kvar,
                 std::string name = {}, std::string notes = {});

    int node_count() const { return static_cast<int>(nodes_.size()); }
    const std::vector<Bus>& buses() const { return buses_; }
    const std::vector<Branch>& branches() const { return branches_; }
    const std::vector<NodeId>& nodes() const { return nodes_; }

    // Stable (bus, phase) -> index mapping; reference nodes come first.
    int node_index(const std::string& bus, Phase phase) const;
    const NodeId& node(int index) const { return nodes_.at(index); }

    const Bus& reference_bus() const { return buses_[reference_bus_idx_]; }
    bool is_reference_node(int index) const { return index < reference_node_count_; }
    int reference_node_count() const { return reference_node_count_; }

    double base_kv() const { return base_kv_; }
    double base_mva() const { return base_mva_; }
    double base_ohm() const { return base_kv_ * base_kv_ * 1000.0 / (base_mva_ * 1000.0); }
    double reference_magnitude() const { return reference_magnitude_; }

    // Nominal complex load per node, per-unit, load-positive.
    const Eigen::VectorXcd& nominal_load() const { return nominal_load_; }

    const std::string& name() const { return name_; }
    const std::string& notes() const { return notes_; }

  private:
    void index_nodes();
    void validate() const;

    std::vector<Bus> buses_;
    std::vector<Branch> branches_;
    std::vector<NodeId> nodes_;
    std::vector<int> bus_offset_;  // first node index per bus (ordered as buses_)
    int reference_bus_idx_ = -1;
    int reference_node_count_ = 0;
    double base_kv_ = 1.0;
    double base_mva_ = 1.0;
    double reference_magnitude_ = 1.0;
    Eigen::VectorXcd nominal_load_;
    std::string name_;
    std::string notes_;
};

struct AdmittanceMatrix {
    Eigen::MatrixXcd Y;            // per-unit, M x M
    std::vector<NodeId> node_map;  // row/column ordering
};

// Assemble the node admittance matrix from per-branch impedance blocks.
AdmittanceMatrix build_admittance(const NetworkModel& model);

// Parse and validate a feeder document (see feeder schema in README).
NetworkModel load_feeder(const std::string& path);
NetworkModel load_feeder_from_string(const std::string& text, const std::string& origin = "<string>");

}  // namespace dsse

#endif
