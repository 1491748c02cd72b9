#ifndef DSSE_POWER_FLOW_HPP
#define DSSE_POWER_FLOW_HPP

#include <Eigen/Core>

#include "dsse/network.hpp"

namespace dsse {

// Polar voltage state over all M nodes. Reference-node entries are pinned at
// (reference_magnitude, reference phasing).
struct VoltageState {
    Eigen::VectorXd magnitude;  // per-unit, > 0
    Eigen::VectorXd angle;      // radians

    Eigen::VectorXcd complex() const;
    void wrap_angles();  // into (-pi, pi]
};

// All nodes at reference magnitude and per-phase reference phasing.
VoltageState flat_start(const NetworkModel& model);

struct PowerFlowOptions {
    double tol = 1e-8;
    int max_iter = 50;
};

class PowerFlowError : public Error {
  public:
    PowerFlowError(const std::string& what, double final_mismatch)
        : Error(what), final_mismatch_(final_mismatch) {}
    double final_mismatch() const { return final_mismatch_; }

  private:
    double final_mismatch_;
};

// Newton-Raphson in polar coordinates on the mismatch S - V o (YV)*.
// `injections` are per-unit complex powers, generation-positive; entries at
// reference nodes are ignored. Throws PowerFlowError on non-convergence.
VoltageState solve_power_flow(const NetworkModel& model, const AdmittanceMatrix& adm,
                              const Eigen::VectorXcd& injections,
                              const PowerFlowOptions& options = {});

// Per-node |S_i - (V o (YV)*)_i| for non-reference nodes (reference entries 0).
Eigen::VectorXd power_mismatch(const NetworkModel& model, const AdmittanceMatrix& adm,
                               const VoltageState& state, const Eigen::VectorXcd& injections);

}  // namespace dsse

#endif
