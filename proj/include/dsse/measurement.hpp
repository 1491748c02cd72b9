#ifndef DSSE_MEASUREMENT_HPP
#define DSSE_MEASUREMENT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "dsse/network.hpp"
#include "dsse/power_flow.hpp"
#include "dsse/profiles.hpp"

namespace dsse {

enum class MeasKind {
    BranchCurrentPhasor,     // (V_i - V_j) y_ij, one phase, [re, im]
    BranchCurrentMagnitude,  // |(V_i - V_j) y_ij|
    CurrentInjectionPhasor,  // (YV)_i, [re, im]
    VoltageMagnitude,        // |V_i|
    VoltageAngle,            // angle(V_i), radians
    PowerInjection,          // (V o (YV)*)_i, [P, Q]
};

const char* meas_kind_name(MeasKind k);
MeasKind meas_kind_from_name(const std::string& name);
int meas_component_count(MeasKind k);

struct MeasurementSpec {
    MeasKind kind = MeasKind::VoltageMagnitude;
    // Node kinds use (bus, phase); branch kinds use (bus, to_bus, phase).
    std::string bus;
    std::string to_bus;
    Phase phase = Phase::A;
    // Per-component standard deviations; sigma_b applies to the second
    // component of two-component kinds and defaults to sigma_a.
    double sigma_a = 0.005;
    double sigma_b = -1.0;
    bool is_pseudo = false;

    int components() const { return meas_component_count(kind); }
    double sigma(int component) const;
    std::string describe() const;
};

// Ordered specs with observed values and the block-diagonal covariance.
class MeasurementSet {
  public:
    MeasurementSet() = default;
    MeasurementSet(std::vector<MeasurementSpec> specs, Eigen::VectorXd z);

    const std::vector<MeasurementSpec>& specs() const { return specs_; }
    const Eigen::VectorXd& z() const { return z_; }
    const Eigen::MatrixXd& Sigma() const { return sigma_; }
    int dimension() const { return static_cast<int>(z_.size()); }

    // Lower Cholesky factor of Sigma; throws if Sigma is not positive definite.
    const Eigen::MatrixXd& chol_lower() const;

  private:
    std::vector<MeasurementSpec> specs_;
    Eigen::VectorXd z_;
    Eigen::MatrixXd sigma_;
    mutable Eigen::MatrixXd chol_;
    mutable bool chol_ready_ = false;
};

// Measurement function value for one spec: 1 or 2 real components.
Eigen::VectorXd eval_measurement(const VoltageState& state, const MeasurementSpec& spec,
                                 const NetworkModel& model, const AdmittanceMatrix& adm);

// Concatenation of eval_measurement over the set's specs.
Eigen::VectorXd composite_H(const VoltageState& state, const MeasurementSet& set,
                            const NetworkModel& model, const AdmittanceMatrix& adm);

// Analytic partials of composite_H with respect to the free state
// x = [v of non-reference nodes..., theta of non-reference nodes...].
Eigen::MatrixXd jacobian_H(const VoltageState& state, const MeasurementSet& set,
                           const NetworkModel& model, const AdmittanceMatrix& adm);

// z = H(V_true) + noise_scale * eta, eta component-wise Gaussian with the
// spec sigmas. noise_scale 0 yields exact measurements while keeping the
// covariance (and therefore the estimator weighting) intact.
MeasurementSet simulate_sensors(const VoltageState& v_true, const std::vector<MeasurementSpec>& specs,
                                const NetworkModel& model, const AdmittanceMatrix& adm,
                                std::uint64_t rng_seed, double noise_scale = 1.0);

// Append pseudo power-injection measurements at the given nodes, using the
// sample means as observations (sign-converted to injection convention) and
// the covariance diagonals as variances. Unloaded nodes are skipped.
MeasurementSet attach_pseudo(const MeasurementSet& set, const PseudoStats& stats,
                             const std::vector<NodeId>& nodes, const NetworkModel& model);

// Append zero-injection constraints (z = 0, small sigma) at every
// non-reference node with zero nominal load. Without these the WLS problem
// is underdetermined on feeders with unloaded nodes.
MeasurementSet attach_zero_injection(const MeasurementSet& set, const NetworkModel& model,
                                     double sigma = 1e-6);

// Sensor placement file: JSON array of {kind, bus, phase, [to], [sigma]}.
std::vector<MeasurementSpec> load_sensor_specs(const std::string& path,
                                               const NetworkModel& model);
std::vector<MeasurementSpec> load_sensor_specs_from_string(const std::string& text,
                                                           const std::string& origin,
                                                           const NetworkModel& model);

}  // namespace dsse

#endif
