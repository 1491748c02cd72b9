#ifndef DSSE_PROFILES_HPP
#define DSSE_PROFILES_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dsse/network.hpp"

namespace dsse {

constexpr int kHoursPerYear = 8760;  // 365 * 24 hourly scenarios

// Dimensionless hourly multiplier series (load shape or PV output).
struct TimeSeries {
    Eigen::VectorXd values;
    std::string label;

    int size() const { return static_cast<int>(values.size()); }
};

// One value per line, optional '#' comments and blank lines. When
// `require_yearlong`, the series must contain exactly 8760 entries.
TimeSeries load_profile(const std::string& path, bool require_yearlong = false);
TimeSeries load_profile_from_string(const std::string& text, const std::string& origin,
                                    bool require_yearlong = false);

// Rescale so the series peak equals target_peak exactly; zeros stay zero.
TimeSeries normalize_pv(const TimeSeries& series, double target_peak);

// Net-load scenario k: P = (alpha_k - s_k) P_bar + eps o P_bar,
// Q = alpha_k Q_bar + eps o Q_bar, with eps ~ U[-c alpha_k, c alpha_k]^M
// drawn from a stream keyed by (seed, k).
struct Scenario {
    int index = 0;
    double alpha = 0.0;
    double solar = 0.0;
    Eigen::VectorXd epsilon;  // length M
    Eigen::VectorXd P, Q;     // per-unit, load-positive

    // Injection for the load-flow solver (generation-positive).
    Eigen::VectorXcd injections() const;
};

Scenario build_scenario(int k, const TimeSeries& load, const TimeSeries& solar, double c,
                        std::uint64_t seed, const NetworkModel& model);

struct PseudoStats {
    Eigen::VectorXd P_hat, Q_hat;      // sample means, load-positive
    Eigen::MatrixXd Sigma_P, Sigma_Q;  // unbiased sample covariances
};

// Sample mean and covariance over >= 2 scenarios; symmetry enforced.
PseudoStats pseudo_stats(const std::vector<Scenario>& scenarios);

// Scenarios for a contiguous index window [start, start + count).
std::vector<Scenario> build_scenarios(int start, int count, const TimeSeries& load,
                                      const TimeSeries& solar, double c, std::uint64_t seed,
                                      const NetworkModel& model);

}  // namespace dsse

#endif
