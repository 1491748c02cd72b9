#include "dsse/profiles.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "dsse/rng.hpp"

namespace dsse {

TimeSeries load_profile_from_string(const std::string& text, const std::string& origin,
                                    bool require_yearlong) {
    std::istringstream in(text);
    std::vector<double> vals;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto begin = line.find_first_not_of(" \t\r");
        if (begin == std::string::npos) continue;
        auto end = line.find_last_not_of(" \t\r");
        std::string tok = line.substr(begin, end - begin + 1);

        double v;
        size_t consumed = 0;
        try {
            v = std::stod(tok, &consumed);
        } catch (const std::exception&) {
            throw Error(origin + ":" + std::to_string(lineno) + ": not a number: '" + tok + "'");
        }
        if (consumed != tok.size() || !std::isfinite(v))
            throw Error(origin + ":" + std::to_string(lineno) + ": not a number: '" + tok + "'");
        if (v < 0)
            throw Error(origin + ":" + std::to_string(lineno) + ": negative multiplier " + tok);
        vals.push_back(v);
    }
    if (require_yearlong && vals.size() != kHoursPerYear)
        throw Error(origin + ": expected " + std::to_string(kHoursPerYear) + " hourly values, got " +
                    std::to_string(vals.size()));

    TimeSeries ts;
    ts.values = Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
    ts.label = origin;
    return ts;
}

TimeSeries load_profile(const std::string& path, bool require_yearlong) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open profile file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return load_profile_from_string(ss.str(), path, require_yearlong);
}

TimeSeries normalize_pv(const TimeSeries& series, double target_peak) {
    if (series.size() == 0) throw Error("cannot normalize an empty series");
    const double peak = series.values.maxCoeff();
    if (peak <= 0) throw Error("cannot normalize an all-zero series");
    TimeSeries out;
    out.values = series.values * (target_peak / peak);
    out.label = series.label;
    return out;
}

Eigen::VectorXcd Scenario::injections() const {
    Eigen::VectorXcd s(P.size());
    for (Eigen::Index i = 0; i < P.size(); ++i) s(i) = Complex(-P(i), -Q(i));
    return s;
}

Scenario build_scenario(int k, const TimeSeries& load, const TimeSeries& solar, double c,
                        std::uint64_t seed, const NetworkModel& model) {
    if (k < 0 || k >= load.size() || k >= solar.size())
        throw Error("scenario index " + std::to_string(k) + " out of range");
    if (c < 0) throw Error("perturbation bound c must be non-negative");

    const int m = model.node_count();
    Scenario sc;
    sc.index = k;
    sc.alpha = load.values(k);
    sc.solar = solar.values(k);

    Rng rng = Rng::keyed(seed, 0x7363656eULL /* "scen" */, static_cast<std::uint64_t>(k));
    const double bound = c * sc.alpha;
    sc.epsilon.resize(m);
    for (int i = 0; i < m; ++i) sc.epsilon(i) = rng.uniform(-bound, bound);

    const Eigen::VectorXd p_bar = model.nominal_load().real();
    const Eigen::VectorXd q_bar = model.nominal_load().imag();
    sc.P = (sc.alpha - sc.solar) * p_bar + sc.epsilon.cwiseProduct(p_bar);
    sc.Q = sc.alpha * q_bar + sc.epsilon.cwiseProduct(q_bar);
    return sc;
}

std::vector<Scenario> build_scenarios(int start, int count, const TimeSeries& load,
                                      const TimeSeries& solar, double c, std::uint64_t seed,
                                      const NetworkModel& model) {
    std::vector<Scenario> out;
    out.reserve(count);
    for (int k = start; k < start + count; ++k)
        out.push_back(build_scenario(k, load, solar, c, seed, model));
    return out;
}

PseudoStats pseudo_stats(const std::vector<Scenario>& scenarios) {
    const int n = static_cast<int>(scenarios.size());
    if (n < 2) throw Error("pseudo statistics need at least two scenarios");
    const Eigen::Index m = scenarios[0].P.size();

    PseudoStats st;
    st.P_hat = Eigen::VectorXd::Zero(m);
    st.Q_hat = Eigen::VectorXd::Zero(m);
    for (const auto& sc : scenarios) {
        st.P_hat += sc.P;
        st.Q_hat += sc.Q;
    }
    st.P_hat /= n;
    st.Q_hat /= n;

    st.Sigma_P = Eigen::MatrixXd::Zero(m, m);
    st.Sigma_Q = Eigen::MatrixXd::Zero(m, m);
    for (const auto& sc : scenarios) {
        Eigen::VectorXd dp = sc.P - st.P_hat;
        Eigen::VectorXd dq = sc.Q - st.Q_hat;
        st.Sigma_P.noalias() += dp * dp.transpose();
        st.Sigma_Q.noalias() += dq * dq.transpose();
    }
    st.Sigma_P /= (n - 1);
    st.Sigma_Q /= (n - 1);
    st.Sigma_P = 0.5 * (st.Sigma_P + st.Sigma_P.transpose()).eval();
    st.Sigma_Q = 0.5 * (st.Sigma_Q + st.Sigma_Q.transpose()).eval();
    return st;
}

}  // namespace dsse
