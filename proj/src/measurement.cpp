#include "dsse/measurement.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dsse/rng.hpp"

namespace dsse {

namespace {

constexpr double kMagnitudeFloor = 1e-12;  // guards d|z|/dz at z = 0

struct BranchRef {
    const Branch* branch;
    bool flipped;  // spec names (to, from) relative to the stored branch
    int phase_row;
};

BranchRef find_branch(const NetworkModel& model, const MeasurementSpec& spec) {
    for (const auto& br : model.branches()) {
        bool fwd = br.from_bus == spec.bus && br.to_bus == spec.to_bus;
        bool rev = br.from_bus == spec.to_bus && br.to_bus == spec.bus;
        if (!fwd && !rev) continue;
        for (size_t p = 0; p < br.phases.size(); ++p)
            if (br.phases[p] == spec.phase)
                return BranchRef{&br, rev, static_cast<int>(p)};
        throw Error("branch " + spec.bus + "-" + spec.to_bus + " does not carry phase " +
                    std::string(1, phase_letter(spec.phase)));
    }
    throw Error("no branch between " + spec.bus + " and " + spec.to_bus);
}

// Complex series current through the spec'd branch phase, i -> j, plus its
// complex partials with respect to every node voltage (optional).
Complex branch_current(const NetworkModel& model, const MeasurementSpec& spec,
                       const Eigen::VectorXcd& V, Eigen::VectorXcd* dI_dV) {
    BranchRef ref = find_branch(model, spec);
    const Branch& br = *ref.branch;
    const int k = static_cast<int>(br.phases.size());
    Eigen::MatrixXcd y = (br.series_impedance_ohm / model.base_ohm()).inverse();

    const std::string& from = ref.flipped ? br.to_bus : br.from_bus;
    const std::string& to = ref.flipped ? br.from_bus : br.to_bus;

    Complex current(0, 0);
    if (dI_dV) dI_dV->setZero(V.size());
    for (int q = 0; q < k; ++q) {
        int fi = model.node_index(from, br.phases[q]);
        int ti = model.node_index(to, br.phases[q]);
        Complex w = y(ref.phase_row, q);
        current += w * (V(fi) - V(ti));
        if (dI_dV) {
            (*dI_dV)(fi) += w;
            (*dI_dV)(ti) -= w;
        }
    }
    return current;
}

}  // namespace

const char* meas_kind_name(MeasKind k) {
    switch (k) {
        case MeasKind::BranchCurrentPhasor: return "branch_current_phasor";
        case MeasKind::BranchCurrentMagnitude: return "branch_current_magnitude";
        case MeasKind::CurrentInjectionPhasor: return "current_injection_phasor";
        case MeasKind::VoltageMagnitude: return "voltage_magnitude";
        case MeasKind::VoltageAngle: return "voltage_angle";
        case MeasKind::PowerInjection: return "power_injection";
    }
    return "?";
}

MeasKind meas_kind_from_name(const std::string& name) {
    for (MeasKind k : {MeasKind::BranchCurrentPhasor, MeasKind::BranchCurrentMagnitude,
                       MeasKind::CurrentInjectionPhasor, MeasKind::VoltageMagnitude,
                       MeasKind::VoltageAngle, MeasKind::PowerInjection})
        if (name == meas_kind_name(k)) return k;
    throw Error("unknown measurement kind '" + name + "'");
}

int meas_component_count(MeasKind k) {
    switch (k) {
        case MeasKind::BranchCurrentPhasor:
        case MeasKind::CurrentInjectionPhasor:
        case MeasKind::PowerInjection:
            return 2;
        default:
            return 1;
    }
}

double MeasurementSpec::sigma(int component) const {
    double s = (component == 1 && sigma_b > 0) ? sigma_b : sigma_a;
    return s;
}

std::string MeasurementSpec::describe() const {
    std::string s = meas_kind_name(kind);
    s += " " + bus;
    if (!to_bus.empty()) s += "-" + to_bus;
    s += ".";
    s += phase_letter(phase);
    return s;
}

MeasurementSet::MeasurementSet(std::vector<MeasurementSpec> specs, Eigen::VectorXd z)
    : specs_(std::move(specs)), z_(std::move(z)) {
    int dim = 0;
    for (const auto& s : specs_) {
        for (int c = 0; c < s.components(); ++c)
            if (s.sigma(c) <= 0)
                throw Error("non-positive sigma on measurement " + s.describe());
        dim += s.components();
    }
    if (dim != z_.size())
        throw Error("measurement vector length " + std::to_string(z_.size()) +
                    " does not match spec components " + std::to_string(dim));
    sigma_ = Eigen::MatrixXd::Zero(dim, dim);
    int at = 0;
    for (const auto& s : specs_)
        for (int c = 0; c < s.components(); ++c, ++at) sigma_(at, at) = s.sigma(c) * s.sigma(c);
}

const Eigen::MatrixXd& MeasurementSet::chol_lower() const {
    if (!chol_ready_) {
        Eigen::LLT<Eigen::MatrixXd> llt(sigma_);
        if (llt.info() != Eigen::Success)
            throw Error("measurement covariance is not positive definite");
        chol_ = llt.matrixL();
        chol_ready_ = true;
    }
    return chol_;
}

Eigen::VectorXd eval_measurement(const VoltageState& state, const MeasurementSpec& spec,
                                 const NetworkModel& model, const AdmittanceMatrix& adm) {
    Eigen::VectorXcd V = state.complex();
    switch (spec.kind) {
        case MeasKind::BranchCurrentPhasor: {
            Complex c = branch_current(model, spec, V, nullptr);
            return Eigen::Vector2d(c.real(), c.imag());
        }
        case MeasKind::BranchCurrentMagnitude: {
            Complex c = branch_current(model, spec, V, nullptr);
            return Eigen::VectorXd::Constant(1, std::abs(c));
        }
        case MeasKind::CurrentInjectionPhasor: {
            int i = model.node_index(spec.bus, spec.phase);
            Complex c = adm.Y.row(i) * V;
            return Eigen::Vector2d(c.real(), c.imag());
        }
        case MeasKind::VoltageMagnitude: {
            int i = model.node_index(spec.bus, spec.phase);
            return Eigen::VectorXd::Constant(1, state.magnitude(i));
        }
        case MeasKind::VoltageAngle: {
            int i = model.node_index(spec.bus, spec.phase);
            return Eigen::VectorXd::Constant(1, state.angle(i));
        }
        case MeasKind::PowerInjection: {
            int i = model.node_index(spec.bus, spec.phase);
            Complex inj = V(i) * std::conj(Complex(adm.Y.row(i) * V));
            return Eigen::Vector2d(inj.real(), inj.imag());
        }
    }
    throw Error("unreachable measurement kind");
}

Eigen::VectorXd composite_H(const VoltageState& state, const MeasurementSet& set,
                            const NetworkModel& model, const AdmittanceMatrix& adm) {
    Eigen::VectorXd h(set.dimension());
    int at = 0;
    for (const auto& spec : set.specs()) {
        Eigen::VectorXd v = eval_measurement(state, spec, model, adm);
        h.segment(at, v.size()) = v;
        at += static_cast<int>(v.size());
    }
    return h;
}

Eigen::MatrixXd jacobian_H(const VoltageState& state, const MeasurementSet& set,
                           const NetworkModel& model, const AdmittanceMatrix& adm) {
    const int m = model.node_count();
    const int nref = model.reference_node_count();
    const int nf = m - nref;
    Eigen::VectorXcd V = state.complex();
    Eigen::VectorXcd YV = adm.Y * V;

    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(set.dimension(), 2 * nf);

    // Writes the rows for a complex quantity with known complex partials
    // dq/dV. Columns: per free node k, d/dv_k and d/dtheta_k via
    // dV_k/dv_k = V_k / v_k and dV_k/dtheta_k = i V_k.
    auto fill_complex_rows = [&](int row, const Eigen::VectorXcd& dq_dV, bool magnitude_of,
                                 Complex value) {
        for (int k = nref; k < m; ++k) {
            Complex dV_dv = V(k) / state.magnitude(k);
            Complex dq_dv = dq_dV(k) * dV_dv;
            Complex dq_dth = dq_dV(k) * Complex(0, 1) * V(k);
            int cv = k - nref;
            int cth = nf + k - nref;
            if (magnitude_of) {
                double mag = std::max(std::abs(value), kMagnitudeFloor);
                J(row, cv) = (value.real() * dq_dv.real() + value.imag() * dq_dv.imag()) / mag;
                J(row, cth) = (value.real() * dq_dth.real() + value.imag() * dq_dth.imag()) / mag;
            } else {
                J(row, cv) = dq_dv.real();
                J(row, cth) = dq_dth.real();
                J(row + 1, cv) = dq_dv.imag();
                J(row + 1, cth) = dq_dth.imag();
            }
        }
    };

    int row = 0;
    for (const auto& spec : set.specs()) {
        switch (spec.kind) {
            case MeasKind::BranchCurrentPhasor: {
                Eigen::VectorXcd dI(m);
                branch_current(model, spec, V, &dI);
                fill_complex_rows(row, dI, false, Complex(0, 0));
                break;
            }
            case MeasKind::BranchCurrentMagnitude: {
                Eigen::VectorXcd dI(m);
                Complex c = branch_current(model, spec, V, &dI);
                fill_complex_rows(row, dI, true, c);
                break;
            }
            case MeasKind::CurrentInjectionPhasor: {
                int i = model.node_index(spec.bus, spec.phase);
                Eigen::VectorXcd dI = adm.Y.row(i).transpose();
                fill_complex_rows(row, dI, false, Complex(0, 0));
                break;
            }
            case MeasKind::VoltageMagnitude: {
                int i = model.node_index(spec.bus, spec.phase);
                if (i >= nref) J(row, i - nref) = 1.0;
                break;
            }
            case MeasKind::VoltageAngle: {
                int i = model.node_index(spec.bus, spec.phase);
                if (i >= nref) J(row, nf + i - nref) = 1.0;
                break;
            }
            case MeasKind::PowerInjection: {
                // S_i = V_i (YV)_i^*: not complex-differentiable in V, so the
                // generic complex-partial path does not apply; expand directly.
                int i = model.node_index(spec.bus, spec.phase);
                for (int k = nref; k < m; ++k) {
                    Complex dS_dth = -Complex(0, 1) * V(i) * std::conj(adm.Y(i, k) * V(k));
                    Complex dS_dv = V(i) * std::conj(adm.Y(i, k) * V(k)) / state.magnitude(k);
                    if (k == i) {
                        dS_dth += Complex(0, 1) * V(i) * std::conj(YV(i));
                        dS_dv += (V(i) / state.magnitude(i)) * std::conj(YV(i));
                    }
                    int cv = k - nref;
                    int cth = nf + k - nref;
                    J(row, cv) = dS_dv.real();
                    J(row, cth) = dS_dth.real();
                    J(row + 1, cv) = dS_dv.imag();
                    J(row + 1, cth) = dS_dth.imag();
                }
                break;
            }
        }
        row += spec.components();
    }
    return J;
}

MeasurementSet simulate_sensors(const VoltageState& v_true, const std::vector<MeasurementSpec>& specs,
                                const NetworkModel& model, const AdmittanceMatrix& adm,
                                std::uint64_t rng_seed, double noise_scale) {
    int dim = 0;
    for (const auto& s : specs) dim += s.components();
    Eigen::VectorXd z(dim);
    Rng rng = Rng::keyed(rng_seed, 0x73656e73ULL /* "sens" */, 0);
    int at = 0;
    for (const auto& spec : specs) {
        Eigen::VectorXd h = eval_measurement(v_true, spec, model, adm);
        for (int c = 0; c < h.size(); ++c) {
            double eta = rng.normal() * spec.sigma(c) * noise_scale;
            z(at++) = h(c) + eta;
        }
    }
    return MeasurementSet(specs, std::move(z));
}

MeasurementSet attach_pseudo(const MeasurementSet& set, const PseudoStats& stats,
                             const std::vector<NodeId>& nodes, const NetworkModel& model) {
    std::vector<MeasurementSpec> specs = set.specs();
    std::vector<double> zvals(set.z().data(), set.z().data() + set.z().size());

    for (const auto& node : nodes) {
        const Complex load = model.nominal_load()(node.index);
        if (load == Complex(0, 0)) continue;
        const double var_p = stats.Sigma_P(node.index, node.index);
        const double var_q = stats.Sigma_Q(node.index, node.index);
        if (var_p <= 0 || var_q <= 0)
            throw Error("zero pseudo-measurement variance at loaded node " + node.bus + "." +
                        phase_letter(node.phase));
        MeasurementSpec spec;
        spec.kind = MeasKind::PowerInjection;
        spec.bus = node.bus;
        spec.phase = node.phase;
        spec.sigma_a = std::sqrt(var_p);
        spec.sigma_b = std::sqrt(var_q);
        spec.is_pseudo = true;
        specs.push_back(spec);
        // Load-positive statistics observe the negated injection.
        zvals.push_back(-stats.P_hat(node.index));
        zvals.push_back(-stats.Q_hat(node.index));
    }
    Eigen::VectorXd z = Eigen::Map<Eigen::VectorXd>(zvals.data(), static_cast<Eigen::Index>(zvals.size()));
    return MeasurementSet(std::move(specs), std::move(z));
}

MeasurementSet attach_zero_injection(const MeasurementSet& set, const NetworkModel& model,
                                     double sigma) {
    std::vector<MeasurementSpec> specs = set.specs();
    std::vector<double> zvals(set.z().data(), set.z().data() + set.z().size());
    for (const auto& node : model.nodes()) {
        if (model.is_reference_node(node.index)) continue;
        if (model.nominal_load()(node.index) != Complex(0, 0)) continue;
        MeasurementSpec spec;
        spec.kind = MeasKind::PowerInjection;
        spec.bus = node.bus;
        spec.phase = node.phase;
        spec.sigma_a = sigma;
        spec.sigma_b = sigma;
        spec.is_pseudo = true;
        specs.push_back(spec);
        zvals.push_back(0.0);
        zvals.push_back(0.0);
    }
    Eigen::VectorXd z = Eigen::Map<Eigen::VectorXd>(zvals.data(), static_cast<Eigen::Index>(zvals.size()));
    return MeasurementSet(std::move(specs), std::move(z));
}

std::vector<MeasurementSpec> load_sensor_specs_from_string(const std::string& text,
                                                           const std::string& origin,
                                                           const NetworkModel& model) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(origin + ": " + e.what());
    }
    if (!doc.is_array()) throw Error(origin + ": sensor file must be a JSON array");

    std::vector<MeasurementSpec> specs;
    try {
        for (size_t i = 0; i < doc.size(); ++i) {
            const auto& js = doc[i];
            MeasurementSpec spec;
            spec.kind = meas_kind_from_name(js.at("kind").get<std::string>());
            spec.bus = js.at("bus").get<std::string>();
            spec.phase = phase_from_letter(js.at("phase").get<std::string>().at(0));
            if (js.contains("to")) spec.to_bus = js["to"].get<std::string>();
            spec.sigma_a = js.value("sigma", 0.005);
            if (js.contains("sigma2")) spec.sigma_b = js["sigma2"].get<double>();

            // Fail fast on placements that do not exist in the model.
            if (spec.kind == MeasKind::BranchCurrentPhasor ||
                spec.kind == MeasKind::BranchCurrentMagnitude) {
                if (spec.to_bus.empty())
                    throw Error("sensor " + std::to_string(i) + " needs a 'to' bus");
                find_branch(model, spec);
            } else {
                model.node_index(spec.bus, spec.phase);
            }
            specs.push_back(spec);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(origin + ": " + e.what());
    }
    return specs;
}

std::vector<MeasurementSpec> load_sensor_specs(const std::string& path, const NetworkModel& model) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open sensor file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return load_sensor_specs_from_string(ss.str(), path, model);
}

}  // namespace dsse
