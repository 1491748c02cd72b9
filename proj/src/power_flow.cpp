#include "dsse/power_flow.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/LU>

namespace dsse {

Eigen::VectorXcd VoltageState::complex() const {
    Eigen::VectorXcd v(magnitude.size());
    for (Eigen::Index i = 0; i < magnitude.size(); ++i)
        v(i) = std::polar(magnitude(i), angle(i));
    return v;
}

void VoltageState::wrap_angles() {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    for (Eigen::Index i = 0; i < angle.size(); ++i) {
        double a = std::remainder(angle(i), two_pi);
        if (a <= -std::numbers::pi) a += two_pi;
        angle(i) = a;
    }
}

VoltageState flat_start(const NetworkModel& model) {
    const int m = model.node_count();
    VoltageState st;
    st.magnitude = Eigen::VectorXd::Constant(m, model.reference_magnitude());
    st.angle.resize(m);
    for (int i = 0; i < m; ++i) st.angle(i) = reference_angle(model.node(i).phase);
    return st;
}

namespace {

Eigen::VectorXcd complex_injection(const Eigen::MatrixXcd& Y, const Eigen::VectorXcd& V) {
    return V.cwiseProduct((Y * V).conjugate());
}

}  // namespace

Eigen::VectorXd power_mismatch(const NetworkModel& model, const AdmittanceMatrix& adm,
                               const VoltageState& state, const Eigen::VectorXcd& injections) {
    Eigen::VectorXcd V = state.complex();
    Eigen::VectorXcd S = complex_injection(adm.Y, V);
    Eigen::VectorXd mis = Eigen::VectorXd::Zero(model.node_count());
    for (int i = 0; i < model.node_count(); ++i)
        if (!model.is_reference_node(i)) mis(i) = std::abs(injections(i) - S(i));
    return mis;
}

VoltageState solve_power_flow(const NetworkModel& model, const AdmittanceMatrix& adm,
                              const Eigen::VectorXcd& injections, const PowerFlowOptions& options) {
    const int m = model.node_count();
    if (injections.size() != m) throw Error("injection vector length does not match node count");
    if (!injections.allFinite()) throw Error("injections contain non-finite entries");

    const int nref = model.reference_node_count();
    const int nf = m - nref;  // free nodes: all non-reference, indices nref..m-1

    VoltageState st = flat_start(model);
    const Eigen::MatrixXcd& Y = adm.Y;

    double worst = 0.0;
    for (int iter = 0; iter <= options.max_iter; ++iter) {
        Eigen::VectorXcd V = st.complex();
        Eigen::VectorXcd YV = Y * V;
        Eigen::VectorXcd S = V.cwiseProduct(YV.conjugate());

        worst = 0.0;
        for (int i = nref; i < m; ++i) worst = std::max(worst, std::abs(injections(i) - S(i)));
        if (worst < options.tol) {
            st.wrap_angles();
            return st;
        }
        if (iter == options.max_iter) break;

        // J = [dP/dtheta dP/dv; dQ/dtheta dQ/dv] over free nodes, from the
        // complex derivative of S_i = V_i (YV)_i^*.
        Eigen::MatrixXd J(2 * nf, 2 * nf);
        Eigen::VectorXd rhs(2 * nf);
        for (int i = nref; i < m; ++i) {
            const int r = i - nref;
            Complex ds_dtheta_i = Complex(0, 1) * V(i) * std::conj(YV(i));
            for (int k = nref; k < m; ++k) {
                const int c = k - nref;
                Complex yv = Y(i, k) * V(k);
                Complex ds_dtheta = -Complex(0, 1) * V(i) * std::conj(yv);
                Complex ds_dv = V(i) * std::conj(Y(i, k)) * std::conj(V(k)) / st.magnitude(k);
                if (k == i) {
                    ds_dtheta += ds_dtheta_i;
                    ds_dv += (V(i) / st.magnitude(i)) * std::conj(YV(i));
                }
                J(r, c) = ds_dtheta.real();
                J(r, nf + c) = ds_dv.real();
                J(nf + r, c) = ds_dtheta.imag();
                J(nf + r, nf + c) = ds_dv.imag();
            }
            Complex mis = injections(i) - S(i);
            rhs(r) = mis.real();
            rhs(nf + r) = mis.imag();
        }

        Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
        Eigen::VectorXd step = lu.solve(rhs);
        if (!step.allFinite()) {
            std::ostringstream os;
            os << "power flow Jacobian solve produced non-finite step at iteration " << iter;
            throw PowerFlowError(os.str(), worst);
        }
        for (int k = nref; k < m; ++k) {
            st.angle(k) += step(k - nref);
            double v = st.magnitude(k) + step(nf + k - nref);
            st.magnitude(k) = std::max(v, 1e-6);  // keep the polar chart valid
        }
    }

    std::ostringstream os;
    os << "power flow did not converge within " << options.max_iter
       << " iterations (max mismatch " << worst << " pu)";
    throw PowerFlowError(os.str(), worst);
}

}  // namespace dsse
