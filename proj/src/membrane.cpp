#include "epihom/membrane.hpp"

#include <algorithm>
#include <cmath>

namespace epihom {

ModelParams ModelParams::defaults() {
    ModelParams p;
    p.beta = pore_conductance_coefficient(p);
    return p;
}

void ModelParams::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0)) throw Error("config-invalid", std::string(name) + " must be positive");
    };
    positive(sigma_i, "sigma_i");
    positive(sigma_e, "sigma_e");
    positive(L, "L");
    positive(r, "r");
    positive(delta, "delta");
    positive(r_p, "r_p");
    positive(sigma_p, "sigma_p");
    positive(V_ep, "V_ep");
    positive(alpha, "alpha");
    positive(N0, "N0");
    positive(c_m, "c_m");
    positive(sigma_m0, "sigma_m0");
    positive(beta, "beta");
    positive(M, "M");
    positive(tau_ep, "tau_ep");
    positive(tau_res, "tau_res");
    positive(k_ep, "k_ep");
    if (K < 0.0) throw Error("config-invalid", "K must be non-negative");
    if (!(q > 1.0)) throw Error("config-invalid", "q must exceed 1");
    if (!(M > V_ep)) throw Error("config-invalid", "cutoff level M must exceed V_ep");
}

double pore_density_rate(double v, double N, const ModelParams& p) {
    double z = (v / p.V_ep) * (v / p.V_ep);
    return p.alpha * std::exp(z) * (1.0 - (N / p.N0) * std::exp(-p.q * z));
}

double pore_density_equilibrium(double v, const ModelParams& p) {
    double z = (v / p.V_ep) * (v / p.V_ep);
    return p.N0 * std::exp(p.q * z);
}

double pore_density_closed_form(const VoltageHistory& history, double t,
                                const ModelParams& p) {
    if (history.times.empty())
        throw Error("no-history", "voltage history is empty");
    if (t < history.times.front() || t > history.times.back() * (1.0 + 1e-12))
        throw Error("no-history", "evaluation time outside the sampled history");

    // Assemble the grid up to t, interpolating the final partial panel.
    std::vector<double> ts, vs;
    ts.reserve(history.times.size());
    vs.reserve(history.times.size());
    for (std::size_t i = 0; i < history.times.size(); ++i) {
        if (history.times[i] <= t) {
            ts.push_back(history.times[i]);
            vs.push_back(history.values[i]);
        } else {
            double t0 = history.times[i - 1], t1 = history.times[i];
            double w = (t - t0) / (t1 - t0);
            ts.push_back(t);
            vs.push_back((1.0 - w) * history.values[i - 1] + w * history.values[i]);
            break;
        }
    }
    if (ts.back() < t && std::abs(ts.back() - t) > 1e-12 * std::max(1.0, t))
        ts.back() = t;

    std::size_t n = ts.size();
    std::vector<double> decay(n), gain(n), cum(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double z = (vs[i] / p.V_ep) * (vs[i] / p.V_ep);
        decay[i] = (p.alpha / p.N0) * std::exp((1.0 - p.q) * z);
        gain[i] = p.alpha * std::exp(z);
    }
    for (std::size_t i = 1; i < n; ++i)
        cum[i] = cum[i - 1] + 0.5 * (ts[i] - ts[i - 1]) * (decay[i] + decay[i - 1]);

    double total = cum[n - 1];
    double result = std::exp(-total) * p.N0;
    // Outer integral: trapezoid of gain(s) e^{-(cum(t)-cum(s))} over s.
    double prev = gain[0] * std::exp(-(total - cum[0]));
    for (std::size_t i = 1; i < n; ++i) {
        double cur = gain[i] * std::exp(-(total - cum[i]));
        result += 0.5 * (ts[i] - ts[i - 1]) * (prev + cur);
        prev = cur;
    }
    return result;
}

double relaxation_rate(double v, double N, const ModelParams& p) {
    double target = 0.5 * (1.0 + std::tanh(p.k_ep * (std::abs(v) - p.V_ep)));
    return std::max((target - N) / p.tau_ep, (target - N) / p.tau_res);
}

double membrane_conductivity(MembraneModel model, double v, double N,
                             const ModelParams& p) {
    switch (model) {
        case MembraneModel::Static:
            return p.sigma_m0 + p.K * (std::exp(p.beta_exp * v) - 1.0);
        case MembraneModel::NeuKrassowska:
        case MembraneModel::Relaxation:
            if (N < 0.0)
                throw Error("invalid-pore-density", "negative pore density");
            return p.sigma_m0 + p.beta * N;
    }
    throw Error("config-invalid", "unknown membrane model");
}

double clamp_voltage(double v, double M) {
    if (v > M) return M;
    if (v < -M) return -M;
    return v;
}

double pore_conductance_coefficient(const ModelParams& p) {
    return 2.0 * M_PI * p.r_p * p.r_p * p.sigma_p * p.delta /
           (M_PI * p.r_p + 2.0 * p.delta);
}

double advance_pore_density(MembraneModel model, double v, double N, double dt,
                            const ModelParams& p) {
    auto rate = [&](double n) {
        return model == MembraneModel::Relaxation ? relaxation_rate(v, n, p)
                                                  : pore_density_rate(v, n, p);
    };
    double k1 = rate(N);
    double k2 = rate(N + 0.5 * dt * k1);
    double k3 = rate(N + 0.5 * dt * k2);
    double k4 = rate(N + dt * k3);
    return N + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

} // namespace epihom
