#include "epihom/config.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace epihom {

using ordered_json = nlohmann::ordered_json;

std::string experiment_name(ExperimentId id) {
    switch (id) {
        case ExperimentId::ConductivityRatio: return "conductivity_ratio";
        case ExperimentId::Excentricity: return "excentricity";
        case ExperimentId::VolumeFraction: return "volume_fraction";
        case ExperimentId::LatticeAngle: return "lattice_angle";
        case ExperimentId::SingleCell: return "single_cell";
        case ExperimentId::Convergence: return "convergence";
    }
    return "unknown";
}

namespace {

ExperimentId experiment_from_name(const std::string& name) {
    for (ExperimentId id : {ExperimentId::ConductivityRatio, ExperimentId::Excentricity,
                            ExperimentId::VolumeFraction, ExperimentId::LatticeAngle,
                            ExperimentId::SingleCell, ExperimentId::Convergence})
        if (experiment_name(id) == name) return id;
    throw Error("config-invalid", "unknown experiment id '" + name + "'");
}

void reject_unknown_keys(const ordered_json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
    for (const auto& item : j.items())
        if (!allowed.count(item.key()))
            throw Error("config-invalid",
                        "unknown key '" + item.key() + "' in " + where);
}

double number_or(const ordered_json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number())
        throw Error("config-invalid", std::string("key '") + key + "' must be a number");
    return j.at(key).get<double>();
}

int int_or(const ordered_json& j, const char* key, int fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number_integer())
        throw Error("config-invalid", std::string("key '") + key + "' must be an integer");
    return j.at(key).get<int>();
}

} // namespace

void SweepSpec::validate() const {
    geometry.validate();
    params.validate();
    if (swept_values.empty())
        throw Error("config-invalid", "swept_values must not be empty");
    for (std::size_t i = 1; i < swept_values.size(); ++i)
        if (swept_values[i] < swept_values[i - 1])
            throw Error("config-invalid", "swept_values must be sorted ascending");
    switch (experiment) {
        case ExperimentId::ConductivityRatio:
            for (double v : swept_values)
                if (!(v > 0.0))
                    throw Error("config-invalid", "conductivity ratio must be positive");
            break;
        case ExperimentId::Excentricity:
            for (double v : swept_values)
                if (!(v > 0.0))
                    throw Error("config-invalid", "excentricity a/b must be positive");
            break;
        case ExperimentId::VolumeFraction:
            for (double v : swept_values)
                if (!(v > 0.0 && v < 1.0))
                    throw Error("config-invalid", "volume fraction must lie in (0,1)");
            break;
        case ExperimentId::LatticeAngle:
            for (double v : swept_values)
                if (v < 0.0 || v >= M_PI)
                    throw Error("config-invalid", "lattice angle must lie in [0, pi)");
            break;
        case ExperimentId::Convergence:
            for (double v : swept_values)
                if (!(v > 0.0 && v <= 1.0))
                    throw Error("config-invalid", "eps values must lie in (0, 1]");
            break;
        case ExperimentId::SingleCell:
            break;
    }
    if (!(numerics.dt_s > 0.0) || !(numerics.T_s >= numerics.dt_s))
        throw Error("config-invalid", "invalid dt/T in numerics");
    if (numerics.t_samples < 2)
        throw Error("config-invalid", "t_samples must be at least 2");
    // Derived points must themselves be admissible.
    for (double v : swept_values) point_geometry(v).validate();
}

CellGeometry SweepSpec::point_geometry(double value) const {
    CellGeometry g = geometry;
    switch (experiment) {
        case ExperimentId::Excentricity: {
            double ab = g.inclusion_area() / M_PI;  // a*b held fixed
            g.shape = CellShape::Ellipse;
            g.semi_axis_a = std::sqrt(ab * value);
            g.semi_axis_b = std::sqrt(ab / value);
            break;
        }
        case ExperimentId::VolumeFraction: {
            double scale = std::sqrt(value / g.volume_fraction());
            if (g.shape == CellShape::Circle) {
                g.radius *= scale;
            } else {
                g.semi_axis_a *= scale;
                g.semi_axis_b *= scale;
            }
            break;
        }
        case ExperimentId::LatticeAngle:
            g.lattice_angle = value;
            break;
        default:
            break;
    }
    return g;
}

ModelParams SweepSpec::point_params(double value) const {
    ModelParams p = params;
    if (experiment == ExperimentId::ConductivityRatio)
        p.sigma_i = value * p.sigma_e;
    return p;
}

SweepSpec parse_config_text(const std::string& json_text) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const std::exception& e) {
        throw Error("config-invalid", std::string("JSON parse failure: ") + e.what());
    }
    reject_unknown_keys(j, {"experiment", "swept_values", "geometry", "params",
                            "membrane_model", "numerics", "output_dir"},
                        "top level");
    if (!j.contains("experiment"))
        throw Error("config-missing-key", "experiment");

    SweepSpec spec;
    spec.experiment = experiment_from_name(j.at("experiment").get<std::string>());

    if (j.contains("swept_values")) {
        if (!j.at("swept_values").is_array())
            throw Error("config-invalid", "swept_values must be an array");
        for (const auto& v : j.at("swept_values")) {
            if (!v.is_number())
                throw Error("config-invalid", "swept_values entries must be numbers");
            spec.swept_values.push_back(v.get<double>());
        }
    } else if (spec.experiment == ExperimentId::SingleCell) {
        spec.swept_values = {0.0};
    } else {
        throw Error("config-missing-key", "swept_values");
    }

    if (j.contains("output_dir"))
        spec.output_dir = j.at("output_dir").get<std::string>();

    if (j.contains("membrane_model")) {
        std::string m = j.at("membrane_model").get<std::string>();
        if (m == "neu_krassowska") spec.model = MembraneModel::NeuKrassowska;
        else if (m == "static") spec.model = MembraneModel::Static;
        else if (m == "relaxation") spec.model = MembraneModel::Relaxation;
        else throw Error("config-invalid", "unknown membrane_model '" + m + "'");
    }

    CellGeometry& g = spec.geometry;
    if (j.contains("geometry")) {
        const ordered_json& jg = j.at("geometry");
        reject_unknown_keys(jg, {"unit_cell_size_m", "shape", "radius_m", "a_m", "b_m",
                                 "lattice_angle_rad", "center_offset_m"},
                            "geometry");
        g.unit_cell_size = number_or(jg, "unit_cell_size_m", g.unit_cell_size);
        if (jg.contains("shape")) {
            std::string s = jg.at("shape").get<std::string>();
            if (s == "circle") g.shape = CellShape::Circle;
            else if (s == "ellipse") g.shape = CellShape::Ellipse;
            else throw Error("config-invalid", "unknown shape '" + s + "'");
        }
        g.radius = number_or(jg, "radius_m", g.radius);
        g.semi_axis_a = number_or(jg, "a_m", g.shape == CellShape::Circle ? g.radius : g.semi_axis_a);
        g.semi_axis_b = number_or(jg, "b_m", g.shape == CellShape::Circle ? g.radius : g.semi_axis_b);
        g.lattice_angle = number_or(jg, "lattice_angle_rad", g.lattice_angle);
        if (jg.contains("center_offset_m")) {
            const auto& c = jg.at("center_offset_m");
            if (!c.is_array() || c.size() != 2)
                throw Error("config-invalid", "center_offset_m must be [x, y]");
            g.center_offset = {c.at(0).get<double>(), c.at(1).get<double>()};
        }
    }

    ModelParams& p = spec.params;
    p = ModelParams::defaults();
    bool beta_given = false;
    if (j.contains("params")) {
        const ordered_json& jp = j.at("params");
        reject_unknown_keys(jp, {"sigma_i_S_per_m", "sigma_e_S_per_m", "delta_m", "r_p",
                                 "sigma_p", "V_ep_V", "alpha_per_m2_s", "N0_per_m2",
                                 "cm_F_per_m2", "q", "sigma_m0_S_per_m", "beta_S_per_m",
                                 "M_V", "u_ref_V", "K_S_per_m", "beta_exp_per_V",
                                 "tau_ep_s", "tau_res_s", "k_ep_per_V"},
                            "params");
        p.sigma_i = number_or(jp, "sigma_i_S_per_m", p.sigma_i);
        p.sigma_e = number_or(jp, "sigma_e_S_per_m", p.sigma_e);
        p.delta = number_or(jp, "delta_m", p.delta);
        p.r_p = number_or(jp, "r_p", p.r_p);
        p.sigma_p = number_or(jp, "sigma_p", p.sigma_p);
        p.V_ep = number_or(jp, "V_ep_V", p.V_ep);
        p.alpha = number_or(jp, "alpha_per_m2_s", p.alpha);
        p.N0 = number_or(jp, "N0_per_m2", p.N0);
        p.c_m = number_or(jp, "cm_F_per_m2", p.c_m);
        p.q = number_or(jp, "q", p.q);
        p.sigma_m0 = number_or(jp, "sigma_m0_S_per_m", p.sigma_m0);
        if (jp.contains("beta_S_per_m")) {
            p.beta = jp.at("beta_S_per_m").get<double>();
            beta_given = true;
        }
        p.M = number_or(jp, "M_V", p.M);
        p.u_ref = number_or(jp, "u_ref_V", p.u_ref);
        p.K = number_or(jp, "K_S_per_m", p.K);
        p.beta_exp = number_or(jp, "beta_exp_per_V", p.beta_exp);
        p.tau_ep = number_or(jp, "tau_ep_s", p.tau_ep);
        p.tau_res = number_or(jp, "tau_res_s", p.tau_res);
        p.k_ep = number_or(jp, "k_ep_per_V", p.k_ep);
    }
    if (!beta_given) p.beta = pore_conductance_coefficient(p);
    // Geometry is authoritative for the cell dimensions.
    p.L = g.unit_cell_size;
    p.r = g.shape == CellShape::Circle ? g.radius
                                       : std::sqrt(g.semi_axis_a * g.semi_axis_b);

    if (j.contains("numerics")) {
        const ordered_json& jn = j.at("numerics");
        reject_unknown_keys(jn, {"h_m", "t_samples", "dt_s", "T_s", "field_V_per_m",
                                 "solver_tol", "sample_points"},
                            "numerics");
        spec.numerics.h_m = number_or(jn, "h_m", spec.numerics.h_m);
        spec.numerics.t_samples = int_or(jn, "t_samples", spec.numerics.t_samples);
        spec.numerics.dt_s = number_or(jn, "dt_s", spec.numerics.dt_s);
        spec.numerics.T_s = number_or(jn, "T_s", spec.numerics.T_s);
        spec.numerics.field_V_per_m =
            number_or(jn, "field_V_per_m", spec.numerics.field_V_per_m);
        spec.numerics.solver_tol = number_or(jn, "solver_tol", spec.numerics.solver_tol);
        spec.numerics.sample_points =
            int_or(jn, "sample_points", spec.numerics.sample_points);
    }

    spec.validate();
    return spec;
}

SweepSpec parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw Error("config-invalid", "cannot open config file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

std::string normalized_dump(const SweepSpec& spec) {
    ordered_json j;
    j["experiment"] = experiment_name(spec.experiment);
    j["swept_values"] = spec.swept_values;
    ordered_json jg;
    jg["unit_cell_size_m"] = spec.geometry.unit_cell_size;
    jg["shape"] = spec.geometry.shape == CellShape::Circle ? "circle" : "ellipse";
    jg["radius_m"] = spec.geometry.radius;
    jg["a_m"] = spec.geometry.axis_a();
    jg["b_m"] = spec.geometry.axis_b();
    jg["lattice_angle_rad"] = spec.geometry.lattice_angle;
    jg["center_offset_m"] = {spec.geometry.center_offset.x, spec.geometry.center_offset.y};
    j["geometry"] = jg;
    switch (spec.model) {
        case MembraneModel::NeuKrassowska: j["membrane_model"] = "neu_krassowska"; break;
        case MembraneModel::Static: j["membrane_model"] = "static"; break;
        case MembraneModel::Relaxation: j["membrane_model"] = "relaxation"; break;
    }
    ordered_json jp;
    jp["sigma_i_S_per_m"] = spec.params.sigma_i;
    jp["sigma_e_S_per_m"] = spec.params.sigma_e;
    jp["delta_m"] = spec.params.delta;
    jp["r_p"] = spec.params.r_p;
    jp["sigma_p"] = spec.params.sigma_p;
    jp["V_ep_V"] = spec.params.V_ep;
    jp["alpha_per_m2_s"] = spec.params.alpha;
    jp["N0_per_m2"] = spec.params.N0;
    jp["cm_F_per_m2"] = spec.params.c_m;
    jp["q"] = spec.params.q;
    jp["sigma_m0_S_per_m"] = spec.params.sigma_m0;
    jp["beta_S_per_m"] = spec.params.beta;
    jp["M_V"] = spec.params.M;
    jp["u_ref_V"] = spec.params.u_ref;
    jp["K_S_per_m"] = spec.params.K;
    jp["beta_exp_per_V"] = spec.params.beta_exp;
    jp["tau_ep_s"] = spec.params.tau_ep;
    jp["tau_res_s"] = spec.params.tau_res;
    jp["k_ep_per_V"] = spec.params.k_ep;
    j["params"] = jp;
    ordered_json jn;
    jn["h_m"] = spec.h_target();
    jn["t_samples"] = spec.numerics.t_samples;
    jn["dt_s"] = spec.numerics.dt_s;
    jn["T_s"] = spec.numerics.T_s;
    jn["field_V_per_m"] = spec.numerics.field_V_per_m;
    jn["solver_tol"] = spec.numerics.solver_tol;
    jn["sample_points"] = spec.numerics.sample_points;
    j["numerics"] = jn;
    j["output_dir"] = spec.output_dir;
    return j.dump(2) + "\n";
}

std::string config_hash(const SweepSpec& spec) {
    std::string dump = normalized_dump(spec);
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace epihom
