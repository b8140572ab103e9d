#include "epihom/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include "epihom/eig2.hpp"
#include "epihom/plot.hpp"

namespace epihom {

namespace {

int worker_count(int jobs) {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (const char* env = std::getenv("EPIHOM_WORKERS")) {
        int requested = std::atoi(env);
        if (requested > 0) n = requested;
    }
    return std::clamp(n, 1, std::max(1, jobs));
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("io-failure", "cannot write '" + path.string() + "'");
    out << content;
}

SweepPoint evaluate_point(const SweepSpec& spec, double value) {
    SweepPoint point;
    point.value = value;
    auto start = std::chrono::steady_clock::now();
    try {
        CellGeometry geometry = spec.point_geometry(value);
        ModelParams params = spec.point_params(value);
        InterfaceMesh mesh = build_unit_cell_mesh(geometry, spec.h_target());
        CorrectorSolution correctors = solve_cell_correctors(
            mesh, params.sigma_i, params.sigma_e, spec.numerics.solver_tol);
        std::vector<double> t_grid =
            kernel_time_grid(geometry, params, spec.numerics.t_samples);
        MemoryCorrector memory = compute_memory_corrector(mesh, params, correctors,
                                                          t_grid, spec.numerics.solver_tol);
        EffectiveTensors tensors = effective_tensors(mesh, correctors, memory, params);

        point.sigma0 = tensors.sigma0;
        point.degenerate = tensors.A0.norm() < 1e-10 * tensors.sigma0;
        Eig2 e0 = eig2x2_symmetric(tensors.A0);
        point.lam1_A0 = e0.lambda1;
        point.lam2_A0 = e0.lambda2;
        Eig2 e1 = eig2x2_symmetric(tensors.A1[0]);
        point.lam1_A1 = e1.lambda1;
        point.lam2_A1 = e1.lambda2;
    } catch (const Error& e) {
        point.failed = true;
        point.error = e.code();
    } catch (const std::exception& e) {
        point.failed = true;
        point.error = e.what();
    }
    point.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return point;
}

} // namespace

SweepResult run_sweep(const SweepSpec& spec) {
    spec.validate();
    SweepResult result;
    result.spec = spec;
    result.points.resize(spec.swept_values.size());

    int workers = worker_count(static_cast<int>(spec.swept_values.size()));
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= spec.swept_values.size()) return;
            result.points[i] = evaluate_point(spec, spec.swept_values[i]);
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    return result;
}

void emit_outputs(const SweepResult& result, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw Error("io-failure", "cannot create output directory '" + dir + "'");

    std::string csv =
        "swept_value,sigma0,lam1_A0,lam2_A0,ratio_A0,lam1_A1_0,lam2_A1_0,ratio_A1_0,"
        "degenerate,status\n";
    for (const SweepPoint& p : result.points) {
        if (p.failed) {
            csv += fmt(p.value) + ",,,,,,,,," + p.error + "\n";
            continue;
        }
        csv += fmt(p.value) + "," + fmt(p.sigma0) + "," + fmt(p.lam1_A0) + "," +
               fmt(p.lam2_A0) + ",";
        csv += p.degenerate ? "" : fmt(p.lam1_A0 / p.lam2_A0);
        csv += "," + fmt(p.lam1_A1) + "," + fmt(p.lam2_A1) + ",";
        csv += p.degenerate ? "" : fmt(p.lam1_A1 / p.lam2_A1);
        csv += std::string(",") + (p.degenerate ? "1" : "0") + ",ok\n";
    }
    write_file(fs::path(dir) / "sweep.csv", csv);

    std::string xlabel = experiment_name(result.spec.experiment);
    auto series_of = [&](auto getter) {
        PlotSeries s;
        for (const SweepPoint& p : result.points) {
            if (p.failed) continue;
            s.x.push_back(p.value);
            s.y.push_back(getter(p));
        }
        return s;
    };
    PlotSeries sig = series_of([](const SweepPoint& p) { return p.sigma0; });
    sig.label = "sigma0";
    write_file(fs::path(dir) / "sigma0.svg",
               render_line_plot("effective conductivity", xlabel, "sigma0 (S/m)", {sig}));

    PlotSeries a0_1 = series_of([](const SweepPoint& p) { return p.lam1_A0; });
    a0_1.label = "lambda1";
    PlotSeries a0_2 = series_of([](const SweepPoint& p) { return p.lam2_A0; });
    a0_2.label = "lambda2";
    write_file(fs::path(dir) / "a0_eigenvalues.svg",
               render_line_plot("eigenvalues of A0", xlabel, "lambda", {a0_1, a0_2}));

    PlotSeries a1_1 = series_of([](const SweepPoint& p) { return p.lam1_A1; });
    a1_1.label = "lambda1";
    PlotSeries a1_2 = series_of([](const SweepPoint& p) { return p.lam2_A1; });
    a1_2.label = "lambda2";
    write_file(fs::path(dir) / "a1_eigenvalues.svg",
               render_line_plot("eigenvalues of A1(0)", xlabel, "lambda", {a1_1, a1_2}));

    // Wall times and versions live here and only here; everything above is
    // byte-stable across reruns of the same config.
    std::string manifest;
    manifest += "config_hash: " + config_hash(result.spec) + "\n";
    manifest += "tool: epihom 0.1.0\n";
    manifest += "points: " + std::to_string(result.points.size()) + "\n";
    double total = 0.0;
    for (std::size_t i = 0; i < result.points.size(); ++i) {
        const SweepPoint& p = result.points[i];
        manifest += "point " + std::to_string(i) + ": value=" + fmt(p.value) +
                    " status=" + (p.failed ? p.error : "ok") +
                    " wall_s=" + fmt(p.wall_seconds) + "\n";
        total += p.wall_seconds;
    }
    manifest += "total_wall_s: " + fmt(total) + "\n";
    write_file(fs::path(dir) / "manifest.txt", manifest);
}

SingleCellOutputs run_single_cell_demo(const SweepSpec& spec) {
    namespace fs = std::filesystem;
    spec.validate();
    std::error_code ec;
    fs::create_directories(spec.output_dir, ec);
    if (ec)
        throw Error("io-failure",
                    "cannot create output directory '" + spec.output_dir + "'");

    InterfaceMesh mesh = build_unit_cell_mesh(spec.geometry, spec.h_target());
    TransmissionProblem problem;
    problem.mesh = &mesh;
    problem.params = spec.params;
    problem.model = spec.model;
    problem.boundary_data = {0.0, spec.numerics.field_V_per_m, 0.0};
    problem.dt = spec.numerics.dt_s;
    problem.T = spec.numerics.T_s;
    problem.solver_tol = spec.numerics.solver_tol;

    SingleCellOutputs out;
    out.trace = run(problem);
    SteklovReduction reduction =
        discrete_steklov(mesh, spec.params.sigma_i, spec.params.sigma_e,
                         problem.boundary_data, spec.numerics.solver_tol);
    out.monitor = energy_monitor(out.trace, spec.params, reduction.source_norm());

    std::string trace_csv = "t_s,v_pole_V,energy\n";
    for (std::size_t k = 0; k < out.trace.times.size(); ++k)
        trace_csv += fmt(out.trace.times[k]) + "," + fmt(out.trace.v_pole[k]) + "," +
                     fmt(out.trace.energy[k]) + "\n";
    write_file(fs::path(spec.output_dir) / "trace.csv", trace_csv);

    std::string profile_csv = "theta_rad,v_V,N_per_m2\n";
    for (std::size_t p = 0; p < out.trace.theta.size(); ++p)
        profile_csv += fmt(out.trace.theta[p]) + "," + fmt(out.trace.v_profile[p]) + "," +
                       fmt(out.trace.N_profile[p]) + "\n";
    write_file(fs::path(spec.output_dir) / "profile.csv", profile_csv);

    PlotSeries pole;
    pole.label = "v at pole";
    pole.x = out.trace.times;
    pole.y = out.trace.v_pole;
    write_file(fs::path(spec.output_dir) / "v_pole.svg",
               render_line_plot("transmembrane potential at the pole", "t (s)", "v (V)",
                                {pole}));

    // Profile ordered by angle for a readable curve.
    std::vector<std::size_t> order(out.trace.theta.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return out.trace.theta[a] < out.trace.theta[b];
    });
    PlotSeries prof;
    prof.label = "v along the membrane";
    for (std::size_t i : order) {
        prof.x.push_back(out.trace.theta[i]);
        prof.y.push_back(out.trace.v_profile[i]);
    }
    write_file(fs::path(spec.output_dir) / "profile.svg",
               render_line_plot("membrane voltage at the final time", "theta (rad)",
                                "v (V)", {prof}));

    std::string manifest;
    manifest += "config_hash: " + config_hash(spec) + "\n";
    manifest += "tool: epihom 0.1.0\n";
    manifest += std::string("cutoff_activated: ") +
                (out.trace.cutoff_activated ? "yes" : "no") + "\n";
    manifest += std::string("monitor: ") +
                (out.monitor.violated ? "blow-up-detected" : "ok") + "\n";
    manifest += "monitor_bound: " + fmt(out.monitor.bound) + "\n";
    manifest += "monitor_max_norm: " + fmt(out.monitor.max_norm) + "\n";
    write_file(fs::path(spec.output_dir) / "manifest.txt", manifest);
    return out;
}

std::vector<ConvergenceRow> run_convergence_experiment(const SweepSpec& spec) {
    namespace fs = std::filesystem;
    spec.validate();
    std::error_code ec;
    fs::create_directories(spec.output_dir, ec);
    if (ec)
        throw Error("io-failure",
                    "cannot create output directory '" + spec.output_dir + "'");

    std::vector<double> eps_desc = spec.swept_values;
    std::sort(eps_desc.rbegin(), eps_desc.rend());
    ConvergenceOptions options;
    options.h_unit = spec.h_target();
    options.t_samples = spec.numerics.t_samples;
    options.sample_points = spec.numerics.sample_points;
    options.solver_tol = std::max(spec.numerics.solver_tol, 1e-11);
    std::vector<ConvergenceRow> rows =
        convergence_study(spec.geometry, spec.params, eps_desc, options);

    std::string csv = "eps,l1_error,energy_lhs,interface_l2_over_eps\n";
    for (const ConvergenceRow& r : rows)
        csv += fmt(r.eps) + "," + fmt(r.l1_error) + "," + fmt(r.energy_lhs) + "," +
               fmt(r.interface_l2_over_eps) + "\n";
    write_file(fs::path(spec.output_dir) / "convergence.csv", csv);

    // Unit-cell effective parameters for the same configuration.
    InterfaceMesh mesh = build_unit_cell_mesh(spec.geometry, spec.h_target());
    CorrectorSolution correctors = solve_cell_correctors(
        mesh, spec.params.sigma_i, spec.params.sigma_e, spec.numerics.solver_tol);
    std::vector<double> t_grid =
        kernel_time_grid(spec.geometry, spec.params, spec.numerics.t_samples);
    MemoryCorrector memory = compute_memory_corrector(mesh, spec.params, correctors,
                                                      t_grid, options.solver_tol);
    EffectiveTensors tensors = effective_tensors(mesh, correctors, memory, spec.params);
    write_file(fs::path(spec.output_dir) / "tensors.csv", tensors_to_csv(tensors));
    write_file(fs::path(spec.output_dir) / "kernel.csv", kernel_to_csv(tensors));

    PlotSeries err;
    err.label = "|u_eps - u_0| (L1)";
    for (const ConvergenceRow& r : rows) {
        err.x.push_back(r.eps);
        err.y.push_back(r.l1_error);
    }
    write_file(fs::path(spec.output_dir) / "convergence.svg",
               render_line_plot("homogenization error", "eps", "L1 error", {err}));
    return rows;
}

} // namespace epihom
