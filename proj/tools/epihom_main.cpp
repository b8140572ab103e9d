#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "epihom/config.hpp"
#include "epihom/sweep.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

bool is_config_error(const epihom::Error& e) {
    return e.code().rfind("config", 0) == 0 || e.code() == "io-failure" ||
           e.code() == "cell-intersects-boundary" ||
           e.code() == "insufficient-interface-resolution";
}

int run_config(const std::string& path) {
    using namespace epihom;
    SweepSpec spec = parse_config(path);
    switch (spec.experiment) {
        case ExperimentId::SingleCell: {
            SingleCellOutputs out = run_single_cell_demo(spec);
            std::printf("single-cell run: %zu steps, final pole TMP %.6g V%s\n",
                        out.trace.times.size() - 1, out.trace.v_pole.back(),
                        out.monitor.violated ? " [blow-up-detected]" : "");
            std::printf("outputs in %s\n", spec.output_dir.c_str());
            return out.monitor.violated ? kExitSolver : kExitOk;
        }
        case ExperimentId::Convergence: {
            auto rows = run_convergence_experiment(spec);
            for (const auto& r : rows)
                std::printf("eps=%-8g L1=%.6g\n", r.eps, r.l1_error);
            std::printf("outputs in %s\n", spec.output_dir.c_str());
            return kExitOk;
        }
        default: {
            SweepResult result = run_sweep(spec);
            emit_outputs(result, spec.output_dir);
            int failures = 0;
            for (const auto& p : result.points)
                if (p.failed) ++failures;
            std::printf("sweep '%s': %zu points, %d failed; outputs in %s\n",
                        experiment_name(spec.experiment).c_str(), result.points.size(),
                        failures, spec.output_dir.c_str());
            return failures == 0 ? kExitOk : kExitSolver;
        }
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"epihom - electropermeabilization homogenization experiments"};
    app.require_subcommand(1);

    std::string run_path, validate_path, demo_path;
    CLI::App* cmd_run = app.add_subcommand("run", "run the experiment described by a config");
    cmd_run->add_option("config", run_path, "config file (JSON)")->required();
    CLI::App* cmd_validate =
        app.add_subcommand("validate", "parse a config and echo the normalized form");
    cmd_validate->add_option("config", validate_path, "config file (JSON)")->required();
    CLI::App* cmd_demo =
        app.add_subcommand("demo-cell", "run the single-cell TMP demonstration");
    cmd_demo->add_option("config", demo_path, "config file (JSON)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (cmd_validate->parsed()) {
            epihom::SweepSpec spec = epihom::parse_config(validate_path);
            std::fputs(epihom::normalized_dump(spec).c_str(), stdout);
            return kExitOk;
        }
        if (cmd_demo->parsed()) {
            epihom::SweepSpec spec = epihom::parse_config(demo_path);
            spec.experiment = epihom::ExperimentId::SingleCell;
            epihom::SingleCellOutputs out = epihom::run_single_cell_demo(spec);
            std::printf("final pole TMP %.6g V, ||v|| bound %.6g, max %.6g%s\n",
                        out.trace.v_pole.back(), out.monitor.bound, out.monitor.max_norm,
                        out.monitor.violated ? " [blow-up-detected]" : "");
            std::printf("outputs in %s\n", spec.output_dir.c_str());
            return out.monitor.violated ? kExitSolver : kExitOk;
        }
        return run_config(run_path);
    } catch (const epihom::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return is_config_error(e) ? kExitConfig : kExitSolver;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitSolver;
    }
}
