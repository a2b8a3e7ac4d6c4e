#include "ionfountain/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "ionfountain/config.hpp"
#include "ionfountain/svg.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ionfountain::cli {

namespace {

namespace fs = std::filesystem;

std::string default_out_dir() {
    const char* env = std::getenv("IONFOUNTAIN_OUT");
    return env && *env ? env : ".";
}

std::string out_path(const std::string& dir, const std::string& name) {
    fs::create_directories(dir);
    return (fs::path(dir) / name).string();
}

int resolve_workers(int threads_flag) {
    if (threads_flag > 0) return threads_flag;
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

// Mid-flight DC configuration, used as the static extraction landscape for
// calibration and steering-optics probes.
fields::VoltageMap extraction_voltages(const waveforms::VoltageSchedule& schedule) {
    double probe_t = 1e-6;
    const double off = schedule.pulse_off_time("E1");
    if (off > 0.0) probe_t = 0.5 * off;
    return waveforms::voltage_at(schedule, probe_t);
}

struct CommonOpts {
    std::string config_path;
    std::string out_dir = default_out_dir();
    std::uint64_t seed = 12345;
    int threads = 0;
    double dt_override = 0.0;
    bool enable_rf_force = false;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool needs_config = true) {
    auto* c = cmd->add_option("--config", o.config_path, "run configuration (JSON)");
    if (needs_config) c->required();
    cmd->add_option("--out", o.out_dir, "output directory");
    cmd->add_option("--seed", o.seed, "random seed");
    cmd->add_option("--threads", o.threads, "worker threads (0 = all cores)");
    cmd->add_option("--dt", o.dt_override, "integrator step override, seconds");
    cmd->add_flag("--enable-rf-force", o.enable_rf_force, "enable the axial RF force term");
}

config::RunConfig load(const CommonOpts& o) {
    config::RunConfig cfg = config::load_run_config(o.config_path);
    if (o.dt_override > 0.0) cfg.setup.sim.dt = o.dt_override;
    if (o.enable_rf_force) {
        cfg.setup.sim.rf_force.enabled = true;
        if (cfg.setup.sim.rf_force.e0 == 0.0) cfg.setup.sim.rf_force.e0 = 4e4;
    }
    return cfg;
}

int cmd_simulate(const CommonOpts& o) {
    config::RunConfig cfg = load(o);
    dynamics::SimParams sim = cfg.setup.sim;
    if (sim.record_decimation < 1) sim.record_decimation = 10;
    const auto traj =
        dynamics::simulate(cfg.setup.stack, cfg.setup.schedule, cfg.setup.ion, sim);
    dynamics::write_trajectory_csv(traj, out_path(o.out_dir, "trajectory.csv"));

    std::ostringstream summary;
    summary.precision(8);
    const auto outcome = recapture::classify(traj.terminal, traj.reason, cfg.setup.ion,
                                             cfg.setup.criterion);
    summary << "termination=" << recapture::termination_name(traj.reason) << "\n"
            << "t_final_us=" << traj.terminal.t * 1e6 << "\n"
            << "z_final_um=" << traj.terminal.z * 1e6 << "\n"
            << "v_final_mps=" << traj.terminal.v << "\n"
            << "verdict=" << recapture::verdict_name(outcome.verdict) << "\n"
            << "residual_quanta=" << outcome.energy_quanta << "\n";
    // Flight metrics come from a free-flight probe of the same landscape:
    // the pulsed run usually ends right at the return apex, before the
    // upward v crossing is recorded.
    try {
        const auto m = experiments::measure_flight(
            cfg.setup.stack, cfg.setup.ion,
            extraction_voltages(cfg.setup.schedule), sim.dt);
        summary << "turn_mm=" << m.z_turn * 1e3 << "\n"
                << "t_turn_us=" << m.t_turn * 1e6 << "\n"
                << "tof_us=" << m.tof * 1e6 << "\n";
    } catch (const dynamics::NotReflected&) {
        summary << "turn_mm=n/a\n";
    }
    summary << "peak_speed_mps=" << dynamics::peak_speed(traj) << "\n";
    std::ofstream f(out_path(o.out_dir, "summary.txt"));
    f << summary.str();
    std::cout << summary.str();
    return 0;
}

int cmd_sweep(const CommonOpts& o) {
    config::RunConfig cfg = load(o);
    if (!cfg.sweep) throw ConfigError("/sweep: missing required section");
    experiments::ExecutionPolicy policy{resolve_workers(o.threads)};
    const auto cells =
        experiments::sweep(cfg.setup, *cfg.sweep, cfg.distribution, o.seed, policy);
    experiments::write_sweep_csv(cells, out_path(o.out_dir, "sweep.csv"));
    long total_k = 0, total_n = 0;
    for (const auto& c : cells) {
        total_k += c.k;
        total_n += c.n;
    }
    std::cout << "cells=" << cells.size() << " trials=" << total_n
              << " successes=" << total_k << "\n";
    return 0;
}

int cmd_mc(const CommonOpts& o) {
    config::RunConfig cfg = load(o);
    experiments::ExecutionPolicy policy{resolve_workers(o.threads)};
    const auto report = experiments::monte_carlo(cfg.setup, cfg.distribution,
                                                 cfg.mc_trials, o.seed, cfg.loss, policy);
    const std::string text = experiments::format_report(report);
    std::ofstream f(out_path(o.out_dir, "mc_report.txt"));
    f << text;
    experiments::write_trials_csv(report, out_path(o.out_dir, "mc_trials.csv"));
    std::cout << text;
    return 0;
}

int cmd_window(const CommonOpts& o) {
    config::RunConfig cfg = load(o);
    const auto w = experiments::find_pulse_window(cfg.setup, cfg.window.start,
                                                  cfg.window.stop, cfg.window.resolution);
    std::ostringstream os;
    os.precision(8);
    os << "window_lo_us=" << w.lo * 1e6 << "\n"
       << "window_hi_us=" << w.hi * 1e6 << "\n"
       << "width_ns=" << w.width() * 1e9 << "\n";
    std::ofstream f(out_path(o.out_dir, "window.txt"));
    f << os.str();
    std::cout << os.str();
    return 0;
}

int cmd_calibrate(const CommonOpts& o) {
    config::RunConfig cfg = load(o);
    const auto volts = extraction_voltages(cfg.setup.schedule);
    const auto cal = experiments::calibrate_reflector(
        cfg.setup.stack, cfg.setup.ion, volts, cfg.calibration.target_turn,
        cfg.calibration.target_tof);
    config::write_stack_json(cfg.setup.stack, out_path(o.out_dir, "calibrated_stack.json"));
    std::ostringstream os;
    os.precision(8);
    os << "scale=" << cal.scale << "\n"
       << "center_mm=" << cal.center * 1e3 << "\n"
       << "turn_mm=" << cal.achieved_turn * 1e3 << "\n"
       << "tof_us=" << cal.achieved_tof * 1e6 << "\n"
       << "iterations=" << cal.iterations << "\n";
    std::cout << os.str();
    return 0;
}

int cmd_steering(const CommonOpts& o) {
    config::RunConfig cfg = load(o);
    const auto volts = extraction_voltages(cfg.setup.schedule);
    auto optics = transverse::make_fountain_optics(cfg.setup.stack, volts, cfg.setup.ion,
                                                   cfg.steering.station_z,
                                                   cfg.steering.turn_z);
    optics.aperture.radius = cfg.steering.aperture_radius;
    optics.launch_x = cfg.steering.launch_x;
    optics.launch_xp = cfg.steering.launch_xp;
    optics.launch_y = cfg.steering.launch_y;
    optics.launch_yp = cfg.steering.launch_yp;
    optics.u_r = cfg.steering.u_r;
    if (cfg.steering.lens_constant) {
        optics.lens_constant = *cfg.steering.lens_constant;
    } else {
        transverse::calibrate_retroreflection(optics, cfg.steering.grid);
    }
    const auto map = transverse::acceptance_map(optics, cfg.steering.grid);
    transverse::write_map_csv(map, out_path(o.out_dir, "steering.csv"));
    std::cout << "lens_constant=" << optics.lens_constant
              << " f_mm=" << optics.focal_length() * 1e3 << " area=" << map.area()
              << " contiguous=" << (map.contiguous() ? 1 : 0) << "\n";
    return 0;
}

struct PlotOpts {
    std::string in_path;
    std::string kind = "line";
    std::string x_col, y_col, value_col;
    std::string out_dir = default_out_dir();
    std::string name = "plot.svg";
};

int cmd_plot(const PlotOpts& p) {
    const svg::Csv csv = svg::read_csv(p.in_path);
    auto col = [&](const std::string& name, int fallback) {
        if (name.empty()) return fallback;
        const int i = csv.column(name);
        if (i < 0) throw ConfigError("CSV has no column '" + name + "'");
        return i;
    };
    const std::string out = out_path(p.out_dir, p.name);
    if (p.kind == "line") {
        const int ix = col(p.x_col, 0), iy = col(p.y_col, 1);
        std::vector<double> x, y;
        for (const auto& r : csv.rows) {
            x.push_back(r[static_cast<std::size_t>(ix)]);
            y.push_back(r[static_cast<std::size_t>(iy)]);
        }
        svg::write_line_svg(x, y, csv.columns[static_cast<std::size_t>(ix)],
                            csv.columns[static_cast<std::size_t>(iy)], out);
    } else if (p.kind == "heatmap") {
        const int ix = col(p.x_col, 0), iy = col(p.y_col, 1);
        const int iv = col(p.value_col, static_cast<int>(csv.columns.size()) - 1);
        std::vector<double> x, y, v;
        for (const auto& r : csv.rows) {
            x.push_back(r[static_cast<std::size_t>(ix)]);
            y.push_back(r[static_cast<std::size_t>(iy)]);
            v.push_back(r[static_cast<std::size_t>(iv)]);
        }
        svg::write_heatmap_svg(x, y, v, csv.columns[static_cast<std::size_t>(ix)],
                               csv.columns[static_cast<std::size_t>(iy)], out);
    } else {
        throw ConfigError("plot kind must be 'line' or 'heatmap'");
    }
    std::cout << "wrote " << out << "\n";
    return 0;
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"deterministic single-ion fountain simulator"};
    app.require_subcommand(1);

    CommonOpts so, wo, mo, co, ko, to;
    PlotOpts po;

    add_common(app.add_subcommand("simulate", "run one trajectory"), so);
    add_common(app.add_subcommand("sweep", "parameter sweep"), wo);
    add_common(app.add_subcommand("mc", "Monte-Carlo success estimate"), mo);
    add_common(app.add_subcommand("window", "find the recapture pulse window"), co);
    add_common(app.add_subcommand("calibrate", "calibrate the reflector"), ko);
    add_common(app.add_subcommand("steering", "steering acceptance map"), to);

    auto* plot = app.add_subcommand("plot", "render a produced CSV as SVG");
    plot->add_option("--in", po.in_path, "input CSV")->required();
    plot->add_option("--kind", po.kind, "line | heatmap");
    plot->add_option("--x", po.x_col, "x column name");
    plot->add_option("--y", po.y_col, "y column name");
    plot->add_option("--value", po.value_col, "value column name (heatmap)");
    plot->add_option("--out", po.out_dir, "output directory");
    plot->add_option("--name", po.name, "output file name");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand("simulate")) return cmd_simulate(so);
        if (app.got_subcommand("sweep")) return cmd_sweep(wo);
        if (app.got_subcommand("mc")) return cmd_mc(mo);
        if (app.got_subcommand("window")) return cmd_window(co);
        if (app.got_subcommand("calibrate")) return cmd_calibrate(ko);
        if (app.got_subcommand("steering")) return cmd_steering(to);
        if (app.got_subcommand("plot")) return cmd_plot(po);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const SimulationError& e) {
        std::cerr << "simulation error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}

} // namespace ionfountain::cli
