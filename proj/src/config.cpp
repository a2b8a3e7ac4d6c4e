#include "ionfountain/config.hpp"

#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "ionfountain/units.hpp"

namespace ionfountain::config {

using nlohmann::json;
using units::Dimension;

namespace {

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return j;
}

const json& need(const json& parent, const std::string& path, const char* key) {
    if (!parent.is_object() || !parent.contains(key))
        throw ConfigError(path + "/" + key + ": missing required field");
    return parent.at(key);
}

std::string need_str(const json& parent, const std::string& path, const char* key) {
    const json& v = need(parent, path, key);
    if (!v.is_string()) throw ConfigError(path + "/" + key + ": expected a string");
    return v.get<std::string>();
}

double qty_from(const json& v, const std::string& where, Dimension dim) {
    if (v.is_number() && dim == Dimension::Dimensionless) return v.get<double>();
    if (!v.is_string())
        throw ConfigError(where + ": expected a \"<value> <unit>\" string (" +
                          units::dimension_name(dim) + ")");
    try {
        return units::parse_quantity(v.get<std::string>(), dim);
    } catch (const ConfigError& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

double need_qty(const json& parent, const std::string& path, const char* key,
                Dimension dim) {
    return qty_from(need(parent, path, key), path + "/" + key, dim);
}

double opt_qty(const json& parent, const std::string& path, const char* key,
               Dimension dim, double fallback) {
    if (!parent.is_object() || !parent.contains(key)) return fallback;
    return qty_from(parent.at(key), path + "/" + key, dim);
}

double opt_num(const json& parent, const std::string& path, const char* key,
               double fallback) {
    if (!parent.is_object() || !parent.contains(key)) return fallback;
    const json& v = parent.at(key);
    if (!v.is_number()) throw ConfigError(path + "/" + key + ": expected a number");
    return v.get<double>();
}

bool opt_bool(const json& parent, const std::string& path, const char* key,
              bool fallback) {
    if (!parent.is_object() || !parent.contains(key)) return fallback;
    const json& v = parent.at(key);
    if (!v.is_boolean()) throw ConfigError(path + "/" + key + ": expected a boolean");
    return v.get<bool>();
}

std::string resolve(const std::string& base_dir, const std::string& p) {
    std::filesystem::path q(p);
    if (q.is_absolute()) return p;
    return (std::filesystem::path(base_dir) / q).string();
}

fields::ElectrodeModel parse_electrode(const json& e, const std::string& path,
                                       const std::string& base_dir) {
    const std::string kind = need_str(e, path, "kind");
    if (kind == "gaussian-segment") {
        return fields::make_gaussian_segment(need_qty(e, path, "center", Dimension::Length),
                                             opt_num(e, path, "amplitude", 0.2),
                                             need_qty(e, path, "width", Dimension::Length));
    }
    if (kind == "aperture-plate") {
        const int facing = static_cast<int>(opt_num(e, path, "facing", 1));
        return fields::make_aperture_plate(
            need_qty(e, path, "center", Dimension::Length),
            opt_num(e, path, "amplitude", 1.0),
            opt_qty(e, path, "width", Dimension::Length, 0.3e-3), facing,
            opt_qty(e, path, "screen_center", Dimension::Length, 0.0),
            opt_qty(e, path, "screen_width", Dimension::Length, 0.0));
    }
    if (kind == "flat-tube") {
        return fields::make_flat_tube(need_qty(e, path, "center", Dimension::Length),
                                      opt_num(e, path, "amplitude", 1.0),
                                      need_qty(e, path, "length", Dimension::Length),
                                      opt_qty(e, path, "edge_width", Dimension::Length, 1e-3));
    }
    if (kind == "reflector-ramp") {
        const int facing = static_cast<int>(opt_num(e, path, "facing", 1));
        return fields::make_reflector_ramp(need_qty(e, path, "center", Dimension::Length),
                                           opt_num(e, path, "amplitude", 1.0),
                                           need_qty(e, path, "width", Dimension::Length),
                                           facing);
    }
    if (kind == "tabulated") {
        if (e.contains("csv"))
            return fields::load_tabulated_csv(resolve(base_dir, need_str(e, path, "csv")));
        const json& samples = need(e, path, "samples");
        if (!samples.is_array())
            throw ConfigError(path + "/samples: expected an array of [z, phi] pairs");
        std::vector<double> z, phi;
        for (const auto& row : samples) {
            if (!row.is_array() || row.size() != 2)
                throw ConfigError(path + "/samples: expected [z_m, phi] pairs");
            z.push_back(row[0].get<double>());
            phi.push_back(row[1].get<double>());
        }
        return fields::make_tabulated(z, phi);
    }
    throw ConfigError(path + "/kind: unknown electrode kind '" + kind + "'");
}

fields::ElectrodeStack parse_stack(const json& s, const std::string& path,
                                   const std::string& base_dir) {
    fields::ElectrodeStack stack;
    if (s.contains("file")) {
        stack = load_stack_json(resolve(base_dir, need_str(s, path, "file")));
    } else if (s.contains("electrodes")) {
        const json& list = s.at("electrodes");
        if (!list.is_array()) throw ConfigError(path + "/electrodes: expected an array");
        std::size_t i = 0;
        for (const auto& e : list) {
            const std::string epath = path + "/electrodes/" + std::to_string(i);
            stack.electrodes.push_back(
                {need_str(e, epath, "name"), parse_electrode(e, epath, base_dir)});
            ++i;
        }
    } else {
        const std::string preset =
            s.is_object() && s.contains("preset") ? need_str(s, path, "preset") : "default";
        if (preset != "default")
            throw ConfigError(path + "/preset: unknown preset '" + preset + "'");
        stack = fields::default_stack();
    }
    stack.trap_center_z =
        opt_qty(s, path, "trap_center", Dimension::Length, stack.trap_center_z);
    stack.max_z = opt_qty(s, path, "max_z", Dimension::Length, stack.max_z);
    stack.min_z = opt_qty(s, path, "min_z", Dimension::Length, stack.min_z);
    if (s.is_object() && s.contains("overrides")) {
        const json& ov = s.at("overrides");
        if (!ov.is_array()) throw ConfigError(path + "/overrides: expected an array");
        std::size_t i = 0;
        for (const auto& o : ov) {
            const std::string opath = path + "/overrides/" + std::to_string(i);
            auto& m = stack.model(need_str(o, opath, "name"));
            m.amplitude = opt_num(o, opath, "amplitude", m.amplitude);
            m.center_z = opt_qty(o, opath, "center", Dimension::Length, m.center_z);
            m.width = opt_qty(o, opath, "width", Dimension::Length, m.width);
            ++i;
        }
    }
    stack.validate();
    return stack;
}

dynamics::IonSpecies parse_ion(const json& root) {
    if (!root.contains("ion")) throw ConfigError("/ion: missing required section");
    const json& i = root.at("ion");
    if (i.contains("species")) {
        const std::string sp = need_str(i, "/ion", "species");
        if (sp == "40Ca+" || sp == "Ca40+" || sp == "ca40") return dynamics::ca40();
        throw ConfigError("/ion/species: unknown species '" + sp +
                          "' (use explicit mass/charge)");
    }
    dynamics::IonSpecies s;
    s.mass = need_qty(i, "/ion", "mass", Dimension::Mass);
    s.charge = need_qty(i, "/ion", "charge", Dimension::Charge);
    s.label = i.contains("label") ? need_str(i, "/ion", "label") : "custom";
    if (!(s.mass > 0.0)) throw ConfigError("/ion/mass: must be > 0");
    if (s.charge == 0.0) throw ConfigError("/ion/charge: must be nonzero");
    return s;
}

waveforms::VoltageSchedule parse_schedule(const json& root) {
    if (!root.contains("schedule")) throw ConfigError("/schedule: missing required section");
    const json& s = root.at("schedule");
    waveforms::VoltageSchedule sched;
    const json& init = need(s, "/schedule", "initial");
    if (!init.is_object())
        throw ConfigError("/schedule/initial: expected an electrode->voltage object");
    for (auto it = init.begin(); it != init.end(); ++it)
        sched.initial[it.key()] =
            qty_from(it.value(), "/schedule/initial/" + it.key(), Dimension::Voltage);
    if (s.contains("events")) {
        const json& ev = s.at("events");
        if (!ev.is_array()) throw ConfigError("/schedule/events: expected an array");
        std::size_t i = 0;
        for (const auto& e : ev) {
            const std::string epath = "/schedule/events/" + std::to_string(i);
            waveforms::SwitchEvent sw;
            sw.time = need_qty(e, epath, "time", Dimension::Time);
            sw.electrode = need_str(e, epath, "electrode");
            sw.target = need_qty(e, epath, "target", Dimension::Voltage);
            sw.edge_duration = opt_qty(e, epath, "edge", Dimension::Time, 50e-9);
            sched.events.push_back(sw);
            ++i;
        }
    }
    if (s.contains("rf")) {
        const json& rf = s.at("rf");
        sched.rf.omega =
            TWO_PI * opt_qty(rf, "/schedule/rf", "frequency", Dimension::Frequency,
                             17.85e6);
        sched.rf.u_pp = opt_qty(rf, "/schedule/rf", "u_pp", Dimension::Voltage, 150.0);
        sched.rf.t_off = opt_qty(rf, "/schedule/rf", "t_off", Dimension::Time, 0.0);
        if (rf.contains("ramp_down")) {
            sched.rf.ramp_down.start =
                need_qty(rf.at("ramp_down"), "/schedule/rf/ramp_down", "start", Dimension::Time);
            sched.rf.ramp_down.duration = opt_qty(rf.at("ramp_down"), "/schedule/rf/ramp_down",
                                                  "duration", Dimension::Time, 0.5e-6);
        }
        if (rf.contains("ramp_up")) {
            sched.rf.ramp_up.start =
                need_qty(rf.at("ramp_up"), "/schedule/rf/ramp_up", "start", Dimension::Time);
            sched.rf.ramp_up.duration = opt_qty(rf.at("ramp_up"), "/schedule/rf/ramp_up",
                                                "duration", Dimension::Time, 0.5e-6);
        }
    }
    return sched;
}

} // namespace

fields::ElectrodeStack load_stack_json(const std::string& path) {
    const json j = load_json(path);
    const std::string base =
        std::filesystem::path(path).parent_path().string();
    return parse_stack(j, "/", base.empty() ? "." : base);
}

void write_stack_json(const fields::ElectrodeStack& stack, const std::string& path) {
    json j;
    j["trap_center"] = std::to_string(stack.trap_center_z * 1e3) + " mm";
    j["max_z"] = std::to_string(stack.max_z * 1e3) + " mm";
    j["min_z"] = std::to_string(stack.min_z * 1e3) + " mm";
    j["electrodes"] = json::array();
    for (const auto& ne : stack.electrodes) {
        const auto& m = ne.model;
        json e;
        e["name"] = ne.name;
        char buf[64];
        auto mm = [&buf](double v) {
            std::snprintf(buf, sizeof buf, "%.9g mm", v * 1e3);
            return std::string(buf);
        };
        switch (m.kind) {
        case fields::ElectrodeKind::GaussianSegment:
            e["kind"] = "gaussian-segment";
            e["center"] = mm(m.center_z);
            e["amplitude"] = m.amplitude;
            e["width"] = mm(m.width);
            break;
        case fields::ElectrodeKind::AperturePlate:
            e["kind"] = "aperture-plate";
            e["center"] = mm(m.center_z);
            e["amplitude"] = m.amplitude;
            e["width"] = mm(m.width);
            e["facing"] = m.facing;
            if (m.screen_width > 0.0) {
                e["screen_center"] = mm(m.screen_z);
                e["screen_width"] = mm(m.screen_width);
            }
            break;
        case fields::ElectrodeKind::FlatTube:
            e["kind"] = "flat-tube";
            e["center"] = mm(m.center_z);
            e["amplitude"] = m.amplitude;
            e["length"] = mm(m.width);
            e["edge_width"] = mm(m.edge_width);
            break;
        case fields::ElectrodeKind::ReflectorRamp:
            e["kind"] = "reflector-ramp";
            e["center"] = mm(m.center_z);
            e["amplitude"] = m.amplitude;
            e["width"] = mm(m.width);
            e["facing"] = m.facing;
            break;
        case fields::ElectrodeKind::Tabulated: {
            e["kind"] = "tabulated";
            json samples = json::array();
            for (std::size_t i = 0; i < m.table.size(); ++i)
                samples.push_back({m.table.xs()[i], m.table.ys()[i]});
            e["samples"] = samples;
            break;
        }
        }
        j["electrodes"].push_back(e);
    }
    std::ofstream out(path);
    if (!out) throw SimulationError("cannot open output file: " + path);
    out << j.dump(2) << "\n";
}

RunConfig load_run_config(const std::string& path) {
    const json root = load_json(path);
    const std::string base_dir =
        std::filesystem::path(path).parent_path().string().empty()
            ? "."
            : std::filesystem::path(path).parent_path().string();

    RunConfig cfg;
    cfg.setup.ion = parse_ion(root);
    if (!root.contains("stack")) throw ConfigError("/stack: missing required section");
    cfg.setup.stack = parse_stack(root.at("stack"), "/stack", base_dir);
    cfg.setup.schedule = parse_schedule(root);

    const auto violations = waveforms::validate_schedule(cfg.setup.schedule, cfg.setup.stack);
    if (!violations.empty())
        throw ConfigError("/schedule: " + violations.front().code + ": " +
                          violations.front().message);

    const json sim = root.contains("sim") ? root.at("sim") : json::object();
    cfg.setup.sim.dt = opt_qty(sim, "/sim", "dt", Dimension::Time, 2e-9);
    cfg.setup.sim.max_time = opt_qty(sim, "/sim", "max_time", Dimension::Time, 9e-6);
    cfg.setup.sim.record_decimation =
        static_cast<int>(opt_num(sim, "/sim", "decimation", 10));
    if (!(cfg.setup.sim.dt > 0.0)) throw ConfigError("/sim/dt: must be > 0");
    if (sim.contains("rf_force")) {
        const json& rf = sim.at("rf_force");
        cfg.setup.sim.rf_force.enabled = opt_bool(rf, "/sim/rf_force", "enabled", true);
        cfg.setup.sim.rf_force.e0 =
            opt_qty(rf, "/sim/rf_force", "e0", Dimension::Field, 4e4);
        cfg.setup.sim.rf_force.sigma =
            opt_qty(rf, "/sim/rf_force", "sigma", Dimension::Length, 0.4e-3);
        cfg.setup.sim.rf_force.center_z =
            opt_qty(rf, "/sim/rf_force", "center", Dimension::Length, 1.45e-3);
    }

    const json rec = root.contains("recapture") ? root.at("recapture") : json::object();
    cfg.setup.criterion.max_distance =
        opt_qty(rec, "/recapture", "max_distance", Dimension::Length, 100e-6);
    cfg.setup.criterion.max_speed =
        opt_qty(rec, "/recapture", "max_speed", Dimension::Velocity, 50.0);
    cfg.setup.criterion.omega_z =
        TWO_PI * opt_qty(rec, "/recapture", "frequency", Dimension::Frequency, 147e3);
    if (rec.contains("mode")) {
        const std::string mode = need_str(rec, "/recapture", "mode");
        if (mode == "instantaneous") {
            cfg.setup.criterion.mode = recapture::RecaptureCriterion::Mode::Instantaneous;
        } else if (mode == "energy-bound") {
            cfg.setup.criterion.mode = recapture::RecaptureCriterion::Mode::EnergyBound;
            cfg.setup.criterion.trap_depth =
                need_qty(rec, "/recapture", "trap_depth", Dimension::Energy);
        } else {
            throw ConfigError("/recapture/mode: expected 'instantaneous' or 'energy-bound'");
        }
    }
    if (!(cfg.setup.criterion.max_distance > 0.0))
        throw ConfigError("/recapture/max_distance: must be > 0");
    if (!(cfg.setup.criterion.max_speed > 0.0))
        throw ConfigError("/recapture/max_speed: must be > 0");

    if (root.contains("distribution")) {
        const json& d = root.at("distribution");
        const std::string kind = need_str(d, "/distribution", "kind");
        if (kind == "delta") {
            cfg.distribution.kind = experiments::InitialDistribution::Kind::Delta;
        } else if (kind == "thermal") {
            cfg.distribution.kind = experiments::InitialDistribution::Kind::Thermal;
            cfg.distribution.temperature =
                opt_qty(d, "/distribution", "temperature", Dimension::Temperature, 0.5e-3);
            if (cfg.distribution.temperature < 0.0)
                throw ConfigError("/distribution/temperature: must be >= 0");
        } else {
            throw ConfigError("/distribution/kind: expected 'delta' or 'thermal'");
        }
    }

    if (root.contains("mc")) {
        const json& m = root.at("mc");
        cfg.mc_trials = static_cast<long>(opt_num(m, "/mc", "trials", 100));
        if (cfg.mc_trials < 1) throw ConfigError("/mc/trials: must be >= 1");
        if (m.contains("collision_loss")) {
            const json& cl = m.at("collision_loss");
            cfg.loss.enabled = opt_bool(cl, "/mc/collision_loss", "enabled", true);
            cfg.loss.rate_hz =
                opt_qty(cl, "/mc/collision_loss", "rate", Dimension::Rate, 1.0 / 60.0);
            cfg.loss.wait_s =
                opt_qty(cl, "/mc/collision_loss", "wait", Dimension::Time, 1.0);
        }
    }

    if (root.contains("sweep")) {
        const json& sw = root.at("sweep");
        experiments::SweepGrid grid;
        auto parse_axis = [&](const json& a, const std::string& apath) {
            experiments::SweepAxis axis;
            axis.param = need_str(a, apath, "param");
            Dimension dim = Dimension::Time;
            if (axis.param.rfind("voltages.", 0) == 0) dim = Dimension::Voltage;
            else if (axis.param.rfind("stack.", 0) == 0)
                dim = axis.param.ends_with(".center") ? Dimension::Length
                                                      : Dimension::Dimensionless;
            axis.start = need_qty(a, apath, "start", dim);
            axis.stop = need_qty(a, apath, "stop", dim);
            axis.step = need_qty(a, apath, "step", dim);
            return axis;
        };
        grid.axis1 = parse_axis(need(sw, "/sweep", "axis1"), "/sweep/axis1");
        if (sw.contains("axis2"))
            grid.axis2 = parse_axis(sw.at("axis2"), "/sweep/axis2");
        // stochastic sweeps average 100 trials per cell unless told otherwise
        const int default_repeats =
            cfg.distribution.kind == experiments::InitialDistribution::Kind::Thermal ? 100
                                                                                     : 1;
        grid.repeats = static_cast<int>(opt_num(sw, "/sweep", "repeats", default_repeats));
        if (grid.repeats < 1) throw ConfigError("/sweep/repeats: must be >= 1");
        cfg.sweep = grid;
    }

    if (root.contains("window")) {
        const json& w = root.at("window");
        cfg.window.start = need_qty(w, "/window", "start", Dimension::Time);
        cfg.window.stop = need_qty(w, "/window", "stop", Dimension::Time);
        cfg.window.resolution =
            opt_qty(w, "/window", "resolution", Dimension::Time, 10e-9);
    }

    if (root.contains("calibration")) {
        const json& c = root.at("calibration");
        cfg.calibration.target_turn =
            opt_qty(c, "/calibration", "target_turn", Dimension::Length, 55e-3);
        cfg.calibration.target_tof =
            opt_qty(c, "/calibration", "target_tof", Dimension::Time, 6.3e-6);
    }

    if (root.contains("steering")) {
        const json& st = root.at("steering");
        if (st.contains("grid")) {
            const json& g = st.at("grid");
            cfg.steering.grid.u_min =
                opt_qty(g, "/steering/grid", "min", Dimension::Voltage, -6.0);
            cfg.steering.grid.u_max =
                opt_qty(g, "/steering/grid", "max", Dimension::Voltage, 6.0);
            cfg.steering.grid.step =
                opt_qty(g, "/steering/grid", "step", Dimension::Voltage, 0.1);
        }
        cfg.steering.station_z =
            opt_qty(st, "/steering", "station_z", Dimension::Length, 48e-3);
        cfg.steering.turn_z = opt_qty(st, "/steering", "turn_z", Dimension::Length, 55e-3);
        cfg.steering.launch_x =
            opt_qty(st, "/steering", "launch_x", Dimension::Length, 50e-6);
        cfg.steering.launch_y =
            opt_qty(st, "/steering", "launch_y", Dimension::Length, 50e-6);
        cfg.steering.launch_xp = opt_num(st, "/steering", "launch_xp", 0.0);
        cfg.steering.launch_yp = opt_num(st, "/steering", "launch_yp", 0.0);
        cfg.steering.u_r = opt_qty(st, "/steering", "u_r", Dimension::Voltage, 7.5);
        cfg.steering.aperture_radius =
            opt_qty(st, "/steering", "aperture_radius", Dimension::Length, 200e-6);
        if (st.contains("lens_constant"))
            cfg.steering.lens_constant = opt_num(st, "/steering", "lens_constant", 0.0);
    }

    return cfg;
}

} // namespace ionfountain::config
