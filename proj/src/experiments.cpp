#include "ionfountain/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ionfountain::experiments {

// --- rng ---------------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

TrialRng::TrialRng(std::uint64_t seed, std::uint64_t index) {
    state_ = seed ^ (0x9E3779B97F4A7C15ULL * (index + 1));
    (void)splitmix64(state_); // one warm-up round decorrelates adjacent indices
}

double TrialRng::uniform() {
    return static_cast<double>(splitmix64(state_) >> 11) * 0x1.0p-53;
}

double TrialRng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(TWO_PI * u2);
    have_spare_ = true;
    return r * std::cos(TWO_PI * u2);
}

// --- statistics ----------------------------------------------------------------

// Acklam's rational approximation, polished with one Halley step on erfc.
double probit(double p) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("probit requires p in (0, 1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;
    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = e * std::sqrt(TWO_PI) * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
    return x;
}

WilsonInterval wilson_interval(long k, long n, double confidence) {
    if (n < 1) throw ConfigError("wilson_interval requires n >= 1");
    if (k < 0 || k > n) throw ConfigError("wilson_interval requires 0 <= k <= n");
    if (!(confidence > 0.0 && confidence < 1.0))
        throw ConfigError("wilson_interval requires confidence in (0, 1)");
    const double z = probit(0.5 * (1.0 + confidence));
    const double nn = static_cast<double>(n);
    const double phat = static_cast<double>(k) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double center = (phat + z2 / (2.0 * nn)) / denom;
    const double half =
        z * std::sqrt(phat * (1.0 - phat) / nn + z2 / (4.0 * nn * nn)) / denom;
    WilsonInterval w;
    w.point = phat;
    w.lo = std::max(0.0, center - half);
    w.hi = std::min(1.0, center + half);
    return w;
}

// --- trials ----------------------------------------------------------------------

TrialRecord run_trial(const RunSetup& setup, long index, double z0, double v0) {
    TrialRecord rec;
    rec.index = index;
    rec.z0 = z0;
    rec.v0 = v0;
    dynamics::SimParams sim = setup.sim;
    sim.z_init = z0;
    sim.v_init = v0;
    sim.record_decimation = 0; // terminal state only
    try {
        const auto traj = dynamics::simulate(setup.stack, setup.schedule, setup.ion, sim);
        rec.outcome = recapture::classify(traj.terminal, traj.reason, setup.ion,
                                          setup.criterion);
    } catch (const dynamics::NumericalBlowup& e) {
        rec.blowup = true;
        rec.outcome = recapture::classify(e.last_good, dynamics::Termination::MaxTime,
                                          setup.ion, setup.criterion);
        rec.outcome.verdict = recapture::Verdict::Lost;
    }
    return rec;
}

namespace {

TrialRecord mc_trial(const RunSetup& setup, const InitialDistribution& dist,
                     const CollisionLossModel& loss, std::uint64_t seed, long index) {
    TrialRng rng(seed, static_cast<std::uint64_t>(index));
    double z0 = setup.sim.z_init;
    double v0 = setup.sim.v_init;
    if (dist.kind == InitialDistribution::Kind::Thermal) {
        const double sigma_v = std::sqrt(BOLTZMANN * dist.temperature / setup.ion.mass);
        const double sigma_z = sigma_v / setup.criterion.omega_z;
        z0 += sigma_z * rng.normal();
        v0 += sigma_v * rng.normal();
    }
    TrialRecord rec = run_trial(setup, index, z0, v0);
    if (loss.enabled) {
        const double u = rng.uniform();
        const double p = loss.rate_hz * loss.wait_s;
        if (rec.outcome.verdict == recapture::Verdict::Recaptured && u < p)
            rec.collision_loss = true;
    }
    return rec;
}

void run_trials(const RunSetup& setup, const InitialDistribution& dist,
                const CollisionLossModel& loss, std::uint64_t seed,
                std::vector<TrialRecord>& out, const ExecutionPolicy& policy) {
    const long n = static_cast<long>(out.size());
    if (policy.workers <= 0) {
        // serial reference kernel
        for (long i = 0; i < n; ++i) out[i] = mc_trial(setup, dist, loss, seed, i);
        return;
    }
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(policy.workers)
    for (long i = 0; i < n; ++i) out[i] = mc_trial(setup, dist, loss, seed, i);
#else
    for (long i = 0; i < n; ++i) out[i] = mc_trial(setup, dist, loss, seed, i);
#endif
}

} // namespace

MonteCarloReport monte_carlo(const RunSetup& setup, const InitialDistribution& dist,
                             long n, std::uint64_t seed, const CollisionLossModel& loss,
                             const ExecutionPolicy& policy) {
    if (n < 1) throw ConfigError("monte_carlo requires n >= 1");
    MonteCarloReport r;
    r.n_trials = n;
    r.seed = seed;
    r.trials.resize(static_cast<std::size_t>(n));
    run_trials(setup, dist, loss, seed, r.trials, policy);
    for (const auto& t : r.trials)
        if (t.success()) ++r.n_success;
    const WilsonInterval w = wilson_interval(r.n_success, r.n_trials, 0.95);
    r.point = w.point;
    r.wilson_lo = w.lo;
    r.wilson_hi = w.hi;
    return r;
}

std::string format_report(const MonteCarloReport& r) {
    std::ostringstream os;
    os.precision(3);
    os << "trials:    " << r.n_trials << "\n"
       << "successes: " << r.n_success << "\n"
       << "estimate:  " << std::fixed << r.point << "\n"
       << "wilson95:  [" << r.wilson_lo << ", " << r.wilson_hi << "]\n"
       << "seed:      " << r.seed << "\n";
    return os.str();
}

void write_trials_csv(const MonteCarloReport& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw SimulationError("cannot open output file: " + path);
    out << "trial,z0_m,v0_mps,z_m,v_mps,verdict,reason,energy_quanta,flag\n";
    out.precision(12);
    for (const auto& t : r.trials) {
        std::string flag = t.blowup ? "blowup" : (t.collision_loss ? "collision" : "");
        out << t.index << "," << t.z0 << "," << t.v0 << "," << t.outcome.z_final << ","
            << t.outcome.v_final << "," << recapture::verdict_name(t.outcome.verdict)
            << "," << recapture::termination_name(t.outcome.reason) << ","
            << t.outcome.energy_quanta << "," << flag << "\n";
    }
}

// --- sweeps ---------------------------------------------------------------------

void apply_param(RunSetup& setup, const std::string& path, double value) {
    if (path == "schedule.dt_puls") {
        bool moved = false;
        for (auto& e : setup.schedule.events) {
            if ((e.electrode == "E1" || e.electrode == "F") && std::abs(e.target) < 1e-12) {
                e.time = value;
                moved = true;
            }
        }
        if (!moved) throw ConfigError("schedule has no E1/F pulse-off events to move");
        std::stable_sort(setup.schedule.events.begin(), setup.schedule.events.end(),
                         [](const waveforms::SwitchEvent& a, const waveforms::SwitchEvent& b) {
                             return a.time < b.time;
                         });
        return;
    }
    if (path == "rf.t_rf") {
        setup.schedule.rf.ramp_up.start = value;
        return;
    }
    if (path == "rf.t_off") {
        setup.schedule.rf.t_off = value;
        return;
    }
    if (path.rfind("voltages.", 0) == 0) {
        const std::string name = path.substr(9);
        if (setup.stack.index_of(name) < 0)
            throw ConfigError("unknown electrode in parameter path: " + path);
        setup.schedule.initial[name] = value;
        return;
    }
    if (path.rfind("stack.", 0) == 0) {
        const auto dot = path.rfind('.');
        const std::string name = path.substr(6, dot - 6);
        const std::string field = path.substr(dot + 1);
        auto& model = setup.stack.model(name);
        if (field == "amplitude") {
            model.amplitude = value;
            return;
        }
        if (field == "center") {
            model.center_z = value;
            return;
        }
        throw ConfigError("unknown stack field in parameter path: " + path);
    }
    throw ConfigError("unknown parameter path: " + path);
}

std::vector<double> SweepAxis::values() const {
    if (!(step > 0.0)) throw ConfigError("sweep axis step must be > 0");
    if (start > stop) throw ConfigError("sweep axis requires start <= stop");
    std::vector<double> v;
    for (double x = start; x <= stop + 0.5 * step * 1e-9 + 1e-30; x += step) {
        v.push_back(x);
        if (v.size() > 2000000) throw ConfigError("sweep axis has too many points");
    }
    return v;
}

namespace {

SweepCell sweep_cell(const RunSetup& base, const SweepGrid& grid,
                     const InitialDistribution& dist, std::uint64_t seed,
                     double p1, double p2, long cell_index) {
    RunSetup setup = base;
    apply_param(setup, grid.axis1.param, p1);
    if (grid.axis2) apply_param(setup, grid.axis2->param, p2);
    SweepCell cell;
    cell.p1 = p1;
    cell.p2 = p2;
    const int reps = std::max(grid.repeats, 1);
    for (int r = 0; r < reps; ++r) {
        const long sub = cell_index * reps + r;
        const TrialRecord rec = mc_trial(setup, dist, CollisionLossModel{}, seed, sub);
        ++cell.n;
        if (rec.success()) ++cell.k;
        if (rec.blowup) cell.blowup = true;
    }
    cell.frac = static_cast<double>(cell.k) / static_cast<double>(cell.n);
    return cell;
}

} // namespace

std::vector<SweepCell> sweep(const RunSetup& setup, const SweepGrid& grid,
                             const InitialDistribution& dist, std::uint64_t seed,
                             const ExecutionPolicy& policy) {
    const std::vector<double> v1 = grid.axis1.values();
    std::vector<double> v2{0.0};
    if (grid.axis2) v2 = grid.axis2->values();
    const long n1 = static_cast<long>(v1.size());
    const long n2 = static_cast<long>(v2.size());
    std::vector<SweepCell> cells(static_cast<std::size_t>(n1 * n2));
    if (policy.workers <= 0) {
        // serial reference kernel
        for (long i = 0; i < n1 * n2; ++i)
            cells[i] = sweep_cell(setup, grid, dist, seed, v1[i / n2], v2[i % n2], i);
        return cells;
    }
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(policy.workers)
    for (long i = 0; i < n1 * n2; ++i)
        cells[i] = sweep_cell(setup, grid, dist, seed, v1[i / n2], v2[i % n2], i);
#else
    for (long i = 0; i < n1 * n2; ++i)
        cells[i] = sweep_cell(setup, grid, dist, seed, v1[i / n2], v2[i % n2], i);
#endif
    return cells;
}

void write_sweep_csv(const std::vector<SweepCell>& cells, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw SimulationError("cannot open output file: " + path);
    out << "param1,param2,n,k,frac\n";
    out.precision(12);
    for (const auto& c : cells)
        out << c.p1 << "," << c.p2 << "," << c.n << "," << c.k << "," << c.frac << "\n";
}

// --- flight metrics, window, calibration -----------------------------------------

FlightMetrics measure_flight(const fields::ElectrodeStack& stack,
                             const dynamics::IonSpecies& ion,
                             const fields::VoltageMap& extraction_voltages,
                             double dt, double max_time, double switch_edge) {
    // same switch-on ramp as the pulsed schedule, so the measured flight
    // matches what a dt_puls run sees
    waveforms::VoltageSchedule sched;
    sched.initial = extraction_voltages;
    for (const char* name : {"E1", "F"}) {
        auto it = sched.initial.find(name);
        if (it != sched.initial.end() && it->second != 0.0 && switch_edge > 0.0) {
            sched.events.push_back({0.0, name, it->second, switch_edge});
            it->second = 0.0;
        }
    }
    dynamics::SimParams p;
    p.dt = dt;
    p.max_time = max_time;
    p.record_decimation = 10;
    const auto traj = dynamics::simulate(stack, sched, ion, p);
    FlightMetrics m;
    const auto tp = dynamics::turning_point(traj);
    m.z_turn = tp.z;
    m.t_turn = tp.t;
    m.tof = dynamics::return_apex(traj).t;
    m.peak_speed = dynamics::peak_speed(traj);
    return m;
}

PulseWindow find_pulse_window(const RunSetup& setup, double scan_lo, double scan_hi,
                              double resolution) {
    if (!(resolution > 0.0)) throw ConfigError("window resolution must be > 0");
    if (!(scan_hi > scan_lo)) throw ConfigError("window scan range is empty");

    auto success_at = [&](double dtp) {
        RunSetup s = setup;
        apply_param(s, "schedule.dt_puls", dtp);
        s.sim.max_time = std::max(s.sim.max_time, dtp + 1e-6);
        return run_trial(s, 0, s.sim.z_init, s.sim.v_init).success();
    };

    double coarse = std::clamp((scan_hi - scan_lo) / 64.0, resolution, 4.0 * resolution);
    std::vector<double> grid;
    for (double t = scan_lo; t <= scan_hi; t += coarse) grid.push_back(t);
    long first = -1, last = -1;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (success_at(grid[i])) {
            if (first < 0) first = static_cast<long>(i);
            last = static_cast<long>(i);
        }
    }
    if (first < 0 && coarse > resolution) {
        grid.clear();
        for (double t = scan_lo; t <= scan_hi; t += resolution) grid.push_back(t);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (success_at(grid[i])) {
                if (first < 0) first = static_cast<long>(i);
                last = static_cast<long>(i);
            }
        }
        coarse = resolution;
    }
    if (first < 0)
        throw WindowNotFound("no recaptured verdict in the scanned dt_puls range");

    PulseWindow w;
    // earliest edge
    if (first == 0) {
        w.lo = grid.front();
    } else {
        double lo = grid[static_cast<std::size_t>(first) - 1]; // fail
        double hi = grid[static_cast<std::size_t>(first)];     // success
        while (hi - lo > resolution) {
            const double mid = 0.5 * (lo + hi);
            (success_at(mid) ? hi : lo) = mid;
        }
        w.lo = hi;
    }
    // latest edge
    if (last + 1 >= static_cast<long>(grid.size())) {
        w.hi = grid.back();
    } else {
        double lo = grid[static_cast<std::size_t>(last)];     // success
        double hi = grid[static_cast<std::size_t>(last) + 1]; // fail
        while (hi - lo > resolution) {
            const double mid = 0.5 * (lo + hi);
            (success_at(mid) ? lo : hi) = mid;
        }
        w.hi = lo;
    }
    return w;
}

namespace {

struct Residual {
    double turn;
    double tof;
    bool ok;
};

Residual reflector_residual(fields::ElectrodeStack& stack, const dynamics::IonSpecies& ion,
                            const fields::VoltageMap& volts, double scale, double center,
                            double target_turn, double target_tof) {
    auto& r = stack.model("R");
    r.amplitude = scale;
    r.center_z = center;
    Residual res{0.0, 0.0, false};
    try {
        const FlightMetrics m = measure_flight(stack, ion, volts);
        res.turn = m.z_turn - target_turn;
        res.tof = m.tof - target_tof;
        res.ok = true;
    } catch (const dynamics::NotReflected&) {
        res.ok = false;
    }
    return res;
}

} // namespace

ReflectorCalibration calibrate_reflector(fields::ElectrodeStack& stack,
                                         const dynamics::IonSpecies& ion,
                                         const fields::VoltageMap& extraction_voltages,
                                         double target_turn, double target_tof,
                                         int max_iterations) {
    const int ir = stack.index_of("R");
    if (ir < 0 || stack.electrodes[static_cast<std::size_t>(ir)].model.kind !=
                      fields::ElectrodeKind::ReflectorRamp)
        throw ConfigError("calibrate_reflector needs a reflector-ramp electrode 'R'");

    ReflectorCalibration best;
    best.scale = stack.model("R").amplitude;
    best.center = stack.model("R").center_z;

    if (target_turn >= stack.max_z)
        throw CalibrationFailed("target turning point lies beyond the escape boundary",
                                best);

    const double tol_turn_tight = 0.1e-3, tol_tof_tight = 10e-9;
    const double tol_turn = 1e-3, tol_tof = 0.1e-6;

    auto eval = [&](double s, double c) {
        return reflector_residual(stack, ion, extraction_voltages, s, c, target_turn,
                                  target_tof);
    };
    auto score = [&](const Residual& r) {
        return std::max(std::abs(r.turn) / tol_turn, std::abs(r.tof) / tol_tof);
    };

    double xs = best.scale, xc = best.center;
    Residual r = eval(xs, xc);
    int iter = 0;
    if (!r.ok) throw CalibrationFailed("initial reflector setting does not reflect", best);

    double best_score = score(r);
    best.achieved_turn = r.turn + target_turn;
    best.achieved_tof = r.tof + target_tof;

    if (std::abs(r.turn) < tol_turn_tight && std::abs(r.tof) < tol_tof_tight) {
        best.converged = true; // already calibrated; leave parameters unchanged
        eval(xs, xc);          // restore the stack to the incoming parameters
        return best;
    }

    // finite-difference Jacobian, refreshed when it degenerates; probes step
    // inward when sitting on a parameter bound
    double J[2][2];
    auto refresh_jacobian = [&]() {
        const double ds = (xs + 0.02 <= 1.0) ? 0.02 : -0.02;
        const double dc = (xc + 0.2e-3 <= 62e-3) ? 0.2e-3 : -0.2e-3;
        const Residual rs = eval(xs + ds, xc);
        const Residual rc = eval(xs, xc + dc);
        if (!rs.ok || !rc.ok) return false;
        J[0][0] = (rs.turn - r.turn) / ds;
        J[1][0] = (rs.tof - r.tof) / ds;
        J[0][1] = (rc.turn - r.turn) / dc;
        J[1][1] = (rc.tof - r.tof) / dc;
        r = eval(xs, xc);
        return true;
    };
    if (!refresh_jacobian())
        throw CalibrationFailed("reflector probe failed near the starting point", best);

    int stall = 0;
    while (iter < max_iterations) {
        ++iter;
        const double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
        double dxs, dxc;
        if (std::abs(det) < 1e-12) {
            if (!refresh_jacobian()) break;
            continue;
        }
        dxs = -(J[1][1] * r.turn - J[0][1] * r.tof) / det;
        dxc = -(-J[1][0] * r.turn + J[0][0] * r.tof) / det;
        dxs = std::clamp(dxs, -0.15, 0.15);
        dxc = std::clamp(dxc, -1.5e-3, 1.5e-3);

        double ns = std::clamp(xs + dxs, 0.02, 1.0);
        double nc = std::clamp(xc + dxc, 52e-3, 62e-3);
        Residual nr = eval(ns, nc);
        int halving = 0;
        while (!nr.ok && halving < 6) {
            dxs *= 0.5;
            dxc *= 0.5;
            ns = std::clamp(xs + dxs, 0.02, 1.0);
            nc = std::clamp(xc + dxc, 52e-3, 62e-3);
            nr = eval(ns, nc);
            ++halving;
        }
        if (!nr.ok) break;

        // Broyden update
        const double axs = ns - xs, axc = nc - xc;
        const double norm2 = axs * axs + axc * axc;
        if (norm2 > 0.0) {
            const double e0 = (nr.turn - r.turn) - (J[0][0] * axs + J[0][1] * axc);
            const double e1 = (nr.tof - r.tof) - (J[1][0] * axs + J[1][1] * axc);
            J[0][0] += e0 * axs / norm2;
            J[0][1] += e0 * axc / norm2;
            J[1][0] += e1 * axs / norm2;
            J[1][1] += e1 * axc / norm2;
        }

        xs = ns;
        xc = nc;
        r = nr;
        const double sc = score(r);
        if (sc < best_score) {
            best_score = sc;
            best.scale = xs;
            best.center = xc;
            best.achieved_turn = r.turn + target_turn;
            best.achieved_tof = r.tof + target_tof;
            stall = 0;
        } else {
            ++stall;
            if (stall % 5 == 0 && !refresh_jacobian()) break;
        }
        if (std::abs(r.turn) < tol_turn_tight && std::abs(r.tof) < tol_tof_tight) break;
        if (stall >= 12) break; // narrow reachable band; keep best
    }

    best.iterations = iter;
    best.converged = std::abs(best.achieved_turn - target_turn) < tol_turn &&
                     std::abs(best.achieved_tof - target_tof) < tol_tof;
    eval(best.scale, best.center); // leave the stack at the best parameters
    if (!best.converged)
        throw CalibrationFailed("reflector calibration did not reach its targets", best);
    return best;
}

} // namespace ionfountain::experiments
