// Compares the serial reference kernels against the OpenMP kernels on a
// Monte-Carlo batch and a 2D sweep, and checks the results are identical.
#include <chrono>
#include <cstdio>
#include <cstring>

#include "ionfountain/experiments.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace ionfountain;
using Clock = std::chrono::steady_clock;

static double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

static experiments::RunSetup make_setup() {
    experiments::RunSetup setup;
    setup.stack = fields::default_stack();
    setup.stack.model("R").amplitude = 0.75;
    setup.stack.model("R").center_z = 54.9e-3;
    setup.schedule = waveforms::baseline_schedule(6.3e-6);
    setup.ion = dynamics::ca40();
    setup.sim.max_time = 8e-6;
    return setup;
}

int main(int argc, char** argv) {
    const long trials = argc > 1 ? std::atol(argv[1]) : 400;
    const auto setup = make_setup();
    experiments::InitialDistribution thermal;
    thermal.kind = experiments::InitialDistribution::Kind::Thermal;

#ifdef _OPENMP
    const int max_threads = omp_get_max_threads();
#else
    const int max_threads = 1;
#endif
    std::printf("monte-carlo batch, %ld trials\n", trials);

    auto t0 = Clock::now();
    const auto serial =
        experiments::monte_carlo(setup, thermal, trials, 42, {}, {0});
    const double t_serial = seconds_since(t0);
    std::printf("  serial reference: %7.2f ms\n", t_serial * 1e3);

    t0 = Clock::now();
    const auto parallel =
        experiments::monte_carlo(setup, thermal, trials, 42, {}, {max_threads});
    const double t_par = seconds_since(t0);
    std::printf("  openmp x%-2d      : %7.2f ms   speedup %.2fx\n", max_threads,
                t_par * 1e3, t_serial / t_par);

    bool identical = serial.n_success == parallel.n_success;
    for (std::size_t i = 0; identical && i < serial.trials.size(); ++i) {
        const auto& a = serial.trials[i].outcome;
        const auto& b = parallel.trials[i].outcome;
        identical = a.verdict == b.verdict && a.z_final == b.z_final &&
                    a.v_final == b.v_final && a.energy_j == b.energy_j;
    }
    std::printf("  results identical: %s\n", identical ? "yes" : "NO");

    std::printf("2D timing sweep\n");
    experiments::SweepGrid grid;
    grid.axis1 = {"schedule.dt_puls", 6.0e-6, 6.6e-6, 50e-9};
    grid.axis2 = experiments::SweepAxis{"rf.t_rf", 6.0e-6, 6.6e-6, 50e-9};
    t0 = Clock::now();
    const auto cells_s = experiments::sweep(setup, grid, {}, 42, {0});
    const double s_serial = seconds_since(t0);
    std::printf("  serial reference: %7.2f ms (%zu cells)\n", s_serial * 1e3,
                cells_s.size());
    t0 = Clock::now();
    const auto cells_p = experiments::sweep(setup, grid, {}, 42, {max_threads});
    const double s_par = seconds_since(t0);
    std::printf("  openmp x%-2d      : %7.2f ms   speedup %.2fx\n", max_threads,
                s_par * 1e3, s_serial / s_par);
    bool same = cells_s.size() == cells_p.size();
    for (std::size_t i = 0; same && i < cells_s.size(); ++i)
        same = cells_s[i].k == cells_p[i].k && cells_s[i].n == cells_p[i].n;
    std::printf("  results identical: %s\n", same ? "yes" : "NO");
    return (identical && same) ? 0 : 1;
}
