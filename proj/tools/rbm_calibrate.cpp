// Derives the calibrated entries of a configuration file: the quietest
// acceleration and coupling_k from the BLDC dynamic sweep, and the i²t limit
// from the repetition-rate trials. Prints the values; it does not edit the file.

#include <cmath>
#include <cstdio>
#include <limits>

#include <CLI11.hpp>

#include "rbm/experiments.hpp"

namespace {

using namespace rbm;

void calibrate_acoustics(SystemConfig cfg, double target_slope, double target_floor_db, int rounds) {
    const double noise = cfg.acoustics.noise_intensity();
    const double floor = spl_to_intensity(target_floor_db, cfg.acoustics) - noise;
    for (int round = 0; round < rounds; ++round) {
        cfg.acoustics.resolution_db = 0.0;  // fit on the unrounded chain
        const System sys = build_system(cfg);
        const auto records = run_dynamic_sweep(sys, Actuator::Bldc, 0);
        const FitResult fit = fit_intensity_line(records);
        const auto spl = mean_spl(records);
        std::printf("round %d: k=%.9g a_min=%.9g slope=%.6e min=%.2f max=%.2f\n", round, cfg.acoustics.coupling_k,
                    cfg.profiler.min_acceleration, fit.slope, spl.begin()->second, spl.rbegin()->second);
        // Slope scales with k, the quietest stroke's signal with k·a_min.
        const double k = cfg.acoustics.coupling_k * target_slope / fit.slope;
        const double quiet = spl_to_intensity(spl.begin()->second, cfg.acoustics) - noise;
        cfg.profiler.min_acceleration *= floor / quiet * cfg.acoustics.coupling_k / k;
        cfg.acoustics.coupling_k = k;
    }
    std::printf("[profiler] min_acceleration = %.6g\n[acoustics] coupling_k = %.6g\n", cfg.profiler.min_acceleration,
                cfg.acoustics.coupling_k);
}

void calibrate_trip(SystemConfig cfg, double last_ok, double first_fail) {
    cfg.trip.i2t_limit = std::numeric_limits<double>::infinity();
    const System sys = build_system(cfg);
    const StrikerController homed = sys.make_homed_controller();
    const ExperimentConfig& ex = cfg.experiment;
    double worst_ok = 0.0;
    double fail = 0.0;
    for (int k = 0;; ++k) {
        const double rate = ex.speed_start_rate + k * ex.speed_rate_step;
        if (rate > first_fail + 1e-9) break;
        const SpeedTrial t = run_speed_trial(sys, Actuator::Bldc, rate, homed);
        std::printf("%.1f Hz: %d/%d contacts, peak i2t %.6f\n", rate, t.contacts, t.notes, t.peak_i2t);
        if (t.contacts < t.notes) std::printf("  missed contacts below the target rate\n");
        if (rate < last_ok + 1e-9) worst_ok = std::max(worst_ok, t.peak_i2t);
        else fail = t.peak_i2t;
    }
    if (!(fail > worst_ok)) {
        std::printf("no i2t limit separates %.1f Hz from %.1f Hz (%.6f vs %.6f)\n", last_ok, first_fail, worst_ok,
                    fail);
        return;
    }
    std::printf("[trip] i2t_limit = %.6g\n", 0.5 * (worst_ok + fail));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Calibrate the frozen entries of a striker configuration"};
    std::string config = RBM_REFERENCE_CONFIG;
    double slope = 1.4472e-06;
    double floor_db = 57.0;
    int rounds = 4;
    double last_ok = 32.9;
    double first_fail = 33.0;
    bool skip_acoustics = false;
    bool skip_trip = false;
    app.add_option("--config", config, "configuration file")->check(CLI::ExistingFile);
    app.add_option("--slope", slope, "target intensity slope, W/m² per velocity step");
    app.add_option("--floor", floor_db, "target level of the quietest stroke, dB");
    app.add_option("--rounds", rounds, "fixed-point rounds for the acoustic fit");
    app.add_option("--last-ok", last_ok, "highest rate that must still pass, Hz");
    app.add_option("--first-fail", first_fail, "rate at which the drive must trip, Hz");
    app.add_flag("--skip-acoustics", skip_acoustics);
    app.add_flag("--skip-trip", skip_trip);
    CLI11_PARSE(app, argc, argv);

    try {
        const SystemConfig cfg = load_config(config);
        if (!skip_acoustics) calibrate_acoustics(cfg, slope, floor_db, rounds);
        if (!skip_trip) calibrate_trip(cfg, last_ok, first_fail);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "rbm_calibrate: %s\n", e.what());
        return 1;
    }
    return 0;
}
