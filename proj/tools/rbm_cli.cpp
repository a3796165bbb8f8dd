// Bench harness: homing, single strokes, the dynamic-range and speed sweeps,
// note-list playback, the live UDP service and line fits of sweep CSVs.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "rbm/experiments.hpp"
#include "rbm/session.hpp"
#include "rbm/udp_service.hpp"

namespace {

using namespace rbm;

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop.store(true); }

void print_events(const std::vector<StrikerEvent>& events) {
    for (const auto& e : events) write_event(std::cout, e);
}

int cmd_home(const System& sys) {
    StrikerController ctl = sys.make_controller();
    print_events(ctl.home_all());
    for (std::size_t i = 0; i < ctl.size(); ++i) {
        const Striker& s = ctl.striker(static_cast<int>(i));
        std::printf("# striker %zu %s angle %.6f rad\n", i, std::string(to_string(s.status())).c_str(),
                    s.servo().angle());
    }
    return 0;
}

/// Plays `notes` (session ticks) to completion, printing events, late arrivals and meter readings.
int play_notes(const System& sys, const std::vector<NoteEvent>& notes, std::ostream* spl) {
    Session session(sys);
    for (const auto& n : notes) {
        auto routed = session.submit(n);
        if (routed && routed->late())
            std::fprintf(stderr, "late: pitch %d wanted tick %lld, arm arrives for tick %lld\n", n.pitch,
                         static_cast<long long>(routed->requested_tick), static_cast<long long>(routed->request.tick));
    }
    const Tick tail = static_cast<Tick>(std::llround(sys.config.acoustics.sample_period * 2 /
                                                     sys.config.servo.tick_period));
    Tick quiet = 0;
    while (quiet < tail) {
        print_events(session.tick());
        quiet = session.busy() ? 0 : quiet + 1;
    }
    if (spl)
        for (const auto& r : session.take_readings()) write_reading(*spl, r);
    const SessionStats& st = session.stats();
    std::printf("# notes %zu contacts %zu unrouted %zu refused %zu late %zu\n", st.notes, st.contacts, st.unrouted,
                st.refused, st.late_arrivals);
    return st.contacts + st.unrouted + st.refused == st.notes ? 0 : 1;
}

int cmd_sweep_dynamics(const System& sys, Actuator actuator, std::uint64_t seed, const std::string& out,
                       const std::string& plot_prefix) {
    const auto records = run_dynamic_sweep(sys, actuator, seed);
    if (out == "-") {
        write_sweep_csv(std::cout, records);
    } else {
        std::ofstream f(out);
        if (!f) throw Error("cannot write " + out);
        write_sweep_csv(f, records);
    }
    if (!plot_prefix.empty()) {
        std::ofstream spl(plot_prefix + "_spl.dat");
        std::ofstream intensity(plot_prefix + "_intensity.dat");
        if (!spl || !intensity) throw Error("cannot write plot data under " + plot_prefix);
        write_plot_data(spl, mean_spl(records), "mean_spl_db");
        write_plot_data(intensity, mean_intensity(records), "mean_intensity_w_m2");
    }
    const auto spl = mean_spl(records);
    double lo = spl.begin()->second, hi = lo;
    for (const auto& [v, s] : spl) {
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    const int fit_max = actuator == Actuator::Solenoid ? sys.config.experiment.solenoid_fit_max_velocity
                                                       : kMaxMidiVelocity;
    const FitResult fit = fit_intensity_line(records, fit_max);
    std::fprintf(stderr, "%s: %zu strokes, SPL %.1f..%.1f dB, slope %.4e W/m2 per step (v <= %d), residual %.3e\n",
                 std::string(to_string(actuator)).c_str(), records.size(), lo, hi, fit.slope, fit_max,
                 fit.residual_norm);
    return 0;
}

int cmd_sweep_speed(const System& sys, Actuator actuator, std::uint64_t seed, bool verbose) {
    const SpeedResult r = run_speed_sweep(sys, actuator, seed);
    if (verbose)
        for (const auto& t : r.trials)
            std::printf("# %.1f Hz %d/%d contacts%s\n", t.rate, t.contacts, t.notes, t.tripped ? " tripped" : "");
    std::printf("max_rate %.1f Hz\nfailure_mode %s\n", r.max_rate, std::string(to_string(r.mode)).c_str());
    return 0;
}

int cmd_fit(const std::string& file, int max_velocity) {
    std::ifstream in(file);
    if (!in) throw Error("cannot open " + file);
    const FitResult f = fit_intensity_line(read_sweep_csv(in), max_velocity);
    std::printf("slope %.6e\nintercept %.6e\nresidual_norm %.6e\n", f.slope, f.intercept, f.residual_norm);
    return 0;
}

int cmd_serve(const System& sys, int port, double duration, const std::string& spl_file) {
    UdpService service(sys, port);
    std::fprintf(stderr, "listening on udp port %d\n", service.port());
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::ofstream spl_out;
    if (!spl_file.empty()) {
        spl_out.open(spl_file);
        if (!spl_out) throw Error("cannot write " + spl_file);
    }
    std::ostream null_out(nullptr);
    const Tick max_ticks =
        duration > 0 ? static_cast<Tick>(std::llround(duration / sys.config.servo.tick_period)) : -1;
    const ServiceStats st = service.run(std::cout, spl_file.empty() ? null_out : spl_out, g_stop, max_ticks);
    std::fprintf(stderr, "datagrams %zu malformed %zu inbox_full %zu notes %zu contacts %zu unrouted %zu refused %zu\n",
                 st.datagrams, st.malformed, st.inbox_full, st.session.notes, st.session.contacts,
                 st.session.unrouted, st.session.refused);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulated BLDC marimba striker bench"};
    app.require_subcommand(1);
    std::string config = RBM_REFERENCE_CONFIG;
    app.add_option("--config", config, "configuration file")->check(CLI::ExistingFile);

    auto* home = app.add_subcommand("home", "home every striker and report its rest angle");

    int pitch = 36, vel = 127;
    auto* strike = app.add_subcommand("strike", "home, then play one note");
    strike->add_option("--pitch", pitch, "MIDI pitch")->check(CLI::Range(0, 127));
    strike->add_option("--vel", vel, "MIDI velocity")->check(CLI::Range(1, 127));

    std::string actuator_name = "bldc";
    std::uint64_t seed = 1;
    std::string out = "-";
    std::string plot_prefix;
    auto* dyn = app.add_subcommand("sweep-dynamics", "dynamic-range sweep, one CSV row per stroke");
    dyn->add_option("--actuator", actuator_name)->check(CLI::IsMember({"bldc", "solenoid"}));
    dyn->add_option("--seed", seed);
    dyn->add_option("--out", out, "CSV file, - for stdout");
    dyn->add_option("--plot", plot_prefix, "also write <prefix>_spl.dat and <prefix>_intensity.dat");

    bool verbose = false;
    auto* speed = app.add_subcommand("sweep-speed", "raise the repetition rate until a trial fails");
    speed->add_option("--actuator", actuator_name)->check(CLI::IsMember({"bldc", "solenoid"}));
    speed->add_option("--seed", seed);
    speed->add_flag("--verbose", verbose, "print every trial");

    std::string file;
    std::string spl_file;
    auto* play = app.add_subcommand("play", "play a `tick pitch velocity` note list");
    play->add_option("file", file)->required()->check(CLI::ExistingFile);
    play->add_option("--spl", spl_file, "write meter readings (time,spl) to this file");

    int port = 9000;
    double duration = 0.0;
    auto* serve = app.add_subcommand("serve", "receive notes over UDP until interrupted");
    serve->add_option("--port", port)->check(CLI::Range(0, 65535));
    serve->add_option("--duration", duration, "stop after this many seconds (0: run until interrupted)");
    serve->add_option("--spl", spl_file, "write meter readings (time,spl) to this file");

    int max_velocity = kMaxMidiVelocity;
    auto* fit = app.add_subcommand("fit", "least-squares line of mean intensity against velocity");
    fit->add_option("file", file)->required()->check(CLI::ExistingFile);
    fit->add_option("--max-velocity", max_velocity)->check(CLI::Range(2, 127));

    CLI11_PARSE(app, argc, argv);

    try {
        if (fit->parsed()) return cmd_fit(file, max_velocity);
        const SystemConfig cfg = load_config(config);
        const System sys = build_system(cfg);
        if (home->parsed()) return cmd_home(sys);
        if (strike->parsed()) {
            map_pitch(sys.keymap, pitch);
            return play_notes(sys, {{pitch, vel, 0}}, nullptr);
        }
        if (dyn->parsed()) return cmd_sweep_dynamics(sys, parse_actuator(actuator_name), seed, out, plot_prefix);
        if (speed->parsed()) return cmd_sweep_speed(sys, parse_actuator(actuator_name), seed, verbose);
        if (play->parsed()) {
            std::ifstream in(file);
            std::ofstream spl;
            if (!spl_file.empty()) spl.open(spl_file);
            return play_notes(sys, parse_note_list(in), spl_file.empty() ? nullptr : &spl);
        }
        if (serve->parsed()) {
            if (!serve->count("--port")) port = cfg.gateway.port;
            return cmd_serve(sys, port, duration, spl_file);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "rbm: %s\n", e.what());
        return 1;
    }
    return 0;
}
