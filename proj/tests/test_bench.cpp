#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <memory>
#include <sstream>

#include "rbm/experiments.hpp"
#include "test_support.hpp"

using namespace rbm;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string reference_text() { return slurp(RBM_REFERENCE_CONFIG); }

SystemConfig parse_text(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

const std::vector<SweepRecord>& bldc_sweep() {
    static const auto r = run_dynamic_sweep(test::reference_system(), Actuator::Bldc, 1);
    return r;
}

std::string to_csv(const std::vector<SweepRecord>& r) {
    std::ostringstream os;
    write_sweep_csv(os, r);
    return os.str();
}

struct CliRun {
    int status = -1;
    std::string out;
};

CliRun run_cli(const std::string& args, bool keep_stderr = true) {
    CliRun r;
    const std::string cmd = std::string(RBM_CLI) + " " + args + (keep_stderr ? " 2>&1" : " 2>/dev/null");
    std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(cmd.c_str(), "r"), pclose);
    if (!pipe) return r;
    std::array<char, 4096> buf{};
    while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe.get())) r.out.append(buf.data(), n);
    r.status = pclose(pipe.release());
    return r;
}

}  // namespace

TEST(Config, ReferenceParsesAndValidates) {
    const SystemConfig& c = test::reference_config();
    EXPECT_NO_THROW(c.validate());
    EXPECT_EQ(c.experiment.pitch, 36);
    EXPECT_EQ(c.keymap.zones, (std::vector<int>{8, 7, 7, 7}));
    EXPECT_DOUBLE_EQ(c.acoustics.room_noise_db, 55.0);
}

// Reference text with `line` inserted at the top of `section`.
std::string with_line(const std::string& section, const std::string& line) {
    std::string text = reference_text();
    const std::string head = "[" + section + "]\n";
    text.insert(text.find(head) + head.size(), line + "\n");
    return text;
}

std::string config_error(const std::string& text) {
    try {
        parse_text(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

TEST(Config, UnknownKeysAndSectionsAreRejected) {
    EXPECT_NO_THROW(parse_text(reference_text()));
    EXPECT_NE(config_error(reference_text() + "\n[mallet2]\nball_mass = 1\n").find("unknown section [mallet2]"),
              std::string::npos);
    EXPECT_NE(config_error(with_line("mallet", "ball_mas = 0.004")).find("unknown key mallet.ball_mas"),
              std::string::npos);
    EXPECT_NE(config_error("stray = 1\n" + reference_text()).find("stray"), std::string::npos);
}

TEST(Config, MalformedValuesAreRejected) {
    std::string text = reference_text();
    const auto replaced = [&](const std::string& from, const std::string& to) {
        std::string t = text;
        t.replace(t.find(from), from.size(), to);
        return t;
    };
    EXPECT_NE(config_error(replaced("bpm = 60", "bpm = fast")).find("experiment.bpm"), std::string::npos);
    EXPECT_NE(config_error(replaced("bpm = 60", "bpm = 60 bpm")).find("experiment.bpm"), std::string::npos);
    EXPECT_NE(config_error(replaced("compensation = true", "compensation = maybe")).find("controller.compensation"),
              std::string::npos);
    EXPECT_NE(config_error(replaced("zones = 8,7,7,7", "zones = 8,x,7,7")).find("keymap.zones"), std::string::npos);
    EXPECT_NE(config_error(replaced("bpm = 60", "bpm = -60")).find("experiment: dynamic sweep"), std::string::npos);
    EXPECT_FALSE(config_error("[mallet\n").empty());
}

TEST(Config, FileValuesAreApplied) {
    std::string text = reference_text();
    text.replace(text.find("bpm = 60"), 8, "bpm = 120");
    text.replace(text.find("compensation = true"), 19, "compensation = false");
    const SystemConfig c = parse_text(text);
    EXPECT_DOUBLE_EQ(c.experiment.bpm, 120.0);
    EXPECT_FALSE(c.controller.compensation);
}

TEST(Fit, ExactLine) {
    const FitResult f = fit_line({1, 2, 3, 4, 5}, {3, 5, 7, 9, 11});
    EXPECT_NEAR(f.slope, 2.0, 1e-12);
    EXPECT_NEAR(f.intercept, 1.0, 1e-12);
    EXPECT_NEAR(f.residual_norm, 0.0, 1e-12);
    EXPECT_THROW(fit_line({1}, {1}), std::invalid_argument);
    EXPECT_THROW(fit_line({2, 2}, {1, 3}), std::invalid_argument);
}

TEST(Fit, ClosedFormTwoPointsAndSymmetricNoise) {
    const FitResult two = fit_line({0, 10}, {1, 6});
    EXPECT_NEAR(two.slope, 0.5, 1e-15);
    // Symmetric ±e noise about y = x at x = 0..3 with pattern +,-,-,+ leaves the slope intact.
    const FitResult f = fit_line({0, 1, 2, 3}, {0.1, 0.9, 1.9, 3.1});
    EXPECT_NEAR(f.slope, 1.0, 1e-12);
    EXPECT_NEAR(f.residual_norm, 0.2, 1e-12);
}

TEST(Fit, SolenoidSaturationNeedsRestrictedRange) {
    System sys = test::reference_system();
    sys.solenoid.spec.noise_sigma = 0.0;
    const auto r = run_dynamic_sweep(sys, Actuator::Solenoid, 1);
    const FitResult full = fit_intensity_line(r);
    const FitResult low = fit_intensity_line(r, sys.config.experiment.solenoid_fit_max_velocity);
    const FitResult high = fit_intensity_line(r, kMaxMidiVelocity, sys.config.experiment.solenoid_fit_max_velocity + 1);
    EXPECT_LT(low.residual_norm, full.residual_norm);
    EXPECT_GT(low.slope, full.slope);
    EXPECT_LT(std::abs(high.slope), 0.1 * full.slope);
}

TEST(SweepCsv, FormatAndRoundTrip) {
    const std::vector<SweepRecord> r{{1, 0, 57.04, 5.0582e-7, 1016}, {127, 5, 82.6, 1.8197e-4, 762016}};
    const std::string csv = to_csv(r);
    EXPECT_EQ(csv, "velocity,stroke_index,spl_db,intensity_w_m2,contact_tick\n"
                   "1,0,57.0,5.05820e-07,1016\n"
                   "127,5,82.6,1.81970e-04,762016\n");
    std::istringstream in(csv);
    const auto back = read_sweep_csv(in);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[1], r[1]);
    EXPECT_EQ(to_csv(back), csv);
    std::istringstream bad_header("velocity,spl\n1,2\n");
    EXPECT_THROW(read_sweep_csv(bad_header), Error);
    std::istringstream bad_row(std::string(kSweepCsvHeader) + "\n1,0,57.0\n");
    EXPECT_THROW(read_sweep_csv(bad_row), Error);
}

TEST(DynamicSweep, ShapeAndTiming) {
    const auto& r = bldc_sweep();
    const auto& ex = test::reference_config().experiment;
    ASSERT_EQ(r.size(), 762u);
    for (std::size_t i = 0; i < r.size(); ++i) {
        EXPECT_EQ(r[i].velocity, 1 + static_cast<int>(i) / ex.strokes_per_velocity);
        EXPECT_EQ(r[i].stroke_index, static_cast<int>(i) % ex.strokes_per_velocity);
        // One stroke per second, every contact the same fixed delay after its note.
        EXPECT_EQ(r[i].contact_tick - r[0].contact_tick, static_cast<Tick>(i) * 1000);
    }
    const auto spl = mean_spl(r);
    EXPECT_EQ(spl.size(), 127u);
}

TEST(DynamicSweep, MatchesGoldens) {
    EXPECT_EQ(to_csv(bldc_sweep()), slurp(std::string(RBM_GOLDEN_DIR) + "/bldc_seed1.csv"));
    EXPECT_EQ(to_csv(run_dynamic_sweep(test::reference_system(), Actuator::Solenoid, 1)),
              slurp(std::string(RBM_GOLDEN_DIR) + "/solenoid_seed1.csv"));
}

TEST(DynamicSweep, SolenoidIsDeterministicPerSeed) {
    const System& sys = test::reference_system();
    EXPECT_EQ(run_dynamic_sweep(sys, Actuator::Solenoid, 7), run_dynamic_sweep(sys, Actuator::Solenoid, 7));
    EXPECT_NE(run_dynamic_sweep(sys, Actuator::Solenoid, 7), run_dynamic_sweep(sys, Actuator::Solenoid, 8));
}

TEST(SpeedSweep, SlowTrialLandsEveryNote) {
    const System& sys = test::reference_system();
    const auto& homed = test::homed_reference_controller();
    for (Actuator a : {Actuator::Bldc, Actuator::Solenoid}) {
        const SpeedTrial t = run_speed_trial(sys, a, 1.0, homed);
        EXPECT_EQ(t.notes, 3);
        EXPECT_EQ(t.contacts, 3);
        EXPECT_FALSE(t.tripped);
    }
}

TEST(SpeedSweep, TrialTicks) {
    EXPECT_EQ(trial_ticks(1.0, 3.0, 0.001), (std::vector<Tick>{0, 1000, 2000}));
    EXPECT_EQ(trial_ticks(8.3, 0.5, 0.001), (std::vector<Tick>{0, 120, 241, 361, 482}));
}

TEST(SpeedSweep, SolenoidMissesAboveItsCycleRate) {
    const System& sys = test::reference_system();
    const auto& homed = test::homed_reference_controller();
    const SpeedTrial ok = run_speed_trial(sys, Actuator::Solenoid, 8.3, homed);
    EXPECT_EQ(ok.contacts, ok.notes);
    const SpeedTrial miss = run_speed_trial(sys, Actuator::Solenoid, 8.4, homed);
    EXPECT_LT(miss.contacts, miss.notes);
}

TEST(Cli, StrikeFitAndErrors) {
    const CliRun strike = run_cli("strike --pitch 36 --vel 100");
    EXPECT_EQ(strike.status, 0) << strike.out;
    EXPECT_NE(strike.out.find(",contact,"), std::string::npos) << strike.out;
    EXPECT_NE(strike.out.find("# notes 1 contacts 1"), std::string::npos) << strike.out;

    const CliRun fit = run_cli("fit " + std::string(RBM_GOLDEN_DIR) + "/bldc_seed1.csv");
    EXPECT_EQ(fit.status, 0) << fit.out;
    EXPECT_NE(fit.out.find("slope 1.447"), std::string::npos) << fit.out;

    EXPECT_NE(run_cli("strike --pitch 36 --vel 0").status, 0);
    EXPECT_NE(run_cli("strike --pitch 127 --vel 10").status, 0);
    EXPECT_NE(run_cli("sweep-dynamics --actuator piezo").status, 0);
}

TEST(Cli, SolenoidSweepToStdoutMatchesGolden) {
    const CliRun r = run_cli("sweep-dynamics --actuator solenoid --seed 1 --out -", false);
    EXPECT_EQ(r.status, 0);
    EXPECT_EQ(r.out, slurp(std::string(RBM_GOLDEN_DIR) + "/solenoid_seed1.csv"));
}
