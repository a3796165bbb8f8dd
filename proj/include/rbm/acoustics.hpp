#pragma once

// Impact → sound intensity, and an emulated SPL meter: room noise power-summed
// with the signal, SLOW exponential time weighting, one reading per sample period.

#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <vector>

#include "rbm/error.hpp"

namespace rbm {

struct AcousticConfig {
    double reference_intensity = 1e-12;  // W/m²
    double room_noise_db = 55.0;
    double coupling_k = 1e-6;            // W/m² of peak intensity per rad/s of impact speed
    double decay_time = 0.3;             // s, intensity decay of a struck bar
    double meter_time_constant = 1.0;    // s, SLOW
    double sample_period = 0.5;          // s between readings
    double render_step = 0.001;          // s, intensity integration step
    double resolution_db = 0.1;          // display resolution, 0 disables rounding

    void validate() const {
        if (!(reference_intensity > 0 && coupling_k > 0 && decay_time > 0 && meter_time_constant > 0 &&
              sample_period > 0 && render_step > 0))
            throw ConfigError("acoustics: parameters must be positive");
        if (!(resolution_db >= 0)) throw ConfigError("acoustics: resolution must be non-negative");
        if (std::abs(std::remainder(sample_period, render_step)) > 1e-9 * sample_period)
            throw ConfigError("acoustics: sample period must be a multiple of the render step");
    }

    double noise_intensity() const { return spl_intensity(room_noise_db); }

private:
    double spl_intensity(double db) const { return reference_intensity * std::pow(10.0, db / 10.0); }
};

struct IntensitySample {
    double time = 0.0;       // s
    double intensity = 0.0;  // W/m², signal only
};

struct SplReading {
    double time = 0.0;  // s
    double spl = 0.0;   // dB

    bool operator==(const SplReading&) const = default;
};

inline double impact_to_intensity(double impact_speed, const AcousticConfig& cfg) {
    if (!(impact_speed >= 0)) throw std::invalid_argument("impact speed must be non-negative");
    return cfg.coupling_k * impact_speed;
}

inline double intensity_to_spl(double intensity, const AcousticConfig& cfg) {
    if (!(intensity > 0)) throw std::invalid_argument("SPL is undefined for non-positive intensity");
    return 10.0 * std::log10(intensity / cfg.reference_intensity);
}

inline double spl_to_intensity(double spl, const AcousticConfig& cfg) {
    return cfg.reference_intensity * std::pow(10.0, spl / 10.0);
}

/// Streaming meter. Each sample is the mean signal intensity over the interval
/// ending at its time stamp; the averager is integrated exactly across it.
class SplMeter {
public:
    explicit SplMeter(const AcousticConfig& cfg, double start_time = 0.0)
        : cfg_(cfg), noise_(cfg.noise_intensity()), level_(noise_), time_(start_time) {
        next_reading_ = (std::floor(start_time / cfg.sample_period + 1e-9) + 1.0) * cfg.sample_period;
    }

    /// Feeds one sample; returns the reading if a sample instant was reached.
    std::optional<SplReading> push(const IntensitySample& s) {
        if (!(s.time > time_)) throw std::invalid_argument("meter: samples must be strictly time-ordered");
        if (!(s.intensity >= 0)) throw std::invalid_argument("meter: negative intensity");
        const double input = noise_ + s.intensity;
        level_ = input + (level_ - input) * std::exp(-(s.time - time_) / cfg_.meter_time_constant);
        time_ = s.time;
        if (time_ < next_reading_ - 1e-9) return std::nullopt;
        SplReading r{next_reading_, display(intensity_to_spl(level_, cfg_))};
        next_reading_ += cfg_.sample_period;
        return r;
    }

    double level() const { return level_; }
    double time() const { return time_; }

private:
    double display(double db) const {
        if (cfg_.resolution_db == 0.0) return db;
        return std::round(db / cfg_.resolution_db) * cfg_.resolution_db;
    }

    AcousticConfig cfg_;
    double noise_;
    double level_;
    double time_;
    double next_reading_;
};

inline std::vector<SplReading> meter_process(const std::vector<IntensitySample>& samples, const AcousticConfig& cfg,
                                             double start_time = 0.0) {
    SplMeter meter(cfg, start_time);
    std::vector<SplReading> out;
    for (const auto& s : samples)
        if (auto r = meter.push(s)) out.push_back(*r);
    return out;
}

/// Sum of exponentially decaying bar tones, one per impact.
class ImpactRenderer {
public:
    explicit ImpactRenderer(const AcousticConfig& cfg) : cfg_(cfg) {}

    void add_impact(double time, double impact_speed) {
        if (!impacts_.empty() && time < impacts_.back().time)
            throw std::invalid_argument("renderer: impacts must be time-ordered");
        impacts_.push_back({time, impact_to_intensity(impact_speed, cfg_)});
    }

    /// Mean signal intensity over [t0, t1].
    IntensitySample render(double t0, double t1) {
        const double tau = cfg_.decay_time;
        double energy = 0.0;
        for (const auto& imp : impacts_) {
            const double a = std::max(t0, imp.time);
            if (a >= t1) continue;
            energy += imp.peak * tau * (std::exp(-(a - imp.time) / tau) - std::exp(-(t1 - imp.time) / tau));
        }
        while (!impacts_.empty() && t1 - impacts_.front().time > 40.0 * tau) impacts_.pop_front();
        return {t1, energy / (t1 - t0)};
    }

private:
    struct Impact {
        double time;
        double peak;
    };
    AcousticConfig cfg_;
    std::deque<Impact> impacts_;
};

/// Meter readings over [start, end) for a set of time-ordered impacts.
inline std::vector<SplReading> simulate_readings(const std::vector<std::pair<double, double>>& impacts,
                                                 double start, double end, const AcousticConfig& cfg) {
    ImpactRenderer renderer(cfg);
    SplMeter meter(cfg, start);
    std::vector<SplReading> out;
    std::size_t next = 0;
    const auto steps = static_cast<long long>(std::llround((end - start) / cfg.render_step));
    for (long long k = 0; k < steps; ++k) {
        const double t0 = start + k * cfg.render_step;
        const double t1 = start + (k + 1) * cfg.render_step;
        while (next < impacts.size() && impacts[next].first < t1) {
            renderer.add_impact(impacts[next].first, impacts[next].second);
            ++next;
        }
        if (auto r = meter.push(renderer.render(t0, t1))) out.push_back(*r);
    }
    return out;
}

/// Highest reading in (after, after + window].
inline std::optional<SplReading> max_reading_after(const std::vector<SplReading>& readings, double after,
                                                   double window) {
    std::optional<SplReading> best;
    for (const auto& r : readings)
        if (r.time > after && r.time <= after + window + 1e-9 && (!best || r.spl > best->spl)) best = r;
    return best;
}

}  // namespace rbm
