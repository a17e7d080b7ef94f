#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "eps/core/error.hpp"

namespace eps {

/// Uniformly sampled real signal.
///
/// Invariants (checked on construction): fs > 0, at least one sample, all samples finite.
class WaveformBuffer {
public:
    WaveformBuffer(std::vector<double> samples, double fs, double t0 = 0.0, std::string label = {})
        : samples_(std::move(samples)), fs_(fs), t0_(t0), label_(std::move(label)) {
        if (!(fs_ > 0.0) || !std::isfinite(fs_)) {
            throw ContractError("WaveformBuffer: sample rate must be positive");
        }
        if (samples_.empty()) {
            throw ContractError("WaveformBuffer: at least one sample required");
        }
        if (!std::all_of(samples_.begin(), samples_.end(), [](double v) { return std::isfinite(v); })) {
            throw ContractError("WaveformBuffer: non-finite sample in '" + label_ + "'");
        }
    }

    /// All-zero buffer of n samples.
    static WaveformBuffer zeros(std::size_t n, double fs, double t0 = 0.0, std::string label = {}) {
        return WaveformBuffer(std::vector<double>(n, 0.0), fs, t0, std::move(label));
    }

    std::span<const double> samples() const noexcept { return samples_; }
    const std::vector<double>& values() const noexcept { return samples_; }
    std::size_t size() const noexcept { return samples_.size(); }
    double fs() const noexcept { return fs_; }
    double dt() const noexcept { return 1.0 / fs_; }
    double t0() const noexcept { return t0_; }
    double duration() const noexcept { return static_cast<double>(samples_.size()) / fs_; }
    const std::string& label() const noexcept { return label_; }
    double operator[](std::size_t i) const { return samples_[i]; }
    double time_at(std::size_t i) const noexcept { return t0_ + static_cast<double>(i) / fs_; }

    WaveformBuffer with_samples(std::vector<double> samples) const {
        return WaveformBuffer(std::move(samples), fs_, t0_, label_);
    }
    WaveformBuffer relabeled(std::string label) const {
        return WaveformBuffer(samples_, fs_, t0_, std::move(label));
    }

    friend bool operator==(const WaveformBuffer&, const WaveformBuffer&) = default;

private:
    std::vector<double> samples_;
    double fs_;
    double t0_;
    std::string label_;
};

inline bool same_timebase(const WaveformBuffer& a, const WaveformBuffer& b) {
    return a.fs() == b.fs() && a.size() == b.size();
}

/// Shortest round-trip decimal representation.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

/// Writes a `time_s,<value_column>` header row, then one row per sample.
inline void write_csv(std::ostream& os, const WaveformBuffer& w, const std::string& value_column = "value") {
    os << "time_s," << value_column << '\n';
    for (std::size_t i = 0; i < w.size(); ++i) {
        os << format_double(w.time_at(i)) << ',' << format_double(w[i]) << '\n';
    }
}

/// Parses the format produced by write_csv. The sample rate is recovered from the time column
/// (rounded to 1 uHz); the label is the value column name.
inline WaveformBuffer read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ContractError("waveform csv: missing column header");
    const auto hc = line.find(',');
    if (line.rfind("time_s,", 0) != 0 || hc == std::string::npos) {
        throw ContractError("waveform csv: header must start with 'time_s,'");
    }
    std::string label = line.substr(hc + 1);
    while (!label.empty() && (label.back() == '\r' || label.back() == ' ')) label.pop_back();
    std::vector<double> times, values;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw ContractError("waveform csv: malformed row '" + line + "'");
        try {
            times.push_back(std::stod(line.substr(0, comma)));
            values.push_back(std::stod(line.substr(comma + 1)));
        } catch (const std::exception&) {
            throw ContractError("waveform csv: malformed row '" + line + "'");
        }
    }
    if (times.size() < 2 || !(times.back() > times.front())) {
        throw ContractError("waveform csv: need at least two increasing time stamps");
    }
    const double fs = std::round(static_cast<double>(times.size() - 1) / (times.back() - times.front()) * 1e6) / 1e6;
    return WaveformBuffer(std::move(values), fs, times.front(), label);
}

}  // namespace eps
