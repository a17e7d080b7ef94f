#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "eps/core/constants.hpp"
#include "eps/core/error.hpp"
#include "eps/filters/analog.hpp"

namespace eps::filters {

/// Normalized second-order section: (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2).
struct Biquad {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;

    cplx response(cplx z) const {
        const cplx zi = 1.0 / z;
        return (b0 + zi * (b1 + zi * b2)) / (1.0 + zi * (a1 + zi * a2));
    }
};

/// Cascade of biquads in transposed direct form II. Holds the filter state.
class SosFilter {
public:
    SosFilter() = default;
    explicit SosFilter(std::vector<Biquad> sections) : sections_(std::move(sections)), state_(sections_.size()) {}

    const std::vector<Biquad>& sections() const noexcept { return sections_; }

    void reset() { std::fill(state_.begin(), state_.end(), State{}); }

    double process(double x) {
        for (std::size_t i = 0; i < sections_.size(); ++i) {
            const auto& s = sections_[i];
            auto& st = state_[i];
            const double y = s.b0 * x + st.z1;
            st.z1 = s.b1 * x - s.a1 * y + st.z2;
            st.z2 = s.b2 * x - s.a2 * y;
            x = y;
        }
        return x;
    }

    std::vector<double> process(std::span<const double> x) {
        std::vector<double> y(x.size());
        for (std::size_t n = 0; n < x.size(); ++n) y[n] = process(x[n]);
        return y;
    }

    /// Frequency response at f_hz for sample rate fs.
    cplx response(double f_hz, double fs) const {
        const cplx z = std::polar(1.0, constants::kTwoPi * f_hz / fs);
        cplx h = 1.0;
        for (const auto& s : sections_) h *= s.response(z);
        return h;
    }

    /// Appends the sections of another cascade (state is reset).
    SosFilter then(const SosFilter& other) const {
        auto secs = sections_;
        secs.insert(secs.end(), other.sections_.begin(), other.sections_.end());
        return SosFilter(std::move(secs));
    }

private:
    struct State {
        double z1 = 0.0, z2 = 0.0;
    };
    std::vector<Biquad> sections_;
    std::vector<State> state_;
};

namespace detail {

inline bool is_real(cplx v, double scale) { return std::abs(v.imag()) <= 1e-9 * std::max(1.0, scale); }

// Splits roots into groups of at most two whose polynomial has real coefficients.
inline std::vector<std::vector<cplx>> group_roots(std::vector<cplx> roots) {
    std::vector<std::vector<cplx>> groups;
    std::vector<cplx> reals;
    std::vector<bool> used(roots.size(), false);
    for (std::size_t i = 0; i < roots.size(); ++i) {
        if (used[i]) continue;
        const double scale = std::abs(roots[i]);
        if (is_real(roots[i], scale)) {
            reals.push_back(cplx(roots[i].real(), 0.0));
            used[i] = true;
            continue;
        }
        // Find the conjugate partner.
        std::size_t best = roots.size();
        double best_err = 0.0;
        for (std::size_t j = i + 1; j < roots.size(); ++j) {
            if (used[j]) continue;
            const double err = std::abs(roots[j] - std::conj(roots[i]));
            if (best == roots.size() || err < best_err) {
                best = j;
                best_err = err;
            }
        }
        if (best == roots.size() || best_err > 1e-6 * std::max(1.0, scale)) {
            throw NumericalError("complex root without conjugate partner");
        }
        used[i] = used[best] = true;
        const cplx r(roots[i].real(), std::abs(roots[i].imag()));
        groups.push_back({r, std::conj(r)});
    }
    std::sort(reals.begin(), reals.end(), [](cplx a, cplx b) { return a.real() < b.real(); });
    for (std::size_t i = 0; i < reals.size(); i += 2) {
        if (i + 1 < reals.size()) groups.push_back({reals[i], reals[i + 1]});
        else groups.push_back({reals[i]});
    }
    return groups;
}

inline void poly_from_group(const std::vector<cplx>& g, double& c0, double& c1, double& c2) {
    // Coefficients of prod(1 - r z^-1) = c0 + c1 z^-1 + c2 z^-2.
    c0 = 1.0;
    c1 = 0.0;
    c2 = 0.0;
    if (g.size() == 1) {
        c1 = -g[0].real();
    } else if (g.size() == 2) {
        c1 = -(g[0] + g[1]).real();
        c2 = (g[0] * g[1]).real();
    }
}

}  // namespace detail

/// Bilinear transform s = K (z - 1) / (z + 1) with K chosen so that `prewarp_hz` maps exactly.
/// A non-positive prewarp frequency gives the plain transform K = 2 fs.
inline double bilinear_constant(double fs, double prewarp_hz) {
    if (prewarp_hz <= 0.0) return 2.0 * fs;
    if (prewarp_hz >= fs / 2.0) throw ConfigError("prewarp frequency must be below Nyquist");
    const double wp = constants::kTwoPi * prewarp_hz;
    return wp / std::tan(wp / (2.0 * fs));
}

/// Quality-factor correction so that a resonance at f0 keeps its bandwidth after the
/// bilinear transform prewarped at f0: analog Q = Q * sin(w0 T) / (w0 T).
inline double prewarped_q(double q, double f0_hz, double fs) {
    const double x = constants::kTwoPi * f0_hz / fs;
    return q * std::sin(x) / x;
}

/// Discretizes an analog ZPK with the prewarped bilinear transform into second-order sections.
inline SosFilter bilinear_sos(const Zpk& analog, double fs, double prewarp_hz) {
    if (!(fs > 0.0)) throw ConfigError("sample rate must be positive");
    const double k = bilinear_constant(fs, prewarp_hz);
    if (analog.zeros.size() > analog.poles.size()) throw ConfigError("improper transfer function");

    std::vector<cplx> zd;
    std::vector<cplx> pd;
    cplx num = 1.0;
    cplx den = 1.0;
    for (auto z : analog.zeros) {
        zd.push_back((k + z) / (k - z));
        num *= (k - z);
    }
    for (auto p : analog.poles) {
        if (std::abs(k - p) == 0.0) throw NumericalError("pole maps to infinity under bilinear transform");
        pd.push_back((k + p) / (k - p));
        den *= (k - p);
    }
    while (zd.size() < pd.size()) zd.push_back(-1.0);
    double gain = analog.gain * (num / den).real();

    auto pole_groups = detail::group_roots(pd);
    auto zero_groups = detail::group_roots(zd);
    // Pair each pole group with the zero group closest to it (complex pairs first).
    std::sort(pole_groups.begin(), pole_groups.end(),
              [](const auto& a, const auto& b) { return std::abs(a[0]) > std::abs(b[0]); });
    std::vector<Biquad> sections;
    std::vector<bool> zero_used(zero_groups.size(), false);
    for (const auto& pg : pole_groups) {
        std::size_t best = zero_groups.size();
        double best_d = 0.0;
        for (std::size_t j = 0; j < zero_groups.size(); ++j) {
            if (zero_used[j] || zero_groups[j].size() > 2) continue;
            const double d = std::abs(zero_groups[j][0] - pg[0]);
            if (best == zero_groups.size() || d < best_d) {
                best = j;
                best_d = d;
            }
        }
        Biquad bq;
        double a0, b0;
        detail::poly_from_group(pg, a0, bq.a1, bq.a2);
        if (best < zero_groups.size()) {
            zero_used[best] = true;
            detail::poly_from_group(zero_groups[best], b0, bq.b1, bq.b2);
            bq.b0 = b0;
        }
        sections.push_back(bq);
    }
    for (std::size_t j = 0; j < zero_groups.size(); ++j) {
        if (!zero_used[j]) throw NumericalError("unpaired zero group in SOS factoring");
    }
    if (sections.empty()) sections.push_back(Biquad{});
    sections.front().b0 *= gain;
    sections.front().b1 *= gain;
    sections.front().b2 *= gain;
    return SosFilter(std::move(sections));
}

inline SosFilter bilinear_sos(const RationalTf& analog, double fs, double prewarp_hz) {
    return bilinear_sos(to_zpk(analog), fs, prewarp_hz);
}

/// Zero-phase filtering: forward pass, then a backward pass over the reversed output.
/// The signal is extended at both ends by odd reflection to limit start-up transients.
inline std::vector<double> filtfilt(const SosFilter& design, std::span<const double> x, std::size_t pad = 0) {
    const std::size_t n = x.size();
    if (n == 0) return {};
    pad = std::min(pad, n - 1);
    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

    SosFilter f = design;
    f.reset();
    auto y = f.process(ext);
    std::reverse(y.begin(), y.end());
    f.reset();
    y = f.process(y);
    std::reverse(y.begin(), y.end());
    return std::vector<double>(y.begin() + static_cast<std::ptrdiff_t>(pad),
                               y.begin() + static_cast<std::ptrdiff_t>(pad + n));
}

}  // namespace eps::filters
