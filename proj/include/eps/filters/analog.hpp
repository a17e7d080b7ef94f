#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include <Eigen/Core>
#include <unsupported/Eigen/Polynomials>

#include "eps/core/constants.hpp"
#include "eps/core/error.hpp"

namespace eps::filters {

using cplx = std::complex<double>;

/// Real polynomial in s, coefficients in ascending powers.
class Polynomial {
public:
    Polynomial() : c_{0.0} {}
    Polynomial(std::initializer_list<double> c) : c_(c) { trim(); }
    explicit Polynomial(std::vector<double> c) : c_(std::move(c)) { trim(); }

    const std::vector<double>& coefficients() const noexcept { return c_; }
    std::size_t degree() const noexcept { return c_.size() - 1; }

    cplx operator()(cplx s) const {
        cplx acc = 0.0;
        for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * s + *it;
        return acc;
    }

    friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
        std::vector<double> r(a.c_.size() + b.c_.size() - 1, 0.0);
        for (std::size_t i = 0; i < a.c_.size(); ++i)
            for (std::size_t j = 0; j < b.c_.size(); ++j) r[i + j] += a.c_[i] * b.c_[j];
        return Polynomial(std::move(r));
    }

    friend Polynomial operator+(const Polynomial& a, const Polynomial& b) {
        std::vector<double> r(std::max(a.c_.size(), b.c_.size()), 0.0);
        for (std::size_t i = 0; i < a.c_.size(); ++i) r[i] += a.c_[i];
        for (std::size_t i = 0; i < b.c_.size(); ++i) r[i] += b.c_[i];
        return Polynomial(std::move(r));
    }

    friend Polynomial operator*(double k, const Polynomial& p) {
        std::vector<double> r = p.c_;
        for (auto& v : r) v *= k;
        return Polynomial(std::move(r));
    }

    /// Complex roots (empty for constants).
    std::vector<cplx> roots() const {
        if (degree() == 0) return {};
        if (degree() == 1) return {cplx(-c_[0] / c_[1], 0.0)};
        Eigen::VectorXd coeffs(static_cast<Eigen::Index>(c_.size()));
        for (std::size_t i = 0; i < c_.size(); ++i) coeffs[static_cast<Eigen::Index>(i)] = c_[i];
        Eigen::PolynomialSolver<double, Eigen::Dynamic> solver(coeffs);
        const auto& r = solver.roots();
        return std::vector<cplx>(r.begin(), r.end());
    }

private:
    void trim() {
        while (c_.size() > 1 && c_.back() == 0.0) c_.pop_back();
        if (c_.empty()) c_.push_back(0.0);
    }

    std::vector<double> c_;
};

/// Continuous-time rational transfer function num(s)/den(s).
struct RationalTf {
    Polynomial num;
    Polynomial den;

    cplx at(cplx s) const { return num(s) / den(s); }
    cplx at_hz(double f_hz) const { return at(cplx(0.0, constants::kTwoPi * f_hz)); }

    friend RationalTf operator*(const RationalTf& a, const RationalTf& b) {
        return {a.num * b.num, a.den * b.den};
    }
};

/// Zeros, poles and the gain k in H(s) = k * prod(s - z) / prod(s - p).
struct Zpk {
    std::vector<cplx> zeros;
    std::vector<cplx> poles;
    double gain = 1.0;
};

inline Zpk to_zpk(const RationalTf& tf) {
    const auto& n = tf.num.coefficients();
    const auto& d = tf.den.coefficients();
    if (n.size() > d.size()) throw ConfigError("improper transfer function (more zeros than poles)");
    return Zpk{tf.num.roots(), tf.den.roots(), n.back() / d.back()};
}

// ---------------------------------------------------------------------------
// Standard analog prototypes
// ---------------------------------------------------------------------------

/// Second-order band-pass with peak gain `peak_gain` at f0: A (w0/Q) s / (s^2 + (w0/Q) s + w0^2).
inline RationalTf bandpass2(double f0_hz, double q, double peak_gain) {
    const double w0 = constants::kTwoPi * f0_hz;
    return {Polynomial{0.0, peak_gain * w0 / q}, Polynomial{w0 * w0, w0 / q, 1.0}};
}

/// Notch with finite depth: (s^2 + (w0/Qz) s + w0^2) / (s^2 + (w0/Qp) s + w0^2); depth = Qp/Qz at f0.
inline RationalTf notch2(double f0_hz, double q_pole, double depth_linear) {
    const double w0 = constants::kTwoPi * f0_hz;
    const double bz = depth_linear * w0 / q_pole;
    return {Polynomial{w0 * w0, bz, 1.0}, Polynomial{w0 * w0, w0 / q_pole, 1.0}};
}

/// Second-order Butterworth low-pass with unity DC gain.
inline RationalTf butter2_lowpass(double fc_hz) {
    const double w = constants::kTwoPi * fc_hz;
    return {Polynomial{w * w}, Polynomial{w * w, std::sqrt(2.0) * w, 1.0}};
}

/// Second-order Butterworth high-pass with unity HF gain.
inline RationalTf butter2_highpass(double fc_hz) {
    const double w = constants::kTwoPi * fc_hz;
    return {Polynomial{0.0, 0.0, 1.0}, Polynomial{w * w, std::sqrt(2.0) * w, 1.0}};
}

inline RationalTf first_order_lowpass(double fc_hz) {
    const double w = constants::kTwoPi * fc_hz;
    return {Polynomial{w}, Polynomial{w, 1.0}};
}

inline RationalTf first_order_highpass(double fc_hz) {
    const double w = constants::kTwoPi * fc_hz;
    return {Polynomial{0.0, 1.0}, Polynomial{w, 1.0}};
}

inline RationalTf constant_gain(double k) { return {Polynomial{k}, Polynomial{1.0}}; }

}  // namespace eps::filters
