#pragma once

#include <algorithm>
#include <vector>

#include "mtsim/channel.hpp"
#include "mtsim/math.hpp"

namespace mtsim {

/// Multiplicative amplitude/phase deviation of an achieved surface channel
/// from its ideal aligned (maximizer) or anti-aligned (minimizer) target.
struct ErrorPhasor {
    double eta = 1.0;   // amplitude efficiency, in (0, 1] for physical setups
    double phi_e = 0.0; // phase deviation, radians

    cplx value() const { return std::polar(eta, phi_e); }
};

/// Fit an error phasor from an achieved vs. target surface contribution.
inline ErrorPhasor fit_error_phasor(const cplx& achieved, const cplx& target) {
    if (std::abs(target) <= 0.0)
        throw std::domain_error("fit_error_phasor: zero target");
    const cplx ratio = achieved / target;
    return ErrorPhasor{std::abs(ratio), std::arg(ratio)};
}

/// Channel variance under uniform random configurations:
/// sigma_m^2 = sum_l |h_l g_l|^2.
inline double randomization_variance(const SubchannelSet& sub) {
    double acc = 0.0;
    for (std::size_t l = 0; l < sub.size(); ++l)
        acc += std::norm(sub.combined(l));
    return acc;
}

/// Coherent upper bound on the surface contribution: sum_l |h_l g_l|.
inline double max_amplitude(const SubchannelSet& sub) {
    double acc = 0.0;
    for (std::size_t l = 0; l < sub.size(); ++l)
        acc += std::abs(sub.combined(l));
    return acc;
}

/// Power cancellation ratio of an imperfect minimizer:
/// G'_min = |1 - eta e^{j phi}|^2 = 1 - 2 eta cos(phi) + eta^2.
inline double gain_min(const ErrorPhasor& err) {
    return 1.0 - 2.0 * err.eta * std::cos(err.phi_e) + err.eta * err.eta;
}

/// Power gain of an imperfect maximizer over the uncontrolled channel:
/// | |H'_d| + eta |H_max| e^{j phi} |^2 / |H'_d|^2.
inline double gain_max(double h_d_mag, double h_max_mag, const ErrorPhasor& err) {
    if (!(h_d_mag > 0.0))
        throw std::domain_error("gain_max: direct magnitude must be positive");
    const cplx total = cplx{h_d_mag, 0.0} + err.value() * h_max_mag;
    return std::norm(total) / (h_d_mag * h_d_mag);
}

/// Post-battle channel power gain with an imperfect maximizer A and an
/// imperfect minimizer B:
/// | 1 + (|H_maxA|/|H_d|) eta_A e^{j phi_A} - eta_B e^{j phi_B} |^2.
/// err_b.eta is B's cancellation amplitude relative to the direct channel
/// (1 = full cancellation of |H_d|). With equal channels, where
/// eta_A |H_maxA|/|H_d| = eta_B = r, this reduces to the draw form
/// |1 + r (e^{j phi_A} - e^{j phi_B})|^2.
inline double battle_gain(double h_d_mag, double h_max_a, const ErrorPhasor& err_a,
                          const ErrorPhasor& err_b) {
    if (!(h_d_mag > 0.0))
        throw std::domain_error("battle_gain: direct magnitude must be positive");
    const cplx total = cplx{1.0, 0.0} + err_a.value() * (h_max_a / h_d_mag) - err_b.value();
    return std::norm(total);
}

/// Error-phasor update for a minimizer whose baseline channel moved from
/// h_d0 to h_d1: amplitude scales with the baseline amplitude ratio, phase
/// shifts by the baseline phase difference.
inline ErrorPhasor degrade_minimizer(const cplx& h_d0, const cplx& h_d1, const ErrorPhasor& err) {
    const double m0 = std::abs(h_d0), m1 = std::abs(h_d1);
    if (!(m0 > 0.0) || !(m1 > 0.0))
        throw std::domain_error("degrade_minimizer: zero baseline magnitude");
    return ErrorPhasor{err.eta * (m0 / m1),
                       wrap_angle(std::arg(h_d0) - std::arg(h_d1) + err.phi_e)};
}

/// Maximizer counterpart: only the phase error picks up the baseline phase
/// difference; amplitude efficiency is untouched.
inline ErrorPhasor degrade_maximizer(const cplx& h_d0, const cplx& h_d1, const ErrorPhasor& err) {
    return ErrorPhasor{err.eta, wrap_angle(std::arg(h_d0) - std::arg(h_d1) + err.phi_e)};
}

/// One random-reconfiguration perturbation pair and the resulting ratio
/// channel H_e = H'_{d,1} / H'_{d,0}.
struct DegradationSample {
    cplx e0{0, 0};
    cplx e1{0, 0};
    cplx h_e{1, 0};
    double amp_error = 1.0;
    double phase_error = 0.0;

    static DegradationSample from(const cplx& h_d, const cplx& e0, const cplx& e1) {
        DegradationSample s;
        s.e0 = e0;
        s.e1 = e1;
        s.h_e = (h_d + e1) / (h_d + e0);
        s.amp_error = std::abs(s.h_e);
        s.phase_error = std::arg(s.h_e);
        return s;
    }
};

struct NormalParams {
    double mean = 0.0;
    double stddev = 0.0;
};

struct DegradationPrediction {
    NormalParams amp;   // |H_e| ~ N(1, sigma_m^2 / |H_d|^2)
    NormalParams phase; // phi_e ~ N(0, sigma_m^2 / |H_d|^2)
    bool in_regime = true; // false when sigma_m / |H_d| >= 0.2
};

/// Predicted amplitude/phase error distributions after random adversarial
/// reconfiguration. Valid for small perturbations; out-of-regime inputs are
/// flagged, not rejected.
inline DegradationPrediction random_degradation_stats(double sigma_m, double h_d_mag) {
    if (!(h_d_mag > 0.0))
        throw std::domain_error("random_degradation_stats: direct magnitude must be positive");
    if (sigma_m < 0.0)
        throw std::domain_error("random_degradation_stats: negative sigma");
    const double s = sigma_m / h_d_mag;
    DegradationPrediction p;
    p.amp = {1.0, s};
    p.phase = {0.0, s};
    p.in_regime = s < 0.2;
    return p;
}

struct MutualSnrEstimate {
    double rho_a = 0.0;
    double rho_b = 0.0;
    double snr_b = 0.0; // rho_b / rho_a
};

/// Matched-filter energy of each surface's footprint inside a joint trace.
/// All sequences are mean-removed before correlation so the shared direct
/// channel floor drops out.
inline MutualSnrEstimate mutual_snr(std::span<const double> seq_a, std::span<const double> seq_b,
                                    std::span<const double> seq_joint) {
    if (seq_a.size() != seq_b.size() || seq_a.size() != seq_joint.size())
        throw std::invalid_argument("mutual_snr: sequence lengths differ");
    if (seq_a.size() < 2)
        throw std::invalid_argument("mutual_snr: need at least two samples");

    auto mean = [](std::span<const double> v) {
        double m = 0.0;
        for (double x : v)
            m += x;
        return m / static_cast<double>(v.size());
    };
    const double ma = mean(seq_a), mb = mean(seq_b), mj = mean(seq_joint);

    double aa = 0.0, bb = 0.0, ja = 0.0, jb = 0.0;
    for (std::size_t i = 0; i < seq_a.size(); ++i) {
        const double xa = seq_a[i] - ma;
        const double xb = seq_b[i] - mb;
        const double xj = seq_joint[i] - mj;
        aa += xa * xa;
        bb += xb * xb;
        ja += xj * xa;
        jb += xj * xb;
    }
    if (aa <= 0.0 || bb <= 0.0)
        throw std::domain_error("mutual_snr: zero-energy reference sequence");

    MutualSnrEstimate est;
    est.rho_a = ja * ja / aa;
    est.rho_b = jb * jb / bb;
    if (est.rho_a <= 0.0)
        throw std::domain_error("mutual_snr: undefined SNR (rho_a is zero)");
    est.snr_b = est.rho_b / est.rho_a;
    return est;
}

inline MutualSnrEstimate mutual_snr(const std::vector<double>& a, const std::vector<double>& b,
                                    const std::vector<double>& joint) {
    return mutual_snr(std::span<const double>(a), std::span<const double>(b),
                      std::span<const double>(joint));
}

/// Analytical predictions for one channel/error setup.
struct GainReport {
    double g_max = 0.0;
    double g_min = 0.0;
    double battle = 0.0;
    double r_max = 0.0; // surface-to-direct amplitude ratio

    static GainReport from(double h_d_mag, double h_max_mag, const ErrorPhasor& err_a,
                           const ErrorPhasor& err_b) {
        GainReport r;
        r.r_max = h_max_mag / h_d_mag;
        r.g_max = gain_max(h_d_mag, h_max_mag, err_a);
        r.g_min = gain_min(err_b);
        r.battle = battle_gain(h_d_mag, h_max_mag, err_a, err_b);
        return r;
    }
};

/// Kolmogorov-Smirnov distance between a sample and a normal distribution.
inline double ks_distance_normal(std::vector<double> samples, double mean, double stddev) {
    if (samples.empty())
        throw std::invalid_argument("ks_distance_normal: empty sample");
    if (!(stddev > 0.0))
        throw std::domain_error("ks_distance_normal: stddev must be positive");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double z = (samples[i] - mean) / (stddev * std::numbers::sqrt2);
        const double cdf = 0.5 * std::erfc(-z);
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n;
        d = std::max({d, std::abs(cdf - lo), std::abs(cdf - hi)});
    }
    return d;
}

/// Spearman rank correlation (average ranks on ties).
inline double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("spearman: need two equal-length samples");
    auto ranks = [](std::span<const double> v) {
        std::vector<std::size_t> order(v.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
        std::vector<double> r(v.size());
        std::size_t i = 0;
        while (i < order.size()) {
            std::size_t j = i;
            while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]])
                ++j;
            const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
            for (std::size_t k = i; k <= j; ++k)
                r[order[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    const auto rx = ranks(x), ry = ranks(y);
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= static_cast<double>(rx.size());
    my /= static_cast<double>(ry.size());
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0)
        throw std::domain_error("spearman: constant sequence");
    return sxy / std::sqrt(sxx * syy);
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    return spearman(std::span<const double>(x), std::span<const double>(y));
}

} // namespace mtsim
