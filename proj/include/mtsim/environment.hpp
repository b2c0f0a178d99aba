#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "mtsim/math.hpp"
#include "mtsim/surface.hpp"

namespace mtsim {

inline constexpr double speed_of_light = 299792458.0;

struct Vec3 {
    double x = 0, y = 0, z = 0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 normalized() const {
        const double n = norm();
        if (n <= 0.0)
            throw std::domain_error("Vec3: cannot normalize zero vector");
        return {x / n, y / n, z / n};
    }
};

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

/// Planar element grid: center, outward normal, rows x cols at fixed spacing.
/// Element order is row-major.
struct SurfaceGeometry {
    Vec3 center;
    Vec3 normal{0, 1, 0};
    std::size_t rows = 16;
    std::size_t cols = 16;
    double spacing = 0.0; // meters; 0 = half wavelength at the carrier

    std::size_t element_count() const { return rows * cols; }
};

enum class Endpoint { alice, bob, eve };
enum class SurfaceId { a, b };

struct Geometry {
    Vec3 alice;
    Vec3 bob;
    Vec3 eve;
    SurfaceGeometry surface_a;
    SurfaceGeometry surface_b;
    double frequency_hz = 5.5e9;

    double wavelength() const { return speed_of_light / frequency_hz; }

    const Vec3& endpoint(Endpoint e) const {
        switch (e) {
        case Endpoint::alice: return alice;
        case Endpoint::bob: return bob;
        case Endpoint::eve: return eve;
        }
        throw std::logic_error("endpoint");
    }

    const SurfaceGeometry& surface(SurfaceId id) const {
        return id == SurfaceId::a ? surface_a : surface_b;
    }

    /// Element center positions in the grid plane, row-major. The local frame
    /// is built from the normal with z-up as the roll reference.
    std::vector<Vec3> element_positions(SurfaceId id) const {
        const SurfaceGeometry& s = surface(id);
        const double d = s.spacing > 0.0 ? s.spacing : wavelength() / 2.0;
        const Vec3 n = s.normal.normalized();
        Vec3 up{0, 0, 1};
        if (std::abs(n.dot(up)) > 0.999)
            up = {0, 1, 0};
        const Vec3 u = n.cross(up).normalized();
        const Vec3 v = n.cross(u).normalized();
        std::vector<Vec3> pos;
        pos.reserve(s.element_count());
        const double r0 = 0.5 * static_cast<double>(s.rows - 1);
        const double c0 = 0.5 * static_cast<double>(s.cols - 1);
        for (std::size_t r = 0; r < s.rows; ++r)
            for (std::size_t c = 0; c < s.cols; ++c)
                pos.push_back(s.center + v * ((static_cast<double>(r) - r0) * d) +
                              u * ((static_cast<double>(c) - c0) * d));
        return pos;
    }
};

struct MotionParams {
    double ar_coefficient = 0.0;  // rho in [0, 1)
    double perturbation_std = 0.0;
    double element_fraction = 0.2; // share of sub-channel elements motion touches

    bool enabled() const { return perturbation_std > 0.0; }
};

struct PropagationParams {
    double path_loss_exponent = 2.0;
    double rician_k = 5.0;                 // deterministic-to-scatter power ratio
    double measurement_noise_variance = 0.0;
    bool coupling_enabled = false;
    MotionParams motion;

    void validate() const {
        if (path_loss_exponent < 1.5 || path_loss_exponent > 4.0)
            throw std::domain_error("path_loss_exponent outside [1.5, 4]");
        if (rician_k < 0.0)
            throw std::domain_error("rician_k must be >= 0");
        if (measurement_noise_variance < 0.0)
            throw std::domain_error("measurement_noise_variance must be >= 0");
        if (motion.ar_coefficient < 0.0 || motion.ar_coefficient >= 1.0)
            throw std::domain_error("motion ar_coefficient must be in [0, 1)");
        if (motion.perturbation_std < 0.0)
            throw std::domain_error("motion perturbation_std must be >= 0");
    }
};

/// Per-element two-hop coefficients: h (tx -> element) and g (element -> rx).
struct SubchannelSet {
    std::vector<cplx> h;
    std::vector<cplx> g;

    std::size_t size() const { return h.size(); }

    /// Combined illumination a_l = h_l * g_l.
    cplx combined(std::size_t l) const { return h[l] * g[l]; }
};

struct DirectChannel {
    cplx value{0.0, 0.0};
};

namespace detail {

/// Free-space style amplitude: (lambda / 4 pi) * d^(-exponent/2).
inline double path_amplitude(double dist, double wavelength, double exponent) {
    if (dist <= 0.0)
        throw std::domain_error("path_amplitude: zero distance");
    return wavelength / (4.0 * pi) * std::pow(dist, -exponent / 2.0);
}

/// Aperture projection: cos of the angle between the surface normal and the
/// ray toward `point`, clamped at zero for back-side illumination.
inline double cos_factor(const Vec3& element, const Vec3& normal, const Vec3& point) {
    const Vec3 ray = (point - element);
    const double d = ray.norm();
    if (d <= 0.0)
        throw std::domain_error("cos_factor: zero distance");
    return std::max(0.0, normal.dot(ray) * (1.0 / d));
}

/// One Rician-mixed hop: deterministic LoS part scaled sqrt(K/(K+1)) plus
/// CN scatter carrying the remaining 1/(K+1) of the power. Total mean power
/// is amp^2 regardless of K.
inline cplx rician_hop(double amp, double dist, double wavelength, double k_factor,
                       RandomStream& stream) {
    const double det_scale = std::sqrt(k_factor / (k_factor + 1.0));
    const double scatter_power = amp * amp / (k_factor + 1.0);
    const cplx det = std::polar(amp * det_scale, -two_pi * dist / wavelength);
    return det + sample_complex_gaussian(stream, scatter_power);
}

} // namespace detail

/// Synthesize the per-element sub-channels of one surface for a (tx, rx) pair.
inline SubchannelSet synthesize_subchannels(const Geometry& geo, const PropagationParams& params,
                                            SurfaceId surface, Endpoint tx, Endpoint rx,
                                            RandomStream& stream) {
    params.validate();
    const double lambda = geo.wavelength();
    const Vec3 normal = geo.surface(surface).normal.normalized();
    const Vec3& txp = geo.endpoint(tx);
    const Vec3& rxp = geo.endpoint(rx);
    const std::vector<Vec3> elements = geo.element_positions(surface);

    SubchannelSet sub;
    sub.h.resize(elements.size());
    sub.g.resize(elements.size());
    for (std::size_t l = 0; l < elements.size(); ++l) {
        const double d_tx = distance(txp, elements[l]);
        const double d_rx = distance(rxp, elements[l]);
        const double amp_h = detail::path_amplitude(d_tx, lambda, params.path_loss_exponent) *
                             detail::cos_factor(elements[l], normal, txp);
        const double amp_g = detail::path_amplitude(d_rx, lambda, params.path_loss_exponent) *
                             detail::cos_factor(elements[l], normal, rxp);
        sub.h[l] = detail::rician_hop(amp_h, d_tx, lambda, params.rician_k, stream);
        sub.g[l] = detail::rician_hop(amp_g, d_rx, lambda, params.rician_k, stream);
    }
    return sub;
}

inline DirectChannel synthesize_direct_channel(const Geometry& geo, const PropagationParams& params,
                                               Endpoint tx, Endpoint rx, RandomStream& stream) {
    params.validate();
    const double lambda = geo.wavelength();
    const double d = distance(geo.endpoint(tx), geo.endpoint(rx));
    const double amp = detail::path_amplitude(d, lambda, params.path_loss_exponent);
    return DirectChannel{detail::rician_hop(amp, d, lambda, params.rician_k, stream)};
}

/// Element-to-element coupling matrix between the two surfaces, row index on
/// surface A, column index on surface B. Same path-loss and aperture rules as
/// the antenna hops.
inline std::vector<std::vector<cplx>> synthesize_coupling_matrix(const Geometry& geo,
                                                                 const PropagationParams& params,
                                                                 RandomStream& stream) {
    params.validate();
    const double lambda = geo.wavelength();
    const Vec3 na = geo.surface_a.normal.normalized();
    const Vec3 nb = geo.surface_b.normal.normalized();
    const std::vector<Vec3> ea = geo.element_positions(SurfaceId::a);
    const std::vector<Vec3> eb = geo.element_positions(SurfaceId::b);

    std::vector<std::vector<cplx>> t(ea.size(), std::vector<cplx>(eb.size()));
    for (std::size_t k = 0; k < ea.size(); ++k) {
        for (std::size_t l = 0; l < eb.size(); ++l) {
            const double d = distance(ea[k], eb[l]);
            const double amp = detail::path_amplitude(d, lambda, params.path_loss_exponent) *
                               detail::cos_factor(ea[k], na, eb[l]) *
                               detail::cos_factor(eb[l], nb, ea[k]);
            t[k][l] = detail::rician_hop(amp, d, lambda, params.rician_k, stream);
        }
    }
    return t;
}

/// Complex AR(1) perturbation state modelling in-room motion. The direct
/// channel carries a multiplicative term 1 + m(t); a fixed random subset of
/// sub-channel elements carries independent per-element terms.
class MotionState {
public:
    MotionState() = default;

    MotionState(const MotionParams& params, std::size_t elements_a, std::size_t elements_b,
                RandomStream& stream)
        : params_(params) {
        auto pick = [&](std::size_t n) {
            std::vector<std::size_t> idx;
            const auto want = static_cast<std::size_t>(std::floor(params.element_fraction *
                                                                  static_cast<double>(n)));
            std::vector<std::size_t> order(n);
            std::iota(order.begin(), order.end(), 0);
            for (std::size_t i = 0; i + 1 < order.size() && i < want; ++i) {
                const std::size_t j = i + stream.uniform_index(order.size() - i);
                std::swap(order[i], order[j]);
            }
            idx.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(want));
            return idx;
        };
        affected_a_ = pick(elements_a);
        affected_b_ = pick(elements_b);
        m_a_.assign(affected_a_.size(), cplx{0, 0});
        m_b_.assign(affected_b_.size(), cplx{0, 0});
    }

    const MotionParams& params() const { return params_; }
    cplx direct_term() const { return m_direct_; }
    const std::vector<std::size_t>& affected_a() const { return affected_a_; }
    const std::vector<std::size_t>& affected_b() const { return affected_b_; }
    cplx element_term_a(std::size_t i) const { return m_a_[i]; }
    cplx element_term_b(std::size_t i) const { return m_b_[i]; }

    /// Advance one sample: m <- rho m + sqrt(1 - rho^2) CN(0, sigma^2).
    void step(RandomStream& stream) {
        const double rho = params_.ar_coefficient;
        const double innov = std::sqrt(1.0 - rho * rho);
        auto advance = [&](cplx& m) {
            m = m * rho + sample_complex_gaussian(stream, params_.perturbation_std *
                                                          params_.perturbation_std) * innov;
        };
        advance(m_direct_);
        for (auto& m : m_a_)
            advance(m);
        for (auto& m : m_b_)
            advance(m);
    }

private:
    MotionParams params_;
    cplx m_direct_{0, 0};
    std::vector<std::size_t> affected_a_;
    std::vector<std::size_t> affected_b_;
    std::vector<cplx> m_a_;
    std::vector<cplx> m_b_;
};

} // namespace mtsim
