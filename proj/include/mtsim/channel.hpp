#pragma once

#include <cstring>
#include <optional>
#include <vector>

#include "mtsim/environment.hpp"
#include "mtsim/math.hpp"
#include "mtsim/surface.hpp"

namespace mtsim {

/// Everything needed to evaluate the effective channel for a pair of surface
/// configurations: direct path, both per-surface sub-channel sets, and an
/// optional inter-surface coupling matrix.
struct ChannelModel {
    DirectChannel direct;
    SubchannelSet sub_a;
    SubchannelSet sub_b;
    MetasurfaceSpec spec_a;
    MetasurfaceSpec spec_b;
    std::optional<std::vector<std::vector<cplx>>> coupling; // t[k][l], A-element k to B-element l

    bool has_coupling() const { return coupling.has_value(); }
};

struct ChannelObservation {
    cplx value{0, 0};
    std::int64_t timestamp = 0;
};

/// Sum of the per-element two-hop paths: sum_l h_l c_l g_l.
inline cplx surface_channel(const SubchannelSet& sub, std::span<const cplx> coeffs) {
    if (coeffs.size() != sub.size())
        throw std::invalid_argument("surface_channel: coefficient count mismatch");
    cplx acc{0, 0};
    for (std::size_t l = 0; l < sub.size(); ++l)
        acc += sub.h[l] * coeffs[l] * sub.g[l];
    return acc;
}

inline cplx surface_channel(const SubchannelSet& sub, const std::vector<cplx>& coeffs) {
    return surface_channel(sub, std::span<const cplx>(coeffs));
}

inline cplx surface_channel(const MetasurfaceSpec& spec, const SubchannelSet& sub,
                            const SurfaceConfig& cfg) {
    return surface_channel(sub, reflection_coefficients(spec, cfg));
}

/// Double-bounce term through both surfaces, both directions:
/// sum_kl h^A_k c^A_k t[k][l] c^B_l g^B_l  +  sum_kl h^B_l c^B_l t[k][l] c^A_k g^A_k.
inline cplx coupling_channel(const ChannelModel& model, const SurfaceConfig& cfg_a,
                             const SurfaceConfig& cfg_b) {
    if (!model.has_coupling())
        throw std::logic_error("coupling_channel: model has no coupling matrix");
    const auto ca = reflection_coefficients(model.spec_a, cfg_a);
    const auto cb = reflection_coefficients(model.spec_b, cfg_b);
    const auto& t = *model.coupling;
    cplx acc{0, 0};
    for (std::size_t k = 0; k < model.sub_a.size(); ++k) {
        const cplx in_a = model.sub_a.h[k] * ca[k];
        const cplx out_a = ca[k] * model.sub_a.g[k];
        cplx row_fwd{0, 0}, row_rev{0, 0};
        for (std::size_t l = 0; l < model.sub_b.size(); ++l) {
            row_fwd += t[k][l] * cb[l] * model.sub_b.g[l];
            row_rev += model.sub_b.h[l] * cb[l] * t[k][l];
        }
        acc += in_a * row_fwd + row_rev * out_a;
    }
    return acc;
}

struct MotionTerms {
    cplx direct_factor{1, 0}; // applied multiplicatively to H_d
    // element index -> multiplicative factor, only for motion-affected elements
    std::vector<std::pair<std::size_t, cplx>> factors_a;
    std::vector<std::pair<std::size_t, cplx>> factors_b;

    static MotionTerms from_state(const MotionState& st) {
        MotionTerms t;
        t.direct_factor = cplx{1, 0} + st.direct_term();
        for (std::size_t i = 0; i < st.affected_a().size(); ++i)
            t.factors_a.emplace_back(st.affected_a()[i], cplx{1, 0} + st.element_term_a(i));
        for (std::size_t i = 0; i < st.affected_b().size(); ++i)
            t.factors_b.emplace_back(st.affected_b()[i], cplx{1, 0} + st.element_term_b(i));
        return t;
    }
};

/// H_eff = H_d + H_MA + H_MB + H_MA,MB (coupling term zero when disabled).
inline cplx effective_channel(const ChannelModel& model, const SurfaceConfig& cfg_a,
                              const SurfaceConfig& cfg_b,
                              const MotionTerms* motion = nullptr) {
    cplx h = model.direct.value;
    if (motion)
        h *= motion->direct_factor;

    const auto ca = reflection_coefficients(model.spec_a, cfg_a);
    const auto cb = reflection_coefficients(model.spec_b, cfg_b);

    cplx ha{0, 0};
    for (std::size_t l = 0; l < model.sub_a.size(); ++l)
        ha += model.sub_a.h[l] * ca[l] * model.sub_a.g[l];
    cplx hb{0, 0};
    for (std::size_t l = 0; l < model.sub_b.size(); ++l)
        hb += model.sub_b.h[l] * cb[l] * model.sub_b.g[l];

    if (motion) {
        for (const auto& [l, f] : motion->factors_a)
            ha += model.sub_a.h[l] * (f - cplx{1, 0}) * ca[l] * model.sub_a.g[l];
        for (const auto& [l, f] : motion->factors_b)
            hb += model.sub_b.h[l] * (f - cplx{1, 0}) * cb[l] * model.sub_b.g[l];
    }

    h += ha + hb;
    if (model.has_coupling())
        h += coupling_channel(model, cfg_a, cfg_b);
    return h;
}

/// Noisy channel estimate: H_eff plus a CN(0, noise_variance) sample.
inline ChannelObservation observe(const ChannelModel& model, const SurfaceConfig& cfg_a,
                                  const SurfaceConfig& cfg_b, double noise_variance,
                                  RandomStream& stream, std::int64_t timestamp = 0,
                                  const MotionTerms* motion = nullptr) {
    if (noise_variance < 0.0)
        throw std::domain_error("observe: negative noise variance");
    cplx v = effective_channel(model, cfg_a, cfg_b, motion);
    if (noise_variance > 0.0)
        v += sample_complex_gaussian(stream, noise_variance);
    return ChannelObservation{v, timestamp};
}

struct SuperpositionEstimate {
    cplx estimated{0, 0}; // H_hat_A + H_hat_B - H_hat_d
    cplx measured{0, 0};  // true H_eff at the given configs
    double error_db = 0.0;
};

/// Ensemble-averaging superposition test: estimate each surface's standalone
/// contribution by averaging out the other surface over random configs, then
/// compare the superposed sum against the jointly measured channel.
inline SuperpositionEstimate superposition_estimate(const ChannelModel& model,
                                                    const SurfaceConfig& cfg_a,
                                                    const SurfaceConfig& cfg_b,
                                                    std::size_t ensemble_size,
                                                    RandomStream& stream) {
    if (ensemble_size < 1)
        throw std::domain_error("superposition_estimate: ensemble_size must be >= 1");
    cplx h_a{0, 0}, h_b{0, 0}, h_d{0, 0};
    for (std::size_t i = 0; i < ensemble_size; ++i) {
        const SurfaceConfig ra = random_config(model.spec_a, stream);
        const SurfaceConfig rb = random_config(model.spec_b, stream);
        h_a += effective_channel(model, cfg_a, rb);
        h_b += effective_channel(model, ra, cfg_b);
        h_d += effective_channel(model, ra, rb);
    }
    const double inv = 1.0 / static_cast<double>(ensemble_size);
    h_a *= inv;
    h_b *= inv;
    h_d *= inv;

    SuperpositionEstimate out;
    out.estimated = h_a + h_b - h_d;
    out.measured = effective_channel(model, cfg_a, cfg_b);
    out.error_db = 20.0 * std::log10(std::abs(out.measured) / std::abs(out.estimated));
    return out;
}

/// Build a full channel model for a (tx, rx) pair from the environment.
/// Scatter draws for distinct frequencies come from frequency-keyed
/// substreams, so realizations are decorrelated across a sweep but exactly
/// reproducible per point.
inline ChannelModel build_channel_model(const Geometry& geo, const PropagationParams& params,
                                        Endpoint tx, Endpoint rx, const MetasurfaceSpec& spec_a,
                                        const MetasurfaceSpec& spec_b, RandomStream& stream) {
    if (spec_a.element_count() != geo.surface_a.element_count() ||
        spec_b.element_count() != geo.surface_b.element_count())
        throw std::invalid_argument("build_channel_model: spec/grid element count mismatch");
    ChannelModel model;
    model.spec_a = spec_a;
    model.spec_b = spec_b;
    model.direct = synthesize_direct_channel(geo, params, tx, rx, stream);
    model.sub_a = synthesize_subchannels(geo, params, SurfaceId::a, tx, rx, stream);
    model.sub_b = synthesize_subchannels(geo, params, SurfaceId::b, tx, rx, stream);
    if (params.coupling_enabled)
        model.coupling = synthesize_coupling_matrix(geo, params, stream);
    return model;
}

/// New realization at a different carrier: deterministic parts recomputed at
/// the new wavelength, scatter redrawn from a substream keyed by the
/// frequency bits.
inline ChannelModel regenerate_for_frequency(const Geometry& geo, const PropagationParams& params,
                                             double frequency_hz, Endpoint tx, Endpoint rx,
                                             const MetasurfaceSpec& spec_a,
                                             const MetasurfaceSpec& spec_b,
                                             const RandomStream& base_stream) {
    if (!(frequency_hz > 0.0))
        throw std::domain_error("regenerate_for_frequency: frequency must be positive");
    Geometry g = geo;
    g.frequency_hz = frequency_hz;
    std::uint64_t key;
    static_assert(sizeof(double) == sizeof(std::uint64_t));
    std::memcpy(&key, &frequency_hz, sizeof(key));
    RandomStream stream = base_stream.substream(key);
    return build_channel_model(g, params, tx, rx, spec_a, spec_b, stream);
}

/// Affine spin view of a binary, coupling-free channel:
/// H(s) = beta0 + sum_l beta_l s_l with s_l in {-1, +1}. State 0 maps to +1.
/// Exact for binary specs; the basis of the regression optimizer and of the
/// fast searches in the case-study drivers.
struct SpinChannel {
    cplx beta0{0, 0};
    std::vector<cplx> beta;

    static SpinChannel from(const cplx& fixed, const MetasurfaceSpec& spec,
                            const SubchannelSet& sub) {
        if (!spec.is_binary())
            throw std::logic_error("SpinChannel: binary spec required");
        SpinChannel sc;
        sc.beta0 = fixed;
        sc.beta.resize(sub.size());
        for (std::size_t l = 0; l < sub.size(); ++l) {
            const cplx a = sub.combined(l);
            if (spec.is_active(l)) {
                sc.beta[l] = a;
            } else {
                sc.beta[l] = {0, 0};
                sc.beta0 += a * (spec.frozen_state(l) == 0 ? 1.0 : -1.0);
            }
        }
        return sc;
    }

    static double spin(std::uint16_t state) { return state == 0 ? 1.0 : -1.0; }

    cplx value(const SurfaceConfig& cfg) const {
        cplx acc = beta0;
        for (std::size_t l = 0; l < beta.size(); ++l)
            acc += beta[l] * spin(cfg.state_indices[l]);
        return acc;
    }
};

} // namespace mtsim
