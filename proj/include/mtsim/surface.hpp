#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "mtsim/math.hpp"

namespace mtsim {

/// A surface configuration: one phase-state index per element.
struct SurfaceConfig {
    std::vector<std::uint16_t> state_indices;

    std::size_t size() const { return state_indices.size(); }
    bool operator==(const SurfaceConfig&) const = default;
};

/// Static description of a programmable surface: element count, phase-state
/// alphabet, and which elements are frozen (inactive) at fixed states.
class MetasurfaceSpec {
public:
    MetasurfaceSpec() = default;

    MetasurfaceSpec(std::size_t element_count, std::vector<double> phase_states)
        : phase_states_(std::move(phase_states)),
          active_(element_count, true),
          frozen_(element_count, 0) {
        if (phase_states_.size() < 2)
            throw std::invalid_argument("MetasurfaceSpec: need at least two phase states");
    }

    /// 1-bit surface with states {0, pi}, i.e. reflection coefficients +1/-1.
    static MetasurfaceSpec binary(std::size_t element_count) {
        return MetasurfaceSpec(element_count, {0.0, pi});
    }

    /// Dense uniform alphabet standing in for continuous phase control.
    static MetasurfaceSpec continuous(std::size_t element_count, std::size_t states = 256) {
        std::vector<double> alphabet(states);
        for (std::size_t s = 0; s < states; ++s)
            alphabet[s] = two_pi * static_cast<double>(s) / static_cast<double>(states);
        return MetasurfaceSpec(element_count, std::move(alphabet));
    }

    std::size_t element_count() const { return active_.size(); }
    std::size_t state_count() const { return phase_states_.size(); }
    bool is_binary() const { return phase_states_.size() == 2; }
    const std::vector<double>& phase_states() const { return phase_states_; }

    bool is_active(std::size_t l) const { return active_[l]; }
    std::uint16_t frozen_state(std::size_t l) const { return frozen_[l]; }

    std::size_t active_count() const {
        return static_cast<std::size_t>(std::count(active_.begin(), active_.end(), true));
    }

    std::vector<std::size_t> active_indices() const {
        std::vector<std::size_t> idx;
        idx.reserve(active_.size());
        for (std::size_t l = 0; l < active_.size(); ++l)
            if (active_[l])
                idx.push_back(l);
        return idx;
    }

    void freeze_element(std::size_t l, std::uint16_t state) {
        if (state >= phase_states_.size())
            throw std::invalid_argument("freeze_element: state index out of range");
        active_[l] = false;
        frozen_[l] = state;
    }

    bool valid_config(const SurfaceConfig& cfg) const {
        if (cfg.size() != element_count())
            return false;
        for (std::size_t l = 0; l < cfg.size(); ++l) {
            if (cfg.state_indices[l] >= phase_states_.size())
                return false;
            if (!active_[l] && cfg.state_indices[l] != frozen_[l])
                return false;
        }
        return true;
    }

    void require_valid(const SurfaceConfig& cfg) const {
        if (cfg.size() != element_count())
            throw std::invalid_argument("config length does not match surface");
        if (!valid_config(cfg))
            throw std::invalid_argument("config invalid for surface spec");
    }

private:
    std::vector<double> phase_states_;
    std::vector<bool> active_;
    std::vector<std::uint16_t> frozen_;
};

/// Per-element reflection coefficients e^{j phase[state]}; unit magnitude by
/// construction (loss-less elements).
inline std::vector<cplx> reflection_coefficients(const MetasurfaceSpec& spec,
                                                 const SurfaceConfig& cfg) {
    spec.require_valid(cfg);
    std::vector<cplx> coeffs(cfg.size());
    for (std::size_t l = 0; l < cfg.size(); ++l)
        coeffs[l] = std::polar(1.0, spec.phase_states()[cfg.state_indices[l]]);
    return coeffs;
}

/// Uniformly random states on active elements, frozen states elsewhere.
inline SurfaceConfig random_config(const MetasurfaceSpec& spec, RandomStream& stream) {
    SurfaceConfig cfg;
    cfg.state_indices.resize(spec.element_count());
    for (std::size_t l = 0; l < spec.element_count(); ++l) {
        cfg.state_indices[l] = spec.is_active(l)
            ? static_cast<std::uint16_t>(stream.uniform_index(spec.state_count()))
            : spec.frozen_state(l);
    }
    return cfg;
}

/// All-zero-state config (the neutral starting point for optimizers).
inline SurfaceConfig zero_config(const MetasurfaceSpec& spec) {
    SurfaceConfig cfg;
    cfg.state_indices.assign(spec.element_count(), 0);
    for (std::size_t l = 0; l < spec.element_count(); ++l)
        if (!spec.is_active(l))
            cfg.state_indices[l] = spec.frozen_state(l);
    return cfg;
}

/// Flip every active element of a binary surface. Involution.
inline SurfaceConfig invert(const MetasurfaceSpec& spec, const SurfaceConfig& cfg) {
    if (!spec.is_binary())
        throw std::logic_error("invert: only defined for binary surfaces");
    spec.require_valid(cfg);
    SurfaceConfig out = cfg;
    for (std::size_t l = 0; l < cfg.size(); ++l)
        if (spec.is_active(l))
            out.state_indices[l] ^= 1;
    return out;
}

/// Deactivate `inactive_count` uniformly chosen elements, freezing each to a
/// uniformly random state. Emulates a smaller surface on the same hardware.
inline MetasurfaceSpec mask_random_elements(const MetasurfaceSpec& spec,
                                            std::size_t inactive_count,
                                            RandomStream& stream) {
    if (inactive_count > spec.element_count())
        throw std::domain_error("mask_random_elements: count exceeds element count");
    std::vector<std::size_t> order(spec.element_count());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        const std::size_t j = i + stream.uniform_index(order.size() - i);
        std::swap(order[i], order[j]);
    }
    MetasurfaceSpec out = spec;
    for (std::size_t i = 0; i < inactive_count; ++i)
        out.freeze_element(order[i],
                           static_cast<std::uint16_t>(stream.uniform_index(spec.state_count())));
    return out;
}

/// Hex packing for binary configs, plain index list otherwise; used in result
/// files and trace hashes.
inline std::string serialize_config(const MetasurfaceSpec& spec, const SurfaceConfig& cfg) {
    spec.require_valid(cfg);
    std::string out;
    if (spec.is_binary()) {
        static const char* hex = "0123456789abcdef";
        int nibble = 0, bits = 0;
        for (std::size_t l = 0; l < cfg.size(); ++l) {
            nibble = (nibble << 1) | (cfg.state_indices[l] & 1);
            if (++bits == 4) {
                out.push_back(hex[nibble]);
                nibble = 0;
                bits = 0;
            }
        }
        if (bits > 0)
            out.push_back(hex[nibble << (4 - bits)]);
    } else {
        for (std::size_t l = 0; l < cfg.size(); ++l) {
            if (l)
                out.push_back(':');
            out += std::to_string(cfg.state_indices[l]);
        }
    }
    return out;
}

/// FNV-1a hash over state indices; stable across platforms.
inline std::uint64_t config_hash(const SurfaceConfig& cfg) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::uint16_t s : cfg.state_indices) {
        h ^= static_cast<std::uint64_t>(s);
        h *= 0x100000001b3ull;
    }
    return h;
}

} // namespace mtsim
