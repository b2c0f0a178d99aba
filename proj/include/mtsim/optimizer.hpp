#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mtsim/channel.hpp"
#include "mtsim/environment.hpp"
#include "mtsim/math.hpp"
#include "mtsim/surface.hpp"

namespace mtsim {

enum class ObjectiveSense { maximize, minimize };

enum class OptimizerKind { gd, fl, bf, lr, rd, no };

inline const char* to_string(OptimizerKind k) {
    switch (k) {
    case OptimizerKind::gd: return "GD";
    case OptimizerKind::fl: return "FL";
    case OptimizerKind::bf: return "BF";
    case OptimizerKind::lr: return "LR";
    case OptimizerKind::rd: return "RD";
    case OptimizerKind::no: return "NO";
    }
    return "?";
}

inline bool improves(ObjectiveSense sense, double candidate, double reference) {
    return sense == ObjectiveSense::maximize ? candidate > reference : candidate < reference;
}

struct GdParams {
    double mutation_mean = 0.0; // 0 = auto: max(1.5, active/64)
    int mutation_cap = 0;       // 0 = auto: max(3, active/32)
    double reject_relax = 0.25; // reference relaxation toward rejected scores
};

struct LrParams {
    std::size_t probe_budget = 0; // 0 = auto: 4 * active count
};

struct OptimizerSettings {
    OptimizerKind kind = OptimizerKind::gd;
    ObjectiveSense sense = ObjectiveSense::maximize;
    GdParams gd;
    LrParams lr;
    std::vector<SurfaceConfig> bf_candidates; // consumed by kind bf
};

/// One probe for the regression optimizer: config plus complex observation.
struct ProbeRecord {
    SurfaceConfig config;
    cplx observation;
};

struct RegressionFit {
    cplx beta0{0, 0};
    std::vector<cplx> beta; // per element; zero at inactive positions
    bool rank_deficient = false;
};

namespace detail {

/// Solve A x = b for symmetric positive definite A via Cholesky. Returns
/// false when a pivot collapses (rank-deficient system).
inline bool cholesky_solve(std::vector<double>& a, std::size_t n, std::vector<double>& b_re,
                           std::vector<double>& b_im) {
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k)
            d -= a[j * n + k] * a[j * n + k];
        if (d <= 1e-12)
            return false;
        const double root = std::sqrt(d);
        a[j * n + j] = root;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k)
                s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s / root;
        }
    }
    auto solve_one = [&](std::vector<double>& b) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = b[i];
            for (std::size_t k = 0; k < i; ++k)
                s -= a[i * n + k] * b[k];
            b[i] = s / a[i * n + i];
        }
        for (std::size_t ii = n; ii-- > 0;) {
            double s = b[ii];
            for (std::size_t k = ii + 1; k < n; ++k)
                s -= a[k * n + ii] * b[k];
            b[ii] = s / a[ii * n + ii];
        }
    };
    solve_one(b_re);
    solve_one(b_im);
    return true;
}

} // namespace detail

/// Least-squares fit of observation = beta0 + sum_l beta_l s_l over the spin
/// variables of the active elements. Binary specs only.
inline RegressionFit fit_spin_regression(const std::vector<ProbeRecord>& probes,
                                         const MetasurfaceSpec& spec) {
    if (!spec.is_binary())
        throw std::logic_error("fit_spin_regression: binary spec required");
    const auto active = spec.active_indices();
    const std::size_t n = active.size() + 1;
    if (probes.size() < n)
        throw std::invalid_argument("fit_spin_regression: not enough probes");

    // Normal equations over the real design matrix [1, s_1, ..., s_m].
    std::vector<double> ata(n * n, 0.0);
    std::vector<double> atb_re(n, 0.0), atb_im(n, 0.0);
    std::vector<double> row(n);
    for (const auto& probe : probes) {
        row[0] = 1.0;
        for (std::size_t i = 0; i < active.size(); ++i)
            row[i + 1] = SpinChannel::spin(probe.config.state_indices[active[i]]);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j <= i; ++j)
                ata[i * n + j] += row[i] * row[j];
            atb_re[i] += row[i] * probe.observation.real();
            atb_im[i] += row[i] * probe.observation.imag();
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            ata[i * n + j] = ata[j * n + i];

    RegressionFit fit;
    fit.beta.assign(spec.element_count(), cplx{0, 0});
    if (!detail::cholesky_solve(ata, n, atb_re, atb_im)) {
        fit.rank_deficient = true;
        return fit;
    }
    fit.beta0 = {atb_re[0], atb_im[0]};
    for (std::size_t i = 0; i < active.size(); ++i)
        fit.beta[active[i]] = {atb_re[i + 1], atb_im[i + 1]};
    return fit;
}

/// Pick a configuration from a fitted spin model. Maximize: align each term
/// with beta0 by the sign rule. Minimize: start from the flipped sign choice,
/// then refine by single-spin descent on the fitted model.
inline SurfaceConfig solve_spin_model(const RegressionFit& fit, const MetasurfaceSpec& spec,
                                      ObjectiveSense sense) {
    SurfaceConfig cfg = zero_config(spec);
    const double ref_phase = std::arg(fit.beta0);
    for (std::size_t l = 0; l < spec.element_count(); ++l) {
        if (!spec.is_active(l))
            continue;
        const double align = std::cos(std::arg(fit.beta[l]) - ref_phase);
        bool plus = align >= 0.0;
        if (sense == ObjectiveSense::minimize)
            plus = !plus;
        cfg.state_indices[l] = plus ? 0 : 1;
    }
    if (sense == ObjectiveSense::minimize) {
        // Single-spin descent on |beta0 + sum beta_l s_l|^2.
        cplx total = fit.beta0;
        for (std::size_t l = 0; l < spec.element_count(); ++l)
            if (spec.is_active(l))
                total += fit.beta[l] * SpinChannel::spin(cfg.state_indices[l]);
        bool changed = true;
        while (changed) {
            changed = false;
            for (std::size_t l = 0; l < spec.element_count(); ++l) {
                if (!spec.is_active(l))
                    continue;
                const cplx delta = fit.beta[l] * (-2.0 * SpinChannel::spin(cfg.state_indices[l]));
                if (std::norm(total + delta) < std::norm(total)) {
                    total += delta;
                    cfg.state_indices[l] ^= 1;
                    changed = true;
                }
            }
        }
    }
    return cfg;
}

/// Regression step as a standalone operation: fit, then pick; falls back to
/// the best probe (by |observation| under the sense) when rank-deficient.
inline SurfaceConfig regression_solve(const std::vector<ProbeRecord>& probes,
                                      const MetasurfaceSpec& spec, ObjectiveSense sense,
                                      bool* rank_deficient = nullptr) {
    RegressionFit fit = fit_spin_regression(probes, spec);
    if (rank_deficient)
        *rank_deficient = fit.rank_deficient;
    if (fit.rank_deficient) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < probes.size(); ++i)
            if (improves(sense, std::norm(probes[i].observation),
                         std::norm(probes[best].observation)))
                best = i;
        return probes[best].config;
    }
    return solve_spin_model(fit, spec, sense);
}

/// Exact steering configuration for a known source and a target point:
/// compensates the two-hop propagation phase per element, quantized to the
/// nearest alphabet state.
inline SurfaceConfig steering_config(const Geometry& geo, const MetasurfaceSpec& spec,
                                     SurfaceId surface, const Vec3& known, const Vec3& target) {
    const double lambda = geo.wavelength();
    const auto elements = geo.element_positions(surface);
    if (elements.size() != spec.element_count())
        throw std::invalid_argument("steering_config: spec/grid mismatch");
    SurfaceConfig cfg = zero_config(spec);
    for (std::size_t l = 0; l < elements.size(); ++l) {
        if (!spec.is_active(l))
            continue;
        const double total_path = distance(known, elements[l]) + distance(target, elements[l]);
        const double want = two_pi * total_path / lambda;
        std::uint16_t best = 0;
        double best_err = std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < spec.state_count(); ++s) {
            const double err = std::abs(wrap_angle(spec.phase_states()[s] - want));
            if (err < best_err) {
                best_err = err;
                best = static_cast<std::uint16_t>(s);
            }
        }
        cfg.state_indices[l] = best;
    }
    return cfg;
}

/// Precomputed beam candidates: steering configs toward target points sampled
/// on random directions in front of the surface at log-uniform ranges.
inline std::vector<SurfaceConfig> beamform_candidates(const Geometry& geo,
                                                      const MetasurfaceSpec& spec,
                                                      SurfaceId surface, const Vec3& known,
                                                      std::size_t n_directions,
                                                      RandomStream& stream,
                                                      double min_range_m = 0.5,
                                                      double max_range_m = 5.0) {
    const SurfaceGeometry& sg = geo.surface(surface);
    const Vec3 normal = sg.normal.normalized();
    std::vector<SurfaceConfig> out;
    out.reserve(n_directions);
    for (std::size_t i = 0; i < n_directions; ++i) {
        Vec3 dir;
        do {
            dir = {stream.gaussian(), stream.gaussian(), stream.gaussian()};
        } while (dir.norm() < 1e-9);
        dir = dir.normalized();
        if (dir.dot(normal) < 0.0)
            dir = dir * -1.0; // keep targets in front of the surface
        const double range = min_range_m * std::exp(stream.uniform() *
                                                    std::log(max_range_m / min_range_m));
        out.push_back(steering_config(geo, spec, surface, known, sg.center + dir * range));
    }
    return out;
}

/// Feedback-driven configuration search. One channel evaluation corresponds
/// to exactly one propose/feedback pair, whatever the kind.
class Optimizer {
public:
    Optimizer(MetasurfaceSpec spec, OptimizerSettings settings, SurfaceConfig initial)
        : spec_(std::move(spec)), settings_(std::move(settings)), current_(std::move(initial)),
          best_(current_) {
        spec_.require_valid(current_);
        active_ = spec_.active_indices();
        if (settings_.kind == OptimizerKind::fl && active_.empty())
            throw std::invalid_argument("Optimizer(FL): surface has no active elements");
        if (settings_.kind == OptimizerKind::lr && !spec_.is_binary())
            throw std::logic_error("Optimizer(LR): binary spec required");
        if (settings_.kind == OptimizerKind::bf && settings_.bf_candidates.empty())
            throw std::invalid_argument("Optimizer(BF): no candidates supplied");
    }

    static Optimizer make(const MetasurfaceSpec& spec, OptimizerSettings settings,
                          RandomStream& stream) {
        return Optimizer(spec, std::move(settings), random_config(spec, stream));
    }

    OptimizerKind kind() const { return settings_.kind; }
    ObjectiveSense sense() const { return settings_.sense; }
    const MetasurfaceSpec& spec() const { return spec_; }
    const SurfaceConfig& current() const { return current_; }
    const SurfaceConfig& best_config() const { return best_; }
    double best_score() const { return best_score_; }
    double believed_score() const { return reference_; }
    bool has_believed_score() const { return evaluations_ > 0; }
    std::int64_t evaluations() const { return evaluations_; }
    bool regression_rank_deficient() const { return lr_rank_deficient_; }

    /// Config the party commits to once the battle ends.
    const SurfaceConfig& final_config() const {
        switch (settings_.kind) {
        case OptimizerKind::gd:
        case OptimizerKind::fl:
        case OptimizerKind::no:
            return current_;
        case OptimizerKind::bf:
        case OptimizerKind::rd:
            return best_;
        case OptimizerKind::lr:
            return lr_solution_ ? *lr_solution_ : best_;
        }
        return current_;
    }

    /// Next configuration to apply and evaluate.
    const SurfaceConfig& propose(RandomStream& stream) {
        if (pending_)
            throw std::logic_error("propose: feedback for previous proposal missing");
        switch (settings_.kind) {
        case OptimizerKind::no:
            pending_ = current_;
            break;
        case OptimizerKind::rd:
            pending_ = random_config(spec_, stream);
            break;
        case OptimizerKind::gd:
            pending_ = mutate(current_, stream);
            break;
        case OptimizerKind::fl:
            pending_ = fl_next();
            break;
        case OptimizerKind::bf:
            pending_ = bf_cursor_ < settings_.bf_candidates.size()
                ? settings_.bf_candidates[bf_cursor_]
                : best_;
            break;
        case OptimizerKind::lr:
            pending_ = (!lr_solution_ && probes_.size() < lr_budget())
                ? random_config(spec_, stream)
                : (lr_solution_ ? *lr_solution_ : best_);
            break;
        }
        return *pending_;
    }

    /// Report the evaluation of the last proposal. LR additionally needs the
    /// complex channel observation it regresses on.
    void feedback(const SurfaceConfig& applied, double score,
                  std::optional<cplx> observation = std::nullopt) {
        if (!pending_ || applied != *pending_)
            throw std::logic_error("feedback: does not match the pending proposal");
        ++evaluations_;
        if (!best_valid_ || improves(settings_.sense, score, best_score_)) {
            best_ = applied;
            best_score_ = score;
            best_valid_ = true;
        }

        switch (settings_.kind) {
        case OptimizerKind::no:
            reference_ = score;
            break;
        case OptimizerKind::rd:
        case OptimizerKind::bf:
            reference_ = best_score_;
            if (settings_.kind == OptimizerKind::bf)
                ++bf_cursor_;
            break;
        case OptimizerKind::gd:
            if (!reference_valid_ || improves(settings_.sense, score, reference_)) {
                current_ = applied;
                reference_ = score;
                reference_valid_ = true;
            } else {
                // Relax the stale reference toward observed reality so the
                // search keeps responding when the opponent moves the channel.
                reference_ += settings_.gd.reject_relax * (score - reference_);
            }
            break;
        case OptimizerKind::fl:
            fl_feedback(score);
            break;
        case OptimizerKind::lr:
            if (!lr_solution_ && probes_.size() < lr_budget()) {
                if (!observation)
                    throw std::invalid_argument("feedback: LR requires a complex observation");
                probes_.push_back({applied, *observation});
                if (probes_.size() >= lr_budget())
                    lr_solution_ = regression_solve(probes_, spec_, settings_.sense,
                                                    &lr_rank_deficient_);
            }
            reference_ = score;
            break;
        }
        pending_.reset();
    }

private:
    std::size_t lr_budget() const {
        return settings_.lr.probe_budget > 0 ? settings_.lr.probe_budget : 4 * active_.size();
    }

    SurfaceConfig mutate(const SurfaceConfig& base, RandomStream& stream) const {
        const double mean = settings_.gd.mutation_mean > 0.0
            ? settings_.gd.mutation_mean
            : std::max(1.5, static_cast<double>(active_.size()) / 64.0);
        const int cap = settings_.gd.mutation_cap > 0
            ? settings_.gd.mutation_cap
            : std::max<int>(3, static_cast<int>(active_.size() / 32));
        int k = std::min(sample_geometric(stream, mean), cap);
        k = std::min<int>(k, static_cast<int>(active_.size()));
        SurfaceConfig out = base;
        // Partial Fisher-Yates over the active positions.
        std::vector<std::size_t> pool = active_;
        for (int i = 0; i < k; ++i) {
            const std::size_t j = static_cast<std::size_t>(i) +
                                  stream.uniform_index(pool.size() - static_cast<std::size_t>(i));
            std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
            const std::size_t l = pool[static_cast<std::size_t>(i)];
            if (spec_.is_binary()) {
                out.state_indices[l] ^= 1;
            } else {
                const auto shift = 1 + stream.uniform_index(spec_.state_count() - 1);
                out.state_indices[l] = static_cast<std::uint16_t>(
                    (out.state_indices[l] + shift) % spec_.state_count());
            }
        }
        return out;
    }

    SurfaceConfig fl_next() {
        if (fl_trial_state_ == 0) {
            fl_element_ = active_[fl_cursor_];
            fl_pre_state_ = current_.state_indices[fl_element_];
            fl_scores_.assign(spec_.state_count(), 0.0);
        }
        SurfaceConfig trial = current_;
        trial.state_indices[fl_element_] = static_cast<std::uint16_t>(fl_trial_state_);
        return trial;
    }

    void fl_feedback(double score) {
        fl_scores_[fl_trial_state_] = score;
        ++fl_trial_state_;
        if (fl_trial_state_ < spec_.state_count())
            return;
        // All states of the cursor element tried: keep the best, with ties
        // resolved in favour of the pre-trial state.
        std::size_t pick = fl_pre_state_;
        for (std::size_t s = 0; s < fl_scores_.size(); ++s)
            if (improves(settings_.sense, fl_scores_[s], fl_scores_[pick]))
                pick = s;
        current_.state_indices[fl_element_] = static_cast<std::uint16_t>(pick);
        reference_ = fl_scores_[pick];
        reference_valid_ = true;
        fl_trial_state_ = 0;
        fl_cursor_ = (fl_cursor_ + 1) % active_.size();
    }

    MetasurfaceSpec spec_;
    OptimizerSettings settings_;
    std::vector<std::size_t> active_;

    SurfaceConfig current_;
    SurfaceConfig best_;
    double best_score_ = 0.0;
    bool best_valid_ = false;
    double reference_ = 0.0;
    bool reference_valid_ = false;
    std::int64_t evaluations_ = 0;
    std::optional<SurfaceConfig> pending_;

    // FL scratch
    std::size_t fl_cursor_ = 0;
    std::size_t fl_element_ = 0;
    std::size_t fl_trial_state_ = 0;
    std::uint16_t fl_pre_state_ = 0;
    std::vector<double> fl_scores_;

    // BF scratch
    std::size_t bf_cursor_ = 0;

    // LR scratch
    std::vector<ProbeRecord> probes_;
    std::optional<SurfaceConfig> lr_solution_;
    bool lr_rank_deficient_ = false;
};

} // namespace mtsim
