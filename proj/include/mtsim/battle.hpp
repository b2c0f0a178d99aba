#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "mtsim/analysis.hpp"
#include "mtsim/channel.hpp"
#include "mtsim/optimizer.hpp"

namespace mtsim {

enum class BattleMode { independent, reactive, simultaneous };

inline const char* to_string(BattleMode m) {
    switch (m) {
    case BattleMode::independent: return "independent";
    case BattleMode::reactive: return "reactive";
    case BattleMode::simultaneous: return "simultaneous";
    }
    return "?";
}

struct BattleSchedule {
    BattleMode mode = BattleMode::simultaneous;
    int pause_a = 1; // party A acts on steps with t % pause_a == 0
    int pause_b = 1;
    int total_steps = 1000;
    int baseline_trials = 1000;

    void validate() const {
        if (pause_a < 1 || pause_b < 1)
            throw std::invalid_argument("BattleSchedule: pauses must be >= 1");
        if (total_steps < 1)
            throw std::invalid_argument("BattleSchedule: total_steps must be >= 1");
        if (baseline_trials < 1)
            throw std::invalid_argument("BattleSchedule: baseline_trials must be >= 1");
    }
};

/// Application-specific scalar evaluation of a window of channel observations.
struct EvaluationFn {
    std::string name;
    std::size_t window = 1;
    std::function<double(std::span<const ChannelObservation>)> fn;

    double operator()(std::span<const ChannelObservation> obs) const { return fn(obs); }

    static EvaluationFn power() {
        return {"power", 1, [](std::span<const ChannelObservation> w) {
                    return std::norm(w.back().value);
                }};
    }

    static EvaluationFn circular_phase_std(std::size_t window) {
        return {"circular_phase_std", window, [](std::span<const ChannelObservation> w) {
                    std::vector<double> phases;
                    phases.reserve(w.size());
                    for (const auto& o : w)
                        phases.push_back(std::arg(o.value));
                    return circular_std(phases);
                }};
    }

    static EvaluationFn temporal_magnitude_std(std::size_t window) {
        return {"temporal_magnitude_std", window, [](std::span<const ChannelObservation> w) {
                    double m = 0.0;
                    for (const auto& o : w)
                        m += std::abs(o.value);
                    m /= static_cast<double>(w.size());
                    double v = 0.0;
                    for (const auto& o : w)
                        v += (std::abs(o.value) - m) * (std::abs(o.value) - m);
                    return std::sqrt(v / static_cast<double>(w.size()));
                }};
    }
};

struct BattleStepRecord {
    std::int64_t step = 0;
    std::uint64_t config_hash_a = 0;
    std::uint64_t config_hash_b = 0;
    double believed_a = std::numeric_limits<double>::quiet_NaN();
    double believed_b = std::numeric_limits<double>::quiet_NaN();
    double true_magnitude = 0.0;
    double true_phase = 0.0;
};

struct BattleTrace {
    std::vector<BattleStepRecord> steps;
    SurfaceConfig final_a;
    SurfaceConfig final_b;
    double baseline_mean_power = 0.0;
    double baseline_power_std = 0.0;
};

enum class Winner { a, b, draw };

inline const char* to_string(Winner w) {
    switch (w) {
    case Winner::a: return "A";
    case Winner::b: return "B";
    case Winner::draw: return "draw";
    }
    return "?";
}

struct BattleOutcome {
    double gain_db = 0.0; // final true power over the random baseline
    Winner winner = Winner::draw;
    double believed_gain_a_db = 0.0;
    double believed_gain_b_db = 0.0;
};

inline constexpr double battle_draw_band_db = 0.25;

struct BaselineEstimate {
    double mean_power = 0.0;
    double power_std = 0.0;
};

/// Ensemble mean of |H_eff|^2 over independent uniform random config pairs.
inline BaselineEstimate baseline_power(const ChannelModel& model, int trials,
                                       RandomStream& stream) {
    if (trials < 1)
        throw std::invalid_argument("baseline_power: trials must be >= 1");
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < trials; ++i) {
        const SurfaceConfig ca = random_config(model.spec_a, stream);
        const SurfaceConfig cb = random_config(model.spec_b, stream);
        const double p = std::norm(effective_channel(model, ca, cb));
        sum += p;
        sum2 += p * p;
    }
    const double n = static_cast<double>(trials);
    const double mean = sum / n;
    const double var = std::max(0.0, sum2 / n - mean * mean);
    return BaselineEstimate{mean, std::sqrt(var)};
}

namespace detail {

/// One party's action: propose, measure a window of observations with the
/// proposal applied, score, feed back. Returns the acting party's believed
/// score afterwards.
inline double act(Optimizer& self, const Optimizer& opponent, bool self_is_a,
                  const ChannelModel& model, double noise_variance, const EvaluationFn& eval,
                  RandomStream& propose_stream, RandomStream& noise_stream,
                  std::int64_t& sample_clock) {
    const SurfaceConfig& trial = self.propose(propose_stream);
    const SurfaceConfig& cfg_a = self_is_a ? trial : opponent.current();
    const SurfaceConfig& cfg_b = self_is_a ? opponent.current() : trial;
    std::vector<ChannelObservation> window;
    window.reserve(eval.window);
    cplx mean_obs{0, 0};
    for (std::size_t w = 0; w < eval.window; ++w) {
        window.push_back(observe(model, cfg_a, cfg_b, noise_variance, noise_stream,
                                 sample_clock++));
        mean_obs += window.back().value;
    }
    mean_obs /= static_cast<double>(eval.window);
    const double score = eval(window);
    self.feedback(trial, score, mean_obs);
    return self.believed_score();
}

} // namespace detail

struct BattleResult {
    BattleTrace trace;
    BattleOutcome outcome;
};

/// Run a two-party battle over one channel model. Parties act on the steps
/// allowed by their pause values; a paused party's whole propose/feedback
/// cycle is frozen. In simultaneous mode each party observes the channel
/// right after its own proposal is applied, with the opponent at whatever
/// configuration it currently holds.
inline BattleResult run_battle(const ChannelModel& model, Optimizer& opt_a, Optimizer& opt_b,
                               const BattleSchedule& schedule, const EvaluationFn& eval_a,
                               const EvaluationFn& eval_b, double noise_variance,
                               RandomStream& stream) {
    schedule.validate();
    RandomStream propose_a = stream.substream(0x0a);
    RandomStream propose_b = stream.substream(0x0b);
    RandomStream noise_a = stream.substream(0x1a);
    RandomStream noise_b = stream.substream(0x1b);
    RandomStream baseline_stream = stream.substream(0xba);
    RandomStream frozen_stream = stream.substream(0xf0);

    BattleResult result;
    std::int64_t clock = 0;
    double believed_a = std::numeric_limits<double>::quiet_NaN();
    double believed_b = std::numeric_limits<double>::quiet_NaN();

    auto record = [&](std::int64_t step) {
        BattleStepRecord rec;
        rec.step = step;
        rec.config_hash_a = config_hash(opt_a.current());
        rec.config_hash_b = config_hash(opt_b.current());
        rec.believed_a = believed_a;
        rec.believed_b = believed_b;
        const cplx h = effective_channel(model, opt_a.current(), opt_b.current());
        rec.true_magnitude = std::abs(h);
        rec.true_phase = std::arg(h);
        result.trace.steps.push_back(rec);
    };

    // Single-party phase against a frozen opponent; used by the sequential
    // modes. The frozen opponent is represented by a NO optimizer.
    auto run_phase = [&](Optimizer& actor, bool actor_is_a, const Optimizer& frozen, int pause,
                         RandomStream& propose_stream, RandomStream& noise_stream,
                         std::int64_t step_base) {
        for (int t = 0; t < schedule.total_steps; ++t) {
            if (t % pause == 0) {
                const double believed =
                    detail::act(actor, frozen, actor_is_a, model, noise_variance,
                                actor_is_a ? eval_a : eval_b, propose_stream, noise_stream,
                                clock);
                (actor_is_a ? believed_a : believed_b) = believed;
            }
            record(step_base + t);
        }
    };

    if (schedule.mode == BattleMode::simultaneous) {
        for (int t = 0; t < schedule.total_steps; ++t) {
            if (t % schedule.pause_a == 0)
                believed_a = detail::act(opt_a, opt_b, true, model, noise_variance, eval_a,
                                         propose_a, noise_a, clock);
            if (t % schedule.pause_b == 0)
                believed_b = detail::act(opt_b, opt_a, false, model, noise_variance, eval_b,
                                         propose_b, noise_b, clock);
            record(t);
        }
    } else {
        // Both sequential modes start with A optimizing against a frozen
        // random B.
        OptimizerSettings no_settings;
        no_settings.kind = OptimizerKind::no;
        Optimizer frozen_b(model.spec_b, no_settings, random_config(model.spec_b, frozen_stream));
        run_phase(opt_a, true, frozen_b, schedule.pause_a, propose_a, noise_a, 0);

        if (schedule.mode == BattleMode::independent) {
            Optimizer frozen_a(model.spec_a, no_settings,
                               random_config(model.spec_a, frozen_stream));
            run_phase(opt_b, false, frozen_a, schedule.pause_b, propose_b, noise_b,
                      schedule.total_steps);
        } else { // reactive: B reacts to A's final configuration
            Optimizer frozen_a(model.spec_a, no_settings, opt_a.final_config());
            run_phase(opt_b, false, frozen_a, schedule.pause_b, propose_b, noise_b,
                      schedule.total_steps);
        }
    }

    result.trace.final_a = opt_a.final_config();
    result.trace.final_b = opt_b.final_config();

    const BaselineEstimate base = baseline_power(model, schedule.baseline_trials, baseline_stream);
    result.trace.baseline_mean_power = base.mean_power;
    result.trace.baseline_power_std = base.power_std;

    const double final_power =
        std::norm(effective_channel(model, result.trace.final_a, result.trace.final_b));
    BattleOutcome& out = result.outcome;
    out.gain_db = db(std::max(final_power, 1e-300) / base.mean_power);
    out.believed_gain_a_db = opt_a.has_believed_score() && opt_a.believed_score() > 0.0
        ? db(opt_a.believed_score() / base.mean_power)
        : std::numeric_limits<double>::quiet_NaN();
    out.believed_gain_b_db = opt_b.has_believed_score() && opt_b.believed_score() > 0.0
        ? db(opt_b.believed_score() / base.mean_power)
        : std::numeric_limits<double>::quiet_NaN();

    if (opt_a.sense() != opt_b.sense()) {
        const bool a_maximizes = opt_a.sense() == ObjectiveSense::maximize;
        if (out.gain_db > battle_draw_band_db)
            out.winner = a_maximizes ? Winner::a : Winner::b;
        else if (out.gain_db < -battle_draw_band_db)
            out.winner = a_maximizes ? Winner::b : Winner::a;
        else
            out.winner = Winner::draw;
    } else {
        out.winner = Winner::draw; // no zero-sum winner when senses agree
    }
    return result;
}

/// Summary statistics of one matrix cell over repeated battles.
struct CellStats {
    std::vector<double> gains_db;
    double median_gain_db = 0.0;
    double win_rate_a = 0.0;
    double win_rate_b = 0.0;
};

inline double median(std::vector<double> v) {
    if (v.empty())
        throw std::invalid_argument("median: empty");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct MatrixResult {
    std::vector<std::string> row_labels;
    std::vector<std::string> col_labels;
    std::vector<std::vector<CellStats>> cells;
};

namespace detail {

inline CellStats summarize(std::vector<double> gains, int wins_a, int wins_b) {
    CellStats cs;
    cs.median_gain_db = median(gains);
    cs.win_rate_a = static_cast<double>(wins_a) / static_cast<double>(gains.size());
    cs.win_rate_b = static_cast<double>(wins_b) / static_cast<double>(gains.size());
    cs.gains_db = std::move(gains);
    return cs;
}

} // namespace detail

/// Simultaneous battles for every pause pair; A maximizes, B minimizes.
inline MatrixResult speed_matrix(const ChannelModel& model, OptimizerKind kind,
                                 const std::vector<int>& pauses, int trials,
                                 const BattleSchedule& base_schedule, double noise_variance,
                                 RandomStream& stream,
                                 const GdParams& gd = GdParams{}) {
    if (pauses.empty())
        throw std::invalid_argument("speed_matrix: pauses list is empty");
    MatrixResult out;
    for (int p : pauses) {
        out.row_labels.push_back("pause_a=" + std::to_string(p));
        out.col_labels.push_back("pause_b=" + std::to_string(p));
    }
    const EvaluationFn eval = EvaluationFn::power();
    out.cells.resize(pauses.size());
    for (std::size_t i = 0; i < pauses.size(); ++i) {
        for (std::size_t j = 0; j < pauses.size(); ++j) {
            std::vector<double> gains;
            int wins_a = 0, wins_b = 0;
            for (int t = 0; t < trials; ++t) {
                RandomStream trial_stream =
                    stream.substream((i * pauses.size() + j) * static_cast<std::size_t>(trials) +
                                     static_cast<std::size_t>(t));
                BattleSchedule sched = base_schedule;
                sched.mode = BattleMode::simultaneous;
                sched.pause_a = pauses[i];
                sched.pause_b = pauses[j];
                OptimizerSettings sa{kind, ObjectiveSense::maximize};
                OptimizerSettings sb{kind, ObjectiveSense::minimize};
                sa.gd = gd;
                sb.gd = gd;
                RandomStream init = trial_stream.substream(0xc0);
                Optimizer oa = Optimizer::make(model.spec_a, sa, init);
                Optimizer ob = Optimizer::make(model.spec_b, sb, init);
                const BattleResult r = run_battle(model, oa, ob, sched, eval, eval,
                                                  noise_variance, trial_stream);
                gains.push_back(r.outcome.gain_db);
                wins_a += r.outcome.winner == Winner::a;
                wins_b += r.outcome.winner == Winner::b;
            }
            out.cells[i].push_back(detail::summarize(std::move(gains), wins_a, wins_b));
        }
    }
    return out;
}

/// Simultaneous battles for every ordered pair of optimizer kinds; A
/// maximizes, B minimizes. BF parties need precomputed candidates.
inline MatrixResult algorithm_matrix(const ChannelModel& model,
                                     const std::vector<OptimizerKind>& kinds, int trials,
                                     const BattleSchedule& base_schedule, double noise_variance,
                                     RandomStream& stream,
                                     const std::vector<SurfaceConfig>& bf_candidates_a = {},
                                     const std::vector<SurfaceConfig>& bf_candidates_b = {}) {
    if (kinds.empty())
        throw std::invalid_argument("algorithm_matrix: kinds list is empty");
    MatrixResult out;
    for (OptimizerKind k : kinds) {
        out.row_labels.push_back(std::string("A=") + to_string(k));
        out.col_labels.push_back(std::string("B=") + to_string(k));
    }
    const EvaluationFn eval = EvaluationFn::power();
    out.cells.resize(kinds.size());
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        for (std::size_t j = 0; j < kinds.size(); ++j) {
            std::vector<double> gains;
            int wins_a = 0, wins_b = 0;
            for (int t = 0; t < trials; ++t) {
                RandomStream trial_stream =
                    stream.substream((i * kinds.size() + j) * static_cast<std::size_t>(trials) +
                                     static_cast<std::size_t>(t));
                BattleSchedule sched = base_schedule;
                sched.mode = BattleMode::simultaneous;
                OptimizerSettings sa{kinds[i], ObjectiveSense::maximize};
                OptimizerSettings sb{kinds[j], ObjectiveSense::minimize};
                sa.bf_candidates = bf_candidates_a;
                sb.bf_candidates = bf_candidates_b;
                RandomStream init = trial_stream.substream(0xc0);
                Optimizer oa = Optimizer::make(model.spec_a, sa, init);
                Optimizer ob = Optimizer::make(model.spec_b, sb, init);
                const BattleResult r = run_battle(model, oa, ob, sched, eval, eval,
                                                  noise_variance, trial_stream);
                gains.push_back(r.outcome.gain_db);
                wins_a += r.outcome.winner == Winner::a;
                wins_b += r.outcome.winner == Winner::b;
            }
            out.cells[i].push_back(detail::summarize(std::move(gains), wins_a, wins_b));
        }
    }
    return out;
}

} // namespace mtsim
