#include "engage/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "engage/error.hpp"

namespace engage::synth {

namespace {

std::size_t index_of(Interaction i) { return static_cast<std::size_t>(i); }

class EpisodeBuilder {
public:
    EpisodeBuilder(const ScenarioSpec& spec, const pipeline::PipelineConfig& cfg, std::mt19937_64& rng)
        : spec_(spec), cfg_(cfg), rng_(rng), n_(static_cast<std::size_t>(spec.n_students)) {}

    struct Pattern {
        std::vector<Gaze> gaze;
        std::vector<bool> speaking;
        bool tutor_speaking = false;
        std::vector<Code> codes;
    };

    Pattern make(Interaction kind) {
        Pattern p;
        p.gaze.assign(n_, Gaze::Other);
        p.speaking.assign(n_, false);
        p.codes.assign(n_, Code::Passive);
        auto order = shuffled();

        switch (kind) {
            case Interaction::IPC: {
                const std::size_t speakers = (n_ >= 4 && coin()) ? 2 : 1;
                bool all_laptop = true;
                for (std::size_t i = 0; i < speakers; ++i) {
                    const auto s = order[i];
                    p.speaking[s] = true;
                    p.gaze[s] = pick({Gaze::Student, Gaze::Laptop, Gaze::Other});
                    all_laptop &= p.gaze[s] == Gaze::Laptop;
                    p.codes[s] = Code::Active;
                }
                p.gaze[order[speakers]] = Gaze::Student;
                for (std::size_t i = speakers + 1; i < n_; ++i) {
                    p.gaze[order[i]] = all_laptop ? pick(without(any_gaze(), Gaze::Laptop)) : pick(any_gaze());
                }
                for (std::size_t i = speakers; i < n_; ++i) {
                    p.codes[order[i]] = p.gaze[order[i]] == Gaze::Student ? Code::SemiActive : Code::Passive;
                }
                break;
            }
            case Interaction::RF: {
                p.speaking[order[0]] = true;
                p.gaze[order[0]] = Gaze::Laptop;
                p.codes[order[0]] = Code::Active;
                p.gaze[order[1]] = Gaze::Laptop;
                for (std::size_t i = 2; i < n_; ++i) p.gaze[order[i]] = pick(any_gaze());
                for (std::size_t i = 1; i < n_; ++i) {
                    p.codes[order[i]] = p.gaze[order[i]] == Gaze::Laptop ? Code::SemiActive : Code::Passive;
                }
                break;
            }
            case Interaction::PO: {
                p.gaze[order[0]] = Gaze::Student;
                for (std::size_t i = 1; i < n_; ++i) p.gaze[order[i]] = pick(any_gaze());
                for (std::size_t s = 0; s < n_; ++s) {
                    p.codes[s] = p.gaze[s] == Gaze::Student ? Code::SemiActive : Code::Passive;
                }
                break;
            }
            case Interaction::RM: {
                const auto lookers = static_cast<std::size_t>(cfg_.rm_min_lookers);
                for (std::size_t i = 0; i < n_; ++i) {
                    p.gaze[order[i]] = i < lookers ? Gaze::Laptop : pick(without(any_gaze(), Gaze::Student));
                }
                for (std::size_t s = 0; s < n_; ++s) {
                    p.codes[s] = p.gaze[s] == Gaze::Laptop ? Code::SemiActive : Code::Passive;
                }
                break;
            }
            case Interaction::ITC: {
                p.tutor_speaking = true;
                p.speaking[order[0]] = true;
                p.gaze[order[0]] = pick(any_gaze());
                p.codes[order[0]] = Code::Active;
                for (std::size_t i = 1; i < n_; ++i) {
                    const auto s = order[i];
                    p.gaze[s] = pick(any_gaze());
                    // Listeners attending the tutor or the speaking student.
                    p.codes[s] = (p.gaze[s] == Gaze::Tutor || p.gaze[s] == Gaze::Student) ? Code::SemiActive
                                                                                         : Code::Passive;
                }
                break;
            }
            case Interaction::TO: {
                p.tutor_speaking = true;
                p.gaze[order[0]] = Gaze::Tutor;
                for (std::size_t i = 1; i < n_; ++i) p.gaze[order[i]] = pick(any_gaze());
                for (std::size_t s = 0; s < n_; ++s) {
                    p.codes[s] = p.gaze[s] == Gaze::Tutor ? Code::SemiActive : Code::Passive;
                }
                break;
            }
            case Interaction::NC: {
                std::vector<Gaze> idle{Gaze::Other};
                if (spec_.tutor_present) idle.push_back(Gaze::Tutor);
                for (std::size_t i = 0; i < n_; ++i) p.gaze[order[i]] = pick(idle);
                // Fewer laptop lookers than resource management needs.
                if (cfg_.rm_min_lookers > 1 && coin()) p.gaze[order[0]] = Gaze::Laptop;
                break;
            }
        }
        return p;
    }

private:
    std::vector<std::size_t> shuffled() {
        std::vector<std::size_t> order(n_);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng_);
        return order;
    }

    bool coin() { return std::uniform_int_distribution<int>(0, 1)(rng_) == 1; }

    Gaze pick(const std::vector<Gaze>& from) {
        return from[std::uniform_int_distribution<std::size_t>(0, from.size() - 1)(rng_)];
    }

    std::vector<Gaze> any_gaze() const {
        std::vector<Gaze> g{Gaze::Student, Gaze::Laptop, Gaze::Other};
        if (spec_.tutor_present) g.push_back(Gaze::Tutor);
        return g;
    }

    static std::vector<Gaze> without(std::vector<Gaze> g, Gaze drop) {
        g.erase(std::remove(g.begin(), g.end(), drop), g.end());
        return g;
    }

    const ScenarioSpec& spec_;
    const pipeline::PipelineConfig& cfg_;
    std::mt19937_64& rng_;
    std::size_t n_;
};

}  // namespace

void ScenarioSpec::validate() const {
    if (n_students < 2) throw SpecError("a scenario needs at least 2 students");
    if (duration_s <= 0) throw SpecError("scenario duration must be positive");
    if (!(mean_dwell_s > 0.0)) throw SpecError("mean dwell must be positive");
    double sum = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!(weights[i] >= 0.0)) throw SpecError("interaction weights must be non-negative");
        sum += weights[i];
    }
    if (std::abs(sum - 1.0) > 1e-9) throw SpecError("interaction weights must sum to 1");
    if (!tutor_present) {
        for (auto kind : {Interaction::ITC, Interaction::TO}) {
            if (weights[index_of(kind)] > 0.0) {
                throw SpecError(std::string("weight on ") + std::string(to_string(kind)) +
                                " requires tutor_present");
            }
        }
    }
}

const std::map<std::string, ScenarioSpec>& scenario_presets() {
    static const std::map<std::string, ScenarioSpec> presets = [] {
        std::map<std::string, ScenarioSpec> m;
        ScenarioSpec base;

        auto only = [&](Interaction kind, bool tutor) {
            ScenarioSpec s = base;
            s.weights.fill(0.0);
            s.weights[index_of(kind)] = 1.0;
            s.tutor_present = tutor;
            s.duration_s = 600;
            return s;
        };
        m["mixed"] = base;
        m["nc_only"] = only(Interaction::NC, false);
        m["rf_only"] = only(Interaction::RF, false);
        m["ipc_only"] = only(Interaction::IPC, false);
        m["po_only"] = only(Interaction::PO, false);
        m["rm_only"] = only(Interaction::RM, false);
        m["itc_only"] = only(Interaction::ITC, true);
        m["to_only"] = only(Interaction::TO, true);

        ScenarioSpec peer = base;
        peer.tutor_present = false;
        peer.weights = {0.35, 0.25, 0.15, 0.15, 0.0, 0.0, 0.10};
        m["no_tutor"] = peer;

        ScenarioSpec tutor = base;
        tutor.weights = {0.1, 0.1, 0.05, 0.05, 0.35, 0.3, 0.05};
        tutor.seed = 11;
        m["tutor_heavy"] = tutor;

        ScenarioSpec five = base;
        five.n_students = 5;
        five.duration_s = 4020;  // the longest session length reported
        five.mean_dwell_s = 20.0;
        five.seed = 3;
        m["five_students"] = five;

        ScenarioSpec pair = base;
        pair.n_students = 2;
        pair.duration_s = 1980;
        pair.seed = 5;
        m["pair"] = pair;
        return m;
    }();
    return presets;
}

int transition_margin(const pipeline::PipelineConfig& cfg) noexcept {
    const int smoothing = cfg.alignment == pipeline::WindowAlignment::Trailing ? cfg.window_s - 1
                                                                               : cfg.half_window();
    return std::max(smoothing, cfg.itc_cooccurrence_window_s);
}

SyntheticSession generate_session(const ScenarioSpec& spec, const pipeline::PipelineConfig& cfg) {
    spec.validate();
    cfg.validate();
    if (spec.weights[index_of(Interaction::RM)] > 0.0 && spec.n_students < cfg.rm_min_lookers) {
        throw SpecError("resource management needs at least rm_min_lookers students");
    }

    std::mt19937_64 rng(spec.seed);
    const int margin = transition_margin(cfg);
    const int min_len = std::max(cfg.window_s, 2 * margin + 1);

    SyntheticSession out;
    auto& t = out.timeline;
    t.session_id = spec.session_id;
    for (int i = 1; i <= spec.n_students; ++i) t.participants.push_back({"S" + std::to_string(i), Role::Student});
    if (spec.tutor_present) t.participants.push_back({"T1", Role::Tutor});
    t.duration_s = spec.duration_s;

    std::discrete_distribution<std::size_t> kind_dist(spec.weights.begin(), spec.weights.end());
    std::exponential_distribution<double> dwell(1.0 / spec.mean_dwell_s);
    EpisodeBuilder builder(spec, cfg, rng);

    int start = 0;
    while (start < spec.duration_s) {
        const auto kind = kAllInteractions[kind_dist(rng)];
        int length = std::max(min_len, static_cast<int>(std::lround(dwell(rng))));
        if (spec.duration_s - (start + length) < min_len) length = spec.duration_s - start;
        out.episodes.push_back({kind, start, length});

        const auto pattern = builder.make(kind);
        for (int s = start; s < start + length; ++s) {
            BehaviorFrame f;
            f.second = s;
            f.tutor_speaking = pattern.tutor_speaking;
            for (std::size_t k = 0; k < pattern.gaze.size(); ++k) {
                f.students.push_back({k, pattern.gaze[k], pattern.speaking[k]});
            }
            t.frames.push_back(std::move(f));
            out.truth.push_back({s, kind, pattern.codes});
        }
        start += length;
    }

    out.transition.assign(static_cast<std::size_t>(spec.duration_s), false);
    for (std::size_t e = 1; e < out.episodes.size(); ++e) {
        const int b = out.episodes[e].start;
        for (int s = std::max(0, b - margin); s < std::min(spec.duration_s, b + margin); ++s) {
            out.transition[static_cast<std::size_t>(s)] = true;
        }
    }
    return out;
}

std::vector<LabeledProfile> generate_profiles(const std::vector<kmeans::Point>& centroids, int n_per,
                                              double sigma, std::uint64_t seed) {
    if (sigma < 0.0) throw SpecError("sigma must be non-negative");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma > 0.0 ? sigma : 1.0);

    std::vector<LabeledProfile> out;
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        for (int i = 0; i < n_per; ++i) {
            kmeans::Point p = centroids[c];
            if (sigma > 0.0) {
                double sum = 0.0;
                for (auto& v : p) {
                    v = std::max(0.0, v + noise(rng));
                    sum += v;
                }
                if (sum > 0.0) {
                    for (auto& v : p) v /= sum;
                } else {
                    p = centroids[c];
                }
            }
            out.push_back({p, static_cast<int>(c)});
        }
    }
    return out;
}

}  // namespace engage::synth
