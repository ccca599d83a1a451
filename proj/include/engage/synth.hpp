#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "engage/kmeans.hpp"
#include "engage/model.hpp"
#include "engage/pipeline.hpp"

namespace engage::synth {

struct ScenarioSpec {
    std::string session_id = "SYN";
    int n_students = 4;
    int duration_s = 2400;
    bool tutor_present = true;
    double mean_dwell_s = 30.0;
    // Mixture weights indexed by Interaction (IPC, RF, PO, RM, ITC, TO, NC).
    std::array<double, kInteractionCount> weights{0.25, 0.2, 0.1, 0.15, 0.1, 0.1, 0.1};
    std::uint64_t seed = 7;

    /// Throws SpecError for negative or non-normalized weights, tutor
    /// interactions without a tutor, fewer than 2 students or a
    /// non-positive duration.
    void validate() const;
};

/// Named presets covering every interaction type.
const std::map<std::string, ScenarioSpec>& scenario_presets();

struct Episode {
    Interaction kind = Interaction::NC;
    int start = 0;
    int length = 0;
};

struct SyntheticSession {
    SessionTimeline timeline;
    std::vector<pipeline::CodedFrame> truth;
    std::vector<bool> transition;  // seconds near an episode boundary
    std::vector<Episode> episodes;
};

/// Seconds this far from an episode boundary are excluded from exact-match
/// comparisons.
int transition_margin(const pipeline::PipelineConfig& cfg) noexcept;

/// Episodes of constant gaze and speaker set, each at least
/// 2*transition_margin+1 seconds long, so smoothing and the ITC window
/// cannot alter their interior.
SyntheticSession generate_session(const ScenarioSpec& spec, const pipeline::PipelineConfig& cfg = {});

struct LabeledProfile {
    kmeans::Point point;
    int label = 0;
};

/// Gaussian jitter around each centroid, clipped at 0 and renormalized.
std::vector<LabeledProfile> generate_profiles(const std::vector<kmeans::Point>& centroids, int n_per,
                                              double sigma, std::uint64_t seed);

inline const std::vector<kmeans::Point> kDriverPassengerCentroids{{0.316, 0.425, 0.259},
                                                                  {0.091, 0.600, 0.309}};

}  // namespace engage::synth
