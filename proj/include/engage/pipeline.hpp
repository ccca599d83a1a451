#pragma once

#include <span>
#include <vector>

#include "engage/model.hpp"

namespace engage::pipeline {

enum class WindowAlignment { Centered, Trailing };

struct PipelineConfig {
    int window_s = 5;                  // odd, so a centered window sits on the coded second
    int itc_cooccurrence_window_s = 5; // tutor/student speech co-occurrence radius
    int rm_min_lookers = 2;
    WindowAlignment alignment = WindowAlignment::Centered;

    /// Throws SpecError when a field is out of range.
    void validate() const;
    int half_window() const noexcept { return window_s / 2; }
};

struct CodedFrame {
    int second = 0;
    Interaction interaction = Interaction::NC;
    std::vector<Code> codes;  // one per student, roster order

    friend bool operator==(const CodedFrame&, const CodedFrame&) = default;
};

/// Majority-vote gaze over a sliding window, per student. Ties go to the
/// previous smoothed value, then the raw value, then Student < Laptop <
/// Tutor < Other. Speaking flags pass through.
SessionTimeline smooth_gaze(const SessionTimeline& t, const PipelineConfig& cfg = {});

/// Rule evaluation on a single frame. `tutor_near` says whether the tutor
/// spoke within ±itc_cooccurrence_window_s of this second.
///
/// Precedence: ITC > TO > RF > IPC > PO > RM > NC.
Interaction classify_frame(const BehaviorFrame& frame, bool tutor_near, const PipelineConfig& cfg = {});

/// `frames` must already be smoothed; s must be a valid second.
Interaction classify_interaction(const SessionTimeline& smoothed, int s, const PipelineConfig& cfg = {});

/// Table 1 lookup. Throws ConsistencyError on an N/A cell.
std::vector<Code> code_engagement(const BehaviorFrame& frame, Interaction interaction);

struct SessionResult {
    SessionTimeline smoothed;
    std::vector<CodedFrame> coded;
};

/// Smooth, then classify and code every second. ConsistencyError messages
/// name the session and second.
SessionResult analyze_session(const SessionTimeline& t, const PipelineConfig& cfg = {});

std::vector<CodedFrame> process_session(const SessionTimeline& t, const PipelineConfig& cfg = {});

/// Independent sessions in parallel (OpenMP). The first failing session's
/// exception is rethrown after the loop.
std::vector<SessionResult> process_corpus(std::span<const SessionTimeline> sessions,
                                          const PipelineConfig& cfg = {});

/// Serial reference for process_corpus.
std::vector<SessionResult> process_corpus_serial(std::span<const SessionTimeline> sessions,
                                                 const PipelineConfig& cfg = {});

}  // namespace engage::pipeline
