// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "cli_harness.hpp"
#include "engage/analytics.hpp"
#include "engage/csv.hpp"
#include "engage/error.hpp"
#include "engage/ingest.hpp"
#include "engage/io.hpp"
#include "engage/kmeans.hpp"
#include "engage/pipeline.hpp"
#include "engage/stats.hpp"
#include "engage/synth.hpp"
#include "oracles/rule_oracle.hpp"
#include "stat_fixtures.hpp"
#include "table1_fixtures.hpp"

using namespace engage;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
    void note(const std::string& what) {
        if (!detail.empty()) detail += "; ";
        detail += what;
    }
};

std::string fmt(double v, int precision = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string coded_row(const fs::path& coded_csv, int second) {
    const auto t = csv::parse(harness::read(coded_csv), "coded");
    for (const auto& r : t.rows) {
        if (r.fields[0] == std::to_string(second)) {
            std::string s = r.fields[1];
            for (std::size_t i = 4; i < r.fields.size(); i += 3) s += " " + r.fields[i];
            return s;
        }
    }
    return "<missing>";
}

// ------------------------------------------------------------------ 1

Outcome worked_example() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    harness::TempDir dir("acc1");
    const std::string rf = "RF SemiActive Active SemiActive SemiActive";
    const std::string ipc = "IPC Passive Active SemiActive SemiActive";

    // Both rows at their recorded seconds in one bundle. The rows are
    // attention states already, so no further smoothing is applied.
    const auto f = harness::write_fig4(dir);
    const auto out = (dir / "out").string();
    auto r = harness::run({"ingest", "--out", out, "--session-id", "W9G2", "--gaze", f.gaze.string(), "--diarization",
                           f.diarization.string(), "--speaker-map", f.speaker_map.string(), "--roster",
                           f.roster.string(), "--strict"});
    o.require(r.code == 0, "ingest failed: " + r.err);
    r = harness::run({"analyze", "--out", out, "--window", "1"});
    o.require(r.code == 0, "analyze failed: " + r.err);
    const auto coded = dir / "out/sessions/W9G2/coded.csv";
    o.require(coded_row(coded, 2) == rf, "second 2: " + coded_row(coded, 2));
    o.require(coded_row(coded, 314) == ipc, "second 314: " + coded_row(coded, 314));

    // Each row on its own, default configuration.
    const auto a = harness::write_fig4_row(dir, "W9G2_2", "Laptop Laptop Laptop Laptop", "spk_1");
    const auto b = harness::write_fig4_row(dir, "W9G2_314", "Other Student Student Student", "spk_1");
    const auto out2 = (dir / "rows").string();
    for (const auto& [sid, fx] : {std::pair{std::string("W9G2_2"), a}, std::pair{std::string("W9G2_314"), b}}) {
        r = harness::run({"ingest", "--out", out2, "--session-id", sid, "--gaze", fx.gaze.string(), "--diarization",
                          fx.diarization.string(), "--speaker-map", fx.speaker_map.string(), "--roster",
                          fx.roster.string()});
        o.require(r.code == 0, "row ingest failed: " + r.err);
    }
    r = harness::run({"analyze", "--out", out2});
    o.require(r.code == 0, "row analyze failed: " + r.err);
    o.require(coded_row(dir / "rows/sessions/W9G2_2/coded.csv", 0) == rf, "row session 2 mismatch");
    o.require(coded_row(dir / "rows/sessions/W9G2_314/coded.csv", 0) == ipc, "row session 314 mismatch");

    const double elapsed = seconds_since(t0);
    o.require(elapsed < 1.0, "runtime " + fmt(elapsed) + " s");
    o.note("runtime " + fmt(elapsed, 3) + " s");
    return o;
}

// ------------------------------------------------------------------ 2

Outcome table_coverage() {
    Outcome o;
    const auto& grid = oracle::table();
    std::set<std::tuple<Interaction, bool, Gaze>> covered;
    for (const auto& c : fixture::table_cases()) {
        const auto f = fixture::table_frame(c);
        if (c.reachable) {
            o.require(pipeline::classify_frame(f, c.tutor_speaking) == c.interaction,
                      "fixture classified unexpectedly for " + std::string(to_string(c.interaction)));
        }
        const auto codes = pipeline::code_engagement(f, c.interaction);
        for (std::size_t i = 0; i < f.students.size(); ++i) {
            const auto& st = f.students[i];
            const auto expect = grid.code(c.interaction, st.speaking, st.gaze, f.any_student_speaking());
            o.require(expect.has_value() && codes[i] == *expect, "wrong code in fixture");
            covered.insert({c.interaction, st.speaking, st.gaze});
        }
    }
    int cells = 0;
    for (auto kind : kAllInteractions) {
        for (bool speaking : {true, false}) {
            for (auto g : kAllGazes) {
                if (grid.is_na(kind, speaking, g)) continue;
                ++cells;
                o.require(covered.contains({kind, speaking, g}),
                          "uncovered cell " + std::string(to_string(kind)) + (speaking ? "/Y/" : "/N/") +
                              std::string(to_string(g)));
            }
        }
    }

    oracle::Gen gen(2024);
    long hits = 0;
    const long frames = 200000;
    for (long i = 0; i < frames; ++i) {
        pipeline::PipelineConfig cfg;
        cfg.rm_min_lookers = gen.uniform(2, 3);
        BehaviorFrame f;
        f.tutor_speaking = gen.chance(0.3);
        const int n = gen.uniform(2, 6);
        const double p_speak = gen.real(0, 0.6);
        for (int k = 0; k < n; ++k) f.students.push_back({static_cast<std::size_t>(k), gen.gaze(), gen.chance(p_speak)});
        const bool tutor_near = f.tutor_speaking || gen.chance(0.3);
        try {
            pipeline::code_engagement(f, pipeline::classify_frame(f, tutor_near, cfg));
        } catch (const ConsistencyError&) {
            ++hits;
        }
    }
    o.require(hits == 0, std::to_string(hits) + " N/A hits");
    o.note(std::to_string(cells) + " cells covered, " + std::to_string(frames) + " random frames, 0 N/A hits");
    return o;
}

// ------------------------------------------------------------------ 3

Outcome oracle_equivalence() {
    Outcome o;
    oracle::Gen gen(4048);
    long frames = 0;
    long disagreements = 0;
    while (frames < 120000) {
        pipeline::PipelineConfig cfg;
        cfg.window_s = 2 * gen.uniform(0, 3) + 1;
        cfg.itc_cooccurrence_window_s = gen.uniform(1, 7);
        cfg.rm_min_lookers = gen.uniform(2, 3);
        const auto t = gen.chance(0.5)
                           ? gen.timeline(gen.uniform(2, 6), gen.uniform(20, 400), gen.real(0, 0.5), gen.real(0, 0.4),
                                          gen.chance(0.8))
                           : gen.sticky_timeline(gen.uniform(2, 6), gen.uniform(20, 400));
        const auto r = pipeline::analyze_session(t, cfg);
        for (int s = 0; s < t.duration_s; ++s, ++frames) {
            disagreements += r.coded[static_cast<std::size_t>(s)].interaction != oracle::interaction(r.smoothed, s, cfg);
        }
    }
    o.require(disagreements == 0, std::to_string(disagreements) + " disagreements");
    o.note(std::to_string(frames) + " frames, agreement " +
           fmt(100.0 * static_cast<double>(frames - disagreements) / static_cast<double>(frames)) + "%");
    return o;
}

// ------------------------------------------------------------------ 4

Outcome synth_round_trip() {
    Outcome o;
    long checked = 0;
    harness::TempDir dir("acc4");
    for (const auto& [name, spec] : synth::scenario_presets()) {
        const auto s = synth::generate_session(spec);
        const auto coded = pipeline::process_session(s.timeline);
        for (std::size_t i = 0; i < coded.size(); ++i) {
            if (s.transition[i]) continue;
            ++checked;
            o.require(coded[i] == s.truth[i], name + " second " + std::to_string(i));
            if (!o.pass) return o;
        }
        // Same check through the on-disk tables and the ingest path.
        const auto r = harness::run({"simulate", "--out", (dir / name).string(), "--preset", name, "--self-check"});
        o.require(r.code == 0, name + " self-check failed: " + r.err);
    }
    o.note(std::to_string(synth::scenario_presets().size()) + " presets, " + std::to_string(checked) +
           " non-transition seconds, 100% match");
    return o;
}

// ------------------------------------------------------------------ 5

Outcome effect_sizes() {
    Outcome o;
    auto check = [&](const fixture::SummaryRow& r, double published, double tol) {
        const double d = std::abs(stats::cohens_d(r.drivers, r.passengers));
        o.require(std::abs(d - published) <= tol, r.measure + " |d|=" + fmt(d));
        o.note(r.measure + " |d|=" + fmt(d, 4));
    };
    const auto& challenges = fixture::challenge_rows();
    check(challenges[0], 0.800, 0.01);
    check(challenges[1], 0.597, 0.02);
    check(challenges[2], 0.721, 0.02);
    check(fixture::engagement_rows()[0], 0.420, 0.02);
    check(fixture::engagement_rows()[1], 0.391, 0.02);
    check(fixture::final_scores(), 0.414, 0.02);
    return o;
}

// ------------------------------------------------------------------ 6

Outcome p_values() {
    Outcome o;
    const auto& f = fixture::final_scores();
    const auto fin = stats::t_test(f.drivers, f.passengers, stats::Variant::Welch, stats::Tail::One);
    o.require(fin.p() >= 0.035 && fin.p() <= 0.050, "final scores one-sided p=" + fmt(fin.p()));
    o.note("final one-sided p=" + fmt(fin.p(), 4));

    const std::vector<double> bounds{0.001, 0.01, 0.001};
    for (std::size_t i = 0; i < bounds.size(); ++i) {
        const auto& r = fixture::challenge_rows()[i];
        const auto res = stats::t_test(r.drivers, r.passengers);
        o.require(res.p_two_sided < bounds[i], r.measure + " p=" + fmt(res.p_two_sided));
        o.note(r.measure + " p=" + fmt(res.p_two_sided, 3));
    }

    const double q = stats::t_tail_probability(2.2281, 10, stats::Tail::Two);
    o.require(std::abs(q - 0.0500) <= 1e-4, "t=2.2281 df=10 gives " + fmt(q));
    double worst = 0.0;
    for (const auto& ref : fixture::tail_references()) {
        worst = std::max(worst, std::abs(stats::t_tail_probability(ref.t, ref.df, stats::Tail::Two) - ref.p_two));
    }
    o.require(worst <= 1e-8, "reference error " + fmt(worst));
    o.note("max reference error " + fmt(worst, 2));
    return o;
}

// ------------------------------------------------------------------ 7

struct Recovery {
    double accuracy = 0.0;
    double centroid_error = 0.0;
    bool driver_ok = false;
    double awcd_negated = 0.0;
};

Recovery recover(std::uint64_t seed, kmeans::ClusterModel* out_model = nullptr) {
    const double sigma = 0.05;
    const auto labeled = synth::generate_profiles(synth::kDriverPassengerCentroids, 30, sigma, seed);
    std::vector<kmeans::Point> pts;
    for (const auto& p : labeled) pts.push_back(p.point);
    kmeans::Options opts;
    opts.seed = seed;
    const auto model = kmeans::kmeans_cluster(pts, opts);
    const auto labeling = analytics::label_clusters(model);

    Recovery r;
    int correct = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const bool driver = labeling.role_of(model.assignments[i]) == analytics::EngagementRole::Driver;
        correct += driver == (labeled[i].label == 0);
    }
    r.accuracy = static_cast<double>(correct) / static_cast<double>(pts.size());
    const auto& drv = model.centroids[static_cast<std::size_t>(labeling.driver_cluster)];
    const auto& pas = model.centroids[static_cast<std::size_t>(labeling.passenger_cluster)];
    for (int d = 0; d < 3; ++d) {
        r.centroid_error = std::max(r.centroid_error, std::abs(drv[d] - synth::kDriverPassengerCentroids[0][d]));
        r.centroid_error = std::max(r.centroid_error, std::abs(pas[d] - synth::kDriverPassengerCentroids[1][d]));
    }
    r.driver_ok = drv[0] > pas[0];
    r.awcd_negated = model.awcd_negated;
    if (out_model) *out_model = model;
    return r;
}

bool bit_identical(const kmeans::ClusterModel& a, const kmeans::ClusterModel& b) {
    if (a.assignments != b.assignments || a.best_run != b.best_run || a.run_wss != b.run_wss) return false;
    if (std::memcmp(&a.wss, &b.wss, sizeof a.wss) != 0) return false;
    for (std::size_t c = 0; c < a.centroids.size(); ++c) {
        if (std::memcmp(a.centroids[c].data(), b.centroids[c].data(), sizeof(kmeans::Point)) != 0) return false;
    }
    return true;
}

Outcome clustering_recovery() {
    Outcome o;
    const std::uint64_t seed = 1;
    kmeans::ClusterModel first;
    const auto r = recover(seed, &first);
    o.require(r.accuracy >= 0.95, "accuracy " + fmt(r.accuracy));
    o.require(r.centroid_error <= 0.02, "centroid error " + fmt(r.centroid_error));
    o.require(r.driver_ok, "driver is not the high-active centroid");

    kmeans::ClusterModel again;
    recover(seed, &again);
    std::vector<kmeans::Point> pts;
    for (const auto& p : synth::generate_profiles(synth::kDriverPassengerCentroids, 30, 0.05, seed)) pts.push_back(p.point);
    kmeans::Options opts;
    opts.seed = seed;
    o.require(bit_identical(first, again), "rerun differs");
    o.require(bit_identical(first, kmeans::kmeans_cluster_serial(pts, opts)), "serial reference differs");

    o.note("seed 1: accuracy " + fmt(r.accuracy, 4) + ", max centroid error " + fmt(r.centroid_error, 3) +
           ", awcd " + fmt(r.awcd_negated, 3) + " at sigma 0.05");
    int ok = 0;
    for (std::uint64_t s = 1; s <= 100; ++s) {
        const auto x = recover(s);
        ok += x.accuracy >= 0.95 && x.centroid_error <= 0.02 && x.driver_ok;
    }
    o.note(std::to_string(ok) + "/100 seeds meet both bounds");
    return o;
}

// ------------------------------------------------------------------ 8

Outcome profile_invariant() {
    Outcome o;
    long count = 0;
    double worst = 0.0;
    auto check_all = [&](const std::vector<EngagementProfile>& ps) {
        for (const auto& p : ps) {
            ++count;
            const double err = std::abs(p.freq_active + p.freq_semi + p.freq_passive - 1.0);
            worst = std::max(worst, err);
            o.require(validate_profile(p).empty(), "profile " + p.participant + " in " + p.session_id);
        }
    };
    for (const auto& [name, spec] : synth::scenario_presets()) {
        const auto s = synth::generate_session(spec);
        check_all(analytics::session_profiles(s.timeline, pipeline::process_session(s.timeline)));
    }
    oracle::Gen gen(808);
    for (int i = 0; i < 300; ++i) {
        const auto t = gen.timeline(gen.uniform(2, 6), gen.uniform(1, 1500));
        check_all(analytics::session_profiles(t, pipeline::process_session(t)));
    }
    harness::TempDir dir("acc8");
    const auto out = (dir / "out").string();
    for (const char* preset : {"mixed", "five_students", "pair"}) {
        harness::run({"simulate", "--out", out, "--preset", preset});
    }
    harness::run({"analyze", "--out", out});
    check_all(io::parse_profiles_table(harness::read(dir / "out/profiles.csv"), "profiles.csv"));
    o.require(worst <= 1e-9, "worst sum error " + fmt(worst));
    o.note(std::to_string(count) + " profiles, worst |sum-1| " + fmt(worst, 2));
    return o;
}

// ------------------------------------------------------------------ 9

struct RawSession {
    std::string id, gaze, diarization, speaker_map, roster;
};

RawSession raw_session(const harness::TempDir& dir, const std::string& id, int duration, std::uint64_t seed) {
    auto spec = synth::scenario_presets().at("five_students");
    spec.session_id = id;
    spec.duration_s = duration;
    spec.seed = seed;
    const auto doc = dir.write("spec_" + id + ".json", io::serialize_scenario(spec));
    const auto out = (dir / "raw").string();
    const auto r = harness::run({"simulate", "--out", out, "--scenario", doc.string()});
    if (r.code != 0) throw std::runtime_error("simulate failed: " + r.err);
    const auto base = dir / ("raw/synthetic/" + id);
    return {id, harness::read(base / "gaze.csv"), harness::read(base / "diarization.csv"),
            harness::read(base / "speaker_map.csv"), harness::read(base / "roster.csv")};
}

std::vector<EngagementProfile> end_to_end(const RawSession& raw) {
    const auto roster = ingest::parse_roster(raw.roster, "roster");
    const auto gaze = ingest::parse_gaze_table(raw.gaze, "gaze");
    const auto segs = ingest::parse_diarization(raw.diarization, "diarization");
    const auto map = ingest::parse_speaker_map(raw.speaker_map, "speaker_map");
    const auto attributed = ingest::apply_speaker_map(segs, map, ingest::MappingMode::Strict);
    const auto built = ingest::build_timeline(raw.id, gaze, attributed.segments, roster,
                                              ingest::infer_duration(gaze, attributed.segments));
    const auto coded = pipeline::process_session(built.timeline);
    return analytics::session_profiles(built.timeline, coded);
}

Outcome performance() {
    Outcome o;
    harness::TempDir dir("acc9");
    const auto single = raw_session(dir, "LONG", 4200, 9);
    auto t0 = std::chrono::steady_clock::now();
    const auto ps = end_to_end(single);
    const double one = seconds_since(t0);
    o.require(ps.size() == 5, "expected 5 profiles");
    o.require(one < 1.0, "single session " + fmt(one) + " s");

    std::vector<RawSession> corpus;
    for (int i = 0; i < 20; ++i) {
        corpus.push_back(raw_session(dir, "C" + std::to_string(i), 1980 + 120 * i, 100 + static_cast<std::uint64_t>(i)));
    }
    t0 = std::chrono::steady_clock::now();
    std::vector<std::vector<EngagementProfile>> results(corpus.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(corpus.size()); ++i) {
        results[static_cast<std::size_t>(i)] = end_to_end(corpus[static_cast<std::size_t>(i)]);
    }
    const double many = seconds_since(t0);
    for (const auto& r : results) o.require(r.size() == 5, "corpus session missing profiles");
    o.require(many < 10.0, "corpus " + fmt(many) + " s");
    o.note("4200 s session " + fmt(one * 1000, 3) + " ms, 20 sessions " + fmt(many * 1000, 4) + " ms");
    return o;
}

// ------------------------------------------------------------------ 10

Outcome statistics_properties() {
    Outcome o;
    oracle::Gen gen(1010);
    const int pairs = 20000;
    int failures = 0;
    auto close = [](double a, double b, double rel) { return std::abs(a - b) <= rel * std::max(1.0, std::abs(a)); };
    for (int i = 0; i < pairs; ++i) {
        const stats::GroupSummary a{gen.uniform(2, 120), gen.real(-50, 50), gen.real(0.01, 20)};
        const stats::GroupSummary b{gen.uniform(2, 120), gen.real(-50, 50), gen.real(0.01, 20)};
        const auto variant = gen.chance(0.5) ? stats::Variant::Welch : stats::Variant::Student;
        const auto r = stats::t_test(a, b, variant);

        const auto sw = stats::t_test(b, a, variant);
        bool ok = close(sw.t, -r.t, 1e-12) && close(sw.cohens_d, -r.cohens_d, 1e-12) &&
                  std::abs(sw.p_two_sided - r.p_two_sided) <= 1e-12;

        const double shift = gen.real(-1000, 1000);
        const auto sh = stats::t_test({a.n, a.mean + shift, a.sd}, {b.n, b.mean + shift, b.sd}, variant);
        ok = ok && close(sh.t, r.t, 1e-7) && close(sh.cohens_d, r.cohens_d, 1e-7) &&
             std::abs(sh.p_two_sided - r.p_two_sided) <= 1e-8;

        const double c = std::exp(gen.real(-6, 6));
        const auto sc = stats::t_test({a.n, a.mean * c, a.sd * c}, {b.n, b.mean * c, b.sd * c}, variant);
        ok = ok && close(sc.t, r.t, 1e-10) && close(sc.cohens_d, r.cohens_d, 1e-10) &&
             std::abs(sc.p_two_sided - r.p_two_sided) <= 1e-10;

        const auto alt = r.t >= 0 ? stats::Alternative::Greater : stats::Alternative::Less;
        const auto one = stats::t_test(a, b, variant, stats::Tail::One, alt);
        ok = ok && std::abs(one.p_one_sided - r.p_two_sided / 2) <= 1e-12;

        const double df = std::exp(gen.real(-1, 9));
        const double t1 = gen.real(0, 20);
        const double t2 = t1 + gen.real(1e-3, 5);
        ok = ok && stats::t_tail_probability(t2, df, stats::Tail::Two) < stats::t_tail_probability(t1, df, stats::Tail::Two);
        failures += !ok;
    }
    o.require(failures == 0, std::to_string(failures) + " failing pairs");
    o.note(std::to_string(pairs) + " random summary pairs");
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"1 worked example golden rows", worked_example},
        {"2 engagement table coverage and N/A unreachability", table_coverage},
        {"3 rule oracle equivalence", oracle_equivalence},
        {"4 synthetic round trip on every preset", synth_round_trip},
        {"5 effect sizes", effect_sizes},
        {"6 p-values and tail probabilities", p_values},
        {"7 clustering recovery and determinism", clustering_recovery},
        {"8 profile simplex invariant", profile_invariant},
        {"9 performance", performance},
        {"10 statistics property suite", statistics_properties},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        failed += !o.pass;
        std::printf("%s  criterion %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
