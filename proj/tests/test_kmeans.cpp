#include <cmath>
#include <cstring>

#include "doctest.h"
#include "engage/error.hpp"
#include "engage/kmeans.hpp"
#include "engage/synth.hpp"
#include "oracles/rule_oracle.hpp"

using namespace engage;
using namespace engage::kmeans;

namespace {

std::vector<Point> cloud(std::uint64_t seed, int n_per = 30, double sigma = 0.05) {
    std::vector<Point> out;
    for (const auto& p : synth::generate_profiles(synth::kDriverPassengerCentroids, n_per, sigma, seed)) {
        out.push_back(p.point);
    }
    return out;
}

bool bit_identical(const ClusterModel& a, const ClusterModel& b) {
    if (a.assignments != b.assignments || a.k != b.k || a.best_run != b.best_run) return false;
    if (std::memcmp(&a.wss, &b.wss, sizeof a.wss) != 0) return false;
    for (std::size_t c = 0; c < a.centroids.size(); ++c) {
        if (std::memcmp(a.centroids[c].data(), b.centroids[c].data(), sizeof(Point)) != 0) return false;
    }
    return a.run_wss == b.run_wss;
}

}  // namespace

TEST_SUITE("kmeans") {
    TEST_CASE("k=1 gives the mean") {
        const std::vector<Point> pts{{0.2, 0.3, 0.5}, {0.4, 0.4, 0.2}, {0.6, 0.2, 0.2}};
        Options o;
        o.k = 1;
        const auto m = kmeans_cluster(pts, o);
        CHECK(m.centroids[0][0] == doctest::Approx(0.4));
        CHECK(m.centroids[0][1] == doctest::Approx(0.3));
        CHECK(m.centroids[0][2] == doctest::Approx(0.3));
        CHECK(m.assignments == std::vector<int>{0, 0, 0});
    }

    TEST_CASE("six points split like the exhaustive optimum") {
        const std::vector<Point> pts{{0.9, 0.05, 0.05}, {0.89, 0.06, 0.05}, {0.91, 0.04, 0.05},
                                     {0.1, 0.6, 0.3},   {0.11, 0.59, 0.3},  {0.09, 0.6, 0.31}};
        const auto best = oracle::best_two_partition(pts);
        const auto m = kmeans_cluster(pts, {});
        CHECK(m.wss == doctest::Approx(best.wss).epsilon(1e-12));
        for (std::size_t i = 0; i < pts.size(); ++i) {
            CHECK((m.assignments[i] == m.assignments[0]) == (best.labels[i] == best.labels[0]));
        }
    }

    TEST_CASE("random small sets reach the exhaustive optimum") {
        oracle::Gen gen(23);
        for (int trial = 0; trial < 60; ++trial) {
            std::vector<Point> pts;
            const int n = gen.uniform(3, 11);
            for (int i = 0; i < n; ++i) {
                double a = gen.real(0, 1), b = gen.real(0, 1 - a);
                pts.push_back({a, b, 1 - a - b});
            }
            Options o;
            o.seed = static_cast<std::uint64_t>(trial);
            o.runs = 20;
            const auto m = kmeans_cluster(pts, o);
            CHECK(m.wss <= oracle::best_two_partition(pts).wss * (1 + 1e-9) + 1e-15);
        }
    }

    TEST_CASE("Lloyd invariants") {
        oracle::Gen gen(29);
        for (int trial = 0; trial < 40; ++trial) {
            const auto pts = cloud(static_cast<std::uint64_t>(trial), 20, 0.15);
            Options o;
            o.k = gen.uniform(1, 5);
            o.seed = static_cast<std::uint64_t>(trial);
            for (int run = 0; run < 3; ++run) {
                const auto r = lloyd(pts, seed_plus_plus(pts, o.k, o.seed, run), o);
                for (std::size_t i = 1; i < r.wss_trace.size(); ++i) CHECK(r.wss_trace[i] <= r.wss_trace[i - 1] + 1e-12);
            }
            const auto m = kmeans_cluster(pts, o);
            for (double w : m.run_wss) CHECK(m.wss <= w);
            CHECK(m.wss == m.run_wss[static_cast<std::size_t>(m.best_run)]);
            for (std::size_t i = 0; i < pts.size(); ++i) {
                const double own = squared_distance(pts[i], m.centroids[static_cast<std::size_t>(m.assignments[i])]);
                for (const auto& c : m.centroids) CHECK(own <= squared_distance(pts[i], c) + 1e-15);
            }
        }
    }

    TEST_CASE("fixed seed is bit-identical; parallel matches serial") {
        const auto pts = cloud(5);
        Options o;
        o.seed = 42;
        const auto a = kmeans_cluster(pts, o);
        CHECK(bit_identical(a, kmeans_cluster(pts, o)));
        CHECK(bit_identical(a, kmeans_cluster_serial(pts, o)));
        o.k = 4;
        CHECK(bit_identical(kmeans_cluster(pts, o), kmeans_cluster_serial(pts, o)));
    }

    TEST_CASE("within-centroid distance") {
        const std::vector<Point> same{{0.2, 0.3, 0.5}, {0.2, 0.3, 0.5}};
        Options o;
        o.k = 1;
        const auto m = kmeans_cluster(same, o);
        const auto [pos, neg] = within_centroid_distance(m, same);
        CHECK(pos == 0.0);
        CHECK(neg == 0.0);
        const std::vector<Point> pair{{0.2, 0.3, 0.5}, {0.4, 0.3, 0.3}};
        const auto m2 = kmeans_cluster(pair, o);
        const double d2 = squared_distance(pair[0], m2.centroids[0]);
        const auto [p2, n2] = within_centroid_distance(m2, pair);
        CHECK(p2 == doctest::Approx(d2));
        CHECK(n2 == doctest::Approx(-d2));
        CHECK(m2.awcd_positive == doctest::Approx(d2));
    }

    TEST_CASE("input errors") {
        const std::vector<Point> pts{{0.2, 0.3, 0.5}, {0.2, 0.3, 0.5}, {0.1, 0.1, 0.8}};
        Options o;
        o.k = 0;
        CHECK_THROWS_AS(kmeans_cluster(pts, o), InputError);
        o.k = 4;
        CHECK_THROWS_AS(kmeans_cluster(pts, o), InputError);
        o.k = 3;
        CHECK_THROWS_AS(kmeans_cluster(pts, o), DegenerateError);
        o.k = 2;
        o.runs = 0;
        CHECK_THROWS_AS(kmeans_cluster(pts, o), InputError);
    }

    TEST_CASE("elbow scan") {
        std::vector<Point> blobs;
        oracle::Gen gen(31);
        for (int i = 0; i < 10; ++i) blobs.push_back({0.8 + gen.real(-0.01, 0.01), 0.1, 0.1});
        for (int i = 0; i < 10; ++i) blobs.push_back({0.1, 0.1 + gen.real(-0.01, 0.01), 0.8});
        const auto e = elbow_scan(blobs, 1, 4, 10, 1);
        REQUIRE(e.size() == 4);
        for (std::size_t i = 1; i < e.size(); ++i) CHECK(e[i].wss <= e[i - 1].wss);
        const double first_drop = e[0].wss - e[1].wss;
        for (std::size_t i = 2; i < e.size(); ++i) CHECK(first_drop > e[i - 1].wss - e[i].wss);

        const std::vector<Point> same(5, Point{0.3, 0.3, 0.4});
        for (const auto& p : elbow_scan(same, 1, 3, 5, 1)) CHECK(p.wss == 0.0);
        const auto single = elbow_scan(std::vector<Point>{{0.3, 0.3, 0.4}}, 1, 1, 5, 1);
        REQUIRE(single.size() == 1);
        CHECK(single[0].k == 1);
        CHECK(single[0].wss == 0.0);

        for (int trial = 0; trial < 20; ++trial) {
            const auto pts = cloud(static_cast<std::uint64_t>(100 + trial), 8, 0.2);
            const auto scan = elbow_scan(pts, 1, 6, 3, static_cast<std::uint64_t>(trial));
            for (std::size_t i = 1; i < scan.size(); ++i) CHECK(scan[i].wss <= scan[i - 1].wss);
        }
    }
}
