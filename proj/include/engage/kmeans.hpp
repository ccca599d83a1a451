#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace engage::kmeans {

/// A point on the (active, semi-active, passive) simplex.
using Point = std::array<double, 3>;

double squared_distance(const Point& a, const Point& b) noexcept;
std::size_t distinct_count(std::span<const Point> points);

struct Options {
    int k = 2;
    int runs = 10;
    std::uint64_t seed = 1;
    int max_iterations = 300;
    double tolerance = 1e-10;  // stop once no centroid moves farther than this
};

struct RunResult {
    std::vector<Point> centroids;
    std::vector<int> assignments;
    double wss = 0.0;
    std::vector<double> wss_trace;  // after every assignment step
    int iterations = 0;
};

struct ClusterModel {
    int k = 0;
    std::vector<Point> centroids;
    std::vector<int> assignments;
    double wss = 0.0;
    double awcd_positive = 0.0;
    double awcd_negated = 0.0;
    std::vector<double> run_wss;
    int best_run = 0;
    std::uint64_t seed = 0;
    int runs = 0;
};

/// k-means++ seeding for one restart; the RNG stream depends only on
/// (seed, run).
std::vector<Point> seed_plus_plus(std::span<const Point> points, int k, std::uint64_t seed, int run);

/// Lloyd iterations from the given centroids.
RunResult lloyd(std::span<const Point> points, std::vector<Point> centroids, const Options& opts);

/// Best-of-runs k-means, restarts in parallel. Lowest wss wins, ties go to
/// the lowest run index, so the result matches kmeans_cluster_serial bit for
/// bit. Throws InputError when k < 1, runs < 1 or there are fewer points
/// than k, and DegenerateError when there are fewer distinct points than k.
ClusterModel kmeans_cluster(std::span<const Point> points, const Options& opts);

ClusterModel kmeans_cluster_serial(std::span<const Point> points, const Options& opts);

/// Mean squared distance to the assigned centroid, and its negation.
std::pair<double, double> within_centroid_distance(const ClusterModel& model,
                                                   std::span<const Point> points);

struct ElbowPoint {
    int k = 0;
    double wss = 0.0;
};

/// Best wss per k over [k_min, k_max]; non-increasing in k.
std::vector<ElbowPoint> elbow_scan(std::span<const Point> points, int k_min, int k_max, int runs,
                                   std::uint64_t seed);

}  // namespace engage::kmeans
