#include "engage/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "engage/error.hpp"

namespace engage::stats {

namespace {

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIterations = 200000;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIterations; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;

        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kEps) return h;
    }
    throw Error("incomplete beta continued fraction did not converge");
}

// lgamma(x) minus its Stirling approximation, for x >= 10.
double stirling_remainder(double x) {
    const double r2 = 1.0 / (x * x);
    return (1.0 / 12.0 - r2 * (1.0 / 360.0 - r2 * (1.0 / 1260.0 - r2 / 1680.0))) / x;
}

double log_beta(double a, double b) {
    const double big = std::max(a, b);
    const double small = std::min(a, b);
    if (big < 10.0 || small >= 10.0) return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    // lgamma(big + small) - lgamma(big) without the cancellation between two
    // large values; this is the large-df regime of the t tail.
    const double ratio = (big - 0.5) * std::log1p(small / big) + small * std::log(big + small) - small +
                         stirling_remainder(big + small) - stirling_remainder(big);
    return std::lgamma(small) - ratio;
}

// I_x(a,b) given both x and 1-x, so callers can supply an accurate complement.
double incomplete_beta_split(double a, double b, double x, double one_minus_x) {
    if (x <= 0.0) return 0.0;
    if (one_minus_x <= 0.0) return 1.0;
    const double log_x = x > 0.5 ? std::log1p(-one_minus_x) : std::log(x);
    const double log_1mx = x < 0.5 ? std::log1p(-x) : std::log(one_minus_x);
    const double log_front = a * log_x + b * log_1mx - log_beta(a, b);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return std::exp(log_front) * beta_continued_fraction(a, b, x) / a;
    }
    return 1.0 - std::exp(log_front) * beta_continued_fraction(b, a, one_minus_x) / b;
}

}  // namespace

GroupSummary summarize(std::span<const double> values) {
    if (values.size() < 2) {
        throw InputError("a group summary needs at least 2 values, got " + std::to_string(values.size()));
    }
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {static_cast<int>(values.size()), mean, std::sqrt(ss / (n - 1.0))};
}

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw InputError("incomplete beta needs a, b > 0");
    if (x < 0.0 || x > 1.0) throw InputError("incomplete beta needs x in [0, 1]");
    return incomplete_beta_split(a, b, x, 1.0 - x);
}

double t_tail_probability(double t, double df, Tail tail) {
    if (!(df > 0.0)) throw InputError("t distribution needs df > 0, got " + std::to_string(df));
    if (std::isnan(t)) throw InputError("t statistic is NaN");

    double two_sided = 1.0;
    if (std::isinf(t)) {
        two_sided = 0.0;
    } else if (t != 0.0) {
        // P(|T| > |t|) = I_{df/(df+t^2)}(df/2, 1/2)
        const double t2 = t * t;
        const double x = df / (df + t2);
        const double one_minus_x = t2 / (df + t2);
        two_sided = incomplete_beta_split(0.5 * df, 0.5, x, one_minus_x);
    }
    if (tail == Tail::Two) return two_sided;
    return t > 0.0 ? 0.5 * two_sided : 1.0 - 0.5 * two_sided;
}

double cohens_d(const GroupSummary& a, const GroupSummary& b) {
    if (a.n < 2 || b.n < 2) throw InputError("Cohen's d needs n >= 2 in both groups");
    const double pooled_var =
        ((a.n - 1) * a.sd * a.sd + (b.n - 1) * b.sd * b.sd) / static_cast<double>(a.n + b.n - 2);
    const double pooled = std::sqrt(pooled_var);
    if (pooled == 0.0) {
        if (a.mean == b.mean) return 0.0;
        throw DegenerateError("Cohen's d undefined: zero pooled SD with unequal means");
    }
    return (a.mean - b.mean) / pooled;
}

TestResult t_test(const GroupSummary& a, const GroupSummary& b, Variant variant, Tail tail,
                  Alternative alternative) {
    if (a.n < 2 || b.n < 2) throw InputError("t-test needs n >= 2 in both groups");

    TestResult r;
    r.variant = variant;
    r.tail = tail;
    r.alternative = alternative;

    const double na = a.n;
    const double nb = b.n;
    double se = 0.0;
    if (variant == Variant::Welch) {
        const double va = a.sd * a.sd / na;
        const double vb = b.sd * b.sd / nb;
        se = std::sqrt(va + vb);
        const double denom = va * va / (na - 1.0) + vb * vb / (nb - 1.0);
        r.df = denom > 0.0 ? (va + vb) * (va + vb) / denom : na + nb - 2.0;
    } else {
        const double pooled_var =
            ((na - 1.0) * a.sd * a.sd + (nb - 1.0) * b.sd * b.sd) / (na + nb - 2.0);
        se = std::sqrt(pooled_var * (1.0 / na + 1.0 / nb));
        r.df = na + nb - 2.0;
    }

    if (se == 0.0) {
        if (a.mean != b.mean) {
            throw DegenerateError("t-test undefined: zero standard error with unequal means");
        }
        r.t = 0.0;
    } else {
        r.t = (a.mean - b.mean) / se;
    }
    r.p_two_sided = t_tail_probability(r.t, r.df, Tail::Two);
    const double directed = alternative == Alternative::Greater ? r.t : -r.t;
    r.p_one_sided = t_tail_probability(directed, r.df, Tail::One);
    r.cohens_d = cohens_d(a, b);
    return r;
}

}  // namespace engage::stats
