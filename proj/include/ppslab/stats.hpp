#pragma once

#include <cmath>
#include <vector>

namespace ppslab::stats {

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

inline double normal_two_sided_p(double z) {
    return std::erfc(std::abs(z) / std::sqrt(2.0));
}

/// Pooled two-proportion z-test (two-sided).
inline TestResult two_proportion_test(int x1, int n1, int x2, int n2) {
    TestResult r;
    if (n1 == 0 || n2 == 0) return r;
    const double p1 = double(x1) / n1, p2 = double(x2) / n2;
    const double pool = double(x1 + x2) / (n1 + n2);
    const double se = std::sqrt(pool * (1.0 - pool) * (1.0 / n1 + 1.0 / n2));
    if (se <= 0.0) return r;
    r.statistic = (p1 - p2) / se;
    r.p_value = normal_two_sided_p(r.statistic);
    return r;
}

/// Welch's two-sample t statistic; the p-value uses the normal
/// approximation, adequate at the sample sizes used here.
inline TestResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    TestResult r;
    if (a.size() < 2 || b.size() < 2) return r;
    auto mean_var = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m += x;
        m /= v.size();
        double s2 = 0.0;
        for (double x : v) s2 += (x - m) * (x - m);
        s2 /= (v.size() - 1);
        return std::pair<double, double>(m, s2);
    };
    const auto [ma, va] = mean_var(a);
    const auto [mb, vb] = mean_var(b);
    const double se = std::sqrt(va / a.size() + vb / b.size());
    if (se <= 0.0) return r;
    r.statistic = (ma - mb) / se;
    r.p_value = normal_two_sided_p(r.statistic);
    return r;
}

}  // namespace ppslab::stats
