#include <doctest.h>

#include <random>

#include "ppslab/percept.hpp"

using namespace ppslab;
using percept::Mask;
using percept::Percept;

namespace {

Mask make_mask(int rows, int cols, std::initializer_list<std::pair<int, int>> px) {
    Mask m(rows, cols);
    for (auto& [r, c] : px) m.set(r, c);
    return m;
}

// Independent oracle: IOU by explicit pixel-set counting.
double iou_oracle(const Mask& a, const Mask& b) {
    int inter = 0, uni = 0;
    for (int r = 0; r < a.rows; ++r) {
        for (int c = 0; c < a.cols; ++c) {
            const bool x = a.get(r, c), y = b.get(r, c);
            if (x && y) ++inter;
            if (x || y) ++uni;
        }
    }
    return static_cast<double>(inter) / uni;
}

}  // namespace

TEST_CASE("depth_range scans min and max disparity") {
    Percept p(4, 4);
    Mask m = make_mask(4, 4, {{0, 0}, {1, 2}, {3, 3}});
    p.disparity[0 * 4 + 0] = 10;
    p.disparity[1 * 4 + 2] = 42;
    p.disparity[3 * 4 + 3] = 17;
    const auto r = percept::depth_range(p, m);
    CHECK(r.lo == 10);
    CHECK(r.hi == 42);

    Mask single = make_mask(4, 4, {{2, 2}});
    p.disparity[2 * 4 + 2] = 99;
    const auto r1 = percept::depth_range(p, single);
    CHECK(r1.lo == 99);
    CHECK(r1.hi == 99);

    Mask empty(4, 4);
    CHECK_THROWS_AS(percept::depth_range(p, empty), percept::EmptyMask);
}

TEST_CASE("center is the mean pixel coordinate and mean disparity") {
    Percept p(4, 4);
    // pixels (r=0,c=0) and (r=0,c=2), disparities 10 and 20
    Mask m = make_mask(4, 4, {{0, 0}, {0, 2}});
    p.disparity[0] = 10;
    p.disparity[2] = 20;
    const auto c = percept::center(p, m);
    CHECK(c.u == doctest::Approx(1.0));
    CHECK(c.v == doctest::Approx(0.0));
    CHECK(c.d == doctest::Approx(15.0));

    // uniform square: centroid at the square center
    Percept p8(8, 8);
    Mask sq(8, 8);
    for (int r = 2; r <= 5; ++r)
        for (int col = 3; col <= 6; ++col) sq.set(r, col);
    const auto cs = percept::center(p8, sq);
    CHECK(cs.u == doctest::Approx(4.5));
    CHECK(cs.v == doctest::Approx(3.5));

    // brute-force summation oracle on a random mask
    Percept pr(10, 10);
    std::mt19937 gen(5);
    for (auto& d : pr.disparity) d = static_cast<uint8_t>(gen() % 200);
    Mask rm(10, 10);
    for (int i = 0; i < 100; ++i) rm.bits[i] = gen() % 4 == 0;
    if (!rm.empty()) {
        double su = 0, sv = 0, sd = 0;
        int n = 0;
        for (int r = 0; r < 10; ++r)
            for (int col = 0; col < 10; ++col)
                if (rm.get(r, col)) {
                    su += col;
                    sv += r;
                    sd += pr.disp(r, col);
                    ++n;
                }
        const auto cr = percept::center(pr, rm);
        CHECK(cr.u == doctest::Approx(su / n).epsilon(1e-9));
        CHECK(cr.v == doctest::Approx(sv / n).epsilon(1e-9));
        CHECK(cr.d == doctest::Approx(sd / n).epsilon(1e-9));
    }

    Mask empty(4, 4);
    CHECK_THROWS_AS(percept::center(p, empty), percept::EmptyMask);
}

TEST_CASE("gripper_vector direction and degenerate centers") {
    percept::Center3 ch{0, 0, 0}, cp{3, 4, 0};
    const auto g = percept::gripper_vector(ch, cp);
    CHECK(g.du == doctest::Approx(3.0));
    CHECK(g.dv == doctest::Approx(4.0));
    CHECK(g.norm() == doctest::Approx(5.0));
    CHECK_THROWS_AS(percept::gripper_vector(ch, ch), percept::DegenerateVector);
}

TEST_CASE("iou matches the pixel-counting oracle") {
    // a={(0,0),(0,1)}, b={(0,1),(0,2)} -> 1/3
    Mask a = make_mask(3, 3, {{0, 0}, {0, 1}});
    Mask b = make_mask(3, 3, {{0, 1}, {0, 2}});
    CHECK(percept::iou(a, b) == doctest::Approx(1.0 / 3.0));
    CHECK(percept::iou(a, b) == doctest::Approx(iou_oracle(a, b)));

    CHECK(percept::iou(a, a) == doctest::Approx(1.0));

    Mask empty(3, 3);
    CHECK(percept::iou(a, empty) == doctest::Approx(0.0));  // absent final mask
    CHECK_THROWS_AS(percept::iou(empty, empty), percept::BothEmpty);
}

TEST_CASE("iou properties on random masks") {
    std::mt19937 gen(12345);
    for (int trial = 0; trial < 50; ++trial) {
        Mask a(10, 12), b(10, 12);
        for (int i = 0; i < 10 * 12; ++i) {
            a.bits[i] = gen() % 3 == 0;
            b.bits[i] = gen() % 3 == 0;
        }
        if (a.empty() && b.empty()) continue;
        const double ab = percept::iou(a, b);
        const double ba = percept::iou(b, a);
        CHECK(ab == ba);
        CHECK(ab >= 0.0);
        CHECK(ab <= 1.0);
        CHECK(ab == doctest::Approx(iou_oracle(a, b)));
    }
}

TEST_CASE("swept_mask fills the hull, boundary inclusive") {
    // two 1-pixel masks at rows 0 and 9 in the same column -> 10-pixel line
    Mask a = make_mask(12, 4, {{0, 0}});
    Mask b = make_mask(12, 4, {{9, 0}});
    const Mask hull = percept::swept_mask(a, b);
    CHECK(hull.count() == 10);
    for (int r = 0; r < 10; ++r) CHECK(hull.get(r, 0));

    // hull contains the union
    Mask c = make_mask(12, 4, {{2, 1}, {3, 2}});
    const Mask h2 = percept::swept_mask(c, c);
    for (int r = 0; r < 12; ++r)
        for (int col = 0; col < 4; ++col)
            if (c.get(r, col)) CHECK(h2.get(r, col));
}

TEST_CASE("swept_mask of a filled triangle matches point-in-hull oracle") {
    Mask a(20, 20), b(20, 20);
    a.set(2, 2);
    a.set(2, 15);
    b.set(16, 3);
    const Mask hull = percept::swept_mask(a, b);
    // Oracle: barycentric containment for the triangle (2,2),(2,15),(16,3),
    // boundary inclusive, evaluated on integer pixel centers.
    auto sign = [](double x1, double y1, double x2, double y2, double px, double py) {
        return (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1);
    };
    int oracle_count = 0;
    for (int r = 0; r < 20; ++r) {
        for (int c = 0; c < 20; ++c) {
            const double d1 = sign(2, 2, 15, 2, c, r);
            const double d2 = sign(15, 2, 3, 16, c, r);
            const double d3 = sign(3, 16, 2, 2, c, r);
            const bool neg = d1 < 0 || d2 < 0 || d3 < 0;
            const bool pos = d1 > 0 || d2 > 0 || d3 > 0;
            const bool inside = !(neg && pos);
            if (inside) ++oracle_count;
            CHECK(hull.get(r, c) == inside);
        }
    }
    CHECK(hull.count() == oracle_count);
}

TEST_CASE("swept depth range spans both endpoint ranges") {
    const percept::DepthRange a{5, 10}, b{20, 30};
    const auto s = percept::swept_depth_range(a, b);
    CHECK(s.lo == 5);
    CHECK(s.hi == 30);
}

TEST_CASE("target_orientation: degenerate column mask is exactly vertical") {
    Percept p(16, 16);
    Mask m(16, 16);
    for (int r = 3; r < 13; ++r) m.set(r, 5);  // 1x10 column
    const auto o = percept::target_orientation(p, m);
    CHECK(o.du == doctest::Approx(0.0));
    CHECK(o.dv == doctest::Approx(1.0));

    Mask single = make_mask(16, 16, {{4, 4}});
    CHECK_THROWS_AS(percept::target_orientation(p, single), percept::DegenerateMask);
}

TEST_CASE("target_orientation is stable under 180-degree rotation") {
    Percept p(32, 32);
    std::mt19937 gen(777);
    for (int trial = 0; trial < 20; ++trial) {
        Mask m(32, 32);
        // random blob around the center
        for (int i = 0; i < 40; ++i) {
            const int r = 8 + int(gen() % 16);
            const int c = 8 + int(gen() % 10);
            m.set(r, c);
        }
        if (m.count() < 2) continue;
        Mask rot(32, 32);
        for (int r = 0; r < 32; ++r)
            for (int c = 0; c < 32; ++c)
                if (m.get(r, c)) rot.set(31 - r, 31 - c);
        const auto o1 = percept::target_orientation(p, m);
        const auto o2 = percept::target_orientation(p, rot);
        const double cs = percept::cosine_similarity(o1, o2);
        CHECK(std::abs(cs) == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("cosine similarity: self similarity is 1") {
    percept::Vec3Dir v{1.5, -2.0, 0.5};
    CHECK(percept::cosine_similarity(v, v) == doctest::Approx(1.0));
}

TEST_CASE("percept debug serialization round-trips exactly") {
    Percept p(6, 7);
    std::mt19937 gen(42);
    for (auto& l : p.labels) l = static_cast<int16_t>(gen() % 14);
    for (auto& d : p.disparity) d = static_cast<uint8_t>(gen() % 256);
    const std::string prefix = "/tmp/ppslab_percept_roundtrip";
    percept::save_percept(p, prefix);
    const Percept q = percept::load_percept(prefix);
    CHECK(q.rows == p.rows);
    CHECK(q.cols == p.cols);
    CHECK(q.labels == p.labels);
    CHECK(q.disparity == p.disparity);
}
