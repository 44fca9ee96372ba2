#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <optional>

namespace ppslab::sim {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Segment from p0 to p1 swept by a sphere of the given radius.
struct Capsule {
    Vec3 p0;
    Vec3 p1;
    double radius;
};

/// Oriented box: rot columns are the box axes in world frame.
struct Box {
    Vec3 center;
    Mat3 rot;
    Vec3 half;
};

struct Ray {
    Vec3 origin;
    Vec3 dir;  // unit
};

inline double ray_sphere(const Ray& r, const Vec3& c, double rad) {
    const Vec3 oc = r.origin - c;
    const double b = oc.dot(r.dir);
    const double disc = b * b - (oc.squaredNorm() - rad * rad);
    if (disc < 0.0) return -1.0;
    const double t = -b - std::sqrt(disc);
    return t >= 0.0 ? t : -1.0;
}

/// Nearest positive hit parameter, or -1 when the ray misses.
inline double ray_capsule(const Ray& r, const Capsule& cap) {
    const Vec3 ab = cap.p1 - cap.p0;
    const double ab2 = ab.squaredNorm();
    double best = -1.0;
    if (ab2 > 1e-18) {
        // Infinite cylinder, then clip to the segment span.
        const Vec3 d = r.dir - r.dir.dot(ab) / ab2 * ab;
        const Vec3 oc = (r.origin - cap.p0) - (r.origin - cap.p0).dot(ab) / ab2 * ab;
        const double a = d.squaredNorm();
        if (a > 1e-18) {
            const double b = oc.dot(d);
            const double c = oc.squaredNorm() - cap.radius * cap.radius;
            const double disc = b * b - a * c;
            if (disc >= 0.0) {
                const double t = (-b - std::sqrt(disc)) / a;
                if (t >= 0.0) {
                    const double s = (r.origin + t * r.dir - cap.p0).dot(ab) / ab2;
                    if (s >= 0.0 && s <= 1.0) best = t;
                }
            }
        }
    }
    for (const Vec3& end : {cap.p0, cap.p1}) {
        const double t = ray_sphere(r, end, cap.radius);
        if (t >= 0.0 && (best < 0.0 || t < best)) best = t;
    }
    return best;
}

inline double ray_box(const Ray& r, const Box& box) {
    const Vec3 o = box.rot.transpose() * (r.origin - box.center);
    const Vec3 d = box.rot.transpose() * r.dir;
    double tmin = 0.0, tmax = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) {
        if (std::abs(d[i]) < 1e-15) {
            if (o[i] < -box.half[i] || o[i] > box.half[i]) return -1.0;
            continue;
        }
        double t1 = (-box.half[i] - o[i]) / d[i];
        double t2 = (box.half[i] - o[i]) / d[i];
        if (t1 > t2) std::swap(t1, t2);
        tmin = std::max(tmin, t1);
        tmax = std::min(tmax, t2);
        if (tmin > tmax) return -1.0;
    }
    return tmin;
}

/// Distance from a point to the box surface (0 when inside).
inline double point_box_distance(const Vec3& p, const Box& box) {
    const Vec3 q = box.rot.transpose() * (p - box.center);
    Vec3 excess;
    for (int i = 0; i < 3; ++i) excess[i] = std::max(0.0, std::abs(q[i]) - box.half[i]);
    return excess.norm();
}

/// Distance from a segment to a box; convex in the segment parameter, so
/// golden-section search converges to full precision.
inline double segment_box_distance(const Vec3& a, const Vec3& b, const Box& box) {
    constexpr double kPhi = 0.6180339887498949;
    double lo = 0.0, hi = 1.0;
    double x1 = hi - kPhi * (hi - lo), x2 = lo + kPhi * (hi - lo);
    double f1 = point_box_distance(a + x1 * (b - a), box);
    double f2 = point_box_distance(a + x2 * (b - a), box);
    for (int i = 0; i < 60; ++i) {
        if (f1 < f2) {
            hi = x2; x2 = x1; f2 = f1;
            x1 = hi - kPhi * (hi - lo);
            f1 = point_box_distance(a + x1 * (b - a), box);
        } else {
            lo = x1; x1 = x2; f1 = f2;
            x2 = lo + kPhi * (hi - lo);
            f2 = point_box_distance(a + x2 * (b - a), box);
        }
    }
    return std::min({f1, f2, point_box_distance(a, box), point_box_distance(b, box)});
}

inline bool capsule_box_overlap(const Capsule& cap, const Box& box) {
    return segment_box_distance(cap.p0, cap.p1, box) <= cap.radius;
}

/// Separating-axis test for two oriented boxes.
inline bool box_box_overlap(const Box& a, const Box& b) {
    const Mat3 r = a.rot.transpose() * b.rot;
    Mat3 absr;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) absr(i, j) = std::abs(r(i, j)) + 1e-12;
    const Vec3 t = a.rot.transpose() * (b.center - a.center);

    for (int i = 0; i < 3; ++i) {
        const double ra = a.half[i];
        const double rb = b.half.dot(absr.row(i));
        if (std::abs(t[i]) > ra + rb) return false;
    }
    for (int j = 0; j < 3; ++j) {
        const double ra = a.half.dot(absr.col(j));
        const double rb = b.half[j];
        if (std::abs(t.dot(r.col(j))) > ra + rb) return false;
    }
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            const int i1 = (i + 1) % 3, i2 = (i + 2) % 3;
            const int j1 = (j + 1) % 3, j2 = (j + 2) % 3;
            const double ra = a.half[i1] * absr(i2, j) + a.half[i2] * absr(i1, j);
            const double rb = b.half[j1] * absr(i, j2) + b.half[j2] * absr(i, j1);
            if (std::abs(t[i2] * r(i1, j) - t[i1] * r(i2, j)) > ra + rb) return false;
        }
    }
    return true;
}

inline double box_min_z(const Box& box) {
    double extent = 0.0;
    for (int i = 0; i < 3; ++i) extent += std::abs(box.rot(2, i)) * box.half[i];
    return box.center.z() - extent;
}

inline double capsule_min_z(const Capsule& cap) {
    return std::min(cap.p0.z(), cap.p1.z()) - cap.radius;
}

/// Extent of the box projected onto a unit axis (full width).
inline double box_extent_along(const Box& box, const Vec3& axis) {
    double e = 0.0;
    for (int i = 0; i < 3; ++i) e += std::abs(axis.dot(box.rot.col(i))) * box.half[i];
    return 2.0 * e;
}

}  // namespace ppslab::sim
