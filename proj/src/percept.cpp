#include "ppslab/percept.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ppslab::percept {

double Vec3Dir::norm() const { return std::sqrt(du * du + dv * dv + dd * dd); }

double distance(const Center3& a, const Center3& b) {
    const double du = a.u - b.u, dv = a.v - b.v, dd = a.d - b.d;
    return std::sqrt(du * du + dv * dv + dd * dd);
}

Vec3Dir direction(const Center3& from, const Center3& to) {
    return {to.u - from.u, to.v - from.v, to.d - from.d};
}

double cosine_similarity(const Vec3Dir& a, const Vec3Dir& b) {
    const double na = a.norm(), nb = b.norm();
    if (na <= 0.0 || nb <= 0.0) throw DegenerateVector();
    return (a.du * b.du + a.dv * b.dv + a.dd * b.dd) / (na * nb);
}

Mask label_mask(const Percept& p, int16_t label) {
    Mask m(p.rows, p.cols);
    for (size_t i = 0; i < p.labels.size(); ++i) m.bits[i] = p.labels[i] == label ? 1 : 0;
    return m;
}

Mask mask_union(const Mask& a, const Mask& b) {
    Mask m(a.rows, a.cols);
    for (size_t i = 0; i < a.bits.size(); ++i) m.bits[i] = a.bits[i] | b.bits[i];
    return m;
}

Mask mask_intersection(const Mask& a, const Mask& b) {
    Mask m(a.rows, a.cols);
    for (size_t i = 0; i < a.bits.size(); ++i) m.bits[i] = a.bits[i] & b.bits[i];
    return m;
}

bool masks_intersect(const Mask& a, const Mask& b) {
    for (size_t i = 0; i < a.bits.size(); ++i)
        if (a.bits[i] & b.bits[i]) return true;
    return false;
}

std::pair<Mask, Mask> extract_hand_masks(const Percept& p) {
    Mask palm = label_mask(p, kPalm);
    Mask handonly = label_mask(p, kHand);
    Mask hand = mask_union(palm, handonly);
    if (hand.empty()) throw HandNotVisible();
    return {palm, hand};
}

DepthRange depth_range(const Percept& p, const Mask& m) {
    int lo = 256, hi = -1;
    for (int i = 0; i < p.rows * p.cols; ++i) {
        if (m.bits[i]) {
            const int d = p.disparity[i];
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
    }
    if (hi < 0) throw EmptyMask();
    return {lo, hi};
}

Center3 center(const Percept& p, const Mask& m) {
    double su = 0.0, sv = 0.0, sd = 0.0;
    int n = 0;
    for (int r = 0; r < p.rows; ++r) {
        for (int c = 0; c < p.cols; ++c) {
            if (m.get(r, c)) {
                su += c;
                sv += r;
                sd += p.disp(r, c);
                ++n;
            }
        }
    }
    if (n == 0) throw EmptyMask();
    return {su / n, sv / n, sd / n};
}

Vec3Dir gripper_vector(const Center3& c_hand, const Center3& c_palm) {
    Vec3Dir g = direction(c_hand, c_palm);
    if (g.norm() <= 0.0) throw DegenerateVector();
    return g;
}

Mask target_mask(const Percept& p, int block_id) {
    Mask m = label_mask(p, static_cast<int16_t>(kBlockBase + block_id));
    if (m.empty()) throw BlockNotVisible();
    return m;
}

Vec3Dir target_orientation(const Percept& p, const Mask& t) {
    std::vector<std::pair<int, int>> px;  // (row, col)
    for (int r = 0; r < t.rows; ++r)
        for (int c = 0; c < t.cols; ++c)
            if (t.get(r, c)) px.emplace_back(r, c);
    if (px.size() < 2) throw DegenerateMask();

    double mu = 0.0, mv = 0.0;
    for (auto& [r, c] : px) {
        mu += c;
        mv += r;
    }
    mu /= px.size();
    mv /= px.size();

    double suu = 0.0, svv = 0.0, suv = 0.0;
    for (auto& [r, c] : px) {
        const double du = c - mu, dv = r - mv;
        suu += du * du;
        svv += dv * dv;
        suv += du * dv;
    }

    // Major eigenvector of [[suu, suv], [suv, svv]].
    double au, av;
    const double tr = suu + svv;
    const double det = suu * svv - suv * suv;
    const double lam = 0.5 * tr + std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
    if (std::abs(suv) > 1e-12) {
        au = lam - svv;
        av = suv;
    } else if (suu >= svv) {
        au = 1.0;
        av = 0.0;
    } else {
        au = 0.0;
        av = 1.0;
    }
    const double n = std::sqrt(au * au + av * av);
    au /= n;
    av /= n;

    // Disparity slope along the axis.
    double md = 0.0;
    for (auto& [r, c] : px) md += p.disp(r, c);
    md /= px.size();
    double sss = 0.0, ssd = 0.0;
    for (auto& [r, c] : px) {
        const double s = (c - mu) * au + (r - mv) * av;
        sss += s * s;
        ssd += s * (p.disp(r, c) - md);
    }
    double dd = sss > 1e-12 ? ssd / sss : 0.0;

    if (av < 0.0 || (av == 0.0 && au < 0.0)) {
        au = -au;
        av = -av;
        dd = -dd;
    }
    return {au, av, dd};
}

double iou(const Mask& a, const Mask& b) {
    if (!a.same_shape(b)) throw PerceptError("iou: shape mismatch");
    int inter = 0, uni = 0;
    for (size_t i = 0; i < a.bits.size(); ++i) {
        inter += a.bits[i] & b.bits[i];
        uni += a.bits[i] | b.bits[i];
    }
    if (uni == 0) throw BothEmpty();
    return static_cast<double>(inter) / uni;
}

namespace {

using Pt = std::pair<long long, long long>;  // (x=col, y=row)

long long cross(const Pt& o, const Pt& a, const Pt& b) {
    return (a.first - o.first) * (b.second - o.second) -
           (a.second - o.second) * (b.first - o.first);
}

// Monotone chain; returns hull counter-clockwise without collinear points.
std::vector<Pt> convex_hull(std::vector<Pt> pts) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() <= 2) return pts;
    std::vector<Pt> h(2 * pts.size());
    size_t k = 0;
    for (size_t i = 0; i < pts.size(); ++i) {
        while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
        h[k++] = pts[i];
    }
    const size_t lower = k + 1;
    for (size_t i = pts.size() - 1; i-- > 0;) {
        while (k >= lower && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
        h[k++] = pts[i];
    }
    h.resize(k - 1);
    return h;
}

bool on_segment(const Pt& a, const Pt& b, const Pt& p) {
    if (cross(a, b, p) != 0) return false;
    return std::min(a.first, b.first) <= p.first && p.first <= std::max(a.first, b.first) &&
           std::min(a.second, b.second) <= p.second && p.second <= std::max(a.second, b.second);
}

bool in_hull(const std::vector<Pt>& hull, const Pt& p) {
    if (hull.empty()) return false;
    if (hull.size() == 1) return hull[0] == p;
    if (hull.size() == 2) return on_segment(hull[0], hull[1], p);
    for (size_t i = 0; i < hull.size(); ++i) {
        if (cross(hull[i], hull[(i + 1) % hull.size()], p) < 0) return false;
    }
    return true;
}

}  // namespace

Mask swept_mask(const Mask& h_i, const Mask& h_j) {
    if (!h_i.same_shape(h_j)) throw PerceptError("swept_mask: shape mismatch");
    std::vector<Pt> pts;
    long long cmin = h_i.cols, cmax = -1, rmin = h_i.rows, rmax = -1;
    for (int r = 0; r < h_i.rows; ++r) {
        for (int c = 0; c < h_i.cols; ++c) {
            if (h_i.get(r, c) || h_j.get(r, c)) {
                pts.push_back({c, r});
                cmin = std::min<long long>(cmin, c);
                cmax = std::max<long long>(cmax, c);
                rmin = std::min<long long>(rmin, r);
                rmax = std::max<long long>(rmax, r);
            }
        }
    }
    if (pts.empty()) throw EmptyMask();
    const std::vector<Pt> hull = convex_hull(std::move(pts));
    Mask out(h_i.rows, h_i.cols);
    for (long long r = rmin; r <= rmax; ++r)
        for (long long c = cmin; c <= cmax; ++c)
            if (in_hull(hull, {c, r})) out.set(static_cast<int>(r), static_cast<int>(c));
    return out;
}

DepthRange swept_depth_range(const DepthRange& a, const DepthRange& b) {
    return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
}

void save_percept(const Percept& p, const std::string& prefix) {
    {
        std::ofstream pgm(prefix + ".pgm");
        pgm << "P2\n" << p.cols << " " << p.rows << "\n255\n";
        for (int r = 0; r < p.rows; ++r) {
            for (int c = 0; c < p.cols; ++c) pgm << int(p.disp(r, c)) << (c + 1 == p.cols ? "" : " ");
            pgm << "\n";
        }
    }
    std::ofstream csv(prefix + ".labels.csv");
    for (int r = 0; r < p.rows; ++r) {
        for (int c = 0; c < p.cols; ++c) csv << p.label(r, c) << (c + 1 == p.cols ? "" : ",");
        csv << "\n";
    }
}

Percept load_percept(const std::string& prefix) {
    std::ifstream pgm(prefix + ".pgm");
    if (!pgm) throw PerceptError("cannot open " + prefix + ".pgm");
    std::string magic;
    int cols, rows, maxval;
    pgm >> magic >> cols >> rows >> maxval;
    Percept p(rows, cols);
    for (int i = 0; i < rows * cols; ++i) {
        int v;
        pgm >> v;
        p.disparity[i] = static_cast<uint8_t>(v);
    }
    std::ifstream csv(prefix + ".labels.csv");
    if (!csv) throw PerceptError("cannot open " + prefix + ".labels.csv");
    std::string line;
    int idx = 0;
    while (std::getline(csv, line)) {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) p.labels[idx++] = static_cast<int16_t>(std::stoi(cell));
    }
    return p;
}

}  // namespace ppslab::percept
