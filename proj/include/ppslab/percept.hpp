#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ppslab::percept {

// Pixel labels used by the renderer. Entities beyond the hand keep their own
// labels so occlusion behaves correctly; mask extraction only consumes the
// hand, palm and block labels.
enum PixelLabel : int16_t {
    kBackground = 0,
    kArm = 1,
    kHand = 2,
    kPalm = 3,
    kBlockBase = 10,  // block k renders as kBlockBase + k
};

enum class CaptureTag : uint8_t { kNode, kForward, kReturn };

struct PerceptError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct HandNotVisible : PerceptError { HandNotVisible() : PerceptError("hand not visible") {} };
struct EmptyMask : PerceptError { EmptyMask() : PerceptError("empty mask") {} };
struct BothEmpty : PerceptError { BothEmpty() : PerceptError("both masks empty") {} };
struct DegenerateVector : PerceptError { DegenerateVector() : PerceptError("degenerate vector") {} };
struct DegenerateMask : PerceptError { DegenerateMask() : PerceptError("degenerate mask") {} };
struct BlockNotVisible : PerceptError { BlockNotVisible() : PerceptError("block not visible") {} };

/// One registered label+disparity image pair.
struct Percept {
    int rows = 0;
    int cols = 0;
    std::vector<int16_t> labels;   // rows*cols, row-major
    std::vector<uint8_t> disparity;
    CaptureTag tag = CaptureTag::kNode;
    int node_index = -1;

    Percept() = default;
    Percept(int r, int c) : rows(r), cols(c), labels(r * c, kBackground), disparity(r * c, 0) {}

    int16_t label(int r, int c) const { return labels[r * cols + c]; }
    uint8_t disp(int r, int c) const { return disparity[r * cols + c]; }
    bool same_shape(const Percept& o) const { return rows == o.rows && cols == o.cols; }
};

/// Dense binary bitmap over the percept grid.
struct Mask {
    int rows = 0;
    int cols = 0;
    std::vector<uint8_t> bits;

    Mask() = default;
    Mask(int r, int c) : rows(r), cols(c), bits(r * c, 0) {}

    bool get(int r, int c) const { return bits[r * cols + c] != 0; }
    void set(int r, int c, bool v = true) { bits[r * cols + c] = v ? 1 : 0; }
    bool same_shape(const Mask& o) const { return rows == o.rows && cols == o.cols; }

    int count() const {
        int n = 0;
        for (uint8_t b : bits) n += b;
        return n;
    }
    bool empty() const { return count() == 0; }
};

struct DepthRange {
    int lo = 0;
    int hi = 0;

    bool intersects(const DepthRange& o) const { return !(hi < o.lo || o.hi < lo); }
};

/// Image-space center: (u, v) pixel coordinates plus mean disparity.
struct Center3 {
    double u = 0.0;
    double v = 0.0;
    double d = 0.0;
};

/// Image-space direction (Δu, Δv, Δd).
struct Vec3Dir {
    double du = 0.0;
    double dv = 0.0;
    double dd = 0.0;

    double norm() const;
};

double distance(const Center3& a, const Center3& b);
Vec3Dir direction(const Center3& from, const Center3& to);
double cosine_similarity(const Vec3Dir& a, const Vec3Dir& b);

Mask label_mask(const Percept& p, int16_t label);
Mask mask_union(const Mask& a, const Mask& b);
Mask mask_intersection(const Mask& a, const Mask& b);
bool masks_intersect(const Mask& a, const Mask& b);

/// Palm = palm-marker pixels; hand = palm plus hand-label pixels.
std::pair<Mask, Mask> extract_hand_masks(const Percept& p);

DepthRange depth_range(const Percept& p, const Mask& m);
Center3 center(const Percept& p, const Mask& m);

/// Direction from the hand center through the palm center (proximal to
/// distal along the gripper).
Vec3Dir gripper_vector(const Center3& c_hand, const Center3& c_palm);

Mask target_mask(const Percept& p, int block_id);

/// Major axis of the mask's pixel distribution; Δd is the least-squares
/// disparity slope along that axis. Sign normalized to Δv ≥ 0 (ties: Δu ≥ 0).
Vec3Dir target_orientation(const Percept& p, const Mask& t);

double iou(const Mask& a, const Mask& b);

/// Filled convex hull of the union of both masks, boundary pixels inclusive.
Mask swept_mask(const Mask& h_i, const Mask& h_j);
DepthRange swept_depth_range(const DepthRange& a, const DepthRange& b);

// Debug serialization: disparity as ASCII PGM, labels as CSV. Exact round-trip.
void save_percept(const Percept& p, const std::string& path_prefix);
Percept load_percept(const std::string& path_prefix);

}  // namespace ppslab::percept
