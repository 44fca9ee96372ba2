#pragma once

#include "ppslab/geometry.hpp"

namespace ppslab::sim {

/// Fixed-pose pinhole camera with an integer disparity output,
/// disparity = round(K / depth) clamped to [0, 255]; larger disparity means
/// closer to the camera. The v axis is oriented so that image v grows with
/// world height.
class CameraModel {
public:
    CameraModel();
    CameraModel(const Vec3& eye, const Vec3& look_at, double fx, double fy, int rows,
                int cols, double disparity_k);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    double disparity_k() const { return k_; }

    const Vec3& eye() const { return eye_; }
    const Vec3& forward() const { return f_; }

    /// Project a world point; returns (u, v, forward depth).
    Vec3 project(const Vec3& p) const;

    Ray pixel_ray(int row, int col) const;
    Ray subpixel_ray(double row, double col) const;
    double max_focal() const { return fx_ > fy_ ? fx_ : fy_; }

    uint8_t disparity_of_depth(double z) const;

    double noise_std = 0.0;   // optional zero-mean disparity jitter
    uint64_t noise_seed = 0;

private:
    Vec3 eye_, f_, right_, vup_;
    double fx_, fy_, cx_, cy_;
    int rows_, cols_;
    double k_;

    void build_basis(const Vec3& look_at);
};

}  // namespace ppslab::sim
