#include "ppslab/camera.hpp"

#include <cmath>

namespace ppslab::sim {

CameraModel::CameraModel()
    : CameraModel(Vec3(-0.05, -0.15, 1.00), Vec3(0.675, -0.15, 0.0), 170.0, 150.0, 120,
                  160, 95.0) {}

CameraModel::CameraModel(const Vec3& eye, const Vec3& look_at, double fx, double fy,
                         int rows, int cols, double disparity_k)
    : eye_(eye), fx_(fx), fy_(fy), cx_((cols - 1) / 2.0), cy_((rows - 1) / 2.0),
      rows_(rows), cols_(cols), k_(disparity_k) {
    build_basis(look_at);
}

void CameraModel::build_basis(const Vec3& look_at) {
    f_ = (look_at - eye_).normalized();
    right_ = f_.cross(Vec3::UnitZ()).normalized();
    vup_ = right_.cross(f_);  // v grows with world height
}

Vec3 CameraModel::project(const Vec3& p) const {
    const Vec3 rel = p - eye_;
    const double z = rel.dot(f_);
    const double u = cx_ + fx_ * rel.dot(right_) / z;
    const double v = cy_ + fy_ * rel.dot(vup_) / z;
    return Vec3(u, v, z);
}

Ray CameraModel::pixel_ray(int row, int col) const {
    const Vec3 dir =
        (f_ + (col - cx_) / fx_ * right_ + (row - cy_) / fy_ * vup_).normalized();
    return Ray{eye_, dir};
}

uint8_t CameraModel::disparity_of_depth(double z) const {
    if (z <= 1e-9) return 255;
    const double d = std::round(k_ / z);
    return static_cast<uint8_t>(std::clamp(d, 0.0, 255.0));
}

}  // namespace ppslab::sim
