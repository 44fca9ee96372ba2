#include "ppslab/arm.hpp"

namespace ppslab::sim {

namespace {
Eigen::Isometry3d rot_about(const Vec3& axis, double angle) {
    Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
    t.linear() = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
    return t;
}
Eigen::Isometry3d translate(double x, double y, double z) {
    Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
    t.translation() = Vec3(x, y, z);
    return t;
}
}  // namespace

ArmModel::ArmModel() {
    // Baxter-like proportions: yaw/pitch shoulder, roll/pitch elbow,
    // roll/pitch wrist, distal roll.
    range_lo_ = {-0.96, -0.72, -1.28, 0.0, -1.28, -0.88, -3.0};
    range_hi_ = {0.96, 0.56, 1.28, 1.52, 1.28, 1.12, 3.0};
    home_.q = {0.14, 0.24, -0.87, 1.49, -0.83, 1.10, 0.0};
    home_.a = 1.0;
}

bool ArmModel::within_ranges(const JointConfig& jc) const {
    for (int k = 0; k < 7; ++k) {
        if (!(jc.q[k] >= range_lo_[k] && jc.q[k] <= range_hi_[k])) return false;
    }
    return jc.a >= 0.0 && jc.a <= 1.0;
}

double ArmModel::clamp_joint(int k, double v) const {
    return std::clamp(v, range_lo_[k], range_hi_[k]);
}

std::vector<Eigen::Isometry3d> ArmModel::joint_frames(const JointConfig& jc) const {
    // Axis pattern: z yaw, y pitch, x roll, y pitch, x roll, y pitch, x roll.
    static const std::array<Vec3, 7> axes = {
        Vec3::UnitZ(), Vec3::UnitY(), Vec3::UnitX(), Vec3::UnitY(),
        Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitX(),
    };
    std::vector<Eigen::Isometry3d> frames;
    frames.reserve(8);
    Eigen::Isometry3d m = translate(mount.x(), mount.y(), mount.z());
    frames.push_back(m);
    for (int k = 0; k < 7; ++k) {
        m = m * rot_about(axes[k], jc.q[k]) * translate(link_offsets[k], 0, 0);
        frames.push_back(m);
    }
    return frames;
}

Eigen::Isometry3d ArmModel::hand_frame(const JointConfig& jc) const {
    return joint_frames(jc).back();
}

Box ArmModel::palm_slab(const JointConfig& jc) const {
    const Eigen::Isometry3d hf = hand_frame(jc);
    const double g = gap(jc.a);
    const double len = finger_length - slab_clearance;
    Box slab;
    slab.rot = hf.linear();
    slab.half = Vec3(len / 2.0, g / 2.0, finger_height);
    slab.center = hf * Vec3(base_depth + slab_clearance + len / 2.0, 0, 0);
    return slab;
}

std::vector<Solid> ArmModel::solids(const JointConfig& jc) const {
    const auto frames = joint_frames(jc);
    std::vector<Solid> out;
    auto add_capsule = [&](const Vec3& a, const Vec3& b, double r, int16_t label, bool hand) {
        Solid s;
        s.shape = Solid::kCapsule;
        s.capsule = {a, b, r};
        s.label = label;
        s.collidable = true;
        s.hand_part = hand;
        out.push_back(s);
    };
    auto add_box = [&](const Box& b, int16_t label, bool collidable, bool hand) {
        Solid s;
        s.shape = Solid::kBox;
        s.box = b;
        s.label = label;
        s.collidable = collidable;
        s.hand_part = hand;
        out.push_back(s);
    };

    // Arm links: shoulder->elbow and elbow->wrist as capsules.
    add_capsule(frames[1].translation(), frames[2].translation(), upper_radius,
                percept::kArm, false);
    add_capsule(frames[2].translation(), frames[4].translation(), forearm_radius,
                percept::kArm, false);
    add_capsule(frames[4].translation(), frames[6].translation(), forearm_radius * 0.9,
                percept::kArm, false);
    // Wrist segment belongs to the hand group.
    add_capsule(frames[6].translation(), frames[7].translation(), wrist_radius,
                percept::kHand, true);

    const Eigen::Isometry3d& hf = frames[7];
    const double g = gap(jc.a);

    // Base plate connecting the fingers.
    Box base;
    base.rot = hf.linear();
    base.half = Vec3(base_depth, g / 2.0 + 2.0 * finger_thickness, finger_height);
    base.center = hf * Vec3(0, 0, 0);
    add_box(base, percept::kHand, true, true);

    // Fingers at +/- (gap/2 + thickness).
    for (int side = -1; side <= 1; side += 2) {
        Box f;
        f.rot = hf.linear();
        f.half = Vec3(finger_length / 2.0, finger_thickness, finger_height);
        f.center = hf * Vec3(base_depth + finger_length / 2.0,
                             side * (g / 2.0 + finger_thickness), 0);
        add_box(f, percept::kHand, true, true);
    }

    // Palm marker: the sensing slab, rendered but never a pushing surface.
    if (g > 1e-9) add_box(palm_slab(jc), percept::kPalm, false, true);

    return out;
}

}  // namespace ppslab::sim
