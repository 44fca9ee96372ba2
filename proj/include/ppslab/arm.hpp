#pragma once

#include <array>
#include <vector>

#include "ppslab/geometry.hpp"
#include "ppslab/percept.hpp"

namespace ppslab::sim {

/// Proprioceptive arm state: seven joint angles plus gripper aperture
/// fraction in [0, 1].
struct JointConfig {
    std::array<double, 7> q{};
    double a = 1.0;
};

struct Solid {
    enum Shape { kCapsule, kBox } shape;
    Capsule capsule;
    Box box;
    int16_t label;
    bool collidable;
    bool hand_part;  // belongs to the end-effector group used by validity checks
};

/// Seven-revolute-joint serial chain with a two-finger gripper. Joint 7 is a
/// pure roll of the gripper assembly about the forearm axis; it moves the
/// finger span but leaves the palm center essentially in place.
class ArmModel {
public:
    ArmModel();

    int num_joints() const { return 7; }
    double range_lo(int k) const { return range_lo_[k]; }
    double range_hi(int k) const { return range_hi_[k]; }
    double range_span(int k) const { return range_hi_[k] - range_lo_[k]; }
    bool within_ranges(const JointConfig& jc) const;
    double clamp_joint(int k, double v) const;

    const JointConfig& home() const { return home_; }
    void set_home(const JointConfig& h) { home_ = h; }

    double max_gap() const { return max_gap_; }

    /// World transform of the hand frame: x = pointing direction,
    /// y = finger span axis (before roll), z completes.
    Eigen::Isometry3d hand_frame(const JointConfig& jc) const;

    /// All renderable/collidable solids for the arm at this configuration.
    std::vector<Solid> solids(const JointConfig& jc) const;

    /// The palm slab between the fingers (sensing volume; also the rendered
    /// palm marker). Width scales with aperture.
    Box palm_slab(const JointConfig& jc) const;

    /// Finger span distance at the given aperture.
    double gap(double aperture) const { return aperture * max_gap_; }

    // Geometry knobs (kept public for config overrides).
    Vec3 mount{0.10, 0.20, 0.48};
    std::array<double, 7> link_offsets{0.07, 0.36, 0.07, 0.33, 0.06, 0.10, 0.045};
    double upper_radius = 0.050;
    double forearm_radius = 0.042;
    double wrist_radius = 0.035;
    double finger_length = 0.115;
    double finger_height = 0.022;    // half-extent
    double finger_thickness = 0.007; // half-extent
    double base_depth = 0.014;       // half-extent along pointing axis
    double slab_clearance = 0.006;   // slab start past the base plate

private:
    std::array<double, 7> range_lo_;
    std::array<double, 7> range_hi_;
    double max_gap_ = 0.082;
    JointConfig home_;

    std::vector<Eigen::Isometry3d> joint_frames(const JointConfig& jc) const;
};

}  // namespace ppslab::sim
