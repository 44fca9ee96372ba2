#pragma once

#include <optional>
#include <string>

#include "ppslab/arm.hpp"
#include "ppslab/camera.hpp"
#include "ppslab/percept.hpp"

namespace ppslab::sim {

struct SimError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InvalidTarget : SimError { InvalidTarget() : SimError("target outside joint ranges") {} };
struct OverlapError : SimError { OverlapError() : SimError("block volumes intersect") {} };

/// Upright cuboid resting on the table plane. Pose is (x, y, yaw); the base
/// sits at table height unless the block is attached to the hand.
struct BlockState {
    int id = 0;
    double x = 0.0, y = 0.0, yaw = 0.0;
    Vec3 dims;  // full extents (wx, wy, h); h is the single long dimension
    bool removed = false;
};

struct BlockPlacement {
    double x = 0.0, y = 0.0, yaw = 0.0;
    Vec3 dims;
};

struct TableBounds {
    double x0 = 0.40, x1 = 0.95;
    double y0 = -0.55, y1 = 0.25;
    double z = 0.0;
    bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
};

struct WorldState {
    JointConfig arm;
    std::vector<BlockState> blocks;
    int attached_block = -1;
    Eigen::Isometry3d attach_rel = Eigen::Isometry3d::Identity();
    bool palmar_latched = false;
    double latched_aperture = 0.0;
};

struct MotionEvent {
    enum Kind { kPush, kToppleOff, kPalmarTrigger, kAttach, kDetach } kind;
    int step = 0;
    int block = -1;
    double dx = 0.0, dy = 0.0;  // push displacement
};

struct MotionOutcome {
    std::vector<MotionEvent> events;
    bool palmar_triggered = false;
    std::optional<int> reflex_stop_step;
    JointConfig final_config;
    double aperture_end = 0.0;

    bool pushed(int block_id) const {
        for (const auto& e : events)
            if ((e.kind == MotionEvent::kPush || e.kind == MotionEvent::kToppleOff) &&
                e.block == block_id)
                return true;
        return false;
    }
    bool attached() const {
        for (const auto& e : events)
            if (e.kind == MotionEvent::kAttach) return true;
        return false;
    }
};

struct WorldConfig {
    int schema_version = 1;
    ArmModel arm;
    CameraModel camera;
    TableBounds table;
    Vec3 block_dims{0.042, 0.042, 0.16};
    int substeps = 50;
    double palmar_min_aperture = 0.1;
    double push_step = 0.004;
    double slip_depth = 0.004;
    double body_radius = 0.16;

    static WorldConfig from_json_file(const std::string& path);
    void to_json_file(const std::string& path) const;
};

/// Deterministic quasi-static world: one arm over a table with movable
/// blocks, a fixed camera, and a simulated Palmar reflex (the gripper
/// latches shut when block material enters the open palm slab).
class World {
public:
    explicit World(WorldConfig cfg = WorldConfig());

    const WorldConfig& config() const { return cfg_; }
    const ArmModel& arm_model() const { return cfg_.arm; }
    const CameraModel& camera() const { return cfg_.camera; }
    WorldState& state() { return state_; }
    const WorldState& state() const { return state_; }

    /// True iff the rendered hand mask (in an empty world) is nonempty,
    /// touches no image border, and the hand volume clears table and body.
    bool validity_check(const JointConfig& q) const;

    MotionOutcome step_to(const JointConfig& q_target, double a_target,
                          bool stop_on_reflex = false);

    percept::Percept render() const;
    percept::Percept render_config(const JointConfig& jc, bool with_blocks) const;
    percept::Percept render_blocks_only() const;

    int place_block(const BlockPlacement& p);
    void reset_blocks(const std::vector<BlockPlacement>& placements);
    void clear_blocks();

    /// Move the arm directly to a configuration without any world
    /// interaction (used when seeding the home node).
    void teleport(const JointConfig& jc);

    Box block_box(const BlockState& b) const;

    std::string snapshot_json() const;
    void restore_json(const std::string& json_text);

private:
    WorldConfig cfg_;
    WorldState state_;

    std::vector<Solid> scene_solids(const JointConfig& jc, bool with_blocks) const;
    bool block_intersects_hand(const BlockState& b, const std::vector<Solid>& solids) const;
    percept::Percept raycast(const std::vector<Solid>& solids) const;
};

}  // namespace ppslab::sim
