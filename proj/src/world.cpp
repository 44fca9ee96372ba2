#include "ppslab/world.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "ppslab/rng.hpp"

namespace ppslab::sim {

using json = nlohmann::json;

World::World(WorldConfig cfg) : cfg_(std::move(cfg)) {
    state_.arm = cfg_.arm.home();
}

Box World::block_box(const BlockState& b) const {
    Box box;
    if (state_.attached_block == b.id) {
        const Eigen::Isometry3d pose = cfg_.arm.hand_frame(state_.arm) * state_.attach_rel;
        box.center = pose.translation();
        box.rot = pose.linear();
    } else {
        box.center = Vec3(b.x, b.y, cfg_.table.z + b.dims.z() / 2.0);
        box.rot = Eigen::AngleAxisd(b.yaw, Vec3::UnitZ()).toRotationMatrix();
    }
    box.half = b.dims / 2.0;
    return box;
}

std::vector<Solid> World::scene_solids(const JointConfig& jc, bool with_blocks) const {
    std::vector<Solid> solids = cfg_.arm.solids(jc);
    if (with_blocks) {
        for (const auto& b : state_.blocks) {
            if (b.removed) continue;
            Solid s;
            s.shape = Solid::kBox;
            s.box = block_box(b);
            s.label = static_cast<int16_t>(percept::kBlockBase + b.id);
            s.collidable = true;
            s.hand_part = false;
            solids.push_back(s);
        }
    }
    return solids;
}

namespace {

uint64_t fnv1a(uint64_t h, const void* data, size_t len) {
    const auto* p = static_cast<const uint8_t*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

percept::Percept World::raycast(const std::vector<Solid>& solids) const {
    const CameraModel& cam = cfg_.camera;
    const int rows = cam.rows(), cols = cam.cols();
    percept::Percept p(rows, cols);
    const Vec3 f = cam.forward();

    // Conservative screen bounding box per solid so most rays test nothing.
    struct Clipped {
        const Solid* solid;
        int r0, r1, c0, c1;
    };
    std::vector<Clipped> clipped;
    for (const Solid& s : solids) {
        std::vector<Vec3> pts;
        double pad_world = 0.0;
        if (s.shape == Solid::kCapsule) {
            pts = {s.capsule.p0, s.capsule.p1};
            pad_world = s.capsule.radius;
        } else {
            for (int i = 0; i < 8; ++i) {
                const Vec3 corner(((i & 1) ? 1 : -1) * s.box.half.x(),
                                  ((i & 2) ? 1 : -1) * s.box.half.y(),
                                  ((i & 4) ? 1 : -1) * s.box.half.z());
                pts.push_back(s.box.center + s.box.rot * corner);
            }
        }
        double umin = 1e18, umax = -1e18, vmin = 1e18, vmax = -1e18, zmin = 1e18;
        bool behind = false;
        for (const Vec3& pt : pts) {
            const Vec3 uvz = cam.project(pt);
            if (uvz.z() < 1e-3) {
                behind = true;
                break;
            }
            umin = std::min(umin, uvz.x());
            umax = std::max(umax, uvz.x());
            vmin = std::min(vmin, uvz.y());
            vmax = std::max(vmax, uvz.y());
            zmin = std::min(zmin, uvz.z());
        }
        Clipped c;
        c.solid = &s;
        if (behind) {
            // Part of the solid projects behind the camera: no reliable bbox.
            c.r0 = 0; c.r1 = rows - 1; c.c0 = 0; c.c1 = cols - 1;
        } else {
            const double pad = pad_world * std::max(170.0, 170.0) / zmin + 2.0;
            c.c0 = std::max(0, int(std::floor(umin - pad)));
            c.c1 = std::min(cols - 1, int(std::ceil(umax + pad)));
            c.r0 = std::max(0, int(std::floor(vmin - pad)));
            c.r1 = std::min(rows - 1, int(std::ceil(vmax + pad)));
            if (c.c0 > c.c1 || c.r0 > c.r1) continue;  // fully off-screen
        }
        clipped.push_back(c);
    }

    // 2x2 stratified supersampling; the majority label wins a pixel and its
    // depth is the mean over the winning subrays.
    constexpr int kSS = 2;
    constexpr double kOffsets[kSS] = {-0.25, 0.25};
    std::array<int16_t, kSS * kSS> sub_label;
    std::array<double, kSS * kSS> sub_z;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            int si = 0;
            for (int sr = 0; sr < kSS; ++sr) {
                for (int sc = 0; sc < kSS; ++sc, ++si) {
                    const Ray ray = cam.subpixel_ray(r + kOffsets[sr], c + kOffsets[sc]);
                    double best_t = std::numeric_limits<double>::infinity();
                    int16_t best_label = percept::kBackground;
                    for (const Clipped& cs : clipped) {
                        if (r < cs.r0 || r > cs.r1 || c < cs.c0 || c > cs.c1) continue;
                        const Solid& s = *cs.solid;
                        const double t = s.shape == Solid::kCapsule
                                             ? ray_capsule(ray, s.capsule)
                                             : ray_box(ray, s.box);
                        if (t >= 0.0 && t < best_t) {
                            best_t = t;
                            best_label = s.label;
                        }
                    }
                    // Table surface gives background pixels a physical depth.
                    if (std::abs(ray.dir.z()) > 1e-12) {
                        const double t_table = (cfg_.table.z - ray.origin.z()) / ray.dir.z();
                        if (t_table > 0.0 && t_table < best_t) {
                            const Vec3 hit = ray.origin + t_table * ray.dir;
                            if (cfg_.table.contains(hit.x(), hit.y())) best_t = t_table;
                        }
                    }
                    sub_label[si] = best_label;
                    sub_z[si] = std::isfinite(best_t) ? best_t * ray.dir.dot(f) : -1.0;
                }
            }
            // Majority label; ties resolve to the nearer surface.
            int16_t label = percept::kBackground;
            int best_votes = 0;
            double best_depth = std::numeric_limits<double>::infinity();
            for (int i = 0; i < kSS * kSS; ++i) {
                int votes = 0;
                double zsum = 0.0;
                int zn = 0;
                for (int j = 0; j < kSS * kSS; ++j) {
                    if (sub_label[j] == sub_label[i]) {
                        ++votes;
                        if (sub_z[j] > 0.0) {
                            zsum += sub_z[j];
                            ++zn;
                        }
                    }
                }
                const double depth = zn > 0 ? zsum / zn : std::numeric_limits<double>::infinity();
                if (votes > best_votes || (votes == best_votes && depth < best_depth)) {
                    best_votes = votes;
                    best_depth = depth;
                    label = sub_label[i];
                }
            }
            const int idx = r * cols + c;
            p.labels[idx] = label;
            if (std::isfinite(best_depth)) p.disparity[idx] = cam.disparity_of_depth(best_depth);
        }
    }
    if (cam.noise_std > 0.0) {
        // Pure-function jitter: keyed on the seed, the pixel and the scene
        // state, so identical states render identically.
        uint64_t state_hash = fnv1a(0xcbf29ce484222325ULL, state_.arm.q.data(), sizeof(double) * 7);
        state_hash = fnv1a(state_hash, &state_.arm.a, sizeof(double));
        for (const auto& b : state_.blocks) {
            state_hash = fnv1a(state_hash, &b.x, sizeof(double));
            state_hash = fnv1a(state_hash, &b.y, sizeof(double));
        }
        for (size_t i = 0; i < p.disparity.size(); ++i) {
            if (p.disparity[i] == 0) continue;
            const uint64_t h1 = splitmix64(cam.noise_seed ^ state_hash ^ (i * 2));
            const uint64_t h2 = splitmix64(cam.noise_seed ^ state_hash ^ (i * 2 + 1));
            const double u1 = (h1 >> 11) * 0x1.0p-53 + 1e-300;
            const double u2 = (h2 >> 11) * 0x1.0p-53;
            const double g = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
            const int v = static_cast<int>(p.disparity[i]) +
                          static_cast<int>(std::lround(cam.noise_std * g));
            p.disparity[i] = static_cast<uint8_t>(std::clamp(v, 1, 255));
        }
    }
    return p;
}

percept::Percept World::render() const { return raycast(scene_solids(state_.arm, true)); }

percept::Percept World::render_config(const JointConfig& jc, bool with_blocks) const {
    return raycast(scene_solids(jc, with_blocks));
}

percept::Percept World::render_blocks_only() const {
    std::vector<Solid> solids;
    for (const auto& b : state_.blocks) {
        if (b.removed) continue;
        Solid s;
        s.shape = Solid::kBox;
        s.box = block_box(b);
        s.label = static_cast<int16_t>(percept::kBlockBase + b.id);
        s.collidable = true;
        s.hand_part = false;
        solids.push_back(s);
    }
    return raycast(solids);
}

bool World::validity_check(const JointConfig& q) const {
    for (double v : q.q)
        if (!std::isfinite(v)) return false;
    if (!cfg_.arm.within_ranges(q)) return false;

    const std::vector<Solid> solids = cfg_.arm.solids(q);
    for (const Solid& s : solids) {
        if (!s.hand_part) continue;
        const double zmin = s.shape == Solid::kCapsule ? capsule_min_z(s.capsule)
                                                       : box_min_z(s.box);
        if (zmin < cfg_.table.z + 0.005) return false;
        // Robot body: vertical cylinder at the origin.
        const Vec3 center = s.shape == Solid::kCapsule
                                ? (s.capsule.p0 + s.capsule.p1) / 2.0
                                : s.box.center;
        const double rad = s.shape == Solid::kCapsule ? s.capsule.radius
                                                      : s.box.half.norm();
        if (std::hypot(center.x(), center.y()) < cfg_.body_radius + rad) return false;
    }

    // Field of view: the hand mask (palm and gripper both showing) must be
    // present and clear of the image border. A few pixels of each region are
    // required so stored node features are well conditioned.
    const percept::Percept p = raycast(solids);
    int palm_px = 0, hand_px = 0;
    for (int r = 0; r < p.rows; ++r) {
        for (int c = 0; c < p.cols; ++c) {
            const int16_t l = p.label(r, c);
            if (l == percept::kHand || l == percept::kPalm) {
                if (r == 0 || c == 0 || r == p.rows - 1 || c == p.cols - 1) return false;
                if (l == percept::kPalm) ++palm_px;
                else ++hand_px;
            }
        }
    }
    return palm_px >= 40 && hand_px >= 10;
}

bool World::block_intersects_hand(const BlockState& b,
                                  const std::vector<Solid>& solids) const {
    const Box bb = block_box(b);
    for (const Solid& s : solids) {
        if (!s.collidable) continue;
        if (s.shape == Solid::kBox) {
            if (box_box_overlap(s.box, bb)) return true;
        } else {
            if (capsule_box_overlap(s.capsule, bb)) return true;
        }
    }
    return false;
}

MotionOutcome World::step_to(const JointConfig& q_target, double a_target,
                             bool stop_on_reflex) {
    JointConfig target = q_target;
    target.a = a_target;
    if (!cfg_.arm.within_ranges(target)) throw InvalidTarget();

    MotionOutcome out;
    const JointConfig start = state_.arm;
    const int n = cfg_.substeps;
    Vec3 prev_hand = cfg_.arm.hand_frame(start).translation();
    bool halted = false;

    for (int s = 1; s <= n && !halted; ++s) {
        const double alpha = static_cast<double>(s) / n;
        JointConfig jc;
        for (int k = 0; k < 7; ++k)
            jc.q[k] = start.q[k] * (1.0 - alpha) + q_target.q[k] * alpha;
        const double a_cmd = start.a * (1.0 - alpha) + a_target * alpha;
        jc.a = state_.palmar_latched ? state_.latched_aperture : a_cmd;
        state_.arm = jc;

        const Eigen::Isometry3d hand = cfg_.arm.hand_frame(jc);

        // Attached block follows the hand; pressing it into the table makes
        // the grasp slip.
        if (state_.attached_block >= 0) {
            BlockState& b = state_.blocks[state_.attached_block];
            const Box bb = block_box(b);
            if (box_min_z(bb) < cfg_.table.z - cfg_.slip_depth) {
                const Vec3 pos = bb.center;
                state_.attached_block = -1;
                b.x = pos.x();
                b.y = pos.y();
                b.yaw = std::atan2(bb.rot(1, 0), bb.rot(0, 0));
                out.events.push_back({MotionEvent::kDetach, s, b.id, 0, 0});
                if (!cfg_.table.contains(b.x, b.y)) {
                    b.removed = true;
                    out.events.push_back({MotionEvent::kToppleOff, s, b.id, 0, 0});
                }
            }
        }

        // Palmar reflex: block material inside the open palm slab latches the
        // gripper shut, attaching the block when it fits between the fingers.
        if (!state_.palmar_latched && jc.a > cfg_.palmar_min_aperture) {
            const Box slab = cfg_.arm.palm_slab(jc);
            const Vec3 span_axis = hand.linear().col(1);
            for (auto& b : state_.blocks) {
                if (b.removed || state_.attached_block == b.id) continue;
                const Box bb = block_box(b);
                if (!box_box_overlap(slab, bb)) continue;

                state_.palmar_latched = true;
                out.palmar_triggered = true;
                out.events.push_back({MotionEvent::kPalmarTrigger, s, b.id, 0, 0});
                const double width = box_extent_along(bb, span_axis);
                if (width <= cfg_.arm.gap(jc.a) + 1e-9) {
                    state_.attached_block = b.id;
                    state_.attach_rel = hand.inverse() *
                                        Eigen::Translation3d(bb.center) *
                                        Eigen::Isometry3d(bb.rot);
                    state_.latched_aperture =
                        std::clamp(width / cfg_.arm.max_gap(), 0.0, 1.0);
                    out.events.push_back({MotionEvent::kAttach, s, b.id, 0, 0});
                } else {
                    state_.latched_aperture = 0.0;
                }
                state_.arm.a = state_.latched_aperture;
                if (stop_on_reflex) {
                    out.reflex_stop_step = s;
                    halted = true;
                }
                break;
            }
        }

        // Quasi-static pushes: slide penetrated blocks horizontally until
        // clear; blocks shoved past the table bounds are removed.
        if (!halted) {
            const std::vector<Solid> solids = scene_solids(state_.arm, false);
            const Vec3 hand_pos = hand.translation();
            for (auto& b : state_.blocks) {
                if (b.removed || state_.attached_block == b.id) continue;
                double moved_x = 0.0, moved_y = 0.0;
                int iter = 0;
                while (block_intersects_hand(b, solids) && iter++ < 80) {
                    const Box bb = block_box(b);
                    // Push away from the nearest colliding solid.
                    Vec3 ref = hand_pos;
                    for (const Solid& sd : solids) {
                        if (!sd.collidable) continue;
                        const bool hit = sd.shape == Solid::kBox
                                             ? box_box_overlap(sd.box, bb)
                                             : capsule_box_overlap(sd.capsule, bb);
                        if (hit) {
                            if (sd.shape == Solid::kBox) {
                                ref = sd.box.center;
                            } else {
                                const Vec3 ab = sd.capsule.p1 - sd.capsule.p0;
                                const double t = ab.squaredNorm() > 1e-18
                                        ? std::clamp((bb.center - sd.capsule.p0).dot(ab) /
                                                         ab.squaredNorm(), 0.0, 1.0)
                                        : 0.0;
                                ref = sd.capsule.p0 + t * ab;
                            }
                            break;
                        }
                    }
                    Eigen::Vector2d dir(bb.center.x() - ref.x(), bb.center.y() - ref.y());
                    if (dir.norm() < 1e-9) {
                        dir = Eigen::Vector2d(hand_pos.x() - prev_hand.x(),
                                              hand_pos.y() - prev_hand.y());
                    }
                    if (dir.norm() < 1e-9) dir = Eigen::Vector2d(1, 0);
                    dir.normalize();
                    b.x += dir.x() * cfg_.push_step;
                    b.y += dir.y() * cfg_.push_step;
                    moved_x += dir.x() * cfg_.push_step;
                    moved_y += dir.y() * cfg_.push_step;
                }
                if (moved_x != 0.0 || moved_y != 0.0) {
                    out.events.push_back({MotionEvent::kPush, s, b.id, moved_x, moved_y});
                    // Chain pushes onto other blocks.
                    const Box bb = block_box(b);
                    for (auto& other : state_.blocks) {
                        if (other.id == b.id || other.removed ||
                            state_.attached_block == other.id)
                            continue;
                        int guard = 0;
                        while (box_box_overlap(bb, block_box(other)) && guard++ < 80) {
                            other.x += moved_x != 0.0 ? std::copysign(cfg_.push_step, moved_x) : 0.0;
                            other.y += moved_y != 0.0 ? std::copysign(cfg_.push_step, moved_y) : 0.0;
                            if (moved_x == 0.0 && moved_y == 0.0) break;
                        }
                        if (guard > 0) {
                            out.events.push_back({MotionEvent::kPush, s, other.id, 0, 0});
                            if (!cfg_.table.contains(other.x, other.y)) {
                                other.removed = true;
                                out.events.push_back(
                                    {MotionEvent::kToppleOff, s, other.id, 0, 0});
                            }
                        }
                    }
                    if (!cfg_.table.contains(b.x, b.y)) {
                        b.removed = true;
                        out.events.push_back({MotionEvent::kToppleOff, s, b.id, 0, 0});
                    }
                }
            }
        }
        prev_hand = hand.translation();
    }

    if (!halted) {
        JointConfig fin = q_target;
        fin.a = state_.palmar_latched ? state_.latched_aperture : a_target;
        state_.arm = fin;
    }
    out.final_config = state_.arm;
    out.aperture_end = state_.arm.a;
    return out;
}

int World::place_block(const BlockPlacement& p) {
    BlockState b;
    b.id = static_cast<int>(state_.blocks.size());
    b.x = p.x;
    b.y = p.y;
    b.yaw = p.yaw;
    b.dims = p.dims;
    const Box nb = block_box(b);
    for (const auto& existing : state_.blocks) {
        if (existing.removed) continue;
        if (box_box_overlap(nb, block_box(existing))) throw OverlapError();
    }
    state_.blocks.push_back(b);
    return b.id;
}

void World::clear_blocks() {
    state_.blocks.clear();
    state_.attached_block = -1;
    state_.palmar_latched = false;
    state_.latched_aperture = 0.0;
}

void World::reset_blocks(const std::vector<BlockPlacement>& placements) {
    clear_blocks();
    for (const auto& p : placements) place_block(p);
}

void World::teleport(const JointConfig& jc) { state_.arm = jc; }

std::string World::snapshot_json() const {
    json j;
    j["schema_version"] = 1;
    j["arm"]["q"] = state_.arm.q;
    j["arm"]["a"] = state_.arm.a;
    j["palmar_latched"] = state_.palmar_latched;
    j["latched_aperture"] = state_.latched_aperture;
    j["attached_block"] = state_.attached_block;
    if (state_.attached_block >= 0) {
        std::array<double, 16> m;
        Eigen::Map<Eigen::Matrix4d>(m.data()) = state_.attach_rel.matrix();
        j["attach_rel"] = m;
    }
    j["blocks"] = json::array();
    for (const auto& b : state_.blocks) {
        j["blocks"].push_back({{"id", b.id},
                               {"x", b.x},
                               {"y", b.y},
                               {"yaw", b.yaw},
                               {"dims", {b.dims.x(), b.dims.y(), b.dims.z()}},
                               {"removed", b.removed}});
    }
    return j.dump(2);
}

void World::restore_json(const std::string& text) {
    const json j = json::parse(text);
    WorldState st;
    st.arm.q = j.at("arm").at("q").get<std::array<double, 7>>();
    st.arm.a = j.at("arm").at("a").get<double>();
    st.palmar_latched = j.at("palmar_latched").get<bool>();
    st.latched_aperture = j.at("latched_aperture").get<double>();
    st.attached_block = j.at("attached_block").get<int>();
    if (st.attached_block >= 0) {
        auto m = j.at("attach_rel").get<std::array<double, 16>>();
        st.attach_rel.matrix() = Eigen::Map<Eigen::Matrix4d>(m.data());
    }
    for (const auto& jb : j.at("blocks")) {
        BlockState b;
        b.id = jb.at("id").get<int>();
        b.x = jb.at("x").get<double>();
        b.y = jb.at("y").get<double>();
        b.yaw = jb.at("yaw").get<double>();
        const auto d = jb.at("dims").get<std::array<double, 3>>();
        b.dims = Vec3(d[0], d[1], d[2]);
        b.removed = jb.at("removed").get<bool>();
        st.blocks.push_back(b);
    }
    state_ = st;
}

WorldConfig WorldConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SimError("cannot open world config: " + path);
    const json j = json::parse(in);
    WorldConfig cfg;
    cfg.schema_version = j.value("schema_version", 1);
    if (j.contains("table")) {
        const auto& t = j["table"];
        cfg.table.x0 = t.value("x0", cfg.table.x0);
        cfg.table.x1 = t.value("x1", cfg.table.x1);
        cfg.table.y0 = t.value("y0", cfg.table.y0);
        cfg.table.y1 = t.value("y1", cfg.table.y1);
        cfg.table.z = t.value("z", cfg.table.z);
    }
    if (j.contains("block_dims")) {
        const auto d = j["block_dims"].get<std::array<double, 3>>();
        cfg.block_dims = Vec3(d[0], d[1], d[2]);
    }
    cfg.substeps = j.value("substeps", cfg.substeps);
    cfg.palmar_min_aperture = j.value("palmar_min_aperture", cfg.palmar_min_aperture);
    cfg.push_step = j.value("push_step", cfg.push_step);
    cfg.slip_depth = j.value("slip_depth", cfg.slip_depth);
    cfg.body_radius = j.value("body_radius", cfg.body_radius);
    if (j.contains("camera")) {
        const auto& c = j["camera"];
        const auto eye = c.value("eye", std::array<double, 3>{-0.05, -0.15, 1.00});
        const auto look = c.value("look_at", std::array<double, 3>{0.675, -0.15, 0.0});
        cfg.camera = CameraModel(Vec3(eye[0], eye[1], eye[2]), Vec3(look[0], look[1], look[2]),
                                 c.value("fx", 170.0), c.value("fy", 150.0),
                                 c.value("rows", 120), c.value("cols", 160),
                                 c.value("disparity_k", 95.0));
        cfg.camera.noise_std = c.value("noise_std", 0.0);
        cfg.camera.noise_seed = c.value("noise_seed", 0);
    }
    if (j.contains("arm")) {
        const auto& a = j["arm"];
        if (a.contains("home_q")) {
            JointConfig h;
            h.q = a["home_q"].get<std::array<double, 7>>();
            h.a = a.value("home_a", 1.0);
            cfg.arm.set_home(h);
        }
        if (a.contains("mount")) {
            const auto m = a["mount"].get<std::array<double, 3>>();
            cfg.arm.mount = Vec3(m[0], m[1], m[2]);
        }
    }
    return cfg;
}

void WorldConfig::to_json_file(const std::string& path) const {
    json j;
    j["schema_version"] = schema_version;
    j["table"] = {{"x0", table.x0}, {"x1", table.x1}, {"y0", table.y0},
               {"y1", table.y1}, {"z", table.z}};
    j["block_dims"] = {block_dims.x(), block_dims.y(), block_dims.z()};
    j["substeps"] = substeps;
    j["palmar_min_aperture"] = palmar_min_aperture;
    j["push_step"] = push_step;
    j["slip_depth"] = slip_depth;
    j["body_radius"] = body_radius;
    std::ofstream out(path);
    out << j.dump(2) << "\n";
}

}  // namespace ppslab::sim
