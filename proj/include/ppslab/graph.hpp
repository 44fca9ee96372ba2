#pragma once

#include <Eigen/Dense>
#include <unordered_set>

#include "ppslab/percept.hpp"
#include "ppslab/rng.hpp"
#include "ppslab/world.hpp"

namespace ppslab::pps {

struct GraphError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct RejectionLimit : GraphError { RejectionLimit() : GraphError("rejection sampling limit reached") {} };
struct NoPath : GraphError { NoPath() : GraphError("destination unreachable") {} };
struct NoNeighbors : GraphError { NoNeighbors() : GraphError("node has no neighbors") {} };

/// Visited arm state with the visual features extracted from its percept.
struct Node {
    int id = 0;
    sim::JointConfig config;
    percept::Mask palm;
    percept::Mask hand;
    percept::DepthRange palm_range;
    percept::DepthRange hand_range;
    percept::Center3 palm_center;
    percept::Center3 hand_center;
    percept::Vec3Dir gripper;
    bool home = false;
};

struct Edge {
    int a = 0;
    int b = 0;
    double length = 0.0;
    bool chain = false;
    percept::Vec3Dir motion;  // palm center displacement a -> b
    percept::DepthRange swept_range;
};

struct LocalJacobian {
    int node = 0;
    Eigen::Matrix<double, 7, 3> j;     // rate of change of (u, v, d) per radian
    Eigen::Matrix<double, 3, 7> jinv;  // Moore-Penrose pseudo-inverse
    int neighbor_count = 0;
    int rank = 0;
};

double joint_distance(const sim::JointConfig& a, const sim::JointConfig& b);

class PpsGraph {
public:
    int size() const { return static_cast<int>(nodes_.size()); }
    const Node& node(int i) const { return nodes_[i]; }
    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }
    const Edge& edge(int e) const { return edges_[e]; }
    const std::vector<int>& adjacent_edges(int i) const { return adjacency_[i]; }
    std::vector<int> neighbors(int i) const;
    int edge_between(int a, int b) const;  // -1 when absent

    double mean_chain_length() const { return mean_chain_length_; }
    int home_node() const { return home_; }
    uint64_t seed() const { return seed_; }
    bool densified() const { return densified_; }

    int add_node(Node n);
    int add_edge(int a, int b, bool chain);

    /// Swept mask of an edge: convex hull of the endpoint hand masks.
    /// Computed on demand (cheap at 120x160).
    percept::Mask edge_swept_mask(int e) const;

    void set_seed(uint64_t s) { seed_ = s; }
    void set_home(int i);
    void finalize_chain();
    void mark_densified() { densified_ = true; }

    void save(const std::string& path) const;
    static PpsGraph load(const std::string& path);

private:
    std::vector<Node> nodes_;
    std::vector<Edge> edges_;
    std::vector<std::vector<int>> adjacency_;
    double mean_chain_length_ = 0.0;
    int home_ = 0;
    uint64_t seed_ = 0;
    bool densified_ = false;
};

/// Extract stored node features by rendering the configuration in an empty
/// world.
Node make_node(const sim::World& world, const sim::JointConfig& jc);

/// One motor-babbling step: gaussian joint perturbation with
/// sigma_k = 0.1 * range(k), rejection-sampled through the validity check,
/// executed, rendered and linked to the predecessor with a chain edge.
int babble_step(sim::World& world, PpsGraph& graph, Rng& rng, int rejection_limit = 1000);

/// Seeds the home node at the world's home pose and babbles until the graph
/// holds n_nodes nodes connected in a chain.
PpsGraph build_graph(sim::World& world, int n_nodes, uint64_t seed);

/// Adds an edge for every non-adjacent pair closer than the mean chain edge
/// length (strict).
void densify(PpsGraph& graph);

using EdgeKey = int64_t;
inline EdgeKey edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<int64_t>(a) << 32) | static_cast<uint32_t>(b);
}

/// Dijkstra over joint-space edge lengths, honoring banned edges.
std::vector<int> shortest_path(const PpsGraph& graph, int src, int dst,
                               const std::unordered_set<EdgeKey>& banned_edges = {});

LocalJacobian local_jacobian(const PpsGraph& graph, int i);

}  // namespace ppslab::pps
