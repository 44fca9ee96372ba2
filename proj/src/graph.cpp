#include "ppslab/graph.hpp"

#include <fstream>
#include <queue>

namespace ppslab::pps {

double joint_distance(const sim::JointConfig& a, const sim::JointConfig& b) {
    double s = 0.0;
    for (int k = 0; k < 7; ++k) {
        const double d = a.q[k] - b.q[k];
        s += d * d;
    }
    return std::sqrt(s);
}

std::vector<int> PpsGraph::neighbors(int i) const {
    std::vector<int> out;
    out.reserve(adjacency_[i].size());
    for (int e : adjacency_[i]) out.push_back(edges_[e].a == i ? edges_[e].b : edges_[e].a);
    return out;
}

int PpsGraph::edge_between(int a, int b) const {
    for (int e : adjacency_[a]) {
        if (edges_[e].a == b || edges_[e].b == b) return e;
    }
    return -1;
}

int PpsGraph::add_node(Node n) {
    n.id = static_cast<int>(nodes_.size());
    nodes_.push_back(std::move(n));
    adjacency_.emplace_back();
    return nodes_.back().id;
}

int PpsGraph::add_edge(int a, int b, bool chain) {
    Edge e;
    e.a = a;
    e.b = b;
    e.chain = chain;
    e.length = joint_distance(nodes_[a].config, nodes_[b].config);
    e.motion = percept::direction(nodes_[a].palm_center, nodes_[b].palm_center);
    e.swept_range = percept::swept_depth_range(nodes_[a].hand_range, nodes_[b].hand_range);
    const int idx = static_cast<int>(edges_.size());
    edges_.push_back(e);
    adjacency_[a].push_back(idx);
    adjacency_[b].push_back(idx);
    return idx;
}

percept::Mask PpsGraph::edge_swept_mask(int e) const {
    return percept::swept_mask(nodes_[edges_[e].a].hand, nodes_[edges_[e].b].hand);
}

void PpsGraph::set_home(int i) {
    home_ = i;
    nodes_[i].home = true;
}

void PpsGraph::finalize_chain() {
    double total = 0.0;
    int n = 0;
    for (const auto& e : edges_) {
        if (e.chain) {
            total += e.length;
            ++n;
        }
    }
    mean_chain_length_ = n > 0 ? total / n : 0.0;
}

Node make_node(const sim::World& world, const sim::JointConfig& jc) {
    const percept::Percept p = world.render_config(jc, false);
    Node n;
    n.config = jc;
    auto [palm, hand] = percept::extract_hand_masks(p);
    n.palm = std::move(palm);
    n.hand = std::move(hand);
    n.palm_range = percept::depth_range(p, n.palm);
    n.hand_range = percept::depth_range(p, n.hand);
    n.palm_center = percept::center(p, n.palm);
    n.hand_center = percept::center(p, n.hand);
    n.gripper = percept::gripper_vector(n.hand_center, n.palm_center);
    return n;
}

int babble_step(sim::World& world, PpsGraph& graph, Rng& rng, int rejection_limit) {
    const int prev = graph.size() - 1;
    const sim::JointConfig& q_prev = graph.node(prev).config;
    const sim::ArmModel& arm = world.arm_model();

    for (int attempt = 0; attempt < rejection_limit; ++attempt) {
        sim::JointConfig q = q_prev;
        for (int k = 0; k < 7; ++k) {
            const double sigma = 0.1 * arm.range_span(k);
            q.q[k] = q_prev.q[k] + rng.normal(0.0, sigma);
        }
        if (!world.validity_check(q)) continue;
        if (joint_distance(q, q_prev) <= 0.0) continue;  // zero-length edge

        world.step_to(q, q.a);
        Node n = make_node(world, q);
        const int id = graph.add_node(std::move(n));
        graph.add_edge(prev, id, true);
        return id;
    }
    throw RejectionLimit();
}

PpsGraph build_graph(sim::World& world, int n_nodes, uint64_t seed) {
    PpsGraph g;
    g.set_seed(seed);
    Rng rng = Rng::substream(seed, 0x62616262 /* "babb" */);

    const sim::JointConfig home = world.arm_model().home();
    if (!world.validity_check(home)) throw GraphError("home pose fails validity check");
    world.teleport(home);
    Node seed_node = make_node(world, home);
    seed_node.home = true;
    g.add_node(std::move(seed_node));
    g.set_home(0);

    for (int i = 1; i < n_nodes; ++i) babble_step(world, g, rng);
    g.finalize_chain();
    return g;
}

void densify(PpsGraph& graph) {
    if (graph.mean_chain_length() <= 0.0) graph.finalize_chain();
    const double lbar = graph.mean_chain_length();
    const int n = graph.size();
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (graph.edge_between(i, j) >= 0) continue;
            if (joint_distance(graph.node(i).config, graph.node(j).config) < lbar) {
                graph.add_edge(i, j, false);
            }
        }
    }
    graph.mark_densified();
}

std::vector<int> shortest_path(const PpsGraph& graph, int src, int dst,
                               const std::unordered_set<EdgeKey>& banned) {
    const int n = graph.size();
    if (src < 0 || src >= n || dst < 0 || dst >= n) throw GraphError("invalid node id");
    if (src == dst) return {src};

    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    std::vector<int> prev(n, -1);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[src] = 0.0;
    heap.push({0.0, src});
    while (!heap.empty()) {
        auto [d, u] = heap.top();
        heap.pop();
        if (d > dist[u]) continue;
        if (u == dst) break;
        for (int e : graph.adjacent_edges(u)) {
            const Edge& edge = graph.edge(e);
            if (banned.count(edge_key(edge.a, edge.b))) continue;
            const int v = edge.a == u ? edge.b : edge.a;
            const double nd = d + edge.length;
            if (nd < dist[v]) {
                dist[v] = nd;
                prev[v] = u;
                heap.push({nd, v});
            }
        }
    }
    if (!std::isfinite(dist[dst])) throw NoPath();
    std::vector<int> path;
    for (int u = dst; u != -1; u = prev[u]) path.push_back(u);
    std::reverse(path.begin(), path.end());
    return path;
}

LocalJacobian local_jacobian(const PpsGraph& graph, int i) {
    const std::vector<int> nbrs_raw = graph.neighbors(i);
    std::vector<int> nbrs(nbrs_raw);
    std::sort(nbrs.begin(), nbrs.end());
    if (nbrs.empty()) throw NoNeighbors();

    const int m = static_cast<int>(nbrs.size());
    Eigen::MatrixXd dq(m, 7), dc(m, 3);
    const Node& ni = graph.node(i);
    for (int r = 0; r < m; ++r) {
        const Node& nj = graph.node(nbrs[r]);
        for (int k = 0; k < 7; ++k) dq(r, k) = nj.config.q[k] - ni.config.q[k];
        dc(r, 0) = nj.palm_center.u - ni.palm_center.u;
        dc(r, 1) = nj.palm_center.v - ni.palm_center.v;
        dc(r, 2) = nj.palm_center.d - ni.palm_center.d;
    }

    LocalJacobian lj;
    lj.node = i;
    lj.neighbor_count = m;
    // Minimum-norm least squares for dq * J = dc.
    lj.j = dq.completeOrthogonalDecomposition().solve(dc);
    const auto cod = lj.j.completeOrthogonalDecomposition();
    lj.jinv = cod.pseudoInverse();
    lj.rank = static_cast<int>(cod.rank());
    return lj;
}

// ---------------------------------------------------------------------------
// Archive format (version 1, little-endian):
//   magic "PPSG", u32 version, u64 seed, i32 home, u8 densified,
//   f64 mean_chain_length, i32 rows, i32 cols, i32 n_nodes, i32 n_edges,
//   nodes (q[7], a, packed palm bits, packed hand bits, ranges, centers, g),
//   edges (a, b, chain, length, motion, swept range).

namespace {

void put_bytes(std::ostream& out, const void* p, size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}
template <typename T>
void put(std::ostream& out, T v) {
    put_bytes(out, &v, sizeof(T));
}
void get_bytes(std::istream& in, void* p, size_t n) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
}
template <typename T>
T get(std::istream& in) {
    T v;
    get_bytes(in, &v, sizeof(T));
    return v;
}

void put_mask(std::ostream& out, const percept::Mask& m) {
    const int n = m.rows * m.cols;
    std::vector<uint8_t> packed((n + 7) / 8, 0);
    for (int i = 0; i < n; ++i)
        if (m.bits[i]) packed[i / 8] |= 1 << (i % 8);
    put_bytes(out, packed.data(), packed.size());
}

percept::Mask get_mask(std::istream& in, int rows, int cols) {
    percept::Mask m(rows, cols);
    const int n = rows * cols;
    std::vector<uint8_t> packed((n + 7) / 8);
    get_bytes(in, packed.data(), packed.size());
    for (int i = 0; i < n; ++i) m.bits[i] = (packed[i / 8] >> (i % 8)) & 1;
    return m;
}

void put_center(std::ostream& out, const percept::Center3& c) {
    put(out, c.u);
    put(out, c.v);
    put(out, c.d);
}
percept::Center3 get_center(std::istream& in) {
    percept::Center3 c;
    c.u = get<double>(in);
    c.v = get<double>(in);
    c.d = get<double>(in);
    return c;
}
void put_dir(std::ostream& out, const percept::Vec3Dir& v) {
    put(out, v.du);
    put(out, v.dv);
    put(out, v.dd);
}
percept::Vec3Dir get_dir(std::istream& in) {
    percept::Vec3Dir v;
    v.du = get<double>(in);
    v.dv = get<double>(in);
    v.dd = get<double>(in);
    return v;
}
void put_range(std::ostream& out, const percept::DepthRange& r) {
    put(out, static_cast<int32_t>(r.lo));
    put(out, static_cast<int32_t>(r.hi));
}
percept::DepthRange get_range(std::istream& in) {
    percept::DepthRange r;
    r.lo = get<int32_t>(in);
    r.hi = get<int32_t>(in);
    return r;
}

}  // namespace

void PpsGraph::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw GraphError("cannot write graph archive: " + path);
    out.write("PPSG", 4);
    put<uint32_t>(out, 1);
    put<uint64_t>(out, seed_);
    put<int32_t>(out, home_);
    put<uint8_t>(out, densified_ ? 1 : 0);
    put(out, mean_chain_length_);
    const int rows = nodes_.empty() ? 0 : nodes_[0].palm.rows;
    const int cols = nodes_.empty() ? 0 : nodes_[0].palm.cols;
    put<int32_t>(out, rows);
    put<int32_t>(out, cols);
    put<int32_t>(out, static_cast<int32_t>(nodes_.size()));
    put<int32_t>(out, static_cast<int32_t>(edges_.size()));
    for (const Node& n : nodes_) {
        put_bytes(out, n.config.q.data(), sizeof(double) * 7);
        put(out, n.config.a);
        put_mask(out, n.palm);
        put_mask(out, n.hand);
        put_range(out, n.palm_range);
        put_range(out, n.hand_range);
        put_center(out, n.palm_center);
        put_center(out, n.hand_center);
        put_dir(out, n.gripper);
    }
    for (const Edge& e : edges_) {
        put<int32_t>(out, e.a);
        put<int32_t>(out, e.b);
        put<uint8_t>(out, e.chain ? 1 : 0);
        put(out, e.length);
        put_dir(out, e.motion);
        put_range(out, e.swept_range);
    }
}

PpsGraph PpsGraph::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw GraphError("cannot open graph archive: " + path);
    char magic[4];
    get_bytes(in, magic, 4);
    if (std::string(magic, 4) != "PPSG") throw GraphError("bad graph archive magic");
    const uint32_t version = get<uint32_t>(in);
    if (version != 1) throw GraphError("unsupported graph archive version");
    PpsGraph g;
    g.seed_ = get<uint64_t>(in);
    const int home = get<int32_t>(in);
    g.densified_ = get<uint8_t>(in) != 0;
    g.mean_chain_length_ = get<double>(in);
    const int rows = get<int32_t>(in);
    const int cols = get<int32_t>(in);
    const int n_nodes = get<int32_t>(in);
    const int n_edges = get<int32_t>(in);
    for (int i = 0; i < n_nodes; ++i) {
        Node n;
        n.id = i;
        get_bytes(in, n.config.q.data(), sizeof(double) * 7);
        n.config.a = get<double>(in);
        n.palm = get_mask(in, rows, cols);
        n.hand = get_mask(in, rows, cols);
        n.palm_range = get_range(in);
        n.hand_range = get_range(in);
        n.palm_center = get_center(in);
        n.hand_center = get_center(in);
        n.gripper = get_dir(in);
        g.nodes_.push_back(std::move(n));
        g.adjacency_.emplace_back();
    }
    for (int e = 0; e < n_edges; ++e) {
        Edge edge;
        edge.a = get<int32_t>(in);
        edge.b = get<int32_t>(in);
        edge.chain = get<uint8_t>(in) != 0;
        edge.length = get<double>(in);
        edge.motion = get_dir(in);
        edge.swept_range = get_range(in);
        const int idx = static_cast<int>(g.edges_.size());
        g.edges_.push_back(edge);
        g.adjacency_[edge.a].push_back(idx);
        g.adjacency_[edge.b].push_back(idx);
    }
    if (!in) throw GraphError("truncated graph archive");
    g.set_home(home);
    return g;
}

}  // namespace ppslab::pps
