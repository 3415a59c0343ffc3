#ifndef SARSIM_BVH_HPP
#define SARSIM_BVH_HPP

#include <algorithm>
#include <numeric>
#include <vector>

#include "mesh.hpp"

namespace sarsim {

struct Ray {
    Vec3 origin;
    Vec3 dir; // unit
};

struct Hit {
    double t = std::numeric_limits<double>::infinity();
    int facet = -1;
    Vec3 point;

    bool ok() const { return facet >= 0; }
    // ties on t resolve to the lower facet id so index and brute force agree
    bool closer_than(const Hit& o) const { return t < o.t || (t == o.t && facet < o.facet); }
};

// Moller-Trumbore; hits with t <= tmin are rejected
inline bool intersect_facet(const Facet& f, const Ray& r, double tmin, double& t_out) {
    const double eps = 1e-14;
    Vec3 e1 = f.v1 - f.v0, e2 = f.v2 - f.v0;
    Vec3 p = cross(r.dir, e2);
    double det = dot(e1, p);
    if (std::abs(det) < eps) return false;
    double inv = 1.0 / det;
    Vec3 tv = r.origin - f.v0;
    double u = dot(tv, p) * inv;
    if (u < 0.0 || u > 1.0) return false;
    Vec3 q = cross(tv, e1);
    double v = dot(r.dir, q) * inv;
    if (v < 0.0 || u + v > 1.0) return false;
    double t = dot(e2, q) * inv;
    if (t <= tmin) return false;
    t_out = t;
    return true;
}

inline Hit brute_force_nearest(const TargetMesh& mesh, const Ray& r, double tmin, int skip_facet = -1) {
    Hit best;
    for (int i = 0; i < int(mesh.facets.size()); ++i) {
        if (i == skip_facet) continue;
        double t;
        if (intersect_facet(mesh.facets[i], r, tmin, t)) {
            Hit h{t, i, {}};
            if (h.closer_than(best)) best = h;
        }
    }
    if (best.ok()) best.point = r.origin + best.t * r.dir;
    return best;
}

// Binned-median BVH over facets. Queries return exactly the brute-force
// nearest hit (same intersection predicate, same tie rule).
class AccelIndex {
public:
    AccelIndex() = default;

    explicit AccelIndex(const TargetMesh& mesh) : mesh_(&mesh) {
        if (mesh.facets.empty()) throw Error("build_index: empty mesh");
        prims_.resize(mesh.facets.size());
        std::iota(prims_.begin(), prims_.end(), 0);
        centroids_.reserve(mesh.facets.size());
        for (const auto& f : mesh.facets) centroids_.push_back((f.v0 + f.v1 + f.v2) / 3.0);
        nodes_.reserve(2 * mesh.facets.size());
        build_node(0, int(prims_.size()));
    }

    const TargetMesh& mesh() const { return *mesh_; }

    Hit nearest(const Ray& r, double tmin, int skip_facet = -1) const {
        Hit best;
        if (nodes_.empty()) return best;
        Vec3 inv_dir{1.0 / r.dir.x, 1.0 / r.dir.y, 1.0 / r.dir.z};
        int stack[64];
        int sp = 0;
        stack[sp++] = 0;
        while (sp > 0) {
            const Node& n = nodes_[stack[--sp]];
            if (!box_hit(n, r, inv_dir, best.t)) continue;
            if (n.count > 0) {
                for (int i = n.first; i < n.first + n.count; ++i) {
                    int fi = prims_[i];
                    if (fi == skip_facet) continue;
                    double t;
                    if (intersect_facet(mesh_->facets[fi], r, tmin, t)) {
                        Hit h{t, fi, {}};
                        if (h.closer_than(best)) best = h;
                    }
                }
            } else {
                stack[sp++] = n.right;
                stack[sp++] = n.first; // left
            }
        }
        if (best.ok()) best.point = r.origin + best.t * r.dir;
        return best;
    }

    bool any_hit(const Ray& r, double tmin, double tmax) const {
        Vec3 inv_dir{1.0 / r.dir.x, 1.0 / r.dir.y, 1.0 / r.dir.z};
        int stack[64];
        int sp = 0;
        stack[sp++] = 0;
        while (sp > 0) {
            const Node& n = nodes_[stack[--sp]];
            if (!box_hit(n, r, inv_dir, tmax)) continue;
            if (n.count > 0) {
                for (int i = n.first; i < n.first + n.count; ++i) {
                    double t;
                    if (intersect_facet(mesh_->facets[prims_[i]], r, tmin, t) && t < tmax) return true;
                }
            } else {
                stack[sp++] = n.right;
                stack[sp++] = n.first;
            }
        }
        return false;
    }

private:
    struct Node {
        Vec3 bmin, bmax;
        int first = 0; // leaf: first prim; inner: left child
        int right = 0; // inner: right child
        int count = 0; // leaf: prim count; inner: 0
    };

    static constexpr int kLeafSize = 4;

    const TargetMesh* mesh_ = nullptr;
    std::vector<Node> nodes_;
    std::vector<int> prims_;
    std::vector<Vec3> centroids_;

    static bool box_hit(const Node& n, const Ray& r, const Vec3& inv, double tmax) {
        double t0 = (n.bmin.x - r.origin.x) * inv.x, t1 = (n.bmax.x - r.origin.x) * inv.x;
        if (inv.x < 0) std::swap(t0, t1);
        double t2 = (n.bmin.y - r.origin.y) * inv.y, t3 = (n.bmax.y - r.origin.y) * inv.y;
        if (inv.y < 0) std::swap(t2, t3);
        double t4 = (n.bmin.z - r.origin.z) * inv.z, t5 = (n.bmax.z - r.origin.z) * inv.z;
        if (inv.z < 0) std::swap(t4, t5);
        double tn = std::max({t0, t2, t4});
        double tf = std::min({t1, t3, t5});
        // <= keeps equal-t candidates visible so the id tie rule can apply
        return tf >= tn && tn <= tmax && tf >= 0.0;
    }

    int build_node(int first, int count) {
        Node node;
        node.bmin = Vec3{1e300, 1e300, 1e300};
        node.bmax = Vec3{-1e300, -1e300, -1e300};
        Vec3 cmin = node.bmin, cmax = node.bmax;
        for (int i = first; i < first + count; ++i) {
            const Facet& f = mesh_->facets[prims_[i]];
            node.bmin = min3(node.bmin, min3(f.v0, min3(f.v1, f.v2)));
            node.bmax = max3(node.bmax, max3(f.v0, max3(f.v1, f.v2)));
            cmin = min3(cmin, centroids_[prims_[i]]);
            cmax = max3(cmax, centroids_[prims_[i]]);
        }
        int self = int(nodes_.size());
        nodes_.push_back(node);
        Vec3 ext = cmax - cmin;
        if (count <= kLeafSize || (ext.x <= 0 && ext.y <= 0 && ext.z <= 0)) {
            nodes_[self].first = first;
            nodes_[self].count = count;
            return self;
        }
        int axis = 0;
        if (ext.y > ext.x) axis = 1;
        if (ext.z > (axis == 0 ? ext.x : ext.y)) axis = 2;
        auto key = [&](int p) { return axis == 0 ? centroids_[p].x : axis == 1 ? centroids_[p].y : centroids_[p].z; };
        int mid = first + count / 2;
        std::nth_element(prims_.begin() + first, prims_.begin() + mid, prims_.begin() + first + count,
                         [&](int a, int b) { return key(a) < key(b) || (key(a) == key(b) && a < b); });
        int left = build_node(first, mid - first);
        int right = build_node(mid, first + count - mid);
        nodes_[self].first = left;
        nodes_[self].right = right;
        nodes_[self].count = 0;
        return self;
    }
};

inline AccelIndex build_index(const TargetMesh& mesh) { return AccelIndex(mesh); }

} // namespace sarsim

#endif
