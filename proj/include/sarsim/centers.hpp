#ifndef SARSIM_CENTERS_HPP
#define SARSIM_CENTERS_HPP

#include <algorithm>
#include <map>
#include <vector>

#include "bvh.hpp"
#include "geometry.hpp"
#include "rng.hpp"

namespace sarsim {

// Scattering-centers paradigm: canonical effects found by facet projection and
// evaluated with the closed-form physical-optics RCS expressions
//   plate     4 pi A^2 / lambda^2
//   dihedral  8 pi a^2 b^2 / lambda^2   (bisector, equal effective depths)
//   trihedral 12 pi a^4 / lambda^2      (square-faced corner at boresight)
// plus a non-coherent backscatter fill over the whole visible surface.

struct DetectionConfig {
    double specular_tol_deg = 1.0;  // plate normal / dihedral fold alignment gate
    double ortho_tol_deg = 3.0;     // facet orthogonality gate
    int buffer_resolution = 1024;   // depth-buffer pixels per bbox diagonal
    double min_effective_area = 1e-4; // m^2
    enum class Visibility { DepthBuffer, ExactClipping } visibility = Visibility::DepthBuffer;

    // implementation knobs, defaults documented in README
    double coplanar_tol_deg = 0.1; // panel clustering
    double gap_tol = 0.01;         // m, how far a face may sit from a fold/apex
    double cone_exponent = 4.0;    // trihedral directivity
    double sigma0_cos_exponent = 1.0; // sigma0 * cos^q(incidence) * visible surface area

    void validate() const {
        if (!(specular_tol_deg > 0) || !(ortho_tol_deg > 0)) throw Error("detection: tolerances must be > 0");
        if (buffer_resolution < 64) throw Error("detection: buffer resolution must be >= 64");
        if (min_effective_area < 0) throw Error("detection: negative minimum area");
    }
};

struct Scatterer {
    enum class Kind : std::uint8_t { Diffuse = 0, Plate = 1, Dihedral = 2, Trihedral = 3 };
    enum class Pattern : std::uint8_t { Isotropic = 0, SincSinc = 1, SincAperture = 2, CosPower = 3 };

    Kind kind = Kind::Diffuse;
    Vec3 position;          // m, target frame
    cplx amplitude;         // sqrt(m^2), |amplitude|^2 = analytic RCS at detection
    double extent_a = 0.0;  // m
    double extent_b = 0.0;  // m
    Pattern pattern = Pattern::Isotropic;
    Vec3 axis1, axis2;      // pattern axes (unit)
    bool coherent = false;
};

inline const char* kind_name(Scatterer::Kind k) {
    switch (k) {
        case Scatterer::Kind::Plate: return "plate";
        case Scatterer::Kind::Dihedral: return "dihedral";
        case Scatterer::Kind::Trihedral: return "trihedral";
        default: return "diffuse";
    }
}

struct M3dModel {
    std::vector<Scatterer> scatterers;
    AcquisitionGeometry geometry; // the acquisition this model is valid for
    DetectionConfig config;
    std::uint64_t seed = 0;

    std::size_t count(Scatterer::Kind k) const {
        std::size_t n = 0;
        for (const auto& s : scatterers)
            if (s.kind == k) ++n;
        return n;
    }
};

struct FacetVisibility {
    double area = 0.0; // visible projected area on the plane perpendicular to LOS, m^2
    Vec3 centroid;     // 3D centroid of the visible region (projected-area weighted)
};

namespace detail {

struct P2 {
    double x, y;
};

inline double poly_area(const std::vector<P2>& p) {
    double a = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const P2& u = p[i];
        const P2& v = p[(i + 1) % p.size()];
        a += u.x * v.y - v.x * u.y;
    }
    return 0.5 * std::abs(a);
}

// clip convex polygon `poly` against convex polygon `window` (Sutherland-Hodgman)
inline std::vector<P2> clip_convex(std::vector<P2> poly, const std::vector<P2>& window) {
    double wsign = 0;
    for (std::size_t i = 0; i < window.size() && wsign == 0; ++i) {
        const P2& a = window[i];
        const P2& b = window[(i + 1) % window.size()];
        const P2& c = window[(i + 2) % window.size()];
        wsign = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    }
    if (wsign == 0) return {};
    for (std::size_t i = 0; i < window.size() && !poly.empty(); ++i) {
        const P2& a = window[i];
        const P2& b = window[(i + 1) % window.size()];
        auto side = [&](const P2& p) { return ((b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)) * wsign; };
        std::vector<P2> out;
        for (std::size_t j = 0; j < poly.size(); ++j) {
            const P2& p = poly[j];
            const P2& q = poly[(j + 1) % poly.size()];
            double sp = side(p), sq = side(q);
            if (sp >= 0) out.push_back(p);
            if ((sp > 0 && sq < 0) || (sp < 0 && sq > 0)) {
                double t = sp / (sp - sq);
                out.push_back({p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)});
            }
        }
        poly.swap(out);
    }
    return poly;
}

} // namespace detail

// Visible projected area per facet, occlusion included. The depth-buffer mode
// rasterizes the whole mesh once; the exact-clipping mode subtracts pairwise
// projected overlaps with nearer facets, which is exact for a single occluding
// layer (overlapping occluders are over-subtracted; result clamps at 0).
inline std::vector<FacetVisibility> visible_set(const TargetMesh& mesh, const AcquisitionGeometry& geom,
                                                const DetectionConfig& cfg) {
    cfg.validate();
    if (mesh.empty()) throw Error("visible_set: empty mesh");
    LosFrame fr = los_frame(geom);
    const Vec3 u = fr.u, e1 = fr.c, e2 = fr.v();
    const std::size_t nf = mesh.facets.size();
    std::vector<FacetVisibility> out(nf);

    auto proj = [&](const Vec3& p) { return detail::P2{dot(e1, p), dot(e2, p)}; };

    if (cfg.visibility == DetectionConfig::Visibility::ExactClipping) {
        std::vector<std::array<detail::P2, 3>> polys(nf);
        std::vector<double> dmax(nf), dmin(nf);
        for (std::size_t i = 0; i < nf; ++i) {
            const Facet& f = mesh.facets[i];
            polys[i] = {proj(f.v0), proj(f.v1), proj(f.v2)};
            dmin[i] = std::min({dot(u, f.v0), dot(u, f.v1), dot(u, f.v2)});
            dmax[i] = std::max({dot(u, f.v0), dot(u, f.v1), dot(u, f.v2)});
        }
        for (std::size_t i = 0; i < nf; ++i) {
            const Facet& f = mesh.facets[i];
            double cos_i = dot(f.normal, u);
            if (cos_i <= 0) continue; // back-facing: occludes, never visible
            std::vector<detail::P2> self(polys[i].begin(), polys[i].end());
            double full = detail::poly_area(self);
            if (full <= 0) continue;
            double occluded = 0;
            for (std::size_t j = 0; j < nf && occluded < full; ++j) {
                if (j == i || dmax[j] <= dmin[i]) continue; // j entirely behind i
                auto inter = detail::clip_convex(self, {polys[j].begin(), polys[j].end()});
                if (inter.size() < 3) continue;
                double a = detail::poly_area(inter);
                if (a < 1e-12) continue;
                // compare depths at the overlap centroid via the two planes
                detail::P2 c{0, 0};
                for (auto& p : inter) {
                    c.x += p.x;
                    c.y += p.y;
                }
                c.x /= double(inter.size());
                c.y /= double(inter.size());
                auto depth_on = [&](const Facet& g) {
                    double du = dot(g.normal, u);
                    if (std::abs(du) < 1e-12) return -1e300;
                    return (dot(g.normal, g.v0) - c.x * dot(g.normal, e1) - c.y * dot(g.normal, e2)) / du;
                };
                if (depth_on(mesh.facets[j]) > depth_on(f) + 1e-12) occluded += a;
            }
            out[i].area = std::max(0.0, full - occluded);
            out[i].centroid = (f.v0 + f.v1 + f.v2) / 3.0;
        }
        return out;
    }

    // depth buffer
    double cmin = 1e300, cmax = -1e300, vmin = 1e300, vmax = -1e300;
    for (const auto& f : mesh.facets)
        for (const Vec3* p : {&f.v0, &f.v1, &f.v2}) {
            auto q = proj(*p);
            cmin = std::min(cmin, q.x);
            cmax = std::max(cmax, q.x);
            vmin = std::min(vmin, q.y);
            vmax = std::max(vmax, q.y);
        }
    double px = mesh.bbox_diagonal() / double(cfg.buffer_resolution);
    if (!(px > 0)) throw Error("visible_set: degenerate mesh extent");
    std::size_t bw = std::size_t((cmax - cmin) / px) + 3;
    std::size_t bh = std::size_t((vmax - vmin) / px) + 3;
    std::vector<double> depth(bw * bh, -1e300);
    std::vector<int> owner(bw * bh, -1);

    for (std::size_t i = 0; i < nf; ++i) {
        const Facet& f = mesh.facets[i];
        double nu = dot(f.normal, u);
        if (std::abs(nu) < 1e-9) continue; // edge-on
        detail::P2 a = proj(f.v0), b = proj(f.v1), c = proj(f.v2);
        double na = dot(f.normal, f.v0), ne1 = dot(f.normal, e1), ne2 = dot(f.normal, e2);
        double area2 = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
        if (std::abs(area2) < 1e-18) continue;
        double lo_x = std::min({a.x, b.x, c.x}), hi_x = std::max({a.x, b.x, c.x});
        double lo_y = std::min({a.y, b.y, c.y}), hi_y = std::max({a.y, b.y, c.y});
        std::size_t i0 = std::size_t(std::max(0.0, std::floor((lo_x - cmin) / px)));
        std::size_t i1 = std::min(bw - 1, std::size_t(std::ceil((hi_x - cmin) / px)));
        std::size_t j0 = std::size_t(std::max(0.0, std::floor((lo_y - vmin) / px)));
        std::size_t j1 = std::min(bh - 1, std::size_t(std::ceil((hi_y - vmin) / px)));
        for (std::size_t jj = j0; jj <= j1; ++jj) {
            double y = vmin + (double(jj) + 0.5) * px;
            for (std::size_t ii = i0; ii <= i1; ++ii) {
                double x = cmin + (double(ii) + 0.5) * px;
                double w0 = (b.x - a.x) * (y - a.y) - (b.y - a.y) * (x - a.x);
                double w1 = (c.x - b.x) * (y - b.y) - (c.y - b.y) * (x - b.x);
                double w2 = (a.x - c.x) * (y - c.y) - (a.y - c.y) * (x - c.x);
                bool inside = area2 > 0 ? (w0 >= 0 && w1 >= 0 && w2 >= 0) : (w0 <= 0 && w1 <= 0 && w2 <= 0);
                if (!inside) continue;
                double d = (na - x * ne1 - y * ne2) / nu; // u-coordinate on the facet plane
                std::size_t cell = jj * bw + ii;
                if (d > depth[cell] + 1e-12 || (std::abs(d - depth[cell]) <= 1e-12 && int(i) < owner[cell])) {
                    depth[cell] = d;
                    owner[cell] = int(i);
                }
            }
        }
    }
    std::vector<Vec3> cent(nf);
    std::vector<std::size_t> hits(nf, 0);
    for (std::size_t jj = 0; jj < bh; ++jj)
        for (std::size_t ii = 0; ii < bw; ++ii) {
            int o = owner[jj * bw + ii];
            if (o < 0 || dot(mesh.facets[o].normal, u) <= 0) continue;
            ++hits[o];
            double x = cmin + (double(ii) + 0.5) * px;
            double y = vmin + (double(jj) + 0.5) * px;
            cent[o] += e1 * x + e2 * y + u * depth[jj * bw + ii];
        }
    for (std::size_t i = 0; i < nf; ++i) {
        if (!hits[i]) continue;
        out[i].area = double(hits[i]) * px * px;
        out[i].centroid = cent[i] / double(hits[i]);
    }
    return out;
}

// coplanar-adjacent same-material facet cluster with its visibility aggregate
struct SurfacePanel {
    std::vector<int> facets;
    Vec3 normal;        // area-weighted
    double plane_d = 0; // n . x on the panel plane
    int material = 0;
    double visible_area = 0;  // projected, m^2
    double surface_area = 0;  // visible surface area (projected / cos)
    Vec3 visible_centroid;
    Vec3 center;        // bounding center of the panel vertices
    double radius = 0;  // bounding radius
};

namespace detail {

inline std::uint64_t vertex_key(const Vec3& v, double q) {
    auto qz = [&](double x) { return std::uint64_t(std::int64_t(std::llround(x / q))); };
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::uint64_t part : {qz(v.x), qz(v.y), qz(v.z)}) {
        h ^= part;
        h *= 0x100000001b3ULL;
    }
    return h;
}

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) {
        for (int i = 0; i < n; ++i) parent[i] = i;
    }
    int find(int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

} // namespace detail

// clusters facets with any visibility into panels; panel order follows the
// smallest facet id so results are independent of iteration details
inline std::vector<SurfacePanel> build_panels(const TargetMesh& mesh, const AcquisitionGeometry& geom,
                                              const DetectionConfig& cfg, const std::vector<FacetVisibility>& vis) {
    const LosFrame fr = los_frame(geom);
    const double cos_tol = std::cos(deg2rad(cfg.coplanar_tol_deg));
    const double quant = 1e-6; // m, vertex weld tolerance for adjacency
    const int nf = int(mesh.facets.size());

    std::map<std::uint64_t, std::vector<int>> edge_map;
    for (int i = 0; i < nf; ++i) {
        if (vis[i].area <= 0) continue;
        const Facet& f = mesh.facets[i];
        const Vec3* v[3] = {&f.v0, &f.v1, &f.v2};
        for (int e = 0; e < 3; ++e) {
            std::uint64_t ka = detail::vertex_key(*v[e], quant);
            std::uint64_t kb = detail::vertex_key(*v[(e + 1) % 3], quant);
            if (ka > kb) std::swap(ka, kb);
            edge_map[hash_mix(ka, kb)].push_back(i);
        }
    }
    detail::UnionFind uf(nf);
    for (const auto& [key, ids] : edge_map)
        for (std::size_t a = 0; a < ids.size(); ++a)
            for (std::size_t b = a + 1; b < ids.size(); ++b) {
                const Facet& fa = mesh.facets[ids[a]];
                const Facet& fb = mesh.facets[ids[b]];
                if (fa.material != fb.material) continue;
                if (dot(fa.normal, fb.normal) < cos_tol) continue;
                uf.unite(ids[a], ids[b]);
            }

    std::map<int, SurfacePanel> by_root;
    for (int i = 0; i < nf; ++i) {
        if (vis[i].area <= 0) continue;
        const Facet& f = mesh.facets[i];
        SurfacePanel& p = by_root[uf.find(i)];
        p.facets.push_back(i);
        p.material = f.material;
        p.normal += f.normal * f.area;
        double cos_i = dot(f.normal, fr.u);
        p.visible_area += vis[i].area;
        if (cos_i > 1e-9) p.surface_area += vis[i].area / cos_i;
        p.visible_centroid += vis[i].centroid * vis[i].area;
    }
    std::vector<SurfacePanel> panels;
    panels.reserve(by_root.size());
    for (auto& [root, p] : by_root) {
        p.normal = normalize(p.normal);
        p.visible_centroid = p.visible_centroid / p.visible_area;
        Vec3 lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
        double dsum = 0;
        std::size_t nvert = 0;
        for (int fi : p.facets) {
            const Facet& f = mesh.facets[fi];
            for (const Vec3* v : {&f.v0, &f.v1, &f.v2}) {
                lo = min3(lo, *v);
                hi = max3(hi, *v);
                dsum += dot(p.normal, *v);
                ++nvert;
            }
        }
        p.plane_d = dsum / double(nvert);
        p.center = (lo + hi) * 0.5;
        p.radius = 0.5 * norm(hi - lo);
        panels.push_back(std::move(p));
    }
    return panels;
}

namespace detail {

// in-plane second moments of a panel -> oriented extents and axes, assuming a
// roughly rectangular footprint (uniform rectangle: var = L^2/12)
inline void panel_extents(const TargetMesh& mesh, const SurfacePanel& p, Vec3& axis_a, Vec3& axis_b, double& ext_a,
                          double& ext_b) {
    Vec3 t1 = any_perpendicular(p.normal);
    Vec3 t2 = cross(p.normal, t1);
    double a_sum = 0, mx = 0, my = 0;
    for (int fi : p.facets) {
        const Facet& f = mesh.facets[fi];
        Vec3 g = (f.v0 + f.v1 + f.v2) / 3.0;
        a_sum += f.area;
        mx += f.area * dot(t1, g);
        my += f.area * dot(t2, g);
    }
    mx /= a_sum;
    my /= a_sum;
    double cxx = 0, cxy = 0, cyy = 0;
    for (int fi : p.facets) {
        const Facet& f = mesh.facets[fi];
        double e2x = dot(t1, f.v1 - f.v0), e2y = dot(t2, f.v1 - f.v0);
        double e3x = dot(t1, f.v2 - f.v0), e3y = dot(t2, f.v2 - f.v0);
        Vec3 g = (f.v0 + f.v1 + f.v2) / 3.0;
        double gx = dot(t1, g) - mx, gy = dot(t2, g) - my;
        // exact triangle covariance about the panel mean
        cxx += f.area * ((e2x * e2x + e3x * e3x) / 18.0 - e2x * e3x / 36.0 * 2.0 + gx * gx);
        cyy += f.area * ((e2y * e2y + e3y * e3y) / 18.0 - e2y * e3y / 36.0 * 2.0 + gy * gy);
        cxy += f.area * ((e2x * e2y + e3x * e3y) / 18.0 - (e2x * e3y + e3x * e2y) / 36.0 + gx * gy);
    }
    cxx /= a_sum;
    cyy /= a_sum;
    cxy /= a_sum;
    double tr = cxx + cyy, det = cxx * cyy - cxy * cxy;
    double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    double l1 = tr / 2.0 + disc, l2 = std::max(0.0, tr / 2.0 - disc);
    double vx, vy;
    if (std::abs(cxy) > 1e-18) {
        vx = l1 - cyy;
        vy = cxy;
    } else if (cxx >= cyy) {
        vx = 1;
        vy = 0;
    } else {
        vx = 0;
        vy = 1;
    }
    double vn = std::sqrt(vx * vx + vy * vy);
    vx /= vn;
    vy /= vn;
    axis_a = normalize(t1 * vx + t2 * vy);
    axis_b = normalize(cross(p.normal, axis_a));
    ext_a = std::sqrt(12.0 * l1);
    ext_b = std::sqrt(12.0 * l2);
}

inline cplx range_phase(const LosFrame& fr, double k, const Vec3& pos) {
    return std::polar(1.0, -2.0 * k * slant_range(fr, pos));
}

} // namespace detail

inline std::vector<Scatterer> detect_plates(const TargetMesh& mesh, const AcquisitionGeometry& geom,
                                            const DetectionConfig& cfg, const std::vector<SurfacePanel>& panels) {
    LosFrame fr = los_frame(geom);
    double k = geom.wavenumber(), lambda = geom.wavelength();
    double cos_spec = std::cos(deg2rad(cfg.specular_tol_deg));
    std::vector<Scatterer> out;
    for (const auto& p : panels) {
        if (p.visible_area < cfg.min_effective_area) continue;
        if (dot(p.normal, fr.u) < cos_spec) continue;
        Scatterer s;
        s.kind = Scatterer::Kind::Plate;
        s.coherent = true;
        s.pattern = Scatterer::Pattern::SincSinc;
        s.position = p.visible_centroid;
        double rcs = 4.0 * kPi * p.visible_area * p.visible_area / (lambda * lambda);
        s.amplitude = std::sqrt(rcs) * detail::range_phase(fr, k, s.position);
        detail::panel_extents(mesh, p, s.axis1, s.axis2, s.extent_a, s.extent_b);
        out.push_back(s);
    }
    return out;
}

inline std::vector<Scatterer> detect_dihedrals(const TargetMesh& mesh, const AcquisitionGeometry& geom,
                                               const DetectionConfig& cfg, const std::vector<SurfacePanel>& panels) {
    LosFrame fr = los_frame(geom);
    double k = geom.wavenumber(), lambda = geom.wavelength();
    double sin_spec = std::sin(deg2rad(cfg.specular_tol_deg));
    double sin_orth = std::sin(deg2rad(cfg.ortho_tol_deg));
    std::vector<Scatterer> out;
    for (std::size_t a = 0; a < panels.size(); ++a) {
        const SurfacePanel& P = panels[a];
        if (P.visible_area < cfg.min_effective_area) continue;
        double sP = dot(P.normal, fr.u);
        if (sP <= 0) continue;
        for (std::size_t b = a + 1; b < panels.size(); ++b) {
            const SurfacePanel& Q = panels[b];
            if (Q.visible_area < cfg.min_effective_area) continue;
            double sQ = dot(Q.normal, fr.u);
            if (sQ <= 0) continue;
            if (norm(P.center - Q.center) > P.radius + Q.radius + cfg.gap_tol) continue;
            if (std::abs(dot(P.normal, Q.normal)) > sin_orth) continue;
            Vec3 fold = normalize(cross(P.normal, Q.normal));
            if (std::abs(dot(fold, fr.u)) > sin_spec) continue; // fold must be near-perpendicular to LOS

            // fold line: point q satisfying both plane equations
            Vec3 mid = (P.center + Q.center) * 0.5;
            // solve q = mid + x*nP + y*nQ with nP.q = dP, nQ.q = dQ
            double npq = dot(P.normal, Q.normal);
            double rhs1 = P.plane_d - dot(P.normal, mid);
            double rhs2 = Q.plane_d - dot(Q.normal, mid);
            double det = 1.0 - npq * npq;
            if (det < 1e-9) continue;
            Vec3 q = mid + P.normal * ((rhs1 - npq * rhs2) / det) + Q.normal * ((rhs2 - npq * rhs1) / det);

            // extent along the fold and depths away from it
            auto span = [&](const SurfacePanel& panel, double& s_lo, double& s_hi, double& depth, double& gap) {
                Vec3 m = normalize(cross(fold, panel.normal)); // in-plane, perpendicular to fold
                double lo = 1e300, hi = -1e300, dmax = -1e300, dmin = 1e300;
                for (int fi : panel.facets) {
                    const Facet& f = mesh.facets[fi];
                    for (const Vec3* v : {&f.v0, &f.v1, &f.v2}) {
                        double s = dot(fold, *v - q);
                        double d = dot(m, *v - q);
                        lo = std::min(lo, s);
                        hi = std::max(hi, s);
                        dmax = std::max(dmax, std::abs(d));
                        dmin = std::min(dmin, std::abs(d));
                    }
                }
                s_lo = lo;
                s_hi = hi;
                depth = dmax;
                gap = dmin;
            };
            double pl, ph, ql, qh, bP, bQ, gapP, gapQ;
            span(P, pl, ph, bP, gapP);
            span(Q, ql, qh, bQ, gapQ);
            if (gapP > cfg.gap_tol || gapQ > cfg.gap_tol) continue; // faces must meet at the fold
            double s_lo = std::max(pl, ql), s_hi = std::min(ph, qh);
            double along = s_hi - s_lo;
            if (along <= 0) continue;

            // both faces on the open side of each other (a corner, not an X)
            bool open = true;
            for (int fi : P.facets) {
                const Facet& f = mesh.facets[fi];
                for (const Vec3* v : {&f.v0, &f.v1, &f.v2})
                    if (dot(Q.normal, *v) - Q.plane_d < -cfg.gap_tol) open = false;
            }
            for (int fi : Q.facets) {
                const Facet& f = mesh.facets[fi];
                for (const Vec3* v : {&f.v0, &f.v1, &f.v2})
                    if (dot(P.normal, *v) - P.plane_d < -cfg.gap_tol) open = false;
            }
            if (!open) continue;

            double u_perp = std::sqrt(std::max(1e-12, 1.0 - dot(fold, fr.u) * dot(fold, fr.u)));
            double w_half = std::min(sP / u_perp * bP, sQ / u_perp * bQ); // W = 2 min(s_P b_P, s_Q b_Q)
            double rcs = 16.0 * kPi * along * along * w_half * w_half / (lambda * lambda);
            if (rcs <= 0) continue;
            double b_eff = std::min(bP, bQ);
            if (along * b_eff < cfg.min_effective_area) continue;

            Scatterer s;
            s.kind = Scatterer::Kind::Dihedral;
            s.coherent = true;
            s.pattern = Scatterer::Pattern::SincAperture;
            s.position = q + fold * (0.5 * (s_lo + s_hi));
            s.amplitude = std::sqrt(rcs) * detail::range_phase(fr, k, s.position);
            s.extent_a = along;
            s.extent_b = b_eff;
            s.axis1 = fold;
            s.axis2 = P.normal;
            out.push_back(s);
        }
    }
    return out;
}

inline std::vector<Scatterer> detect_trihedrals(const TargetMesh& mesh, const AcquisitionGeometry& geom,
                                                const DetectionConfig& cfg, const std::vector<SurfacePanel>& panels) {
    LosFrame fr = los_frame(geom);
    double k = geom.wavenumber(), lambda = geom.wavelength();
    double sin_orth = std::sin(deg2rad(cfg.ortho_tol_deg));
    std::vector<Scatterer> out;

    std::vector<std::size_t> lit;
    for (std::size_t i = 0; i < panels.size(); ++i)
        if (panels[i].visible_area >= cfg.min_effective_area && dot(panels[i].normal, fr.u) > 0) lit.push_back(i);

    auto orthogonal = [&](const SurfacePanel& A, const SurfacePanel& B) {
        return std::abs(dot(A.normal, B.normal)) <= sin_orth &&
               norm(A.center - B.center) <= A.radius + B.radius + cfg.gap_tol;
    };

    for (std::size_t ia = 0; ia < lit.size(); ++ia)
        for (std::size_t ib = ia + 1; ib < lit.size(); ++ib) {
            const SurfacePanel& A = panels[lit[ia]];
            const SurfacePanel& B = panels[lit[ib]];
            if (!orthogonal(A, B)) continue;
            for (std::size_t ic = ib + 1; ic < lit.size(); ++ic) {
                const SurfacePanel& C = panels[lit[ic]];
                if (!orthogonal(A, C) || !orthogonal(B, C)) continue;

                // apex: intersection of the three planes (Cramer)
                Vec3 n1 = A.normal, n2 = B.normal, n3 = C.normal;
                double det = dot(n1, cross(n2, n3));
                if (std::abs(det) < 0.5) continue; // mutually orthogonal triples have |det| ~ 1
                Vec3 apex = (cross(n2, n3) * A.plane_d + cross(n3, n1) * B.plane_d + cross(n1, n2) * C.plane_d) / det;

                // every face must reach the apex
                bool touches = true;
                double side = 1e300;
                for (const SurfacePanel* p : {&A, &B, &C}) {
                    double best = 1e300, extent = 0;
                    for (int fi : p->facets) {
                        const Facet& f = mesh.facets[fi];
                        for (const Vec3* v : {&f.v0, &f.v1, &f.v2}) {
                            best = std::min(best, norm(*v - apex));
                            extent = std::max(extent, norm(*v - apex));
                        }
                    }
                    if (best > cfg.gap_tol) touches = false;
                    side = std::min(side, extent / std::sqrt(2.0)); // corner-to-far-corner of a square face
                }
                if (!touches) continue;

                // effective side: smallest pairwise overlap along the three folds
                double a_eff = side;
                const SurfacePanel* tri[3] = {&A, &B, &C};
                for (int x = 0; x < 3; ++x)
                    for (int y = x + 1; y < 3; ++y) {
                        Vec3 fold = normalize(cross(tri[x]->normal, tri[y]->normal));
                        auto interval = [&](const SurfacePanel& p, double& lo, double& hi) {
                            lo = 1e300;
                            hi = -1e300;
                            for (int fi : p.facets) {
                                const Facet& f = mesh.facets[fi];
                                for (const Vec3* v : {&f.v0, &f.v1, &f.v2}) {
                                    double s = dot(fold, *v - apex);
                                    lo = std::min(lo, s);
                                    hi = std::max(hi, s);
                                }
                            }
                        };
                        double l1, h1, l2, h2;
                        interval(*tri[x], l1, h1);
                        interval(*tri[y], l2, h2);
                        double ov = std::min(h1, h2) - std::max(l1, l2);
                        a_eff = std::min(a_eff, std::max(0.0, ov));
                    }
                if (a_eff * a_eff < cfg.min_effective_area) continue;

                Vec3 bore = normalize(n1 + n2 + n3);
                if (dot(bore, fr.u) <= 0) continue;

                Scatterer s;
                s.kind = Scatterer::Kind::Trihedral;
                s.coherent = true;
                s.pattern = Scatterer::Pattern::CosPower;
                s.position = apex;
                double rcs = 12.0 * kPi * a_eff * a_eff * a_eff * a_eff / (lambda * lambda);
                s.amplitude = std::sqrt(rcs) * detail::range_phase(fr, k, apex);
                s.extent_a = a_eff;
                s.extent_b = a_eff;
                s.axis1 = bore;
                s.axis2 = n1;
                out.push_back(s);
            }
        }
    return out;
}

// One non-coherent scatterer per visible panel: |amp|^2 = sigma0 *
// cos^q(incidence) * visible surface area (q = 1 makes it sigma0 * projected
// visible area). Phase is a pure function of (seed, panel order).
inline std::vector<Scatterer> backscatter_fill(const TargetMesh& mesh, const AcquisitionGeometry& geom,
                                               const DetectionConfig& cfg, const std::vector<SurfacePanel>& panels,
                                               std::uint64_t seed) {
    LosFrame fr = los_frame(geom);
    std::vector<Scatterer> out;
    std::size_t idx = 0;
    for (const auto& p : panels) {
        double sigma0 = from_db(mesh.materials[p.material].sigma0_db);
        // incidence weight uses the panel normal; member facets are coplanar
        // within the clustering tolerance
        double cos_i = std::max(0.0, dot(p.normal, fr.u));
        if (cos_i <= 1e-9) {
            ++idx;
            continue;
        }
        double power = sigma0 * std::pow(cos_i, cfg.sigma0_cos_exponent) * p.surface_area;
        if (power <= 0 || p.visible_area < cfg.min_effective_area) {
            ++idx;
            continue;
        }
        Rng rng(hash_mix(seed, std::uint64_t{0xf111}, std::uint64_t(idx)));
        Scatterer s;
        s.kind = Scatterer::Kind::Diffuse;
        s.coherent = false;
        s.pattern = Scatterer::Pattern::Isotropic;
        s.position = p.visible_centroid;
        s.amplitude = std::polar(std::sqrt(power), rng.uniform(0.0, 2.0 * kPi));
        out.push_back(s);
        ++idx;
    }
    return out;
}

inline M3dModel assemble_m3d(const TargetMesh& mesh, const AcquisitionGeometry& geom, const DetectionConfig& cfg,
                             std::uint64_t seed) {
    M3dModel m;
    m.geometry = geom;
    m.config = cfg;
    m.seed = seed;
    if (mesh.empty()) return m;
    auto vis = visible_set(mesh, geom, cfg);
    auto panels = build_panels(mesh, geom, cfg, vis);
    auto plates = detect_plates(mesh, geom, cfg, panels);
    auto dihedrals = detect_dihedrals(mesh, geom, cfg, panels);
    auto trihedrals = detect_trihedrals(mesh, geom, cfg, panels);
    auto diffuse = backscatter_fill(mesh, geom, cfg, panels, seed);
    m.scatterers.reserve(plates.size() + dihedrals.size() + trihedrals.size() + diffuse.size());
    auto push = [&](std::vector<Scatterer>& v) {
        for (auto& s : v) m.scatterers.push_back(s);
    };
    push(plates);
    push(dihedrals);
    push(trihedrals);
    push(diffuse);
    return m;
}

// directivity of a scatterer evaluated at a rendering LOS, normalized to 1 at
// the model's detection LOS
inline double directivity_gain(const Scatterer& s, const Vec3& u_detect, const Vec3& u_render, double k) {
    auto sinc_pair = [&](double ext, double along_r, double along_d) {
        double num = sinc(k * ext * along_r);
        double den = sinc(k * ext * along_d);
        return std::abs(den) < 1e-9 ? 0.0 : num / den;
    };
    switch (s.pattern) {
        case Scatterer::Pattern::Isotropic:
            return 1.0;
        case Scatterer::Pattern::SincSinc:
            return sinc_pair(s.extent_a, dot(u_render, s.axis1), dot(u_detect, s.axis1)) *
                   sinc_pair(s.extent_b, dot(u_render, s.axis2), dot(u_detect, s.axis2));
        case Scatterer::Pattern::SincAperture: {
            double along = sinc_pair(s.extent_a, dot(u_render, s.axis1), dot(u_detect, s.axis1));
            Vec3 nq = normalize(cross(s.axis1, s.axis2));
            auto w = [&](const Vec3& u) {
                double uf = dot(u, s.axis1);
                double perp = std::sqrt(std::max(1e-12, 1.0 - uf * uf));
                return std::min(std::max(0.0, dot(u, s.axis2)), std::max(0.0, dot(u, nq))) / perp;
            };
            double den = w(u_detect);
            return den <= 1e-12 ? 0.0 : along * w(u_render) / den;
        }
        case Scatterer::Pattern::CosPower: {
            double cr = std::max(0.0, dot(u_render, s.axis1));
            double cd = std::max(1e-9, dot(u_detect, s.axis1));
            return std::pow(cr / cd, 4.0);
        }
    }
    return 1.0;
}

// coherent + non-coherent RCS of a model rendered at `geom`
inline double m3d_rcs(const M3dModel& model, const AcquisitionGeometry& render_geom) {
    Vec3 u_d = los_frame(model.geometry).u;
    Vec3 u_r = los_frame(render_geom).u;
    double k = render_geom.wavenumber();
    cplx coherent = 0;
    double diffuse_power = 0;
    for (const auto& s : model.scatterers) {
        double g = directivity_gain(s, u_d, u_r, k);
        if (s.coherent)
            coherent += s.amplitude * g;
        else
            diffuse_power += std::norm(s.amplitude * g);
    }
    return std::norm(coherent) + diffuse_power;
}

struct PerturbPolicy {
    double sigma_pos = 0.0; // m, per-axis Gaussian jitter on every scatterer
    double drop_prob[4] = {0, 0, 0, 0}; // indexed by Kind; applies to coherent kinds
    double dup_prob[4] = {0, 0, 0, 0};

    void validate() const {
        if (sigma_pos < 0) throw Error("perturb: negative position sigma");
        for (double p : drop_prob)
            if (p < 0 || p > 1) throw Error("perturb: drop probability outside [0,1]");
        for (double p : dup_prob)
            if (p < 0 || p > 1) throw Error("perturb: dup probability outside [0,1]");
    }
};

// physics-based augmentation on the scatterer list: jitter positions, drop or
// duplicate directive effects; the input model is left untouched
inline M3dModel perturb_m3d(const M3dModel& model, const PerturbPolicy& policy, std::uint64_t seed) {
    policy.validate();
    M3dModel out;
    out.geometry = model.geometry;
    out.config = model.config;
    out.seed = seed;
    Rng rng(hash_mix(seed, std::uint64_t{0x70657274}));
    for (const auto& s : model.scatterers) {
        std::size_t k = std::size_t(s.kind);
        if (s.coherent && rng.uniform01() < policy.drop_prob[k]) continue;
        bool dup = s.coherent && rng.uniform01() < policy.dup_prob[k];
        int copies = dup ? 2 : 1;
        for (int c = 0; c < copies; ++c) {
            Scatterer t = s;
            if (policy.sigma_pos > 0)
                t.position += Vec3{rng.normal(), rng.normal(), rng.normal()} * policy.sigma_pos;
            out.scatterers.push_back(t);
        }
    }
    return out;
}

} // namespace sarsim

#endif
