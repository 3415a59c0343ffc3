#ifndef SARSIM_SBR_HPP
#define SARSIM_SBR_HPP

#include <thread>
#include <vector>

#include "bvh.hpp"
#include "geometry.hpp"

namespace sarsim {

// Shooting and bouncing rays, monostatic. Geometrical optics carries each ray
// through specular reflections; physical optics on every hit facet radiates
// back toward the sensor. Phase convention exp(+jwt), so propagation over a
// round-trip path L contributes exp(-j k L).

struct SbrConfig {
    int max_bounces = 5;
    double ray_area = 1e-6;        // m^2, launch tube cross-section
    double amp_cutoff = 1e-4;      // GO amplitude below which a path is dropped
    double aperture_margin = 0.05; // fraction of bbox diagonal added around the footprint
    std::size_t max_rays = 200000000;

    void validate() const {
        if (max_bounces < 1) throw Error("sbr: max_bounces must be >= 1");
        if (!(ray_area > 0)) throw Error("sbr: ray area must be > 0");
        if (amp_cutoff < 0 || amp_cutoff >= 1) throw Error("sbr: cutoff must lie in [0,1)");
    }
};

struct RayContribution {
    cplx amp[2];        // per receive channel (H, V), units sqrt(m^2)
    double path_len;    // round-trip, m, measured from the reference plane
    double range;       // apparent slant-range coordinate = path_len / 2
    double cross;       // launch-ray lateral coordinate along c-hat
    int bounces;
    int first_facet;
    int last_facet;
};

// uniform grid of launch points on the plane perpendicular to u, covering the
// projected bounding box plus margin, centered on the projected bbox center
struct LaunchGrid {
    Vec3 e1, e2;      // lateral axes (c-hat, v-hat)
    Vec3 dir;         // propagation direction = -u
    double plane_d;   // u . origin for every launch point
    double c0, v0;    // lateral coordinates of cell (0,0) center
    double spacing;
    std::size_t nx = 0, ny = 0;

    std::size_t count() const { return nx * ny; }
    Vec3 origin(std::size_t i, std::size_t j, const Vec3& u) const {
        double c = c0 + double(i) * spacing;
        double v = v0 + double(j) * spacing;
        return e1 * c + e2 * v + u * plane_d;
    }
};

inline LaunchGrid launch_grid(const AccelIndex& index, const AcquisitionGeometry& geom, const SbrConfig& cfg) {
    cfg.validate();
    const TargetMesh& mesh = index.mesh();
    LosFrame f = los_frame(geom);
    LaunchGrid g;
    g.e1 = f.c;
    g.e2 = f.v();
    g.dir = -f.u;
    g.spacing = std::sqrt(cfg.ray_area);

    double cmin = 1e300, cmax = -1e300, vmin = 1e300, vmax = -1e300, umax = -1e300;
    for (int corner = 0; corner < 8; ++corner) {
        Vec3 p{corner & 1 ? mesh.bbox_max.x : mesh.bbox_min.x, corner & 2 ? mesh.bbox_max.y : mesh.bbox_min.y,
               corner & 4 ? mesh.bbox_max.z : mesh.bbox_min.z};
        double c = dot(g.e1, p), v = dot(g.e2, p), u = dot(f.u, p);
        cmin = std::min(cmin, c);
        cmax = std::max(cmax, c);
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
        umax = std::max(umax, u);
    }
    double diag = mesh.bbox_diagonal();
    double margin = cfg.aperture_margin * diag + 2.0 * g.spacing;
    double width = (cmax - cmin) + 2.0 * margin;
    double height = (vmax - vmin) + 2.0 * margin;
    g.nx = std::size_t(std::ceil(width / g.spacing));
    g.ny = std::size_t(std::ceil(height / g.spacing));
    if (g.nx * g.ny > cfg.max_rays)
        throw Error("launch_grid: ray count " + std::to_string(g.nx * g.ny) + " exceeds the configured limit");
    g.c0 = 0.5 * (cmin + cmax) - 0.5 * double(g.nx - 1) * g.spacing;
    g.v0 = 0.5 * (vmin + vmax) - 0.5 * double(g.ny - 1) * g.spacing;
    g.plane_d = umax + 0.5 * diag + 1.0;
    return g;
}

namespace detail {

// Fresnel reflection coefficients in the (s,p) basis; PEC is (-1,+1). The
// material's power reflectivity and the Rayleigh roughness factor
// exp(-2 (k s cos)^2) scale both channels.
inline void reflection_coeffs(const Material& m, double cos_i, double k, cplx& rs, cplx& rp) {
    if (m.kind == Material::Kind::PEC) {
        rs = -1.0;
        rp = 1.0;
    } else {
        cplx er = m.permittivity;
        cplx root = std::sqrt(er - (1.0 - cos_i * cos_i));
        if (root.imag() > 0) root = -root; // decaying branch under exp(+jwt)
        rs = (cos_i - root) / (cos_i + root);
        rp = (er * cos_i - root) / (er * cos_i + root);
    }
    double scale = std::sqrt(m.reflectivity);
    if (m.roughness_rms > 0) {
        double x = k * m.roughness_rms * cos_i;
        scale *= std::exp(-2.0 * x * x);
    }
    rs *= scale;
    rp *= scale;
}

struct TraceCtx {
    const AccelIndex* index;
    LosFrame frame;
    LaunchGrid grid;
    SbrConfig cfg;
    double k;       // wavenumber
    double tmin;    // bounce re-intersection guard
    Vec3 tx_pol;    // launch field direction
    double po_gain; // k / (2 sqrt(pi))
};

inline void trace_one(const TraceCtx& ctx, std::size_t i, std::size_t j, std::vector<RayContribution>& out) {
    const TargetMesh& mesh = ctx.index->mesh();
    const Vec3 u = ctx.frame.u;
    const Vec3 rx_h = ctx.frame.h(), rx_v = ctx.frame.v();
    const double half = 0.5 * ctx.grid.spacing;

    Ray ray{ctx.grid.origin(i, j, u), ctx.grid.dir};
    const double launch_cross = dot(ctx.grid.e1, ray.origin);
    CVec3 field{cplx(ctx.tx_pol.x), cplx(ctx.tx_pol.y), cplx(ctx.tx_pol.z)};
    double t_cum = 0.0;
    // lateral ray-tube derivatives d(position)/d(eps), d(path)/d(eps) for the
    // two launch axes; planar facets keep segment directions constant, so the
    // per-tube phase taper is linear and integrates to a separable sinc
    Vec3 dr[2] = {ctx.grid.e1, ctx.grid.e2};
    double dt[2] = {0.0, 0.0};
    int prev_facet = -1, first_facet = -1;

    for (int bounce = 1; bounce <= ctx.cfg.max_bounces; ++bounce) {
        Hit hit = ctx.index->nearest(ray, ctx.tmin, prev_facet);
        if (!hit.ok()) return;
        const Facet& facet = mesh.facets[hit.facet];
        double cos_i = -dot(ray.dir, facet.normal);
        if (cos_i <= 1e-9) return; // back-face or tangent: single-sided facets end the path
        if (first_facet < 0) first_facet = hit.facet;
        t_cum += hit.t;
        for (int a = 0; a < 2; ++a) {
            double dt_seg = -dot(facet.normal, dr[a]) / dot(facet.normal, ray.dir);
            dt[a] += dt_seg;
            dr[a] += dt_seg * ray.dir;
        }

        // local s/p basis and reflection
        const Material& mat = mesh.materials[facet.material];
        cplx rs, rp;
        reflection_coeffs(mat, cos_i, ctx.k, rs, rp);
        Vec3 sxn = cross(ray.dir, facet.normal);
        double sxn_n = norm(sxn);
        Vec3 s_hat = sxn_n > 1e-9 ? sxn / sxn_n : any_perpendicular(ray.dir);
        Vec3 p_i = cross(ray.dir, s_hat);
        Vec3 d_r = ray.dir - 2.0 * dot(ray.dir, facet.normal) * facet.normal;
        Vec3 p_r = cross(d_r, s_hat);
        cplx es = dot(field, s_hat), ep = dot(field, p_i);
        CVec3 refl = CVec3(s_hat) * (rs * es) + CVec3(p_r) * (rp * ep);

        // physical-optics radiation from this facet back toward the sensor
        {
            CVec3 h_i = cross(ray.dir, field);
            CVec3 h_r = cross(d_r, refl);
            CVec3 h_tot = h_i + h_r;
            // J = n x (H_i + H_r); u_vec = u x (u x J)
            CVec3 j_s{facet.normal.y * h_tot.z - facet.normal.z * h_tot.y,
                      facet.normal.z * h_tot.x - facet.normal.x * h_tot.z,
                      facet.normal.x * h_tot.y - facet.normal.y * h_tot.x};
            CVec3 uxj = cross(u, j_s);
            CVec3 u_vec = cross(u, uxj);
            double footprint = std::min(ctx.cfg.ray_area / cos_i, facet.area);
            double range = -dot(u, hit.point);
            double round_trip = (t_cum - ctx.grid.plane_d) + range;
            double tube = 1.0;
            for (int a = 0; a < 2; ++a) {
                double dl = dt[a] - dot(u, dr[a]);
                tube *= sinc(ctx.k * dl * half);
            }
            cplx phase = std::polar(1.0, -ctx.k * round_trip);
            cplx common = ctx.po_gain * footprint * tube * phase;
            RayContribution c;
            c.amp[0] = common * dot(u_vec, rx_h);
            c.amp[1] = common * dot(u_vec, rx_v);
            c.path_len = round_trip;
            c.range = 0.5 * round_trip;
            c.cross = launch_cross;
            c.bounces = bounce;
            c.first_facet = first_facet;
            c.last_facet = hit.facet;
            if (std::abs(c.amp[0]) > 0 || std::abs(c.amp[1]) > 0) out.push_back(c);
        }

        field = refl;
        if (norm(field) < ctx.cfg.amp_cutoff) return;
        ray.origin = hit.point;
        ray.dir = d_r;
        prev_facet = hit.facet;
    }
}

} // namespace detail

// Traces the full launch grid. Data-parallel over rays; per-worker buckets are
// concatenated in worker-index order so the result is independent of
// scheduling.
inline std::vector<RayContribution> trace_paths(const AccelIndex& index, const AcquisitionGeometry& geom,
                                                const SbrConfig& cfg, unsigned threads = 1) {
    detail::TraceCtx ctx;
    ctx.index = &index;
    ctx.frame = los_frame(geom);
    ctx.grid = launch_grid(index, geom, cfg);
    ctx.cfg = cfg;
    ctx.k = geom.wavenumber();
    ctx.tmin = std::max(1e-9 * index.mesh().bbox_diagonal(), 1e-12);
    ctx.tx_pol = geom.tx == Pol::H ? ctx.frame.h() : ctx.frame.v();
    ctx.po_gain = ctx.k / (2.0 * std::sqrt(kPi));

    const std::size_t rows = ctx.grid.ny;
    if (threads <= 1 || rows < 2) {
        std::vector<RayContribution> out;
        for (std::size_t j = 0; j < rows; ++j)
            for (std::size_t i = 0; i < ctx.grid.nx; ++i) detail::trace_one(ctx, i, j, out);
        return out;
    }
    // per-row buckets concatenated in row order: the list is identical for
    // every worker count, including 1
    unsigned nw = std::min<unsigned>(threads, unsigned(rows));
    std::vector<std::vector<RayContribution>> buckets(rows);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < nw; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t j = w; j < rows; j += nw)
                for (std::size_t i = 0; i < ctx.grid.nx; ++i) detail::trace_one(ctx, i, j, buckets[j]);
        });
    }
    for (auto& t : pool) t.join();
    std::vector<RayContribution> out;
    std::size_t total = 0;
    for (const auto& b : buckets) total += b.size();
    out.reserve(total);
    for (const auto& b : buckets) out.insert(out.end(), b.begin(), b.end());
    return out;
}

// |coherent sum|^2 over one receive channel; a pure reduction in list order
inline double rcs_estimate(const std::vector<RayContribution>& contribs, Pol channel) {
    cplx sum = 0.0;
    for (const auto& c : contribs) sum += c.amp[std::size_t(channel)];
    return std::norm(sum);
}

struct RcsSample {
    double azimuth_deg;
    double rcs_m2;
};

inline std::vector<RcsSample> sweep_rcs(const AccelIndex& index, const AcquisitionGeometry& geom_template,
                                        const std::vector<double>& azimuths_deg, const SbrConfig& cfg,
                                        unsigned threads = 1) {
    std::vector<RcsSample> out;
    out.reserve(azimuths_deg.size());
    for (double az : azimuths_deg) {
        AcquisitionGeometry g = geom_template;
        g.azimuth_deg = az;
        auto contribs = trace_paths(index, g, cfg, threads);
        out.push_back({az, rcs_estimate(contribs, g.rx)});
    }
    return out;
}

} // namespace sarsim

#endif
