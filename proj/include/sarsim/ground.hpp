#ifndef SARSIM_GROUND_HPP
#define SARSIM_GROUND_HPP

#include <vector>

#include "fft.hpp"
#include "mesh.hpp"
#include "rng.hpp"

namespace sarsim {

// Rough meshed ground: Gaussian height statistics with a Gaussian correlation
// function, generated by spectral synthesis. Pure function of the fields.
struct GroundPatch {
    double extent_x = 20.0, extent_y = 20.0; // m
    double spacing = 0.1;                    // m between grid nodes
    double rms_height = 0.0;                 // m
    double correlation_length = 1.0;         // m
    std::uint64_t seed = 0;
    Material material = pec_material(-12.0);

    void validate() const {
        if (!(extent_x > 0) || !(extent_y > 0) || !(spacing > 0) || !(correlation_length > 0))
            throw Error("ground: extent, spacing and correlation length must be > 0");
        if (rms_height < 0) throw Error("ground: negative rms height");
        if (spacing >= std::min(extent_x, extent_y)) throw Error("ground: spacing must be smaller than the extent");
        if (rms_height > 0 && correlation_length < 2.0 * spacing)
            throw Error("ground: correlation length below 2x spacing aliases the surface");
    }
};

// heights on the (nx x ny) node grid, row-major in y
inline std::vector<double> synthesize_heights(const GroundPatch& patch, std::size_t nx, std::size_t ny) {
    std::vector<double> h(nx * ny, 0.0);
    if (patch.rms_height <= 0.0) return h;

    std::size_t px = next_pow2(nx), py = next_pow2(ny);
    const double d = patch.spacing;
    const double l = patch.correlation_length;

    // Gaussian correlation s^2 exp(-r^2/l^2) has spectrum ~ exp(-k^2 l^2 / 4)
    std::vector<cplx> spec(px * py);
    Rng rng(hash_mix(patch.seed, std::uint64_t{0x67726e64}));
    double filt2_sum = 0.0;
    for (std::size_t j = 0; j < py; ++j) {
        double ky = 2.0 * kPi * (j <= py / 2 ? double(j) : double(j) - double(py)) / (double(py) * d);
        for (std::size_t i = 0; i < px; ++i) {
            double kx = 2.0 * kPi * (i <= px / 2 ? double(i) : double(i) - double(px)) / (double(px) * d);
            double w = std::exp(-(kx * kx + ky * ky) * l * l / 8.0); // amplitude filter = sqrt(PSD)
            filt2_sum += w * w;
            spec[j * px + i] = w * cplx(rng.normal(), rng.normal());
        }
    }
    fft2d(spec, px, py, true);
    // real part of the inverse transform is Gaussian with variance
    // sum(w^2)/(P Q)^2 per node; scale to the requested rms exactly
    double sigma_raw = std::sqrt(filt2_sum) / (double(px) * double(py));
    double scale = patch.rms_height / sigma_raw;
    for (std::size_t j = 0; j < ny; ++j)
        for (std::size_t i = 0; i < nx; ++i) h[j * nx + i] = spec[j * px + i].real() * scale;
    return h;
}

inline TargetMesh synthesize_rough_ground(const GroundPatch& patch) {
    patch.validate();
    std::size_t nx = std::size_t(std::floor(patch.extent_x / patch.spacing)) + 1;
    std::size_t ny = std::size_t(std::floor(patch.extent_y / patch.spacing)) + 1;
    std::vector<double> h = synthesize_heights(patch, nx, ny);

    TargetMesh mesh;
    patch.material.validate();
    mesh.materials.push_back(patch.material);
    mesh.material_names.push_back("ground");
    double x0 = -0.5 * double(nx - 1) * patch.spacing;
    double y0 = -0.5 * double(ny - 1) * patch.spacing;
    auto node = [&](std::size_t i, std::size_t j) {
        return Vec3{x0 + double(i) * patch.spacing, y0 + double(j) * patch.spacing, h[j * nx + i]};
    };
    for (std::size_t j = 0; j + 1 < ny; ++j)
        for (std::size_t i = 0; i + 1 < nx; ++i) {
            // wind so normals face +z
            append_facet(mesh, node(i, j), node(i + 1, j), node(i + 1, j + 1));
            append_facet(mesh, node(i, j), node(i + 1, j + 1), node(i, j + 1));
        }
    mesh.recompute_bounds();
    return mesh;
}

// drops `target` so its bbox centroid sits over the patch origin, standing on
// the local ground height
inline void place_on_ground(TargetMesh& target, const TargetMesh& ground) {
    Vec3 c = target.bbox_center();
    double ground_z = 0.0;
    double best = std::numeric_limits<double>::max();
    for (const auto& f : ground.facets) {
        Vec3 fc = (f.v0 + f.v1 + f.v2) / 3.0;
        double d2 = fc.x * fc.x + fc.y * fc.y;
        if (d2 < best) {
            best = d2;
            ground_z = fc.z;
        }
    }
    translate_mesh(target, Vec3{-c.x, -c.y, ground_z - target.bbox_min.z});
}

} // namespace sarsim

#endif
