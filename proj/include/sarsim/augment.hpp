#ifndef SARSIM_AUGMENT_HPP
#define SARSIM_AUGMENT_HPP

#include <variant>

#include "imaging.hpp"

namespace sarsim {

// Per-image domain randomization on source images: resolutions, clutter level
// and family, thermal noise, target position, bright-point dropout. Sampling
// is a pure function of (policy, image index); distinct indices give
// independent streams, so production order and worker count never matter.

struct Interval {
    double lo = 0, hi = 0;

    void validate(const char* name) const {
        if (!(lo <= hi)) throw Error(std::string("policy: empty interval for ") + name);
    }
};

struct RandomizationPolicy {
    Interval res_range{0.3, 0.3};   // m
    Interval res_cross{0.3, 0.3};   // m
    Interval clutter_sigma0_db{-15.0, -15.0};
    std::vector<ClutterModel::Family> clutter_families{ClutterModel::Family::Rayleigh};
    double clutter_shape = 1.0;     // shape for Weibull/K draws
    Interval nesigma0_db{-30.0, -30.0};
    int translate_limit_x = 8;      // +- output pixels
    int translate_limit_y = 8;
    int dropout_max = 10;           // k drawn uniformly from [0, dropout_max]
    std::uint64_t master_seed = 0;

    void validate() const {
        res_range.validate("res_range");
        res_cross.validate("res_cross");
        clutter_sigma0_db.validate("clutter_sigma0_db");
        nesigma0_db.validate("nesigma0_db");
        if (clutter_families.empty()) throw Error("policy: clutter family set is empty");
        if (translate_limit_x < 0 || translate_limit_y < 0) throw Error("policy: negative translation limit");
        if (dropout_max < 0) throw Error("policy: negative dropout count");
    }
};

struct RandomizedParams {
    double res_range = 0, res_cross = 0;
    ClutterModel::Family clutter_family = ClutterModel::Family::Rayleigh;
    double clutter_sigma0_db = 0;
    double nesigma0_db = 0;
    int translate_dx = 0, translate_dy = 0;
    int dropout_k = 0;
    std::uint64_t clutter_seed = 0, noise_seed = 0, phase_seed = 0;
};

inline RandomizedParams sample_params(const RandomizationPolicy& policy, std::uint64_t image_index) {
    policy.validate();
    Rng rng(hash_mix(policy.master_seed ^ image_index, std::uint64_t{0xd2a71}, image_index));
    RandomizedParams p;
    p.res_range = rng.uniform(policy.res_range.lo, policy.res_range.hi);
    p.res_cross = rng.uniform(policy.res_cross.lo, policy.res_cross.hi);
    p.clutter_sigma0_db = rng.uniform(policy.clutter_sigma0_db.lo, policy.clutter_sigma0_db.hi);
    p.clutter_family = policy.clutter_families[std::size_t(rng.uniform_int(0, std::int64_t(policy.clutter_families.size()) - 1))];
    p.nesigma0_db = rng.uniform(policy.nesigma0_db.lo, policy.nesigma0_db.hi);
    p.translate_dx = int(rng.uniform_int(-policy.translate_limit_x, policy.translate_limit_x));
    p.translate_dy = int(rng.uniform_int(-policy.translate_limit_y, policy.translate_limit_y));
    p.dropout_k = int(rng.uniform_int(0, policy.dropout_max));
    p.clutter_seed = rng.next_u64();
    p.noise_seed = rng.next_u64();
    p.phase_seed = rng.next_u64();
    return p;
}

namespace detail {

// indices of the k largest |amplitude| entries, ties broken by input order
inline std::vector<char> dropped_mask(const std::vector<double>& mags, std::size_t k) {
    std::vector<std::size_t> order(mags.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return mags[a] > mags[b]; });
    std::vector<char> drop(mags.size(), 0);
    for (std::size_t i = 0; i < std::min(k, order.size()); ++i) drop[order[i]] = 1;
    return drop;
}

} // namespace detail

// removes the k strongest bright points; remaining entries keep input order
inline M3dModel drop_bright_points(const M3dModel& model, int k) {
    if (k < 0) throw Error("drop_bright_points: negative k");
    std::vector<double> mags(model.scatterers.size());
    for (std::size_t i = 0; i < mags.size(); ++i) mags[i] = std::abs(model.scatterers[i].amplitude);
    auto drop = detail::dropped_mask(mags, std::size_t(k));
    M3dModel out;
    out.geometry = model.geometry;
    out.config = model.config;
    out.seed = model.seed;
    for (std::size_t i = 0; i < model.scatterers.size(); ++i)
        if (!drop[i]) out.scatterers.push_back(model.scatterers[i]);
    return out;
}

inline std::vector<RayContribution> drop_bright_points(const std::vector<RayContribution>& contribs, int k) {
    if (k < 0) throw Error("drop_bright_points: negative k");
    std::vector<double> mags(contribs.size());
    for (std::size_t i = 0; i < mags.size(); ++i)
        mags[i] = std::max(std::abs(contribs[i].amp[0]), std::abs(contribs[i].amp[1]));
    auto drop = detail::dropped_mask(mags, std::size_t(k));
    std::vector<RayContribution> out;
    out.reserve(contribs.size());
    for (std::size_t i = 0; i < contribs.size(); ++i)
        if (!drop[i]) out.push_back(contribs[i]);
    return out;
}

// shifts the grid content by (dx, dy) output pixels (dx: cross-range columns,
// dy: range rows); content pushed off the grid is an error, not a clip
inline SourceImage translate_target(const SourceImage& source, int dx, int dy) {
    int sx = dx * source.oversampling, sy = dy * source.oversampling;
    SourceImage out = source;
    if (sx == 0 && sy == 0) return out;
    std::fill(out.data.begin(), out.data.end(), cplx{});
    for (int r = 0; r < source.h; ++r)
        for (int c = 0; c < source.w; ++c) {
            cplx v = source.at(r, c);
            if (v == cplx{}) continue;
            int nr = r + sy, nc = c + sx;
            if (nr < 0 || nr >= source.h || nc < 0 || nc >= source.w)
                throw Error("translate_target: content pushed off the grid at row " + std::to_string(r) + ", col " +
                            std::to_string(c));
            out.at(nr, nc) = v;
        }
    return out;
}

using ChipInputs = std::variant<const M3dModel*, const std::vector<RayContribution>*>;

// fixed-parameter chip pipeline shared by augmented and plain production:
// drop -> rasterize (oversampled) -> translate -> clutter -> sensor
inline RadarChip make_chip(const ChipInputs& inputs, const AcquisitionGeometry& geom, const GridConfig& grid,
                           const SensorModel& sensor, const ClutterModel& clutter_model, const RandomizedParams& p,
                           bool noise_on = true) {
    SourceImage src;
    if (std::holds_alternative<const M3dModel*>(inputs)) {
        const M3dModel* model = std::get<const M3dModel*>(inputs);
        M3dModel reduced = drop_bright_points(*model, p.dropout_k);
        src = rasterize(reduced, geom, grid, p.phase_seed);
    } else {
        auto reduced = drop_bright_points(*std::get<const std::vector<RayContribution>*>(inputs), p.dropout_k);
        src = rasterize(reduced, geom.rx, grid);
    }
    if (p.translate_dx || p.translate_dy) src = translate_target(src, p.translate_dx, p.translate_dy);

    ClutterModel cm = clutter_model;
    cm.family = p.clutter_family;
    cm.mean_sigma0_db = p.clutter_sigma0_db;
    std::vector<cplx> clutter;
    if (cm.family != ClutterModel::Family::None)
        clutter = synth_clutter(cm, src.w, src.h, src.d_range * src.d_cross, p.clutter_seed);

    SensorModel sm = sensor;
    sm.res_range = p.res_range;
    sm.res_cross = p.res_cross;
    sm.nesigma0_db = p.nesigma0_db;

    RadarChip chip = apply_sensor(src, clutter, sm, p.noise_seed, noise_on);
    chip.meta.azimuth_deg = geom.azimuth_deg;
    chip.meta.depression_deg = geom.depression_deg;
    chip.meta.frequency_hz = geom.frequency_hz;
    chip.meta.clutter = cm;
    chip.meta.clutter_seed = p.clutter_seed;
    chip.meta.phase_seed = p.phase_seed;
    chip.meta.dropout_k = p.dropout_k;
    chip.meta.translate_dx = p.translate_dx;
    chip.meta.translate_dy = p.translate_dy;
    return chip;
}

// the per-image randomized pipeline: sample -> make_chip; metadata records the
// concrete draw for full replay
inline RadarChip augment_chip(const ChipInputs& inputs, const AcquisitionGeometry& geom, const GridConfig& grid,
                              const SensorModel& sensor, const RandomizationPolicy& policy,
                              std::uint64_t image_index) {
    RandomizedParams p = sample_params(policy, image_index);
    ClutterModel cm;
    cm.shape = policy.clutter_shape;
    RadarChip chip = make_chip(inputs, geom, grid, sensor, cm, p, true);
    chip.meta.job_seed = image_index;
    return chip;
}

// hands out independent (index, params) work units; consumers can pull from
// any position without affecting other streams
class AugmentStream {
public:
    explicit AugmentStream(RandomizationPolicy policy, std::uint64_t begin_index = 0)
        : policy_(std::move(policy)), next_(begin_index) {
        policy_.validate();
    }

    std::pair<std::uint64_t, RandomizedParams> next() {
        std::uint64_t i = next_++;
        return {i, sample_params(policy_, i)};
    }

    std::uint64_t position() const { return next_; }

private:
    RandomizationPolicy policy_;
    std::uint64_t next_;
};

} // namespace sarsim

#endif
