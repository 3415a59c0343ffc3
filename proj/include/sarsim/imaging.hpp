#ifndef SARSIM_IMAGING_HPP
#define SARSIM_IMAGING_HPP

#include <optional>
#include <string>
#include <vector>

#include "centers.hpp"
#include "fft.hpp"
#include "geometry.hpp"
#include "rng.hpp"
#include "sbr.hpp"

namespace sarsim {

// Image formation: contributions or scatterers are splatted onto an ideal
// oversampled complex grid (Dirac impulse response), then the sensor transfer
// function (Taylor-weighted band-limited kernel), clutter and thermal noise
// turn it into a radar chip at the output pixel spacing.
//
// Grid convention: pixel centers at origin + index * spacing (corner-aligned),
// rows are slant-range bins, columns cross-range. Decimation keeps every
// os-th sample, so output centers coincide with oversampled centers exactly.

struct GridConfig {
    int width = 128;        // output pixels, cross-range
    int height = 128;       // output pixels, slant-range
    double px_range = 0.2;  // m, output spacing
    double px_cross = 0.2;
    int oversampling = 4;
    double center_range = 0.0; // m, scene coordinate at the grid center
    double center_cross = 0.0;

    void validate() const {
        if (width <= 0 || height <= 0 || width % 2 || height % 2)
            throw Error("grid: dimensions must be positive and even");
        if (!(px_range > 0) || !(px_cross > 0)) throw Error("grid: spacing must be > 0");
        if (oversampling < 1) throw Error("grid: oversampling must be >= 1");
    }
};

struct SourceImage {
    std::vector<cplx> data; // row-major, rows = range bins
    int w = 0, h = 0;       // oversampled dimensions
    double d_range = 0, d_cross = 0; // oversampled spacing, m
    int oversampling = 1;
    double origin_range = 0, origin_cross = 0; // coordinate of pixel (0,0), m

    cplx& at(int row, int col) { return data[std::size_t(row) * w + col]; }
    const cplx& at(int row, int col) const { return data[std::size_t(row) * w + col]; }

    cplx coherent_sum() const {
        cplx s = 0;
        for (const auto& v : data) s += v;
        return s;
    }
};

inline SourceImage make_source_grid(const GridConfig& g) {
    g.validate();
    SourceImage img;
    img.oversampling = g.oversampling;
    img.w = g.width * g.oversampling;
    img.h = g.height * g.oversampling;
    img.d_range = g.px_range / g.oversampling;
    img.d_cross = g.px_cross / g.oversampling;
    img.origin_range = g.center_range - double(img.h / 2) * img.d_range;
    img.origin_cross = g.center_cross - double(img.w / 2) * img.d_cross;
    img.data.assign(std::size_t(img.w) * img.h, cplx{});
    return img;
}

namespace detail {

struct OffGrid {
    std::size_t count = 0;
    std::string first_few;

    void note(std::size_t index, double range, double cross) {
        if (count < 8)
            first_few += " [input " + std::to_string(index) + " at range " + std::to_string(range) + ", cross " +
                         std::to_string(cross) + "]";
        ++count;
    }
    void raise() const {
        if (!count) return;
        throw Error("rasterize: " + std::to_string(count) + " input(s) outside grid:" + first_few);
    }
};

inline void splat(SourceImage& img, double range, double cross, cplx amp, OffGrid& off, std::size_t input_index) {
    double pr = (range - img.origin_range) / img.d_range;
    double pc = (cross - img.origin_cross) / img.d_cross;
    int r0 = int(std::floor(pr)), c0 = int(std::floor(pc));
    double fr = pr - r0, fc = pc - c0;
    int r1 = fr > 0 ? r0 + 1 : r0;
    int c1 = fc > 0 ? c0 + 1 : c0;
    if (r0 < 0 || c0 < 0 || r1 >= img.h || c1 >= img.w) {
        off.note(input_index, range, cross);
        return;
    }
    img.at(r0, c0) += amp * ((1 - fr) * (1 - fc));
    if (c1 != c0) img.at(r0, c1) += amp * ((1 - fr) * fc);
    if (r1 != r0) img.at(r1, c0) += amp * (fr * (1 - fc));
    if (r1 != r0 && c1 != c0) img.at(r1, c1) += amp * (fr * fc);
}

} // namespace detail

// SBR contributions onto the focusing grid, one receive channel
inline SourceImage rasterize(const std::vector<RayContribution>& contribs, Pol channel, const GridConfig& grid) {
    SourceImage img = make_source_grid(grid);
    detail::OffGrid off;
    for (std::size_t i = 0; i < contribs.size(); ++i)
        detail::splat(img, contribs[i].range, contribs[i].cross, contribs[i].amp[std::size_t(channel)], off, i);
    off.raise();
    return img;
}

// M3D scatterers onto the focusing grid; amplitude times the directivity
// pattern at the rendering geometry. When `diffuse_phase_seed` is set the
// non-coherent phases are re-drawn from it (per-realization), otherwise the
// phases stored at fill time apply.
inline SourceImage rasterize(const M3dModel& model, const AcquisitionGeometry& render_geom, const GridConfig& grid,
                             std::optional<std::uint64_t> diffuse_phase_seed = std::nullopt) {
    SourceImage img = make_source_grid(grid);
    LosFrame fr = los_frame(render_geom);
    Vec3 u_detect = los_frame(model.geometry).u;
    double kw = render_geom.wavenumber();
    detail::OffGrid off;
    for (std::size_t i = 0; i < model.scatterers.size(); ++i) {
        const Scatterer& s = model.scatterers[i];
        cplx amp = s.amplitude;
        if (!s.coherent && diffuse_phase_seed) {
            Rng rng(hash_mix(*diffuse_phase_seed, std::uint64_t(i)));
            amp = std::polar(std::abs(s.amplitude), rng.uniform(0.0, 2.0 * kPi));
        }
        amp *= directivity_gain(s, u_detect, fr.u, kw);
        detail::splat(img, slant_range(fr, s.position), cross_range(fr, s.position), amp, off, i);
    }
    off.raise();
    return img;
}

// ---- sensor model ----

struct SensorModel {
    enum class Window { Taylor, Rect };

    Window window = Window::Taylor;
    double res_range = 0.3;  // m, -3 dB width of the rect-window response
    double res_cross = 0.3;
    double px_range = 0.2;   // m, output pixel spacing
    double px_cross = 0.2;
    double taylor_sll_db = -35.0; // design peak sidelobe (negative dB)
    int taylor_nbar = 4;
    double nesigma0_db = -30.0;
    double calibration = 1.0; // amplitude per sqrt(m^2)

    void validate() const {
        if (!(res_range > 0) || !(res_cross > 0) || !(px_range > 0) || !(px_cross > 0))
            throw Error("sensor: resolutions and spacings must be > 0");
        if (res_range < px_range || res_cross < px_cross)
            throw Error("sensor: resolution finer than the output spacing aliases the chip");
        if (window == Window::Taylor) {
            if (!(taylor_sll_db < -20.0)) throw Error("sensor: Taylor sidelobe level must be below -20 dB");
            if (taylor_nbar < 2) throw Error("sensor: Taylor nbar must be >= 2");
        }
        if (!std::isfinite(from_db(nesigma0_db))) throw Error("sensor: NESigma0 yields non-finite power");
    }

    static SensorModel mstar_like() { return SensorModel{}; }
    static SensorModel rect_preset() {
        SensorModel s;
        s.window = Window::Rect;
        return s;
    }
};

// The `resolution` fields are the nominal (Rayleigh) resolution 1/B, so the
// rect-window -3 dB width is kRectWidth * res and the Taylor-weighted width
// comes out broader (about 1.19 * res at -35 dB, nbar 4).
inline constexpr double kRectWidth = 0.8858929413;

// Taylor taper coefficients F_m, m = 1..nbar-1, for w(u) = 1 + 2 sum F_m cos(2 pi m u)
inline std::vector<double> taylor_coefficients(double sll_db, int nbar) {
    double atten = std::pow(10.0, -sll_db / 20.0); // sll_db is negative
    double A = std::acosh(atten) / kPi;
    double sigma2 = double(nbar) * double(nbar) / (A * A + (double(nbar) - 0.5) * (double(nbar) - 0.5));
    std::vector<double> F(std::size_t(nbar - 1));
    for (int m = 1; m < nbar; ++m) {
        double num = 1.0, den = 1.0;
        for (int n = 1; n < nbar; ++n) {
            num *= 1.0 - double(m) * double(m) / (sigma2 * (A * A + (double(n) - 0.5) * (double(n) - 0.5)));
            if (n != m) den *= 1.0 - double(m) * double(m) / (double(n) * double(n));
        }
        F[std::size_t(m - 1)] = (m % 2 ? 0.5 : -0.5) * num / den;
    }
    return F;
}

struct IprKernel {
    std::vector<double> range_taps; // odd length, centered, DC gain 1
    std::vector<double> cross_taps;

    double energy() const {
        double er = 0, ec = 0;
        for (double t : range_taps) er += t * t;
        for (double t : cross_taps) ec += t * t;
        return er * ec;
    }
};

namespace detail {

// closed form of the band-limited Taylor-weighted impulse response:
//   h(x) = B [ sinc(pi B x) + sum_m F_m (sinc(pi(Bx - m)) + sinc(pi(Bx + m))) ]
inline std::vector<double> ipr_axis(const SensorModel& s, double res, double dx) {
    double B = 1.0 / res;
    if (B * dx > 1.0 + 1e-12) throw Error("ipr_kernel: resolution finer than the oversampled grid supports");
    std::vector<double> F;
    if (s.window == SensorModel::Window::Taylor) F = taylor_coefficients(s.taylor_sll_db, s.taylor_nbar);
    int half = int(std::ceil(12.0 * res / dx));
    std::vector<double> taps(std::size_t(2 * half + 1));
    double sum = 0;
    for (int n = -half; n <= half; ++n) {
        double bx = B * double(n) * dx;
        double v = sinc(kPi * bx);
        for (std::size_t m = 0; m < F.size(); ++m) {
            double mm = double(m + 1);
            v += F[m] * (sinc(kPi * (bx - mm)) + sinc(kPi * (bx + mm)));
        }
        taps[std::size_t(n + half)] = v;
        sum += v;
    }
    for (auto& t : taps) t /= sum; // DC gain exactly 1
    return taps;
}

} // namespace detail

inline IprKernel ipr_kernel(const SensorModel& sensor, int oversampling) {
    sensor.validate();
    if (oversampling < 1) throw Error("ipr_kernel: oversampling must be >= 1");
    IprKernel k;
    k.range_taps = detail::ipr_axis(sensor, sensor.res_range, sensor.px_range / oversampling);
    k.cross_taps = detail::ipr_axis(sensor, sensor.res_cross, sensor.px_cross / oversampling);
    return k;
}

// ---- clutter ----

struct ClutterModel {
    enum class Family : std::uint8_t { None = 0, Rayleigh = 1, Weibull = 2, K = 3 };

    Family family = Family::None;
    double mean_sigma0_db = -15.0;
    double shape = 1.0; // Weibull shape c, or K-distribution nu

    void validate() const {
        if (family == Family::Weibull && !(shape > 0)) throw Error("clutter: Weibull shape must be > 0");
        if (family == Family::K && !(shape > 0)) throw Error("clutter: K shape nu must be > 0");
    }
};

inline const char* family_name(ClutterModel::Family f) {
    switch (f) {
        case ClutterModel::Family::Rayleigh: return "rayleigh";
        case ClutterModel::Family::Weibull: return "weibull";
        case ClutterModel::Family::K: return "k";
        default: return "none";
    }
}

// i.i.d. complex field whose magnitude follows the family; mean power per
// pixel = mean sigma0 * pixel_area. Deterministic in seed.
inline std::vector<cplx> synth_clutter(const ClutterModel& model, int w, int h, double pixel_area,
                                       std::uint64_t seed) {
    model.validate();
    std::vector<cplx> field(std::size_t(w) * h, cplx{});
    if (model.family == ClutterModel::Family::None) return field;
    double power = from_db(model.mean_sigma0_db) * pixel_area;
    Rng rng(hash_mix(seed, std::uint64_t{0xc1a77e3}));
    switch (model.family) {
        case ClutterModel::Family::Rayleigh:
            for (auto& v : field) v = rng.circular_gaussian(power);
            break;
        case ClutterModel::Family::Weibull: {
            double scale = std::sqrt(power / std::tgamma(1.0 + 2.0 / model.shape));
            for (auto& v : field) {
                double u = std::max(rng.uniform01(), 0x1.0p-53);
                double mag = scale * std::pow(-std::log(u), 1.0 / model.shape);
                v = std::polar(mag, rng.uniform(0.0, 2.0 * kPi));
            }
            break;
        }
        case ClutterModel::Family::K:
            for (auto& v : field) {
                double texture = rng.gamma_mean_one(model.shape);
                v = rng.circular_gaussian(power) * std::sqrt(texture);
            }
            break;
        default:
            break;
    }
    return field;
}

// ---- chip formation ----

struct ChipMeta {
    std::string label;
    std::string paradigm;
    double azimuth_deg = 0, depression_deg = 0, frequency_hz = 0;
    std::uint64_t job_seed = 0, clutter_seed = 0, noise_seed = 0, phase_seed = 0;
    SensorModel sensor;
    ClutterModel clutter;
    // concrete randomization draw, recorded for replay
    int dropout_k = 0, translate_dx = 0, translate_dy = 0;
};

struct RadarChip {
    std::vector<double> mag; // magnitude grid at output spacing, row-major
    int w = 0, h = 0;
    double px_range = 0, px_cross = 0;
    ChipMeta meta;

    double& at(int row, int col) { return mag[std::size_t(row) * w + col]; }
    const double& at(int row, int col) const { return mag[std::size_t(row) * w + col]; }
};

// thermal-noise power per pixel implied by NESigma0: the chip response of a
// distributed sigma0 = NESigma0 surface equals the noise floor
inline double nesigma0_noise_power(const SensorModel& sensor, const IprKernel& kernel, int oversampling) {
    double area = (sensor.px_range / oversampling) * (sensor.px_cross / oversampling);
    return from_db(sensor.nesigma0_db) * area * kernel.energy() * sensor.calibration * sensor.calibration;
}

// (source + clutter) convolved with the separable IPR (spectral product over a
// guard band, cropped), plus circular Gaussian thermal noise, decimated by the
// oversampling factor. Returns the complex output grid.
inline std::vector<cplx> apply_sensor_field(const SourceImage& source, const std::vector<cplx>& clutter,
                                            const SensorModel& sensor, std::uint64_t noise_seed,
                                            bool noise_on = true) {
    sensor.validate();
    if (!clutter.empty() && clutter.size() != source.data.size())
        throw Error("apply_sensor: clutter grid incongruent with source");
    double want_r = sensor.px_range / source.oversampling, want_c = sensor.px_cross / source.oversampling;
    if (std::abs(want_r - source.d_range) > 1e-9 * want_r || std::abs(want_c - source.d_cross) > 1e-9 * want_c)
        throw Error("apply_sensor: sensor pixel spacing does not match the source grid");

    IprKernel kernel = ipr_kernel(sensor, source.oversampling);
    int half_r = int(kernel.range_taps.size() / 2), half_c = int(kernel.cross_taps.size() / 2);

    // guard band = one kernel support on each side, FFT sizes pow2
    std::size_t ph = next_pow2(std::size_t(source.h + 4 * half_r + 1));
    std::size_t pw = next_pow2(std::size_t(source.w + 4 * half_c + 1));
    std::vector<cplx> work(pw * ph, cplx{});
    int off_r = half_r * 2, off_c = half_c * 2;
    for (int r = 0; r < source.h; ++r)
        for (int c = 0; c < source.w; ++c) {
            cplx v = source.at(r, c);
            if (!clutter.empty()) v += clutter[std::size_t(r) * source.w + c];
            work[std::size_t(r + off_r) * pw + std::size_t(c + off_c)] = v * sensor.calibration;
        }
    std::vector<cplx> kern(pw * ph, cplx{});
    for (int r = -half_r; r <= half_r; ++r)
        for (int c = -half_c; c <= half_c; ++c) {
            std::size_t rr = std::size_t((r + int(ph)) % int(ph));
            std::size_t cc = std::size_t((c + int(pw)) % int(pw));
            kern[rr * pw + cc] = kernel.range_taps[std::size_t(r + half_r)] * kernel.cross_taps[std::size_t(c + half_c)];
        }
    fft2d(work, pw, ph, false);
    fft2d(kern, pw, ph, false);
    for (std::size_t i = 0; i < work.size(); ++i) work[i] *= kern[i];
    fft2d(work, pw, ph, true);

    double npow = noise_on ? nesigma0_noise_power(sensor, kernel, source.oversampling) : 0.0;
    Rng noise(hash_mix(noise_seed, std::uint64_t{0x401153}));

    int os = source.oversampling;
    int out_h = source.h / os, out_w = source.w / os;
    std::vector<cplx> out(std::size_t(out_w) * out_h);
    for (int r = 0; r < out_h; ++r)
        for (int c = 0; c < out_w; ++c) {
            cplx v = work[std::size_t(r * os + off_r) * pw + std::size_t(c * os + off_c)];
            if (noise_on) v += noise.circular_gaussian(npow);
            out[std::size_t(r) * out_w + c] = v;
        }
    return out;
}

inline RadarChip apply_sensor(const SourceImage& source, const std::vector<cplx>& clutter, const SensorModel& sensor,
                              std::uint64_t noise_seed, bool noise_on = true) {
    auto field = apply_sensor_field(source, clutter, sensor, noise_seed, noise_on);
    RadarChip chip;
    chip.w = source.w / source.oversampling;
    chip.h = source.h / source.oversampling;
    chip.px_range = sensor.px_range;
    chip.px_cross = sensor.px_cross;
    chip.mag.resize(field.size());
    for (std::size_t i = 0; i < field.size(); ++i) chip.mag[i] = std::abs(field[i]);
    chip.meta.sensor = sensor;
    chip.meta.noise_seed = noise_seed;
    return chip;
}

// log-magnitude mapped onto [0,255] over `dynamic_range_db`, referenced to the
// chip peak; an all-zero chip maps to all black
inline std::vector<std::uint8_t> to_preview(const RadarChip& chip, double dynamic_range_db = 50.0) {
    std::vector<std::uint8_t> img(chip.mag.size(), 0);
    double peak = 0;
    for (double m : chip.mag) peak = std::max(peak, m);
    if (peak <= 0) return img;
    for (std::size_t i = 0; i < chip.mag.size(); ++i) {
        if (chip.mag[i] <= 0) continue;
        double db = 20.0 * std::log10(chip.mag[i] / peak);
        double t = (db + dynamic_range_db) / dynamic_range_db;
        if (t <= 0) continue;
        img[i] = std::uint8_t(std::lround(std::min(1.0, t) * 255.0));
    }
    return img;
}

} // namespace sarsim

#endif
