#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include <sarsim/augment.hpp>
#include <sarsim/centers.hpp>

using namespace sarsim;

namespace {

AcquisitionGeometry boresight_x() {
    AcquisitionGeometry g;
    g.azimuth_deg = 0;
    g.depression_deg = 0;
    g.frequency_hz = 10e9;
    return g;
}

GridConfig small_grid(int n = 32, int os = 2) {
    GridConfig g;
    g.width = g.height = n;
    g.px_range = g.px_cross = 0.2;
    g.oversampling = os;
    return g;
}

// Kolmogorov-Smirnov statistic against U(lo, hi)
double ks_uniform(std::vector<double> xs, double lo, double hi) {
    std::sort(xs.begin(), xs.end());
    double d = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double f = (xs[i] - lo) / (hi - lo);
        d = std::max(d, std::abs(f - double(i) / double(xs.size())));
        d = std::max(d, std::abs(f - double(i + 1) / double(xs.size())));
    }
    return d;
}

RandomizationPolicy wide_policy() {
    RandomizationPolicy p;
    p.res_range = {0.25, 0.4};
    p.res_cross = {0.25, 0.4};
    p.clutter_sigma0_db = {-20.0, -10.0};
    p.clutter_families = {ClutterModel::Family::Rayleigh, ClutterModel::Family::Weibull, ClutterModel::Family::K};
    p.clutter_shape = 2.0;
    p.nesigma0_db = {-30.0, -20.0};
    p.translate_limit_x = 4;
    p.translate_limit_y = 4;
    p.dropout_max = 3;
    p.master_seed = 99;
    return p;
}

M3dModel plate_plus_diffuse() {
    TargetMesh plate = make_plate(0.3, 0.3, pec_material(-10.0));
    DetectionConfig cfg;
    cfg.visibility = DetectionConfig::Visibility::ExactClipping;
    return assemble_m3d(plate, boresight_x(), cfg, 1);
}

double chip_peak(const RadarChip& c) {
    double m = 0;
    for (double v : c.mag) m = std::max(m, v);
    return m;
}

} // namespace

TEST_CASE("sample_params") {
    SUBCASE("degenerate intervals give the bounds exactly") {
        RandomizationPolicy p;
        p.res_range = {0.3, 0.3};
        p.res_cross = {0.3, 0.3};
        p.clutter_sigma0_db = {-15, -15};
        p.nesigma0_db = {-30, -30};
        p.translate_limit_x = p.translate_limit_y = 0;
        p.dropout_max = 0;
        RandomizedParams r = sample_params(p, 123);
        CHECK(r.res_range == 0.3);
        CHECK(r.res_cross == 0.3);
        CHECK(r.clutter_sigma0_db == -15.0);
        CHECK(r.nesigma0_db == -30.0);
        CHECK(r.translate_dx == 0);
        CHECK(r.translate_dy == 0);
        CHECK(r.dropout_k == 0);
    }

    SUBCASE("pure function of (policy, index); distinct indices differ") {
        RandomizationPolicy p = wide_policy();
        RandomizedParams a = sample_params(p, 7);
        RandomizedParams b = sample_params(p, 7);
        CHECK(a.res_range == b.res_range);
        CHECK(a.clutter_seed == b.clutter_seed);
        CHECK(a.noise_seed == b.noise_seed);
        RandomizedParams c = sample_params(p, 8);
        CHECK(a.clutter_seed != c.clutter_seed);
    }

    SUBCASE("uniformity: KS < 0.02 at 1e4 draws per parameter") {
        RandomizationPolicy p = wide_policy();
        std::vector<double> res, sig, nes;
        for (int i = 0; i < 10000; ++i) {
            RandomizedParams r = sample_params(p, std::uint64_t(i));
            res.push_back(r.res_range);
            sig.push_back(r.clutter_sigma0_db);
            nes.push_back(r.nesigma0_db);
        }
        CHECK(ks_uniform(res, 0.25, 0.4) < 0.02);
        CHECK(ks_uniform(sig, -20, -10) < 0.02);
        CHECK(ks_uniform(nes, -30, -20) < 0.02);
    }

    SUBCASE("interval containment under fuzzing") {
        RandomizationPolicy p = wide_policy();
        for (int i = 0; i < 100000; ++i) {
            RandomizedParams r = sample_params(p, std::uint64_t(i));
            CHECK(r.res_range >= 0.25);
            CHECK(r.res_range <= 0.4);
            CHECK(r.clutter_sigma0_db >= -20);
            CHECK(r.clutter_sigma0_db <= -10);
            CHECK(r.nesigma0_db >= -30);
            CHECK(r.nesigma0_db <= -20);
            CHECK(std::abs(r.translate_dx) <= 4);
            CHECK(std::abs(r.translate_dy) <= 4);
            CHECK(r.dropout_k >= 0);
            CHECK(r.dropout_k <= 3);
        }
    }

    SUBCASE("family draws cover the configured set") {
        RandomizationPolicy p = wide_policy();
        std::map<ClutterModel::Family, int> counts;
        for (int i = 0; i < 3000; ++i) ++counts[sample_params(p, std::uint64_t(i)).clutter_family];
        CHECK(counts.size() == 3);
        for (auto& [fam, n] : counts) CHECK(n > 700); // roughly uniform over 3 families
    }

    SUBCASE("empty intervals are rejected") {
        RandomizationPolicy p;
        p.res_range = {0.4, 0.3};
        CHECK_THROWS_AS(sample_params(p, 0), Error);
    }
}

TEST_CASE("streaming iterator hands out the same work units as direct sampling") {
    RandomizationPolicy p = wide_policy();
    AugmentStream a(p);
    AugmentStream b(p, 5);
    for (int i = 0; i < 5; ++i) a.next();
    for (int i = 0; i < 20; ++i) {
        auto [ia, pa] = a.next();
        auto [ib, pb] = b.next();
        CHECK(ia == ib);
        CHECK(pa.res_range == pb.res_range);
        CHECK(pa.clutter_seed == pb.clutter_seed);
        RandomizedParams direct = sample_params(p, ia);
        CHECK(pa.noise_seed == direct.noise_seed);
        CHECK(pa.translate_dx == direct.translate_dx);
    }
}

TEST_CASE("drop_bright_points") {
    M3dModel m;
    m.geometry = boresight_x();
    auto add = [&](double mag) {
        Scatterer s;
        s.kind = Scatterer::Kind::Diffuse;
        s.amplitude = mag;
        m.scatterers.push_back(s);
    };
    add(3);
    add(2);
    add(1);

    SUBCASE("k = 0 is the identity") {
        M3dModel out = drop_bright_points(m, 0);
        REQUIRE(out.scatterers.size() == 3);
        CHECK(std::abs(out.scatterers[0].amplitude) == 3);
    }

    SUBCASE("k = 1 drops the strongest, order preserved") {
        M3dModel out = drop_bright_points(m, 1);
        REQUIRE(out.scatterers.size() == 2);
        CHECK(std::abs(out.scatterers[0].amplitude) == 2);
        CHECK(std::abs(out.scatterers[1].amplitude) == 1);
    }

    SUBCASE("k beyond the length empties the list") {
        CHECK(drop_bright_points(m, 10).scatterers.empty());
    }

    SUBCASE("ties break by input order") {
        M3dModel t;
        t.geometry = m.geometry;
        for (int i = 0; i < 4; ++i) {
            Scatterer s;
            s.amplitude = 1.0;
            s.position = Vec3{double(i), 0, 0};
            t.scatterers.push_back(s);
        }
        M3dModel out = drop_bright_points(t, 2);
        REQUIRE(out.scatterers.size() == 2);
        CHECK(out.scatterers[0].position.x == 2.0);
        CHECK(out.scatterers[1].position.x == 3.0);
    }

    SUBCASE("contribution lists use the stronger receive channel") {
        std::vector<RayContribution> cs(3);
        cs[0].amp[0] = 5.0;
        cs[1].amp[1] = 7.0;
        cs[2].amp[0] = 1.0;
        auto out = drop_bright_points(cs, 1);
        REQUIRE(out.size() == 2);
        CHECK(std::abs(out[0].amp[0]) == 5.0);
        CHECK(std::abs(out[1].amp[0]) == 1.0);
    }
}

TEST_CASE("translate_target") {
    GridConfig g = small_grid();
    RayContribution p{};
    p.amp[0] = cplx(1, 2);
    p.range = 0.3;
    p.cross = -0.7;
    SourceImage src = rasterize(std::vector<RayContribution>{p}, Pol::H, g);

    SUBCASE("zero shift is the identity") {
        SourceImage out = translate_target(src, 0, 0);
        CHECK(out.data == src.data);
    }

    SUBCASE("shift and unshift restore the grid; complex sum conserved") {
        SourceImage out = translate_target(translate_target(src, 3, -2), -3, 2);
        CHECK(out.data == src.data);
        CHECK(std::abs(translate_target(src, 3, -2).coherent_sum() - src.coherent_sum()) < 1e-15);
    }

    SUBCASE("pushing content off the grid is an error") {
        CHECK_THROWS_AS(translate_target(src, 1000, 0), Error);
    }
}

TEST_CASE("augment_chip") {
    M3dModel model = plate_plus_diffuse();
    AcquisitionGeometry geom = boresight_x();
    GridConfig grid = small_grid(32, 2);
    SensorModel sensor = SensorModel::mstar_like();

    SUBCASE("identity policy reproduces the unaugmented chip byte for byte") {
        RandomizationPolicy p;
        p.res_range = {0.3, 0.3};
        p.res_cross = {0.3, 0.3};
        p.clutter_sigma0_db = {-15, -15};
        p.clutter_families = {ClutterModel::Family::Rayleigh};
        p.nesigma0_db = {-30, -30};
        p.translate_limit_x = p.translate_limit_y = 0;
        p.dropout_max = 0;
        p.master_seed = 5;
        RadarChip aug = augment_chip(&model, geom, grid, sensor, p, 42);

        RandomizedParams fixed = sample_params(p, 42);
        ClutterModel cm;
        cm.shape = p.clutter_shape;
        RadarChip plain = make_chip(&model, geom, grid, sensor, cm, fixed, true);
        CHECK(aug.mag == plain.mag);
    }

    SUBCASE("different image indices give different chips") {
        RandomizationPolicy p = wide_policy();
        RadarChip a = augment_chip(&model, geom, grid, sensor, p, 1);
        RadarChip b = augment_chip(&model, geom, grid, sensor, p, 2);
        CHECK(a.mag != b.mag);
    }

    SUBCASE("reruns are byte-identical (purity)") {
        RandomizationPolicy p = wide_policy();
        RadarChip a = augment_chip(&model, geom, grid, sensor, p, 11);
        RadarChip b = augment_chip(&model, geom, grid, sensor, p, 11);
        CHECK(a.mag == b.mag);
        CHECK(a.meta.dropout_k == b.meta.dropout_k);
    }

    SUBCASE("dropping the dominant plate strictly lowers the noise-free peak") {
        RandomizedParams p;
        p.res_range = p.res_cross = 0.3;
        p.clutter_family = ClutterModel::Family::None;
        p.nesigma0_db = -30;
        ClutterModel none;
        RadarChip with = make_chip(&model, geom, grid, SensorModel::mstar_like(), none, p, false);
        p.dropout_k = 1;
        RadarChip without = make_chip(&model, geom, grid, SensorModel::mstar_like(), none, p, false);
        CHECK(chip_peak(without) < chip_peak(with));
    }

    SUBCASE("dropout monotonicity: peak non-increasing in k, noise-free") {
        Rng rng(4);
        M3dModel synth;
        synth.geometry = geom;
        double mag = 8.0;
        for (int i = 0; i < 10; ++i) {
            Scatterer s;
            s.kind = Scatterer::Kind::Diffuse;
            // positions separated by >= 3 output pixels, geometric amplitude ladder
            s.position = Vec3{0.2 * double(-8 + (i * 5) % 16), 0.2 * double(-8 + (i * 7) % 16), 0};
            s.amplitude = std::polar(mag, rng.uniform(0.0, 2 * kPi));
            mag *= 0.75;
            synth.scatterers.push_back(s);
        }
        RandomizedParams p;
        p.res_range = p.res_cross = 0.3;
        p.clutter_family = ClutterModel::Family::None;
        ClutterModel none;
        double prev = 1e300;
        for (int k = 0; k <= 5; ++k) {
            p.dropout_k = k;
            RadarChip chip = make_chip(&synth, geom, grid, SensorModel::mstar_like(), none, p, false);
            double peak = chip_peak(chip);
            CHECK(peak <= prev + 1e-12);
            prev = peak;
        }
    }

    SUBCASE("translation shifts the noise-free chip correlation peak exactly") {
        RandomizedParams p;
        p.res_range = p.res_cross = 0.3;
        p.clutter_family = ClutterModel::Family::None;
        ClutterModel none;
        RadarChip base = make_chip(&model, geom, grid, SensorModel::mstar_like(), none, p, false);
        p.translate_dx = 3;
        p.translate_dy = 0;
        RadarChip moved = make_chip(&model, geom, grid, SensorModel::mstar_like(), none, p, false);
        auto argpeak = [](const RadarChip& c) {
            std::size_t best = 0;
            for (std::size_t i = 0; i < c.mag.size(); ++i)
                if (c.mag[i] > c.mag[best]) best = i;
            return std::pair<int, int>(int(best) / c.w, int(best) % c.w);
        };
        auto [r0, c0] = argpeak(base);
        auto [r1, c1] = argpeak(moved);
        CHECK(r1 == r0);
        CHECK(c1 == c0 + 3);
    }

    SUBCASE("clutter level spread across many chips tracks the policy interval") {
        RandomizationPolicy p = wide_policy();
        p.clutter_families = {ClutterModel::Family::Rayleigh};
        p.translate_limit_x = p.translate_limit_y = 0;
        p.dropout_max = 0;
        p.nesigma0_db = {-60, -60}; // noise floor far below clutter
        M3dModel empty_model;
        empty_model.geometry = geom;
        GridConfig tiny = small_grid(16, 1);
        std::vector<double> level_db;
        for (int i = 0; i < 600; ++i) {
            RadarChip chip = augment_chip(&empty_model, geom, tiny, SensorModel::mstar_like(), p, std::uint64_t(i));
            double pmean = 0;
            for (double m : chip.mag) pmean += m * m;
            level_db.push_back(to_db(pmean / double(chip.mag.size())));
        }
        double mean = 0;
        for (double v : level_db) mean += v;
        mean /= double(level_db.size());
        double var = 0;
        for (double v : level_db) var += (v - mean) * (v - mean);
        double sd = std::sqrt(var / double(level_db.size() - 1));
        double expect_sd = 10.0 / std::sqrt(12.0); // uniform over a 10 dB interval
        CHECK(sd == doctest::Approx(expect_sd).epsilon(0.10));
    }
}
