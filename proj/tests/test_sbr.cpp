#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include <sarsim/io.hpp>
#include <sarsim/sbr.hpp>

using namespace sarsim;

namespace {

AcquisitionGeometry boresight_x(double freq = 10e9) {
    AcquisitionGeometry g;
    g.azimuth_deg = 0;
    g.depression_deg = 0;
    g.frequency_hz = freq;
    return g;
}

double db_of(double rcs) { return to_db(std::max(rcs, 1e-30)); }

} // namespace

TEST_CASE("launch grid arithmetic") {
    TargetMesh plate = make_plate(0.3);
    AccelIndex index(plate);
    SbrConfig cfg;
    cfg.ray_area = 1e-6;
    LaunchGrid g = launch_grid(index, boresight_x(), cfg);
    CHECK(g.spacing == doctest::Approx(1e-3));
    // footprint plus margin, but the plate alone accounts for ~9e4 rays
    CHECK(g.count() > 9e4);
    CHECK(g.count() < 3e5);

    SUBCASE("halving the spacing quadruples the ray count") {
        SbrConfig fine = cfg;
        fine.ray_area = cfg.ray_area / 4.0;
        LaunchGrid g2 = launch_grid(index, boresight_x(), fine);
        CHECK(double(g2.count()) / double(g.count()) == doctest::Approx(4.0).epsilon(0.05));
    }

    SUBCASE("ray budget guard") {
        SbrConfig huge = cfg;
        huge.max_rays = 1000;
        CHECK_THROWS_AS(launch_grid(index, boresight_x(), huge), Error);
    }
}

TEST_CASE("plate RCS matches 4 pi a^4 / lambda^2 within 0.5 dB") {
    TargetMesh plate = make_plate(0.3);
    AccelIndex index(plate);
    AcquisitionGeometry geom = boresight_x();
    SbrConfig cfg;
    cfg.ray_area = 1e-6;
    auto contribs = trace_paths(index, geom, cfg);
    double rcs = rcs_estimate(contribs, Pol::H);
    double lambda = geom.wavelength();
    double expected = 4.0 * kPi * std::pow(0.3, 4) / (lambda * lambda);
    CHECK(std::abs(db_of(rcs) - db_of(expected)) < 0.5);

    SUBCASE("all contributions are single-bounce and finite") {
        for (const auto& c : contribs) {
            CHECK(c.bounces == 1);
            CHECK(std::isfinite(c.amp[0].real()));
            CHECK(std::isfinite(c.amp[0].imag()));
            CHECK(std::isfinite(c.range));
        }
    }

    SUBCASE("phase is reproduced by the recorded round-trip path") {
        double k = geom.wavenumber();
        for (std::size_t i = 0; i < std::min<std::size_t>(contribs.size(), 64); ++i) {
            cplx unwound = contribs[i].amp[0] * std::polar(1.0, k * contribs[i].path_len);
            CHECK(std::abs(unwound.imag()) < 1e-9 * std::abs(unwound));
        }
    }

    SUBCASE("density convergence below 4e-6 m^2") {
        SbrConfig c1 = cfg, c2 = cfg;
        c1.ray_area = 4e-6;
        c2.ray_area = 2e-6;
        double r1 = rcs_estimate(trace_paths(index, geom, c1), Pol::H);
        double r2 = rcs_estimate(trace_paths(index, geom, c2), Pol::H);
        CHECK(std::abs(db_of(r1) - db_of(r2)) < 0.2);
        CHECK(std::abs(db_of(r2) - db_of(rcs)) < 0.2);
    }
}

TEST_CASE("GO sphere RCS is pi r^2 within 1 dB") {
    TargetMesh sphere = make_sphere(0.5, 5);
    AccelIndex index(sphere);
    SbrConfig cfg;
    cfg.ray_area = 4e-6;
    auto contribs = trace_paths(index, boresight_x(), cfg);
    double rcs = rcs_estimate(contribs, Pol::H);
    double expected = kPi * 0.25;
    CHECK(std::abs(db_of(rcs) - db_of(expected)) < 1.0);
}

TEST_CASE("dihedral RCS: multibounce gating and the 8 pi a^2 b^2 / lambda^2 oracle") {
    TargetMesh dihedral = make_dihedral(0.3, 0.3);
    AccelIndex index(dihedral);
    AcquisitionGeometry geom = boresight_x();
    double lambda = geom.wavelength();
    double expected = 8.0 * kPi * std::pow(0.3, 4) / (lambda * lambda);

    SbrConfig cfg;
    cfg.ray_area = 1e-6;
    auto contribs = trace_paths(index, geom, cfg);
    double rcs_n5 = rcs_estimate(contribs, Pol::H);
    CHECK(std::abs(db_of(rcs_n5) - db_of(expected)) < 1.0);

    SUBCASE("double-bounce contributions dominate at the bisector") {
        cplx sum1 = 0, sum2 = 0;
        for (const auto& c : contribs) {
            if (c.bounces == 1) sum1 += c.amp[0];
            if (c.bounces == 2) sum2 += c.amp[0];
        }
        CHECK(std::norm(sum2) > 100.0 * std::norm(sum1));
    }

    SUBCASE("N=1 drops the return by more than 20 dB") {
        SbrConfig n1 = cfg;
        n1.max_bounces = 1;
        double rcs_n1 = rcs_estimate(trace_paths(index, geom, n1), Pol::H);
        CHECK(db_of(rcs_n5) - db_of(rcs_n1) > 20.0);
    }

    SUBCASE("no higher-order path exists: N=5 equals N=2 within 0.1 dB") {
        SbrConfig n2 = cfg;
        n2.max_bounces = 2;
        double rcs_n2 = rcs_estimate(trace_paths(index, geom, n2), Pol::H);
        CHECK(std::abs(db_of(rcs_n5) - db_of(rcs_n2)) < 0.1);
    }

    SUBCASE("even-bounce co-pol sign signature") {
        AcquisitionGeometry gv = geom;
        gv.tx = Pol::V;
        gv.rx = Pol::V;
        auto cv = trace_paths(index, gv, cfg);
        cplx hh = 0, vv = 0;
        for (const auto& c : contribs) hh += c.amp[0];
        for (const auto& c : cv) vv += c.amp[1];
        cplx ratio = hh / vv;
        CHECK(ratio.real() < -0.9); // dihedral: HH ~ -VV
        CHECK(std::abs(ratio.imag()) < 0.1);

        TargetMesh plate = make_plate(0.3);
        AccelIndex pidx(plate);
        auto ph = trace_paths(pidx, geom, cfg);
        auto pv = trace_paths(pidx, gv, cfg);
        cplx phh = 0, pvv = 0;
        for (const auto& c : ph) phh += c.amp[0];
        for (const auto& c : pv) pvv += c.amp[1];
        cplx pratio = phh / pvv;
        CHECK(pratio.real() > 0.9); // plate: HH ~ +VV
    }
}

TEST_CASE("rcs_estimate is a pure order-independent reduction") {
    CHECK(rcs_estimate({}, Pol::H) == 0.0);

    RayContribution c{};
    c.amp[0] = cplx(2.0, 0.0);
    CHECK(rcs_estimate({c}, Pol::H) == doctest::Approx(4.0));

    TargetMesh plate = make_plate(0.3);
    AccelIndex index(plate);
    SbrConfig cfg;
    cfg.ray_area = 1e-5;
    auto contribs = trace_paths(index, boresight_x(), cfg);
    double before = rcs_estimate(contribs, Pol::H);
    std::reverse(contribs.begin(), contribs.end());
    double after = rcs_estimate(contribs, Pol::H);
    CHECK(before == doctest::Approx(after).epsilon(1e-12));
}

TEST_CASE("plate angular sweep: sinc pattern with the first null near asin(lambda/2a)") {
    TargetMesh plate = make_plate(0.3);
    AccelIndex index(plate);
    AcquisitionGeometry geom = boresight_x();
    SbrConfig cfg;
    cfg.ray_area = 4e-6;
    std::vector<double> azs;
    for (double a = 0.0; a <= 10.0; a += 0.05) azs.push_back(a);
    auto sweep = sweep_rcs(index, geom, azs, cfg);
    double lambda = geom.wavelength();
    double null_expected = rad2deg(std::asin(lambda / (2.0 * 0.3)));
    std::size_t i_null = 0;
    for (std::size_t i = 1; i + 1 < sweep.size(); ++i) {
        if (sweep[i].rcs_m2 < sweep[i - 1].rcs_m2 && sweep[i].rcs_m2 <= sweep[i + 1].rcs_m2) {
            i_null = i;
            break;
        }
    }
    REQUIRE(i_null > 0);
    CHECK(std::abs(sweep[i_null].azimuth_deg - null_expected) < 0.2);

    SUBCASE("symmetric target, symmetric sweep") {
        std::vector<double> sym;
        for (double a = -5.0; a <= 5.01; a += 0.5) sym.push_back(a);
        auto table = sweep_rcs(index, geom, sym, cfg);
        std::size_t n = table.size();
        for (std::size_t i = 0; i < n / 2; ++i) {
            double lhs = db_of(table[i].rcs_m2);
            double rhs = db_of(table[n - 1 - i].rcs_m2);
            CHECK(std::abs(lhs - rhs) < 0.1);
        }
    }
}

TEST_CASE("energy sanity across a large ray bundle") {
    TargetMesh scene = merge_meshes(make_dihedral(0.3, 0.3), make_sphere(0.2, 3));
    AccelIndex index(scene);
    AcquisitionGeometry geom = boresight_x();
    SbrConfig cfg;
    cfg.ray_area = 2e-6; // ~2e5 rays over this scene
    auto contribs = trace_paths(index, geom, cfg);
    REQUIRE(contribs.size() > 10000);
    // per-ray bound: tube area times the free-space focusing gain, with the
    // footprint clamp allowing up to a facet-size factor
    double lambda = geom.wavelength();
    double bound = std::sqrt(cfg.ray_area * 4.0 * kPi / (lambda * lambda)) * 10.0;
    for (const auto& c : contribs) {
        for (auto a : c.amp) {
            REQUIRE(std::isfinite(a.real()));
            REQUIRE(std::isfinite(a.imag()));
            REQUIRE(std::abs(a) <= bound);
        }
        REQUIRE(std::isfinite(c.path_len));
        REQUIRE(c.bounces >= 1);
        REQUIRE(c.bounces <= cfg.max_bounces);
    }
}

TEST_CASE("config guards") {
    SbrConfig c;
    c.max_bounces = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = SbrConfig{};
    c.ray_area = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = SbrConfig{};
    c.amp_cutoff = 1.0;
    CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("back side of a single-sided plate returns nothing") {
    TargetMesh plate = make_plate(0.3);
    AccelIndex index(plate);
    AcquisitionGeometry geom = boresight_x();
    geom.azimuth_deg = 180.0;
    auto contribs = trace_paths(index, geom, SbrConfig{});
    CHECK(contribs.empty());
}

TEST_CASE("a facet fully hidden behind a plate never contributes") {
    TargetMesh front = make_plate(0.5);
    TargetMesh hidden = make_plate(0.1);
    translate_mesh(hidden, Vec3{-0.2, 0, 0}); // behind the big plate, seen from +x
    TargetMesh scene = merge_meshes(front, hidden);
    AccelIndex index(scene);
    auto contribs = trace_paths(index, boresight_x(), SbrConfig{});
    REQUIRE_FALSE(contribs.empty());
    for (const auto& c : contribs) {
        CHECK(c.first_facet < 2);
        CHECK(c.last_facet < 2);
    }
}

TEST_CASE("multithreaded tracing is bit-identical to single-threaded") {
    TargetMesh dihedral = make_dihedral(0.2, 0.2);
    AccelIndex index(dihedral);
    SbrConfig cfg;
    cfg.ray_area = 1e-5;
    auto a = trace_paths(index, boresight_x(), cfg, 1);
    auto b = trace_paths(index, boresight_x(), cfg, 8);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].amp[0] == b[i].amp[0]);
        CHECK(a[i].range == b[i].range);
        CHECK(a[i].first_facet == b[i].first_facet);
    }
}

TEST_CASE("contribution dump round-trips") {
    TargetMesh plate = make_plate(0.3);
    AccelIndex index(plate);
    SbrConfig cfg;
    cfg.ray_area = 1e-4;
    auto contribs = trace_paths(index, boresight_x(), cfg);
    auto dir = std::filesystem::temp_directory_path() / "sarsim_sbr_tests";
    std::filesystem::create_directories(dir);
    auto path = dir / "dump.sbrc";
    write_contributions(path, contribs);
    auto back = read_contributions(path);
    REQUIRE(back.size() == contribs.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].amp[0].real() == doctest::Approx(contribs[i].amp[0].real()).epsilon(1e-6));
        CHECK(back[i].bounces == contribs[i].bounces);
        CHECK(back[i].last_facet == contribs[i].last_facet);
    }
    // write -> read -> write is byte-stable
    auto path2 = dir / "dump2.sbrc";
    write_contributions(path2, back);
    auto bytes1 = sarsim::detail::slurp(path);
    auto bytes2 = sarsim::detail::slurp(path2);
    CHECK(bytes1 == bytes2);
}
