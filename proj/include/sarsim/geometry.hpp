#ifndef SARSIM_GEOMETRY_HPP
#define SARSIM_GEOMETRY_HPP

#include "vec.hpp"

namespace sarsim {

// Coordinate conventions, shared by both paradigms:
//   right-handed frame, z up, target frame centered on the scene origin;
//   azimuth measured from +x toward +y, depression above the horizon.
// Angles are degrees at this boundary, radians internally.

enum class Pol : std::uint8_t { H = 0, V = 1 };

inline const char* pol_name(Pol p) { return p == Pol::H ? "H" : "V"; }

struct AcquisitionGeometry {
    double azimuth_deg = 0.0;    // [0,360)
    double depression_deg = 17.0; // (0,90)
    double frequency_hz = 10e9;
    Pol tx = Pol::H;
    Pol rx = Pol::H;

    double wavelength() const { return kSpeedOfLight / frequency_hz; }
    double wavenumber() const { return 2.0 * kPi / wavelength(); }

    void validate() const {
        if (!(frequency_hz > 0) || !std::isfinite(frequency_hz)) throw Error("geometry: bad frequency");
        if (!(wavelength() > 0) || !std::isfinite(wavelength())) throw Error("geometry: bad wavelength");
        if (!(depression_deg >= 0.0) || !(depression_deg < 90.0))
            throw Error("geometry: depression must lie in [0,90) degrees");
        if (!std::isfinite(azimuth_deg)) throw Error("geometry: bad azimuth");
    }
};

// (u, c, g): u points from the scene origin toward the sensor, c = normalize(z
// x u) is cross-range, g = u x c completes the right-handed orthonormal triad.
struct LosFrame {
    Vec3 u, c, g;

    // polarization basis perpendicular to u: h along cross-range, v = u x h
    Vec3 h() const { return c; }
    Vec3 v() const { return cross(u, c); }
};

inline LosFrame los_frame(const AcquisitionGeometry& geom) {
    geom.validate();
    double az = deg2rad(geom.azimuth_deg);
    double dep = deg2rad(geom.depression_deg);
    Vec3 u{std::cos(dep) * std::cos(az), std::cos(dep) * std::sin(az), std::sin(dep)};
    Vec3 zxu{-u.y, u.x, 0.0};
    double n = norm(zxu);
    if (n < 1e-12) throw Error("los_frame: cross-range undefined at 90 degree depression");
    Vec3 c = zxu / n;
    return LosFrame{u, c, cross(u, c)};
}

// slant-range coordinate of a point: distance down-range from the reference
// plane through the origin perpendicular to u
inline double slant_range(const LosFrame& f, const Vec3& p) { return -dot(f.u, p); }
inline double cross_range(const LosFrame& f, const Vec3& p) { return dot(f.c, p); }

} // namespace sarsim

#endif
