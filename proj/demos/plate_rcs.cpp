// Sweeps a PEC plate through +-10 degrees and prints the RCS pattern next to
// the closed-form sinc^2 prediction.

#include <cstdio>

#include <sarsim/sarsim.hpp>

using namespace sarsim;

int main() {
    const double a = 0.3;
    TargetMesh plate = make_plate(a);
    AccelIndex index(plate);

    AcquisitionGeometry geom;
    geom.azimuth_deg = 0;
    geom.depression_deg = 0;
    geom.frequency_hz = 10e9;

    SbrConfig cfg;
    cfg.ray_area = 4e-6;

    std::vector<double> azimuths;
    for (double az = -10.0; az <= 10.001; az += 0.25) azimuths.push_back(az);
    auto sweep = sweep_rcs(index, geom, azimuths, cfg);

    double lambda = geom.wavelength();
    double k = 2.0 * kPi / lambda;
    std::printf("azimuth_deg, sbr_dbsm, closed_form_dbsm\n");
    for (const auto& s : sweep) {
        double th = deg2rad(s.azimuth_deg);
        double arg = k * a * std::sin(th);
        double ideal = 4.0 * kPi * std::pow(a, 4) / (lambda * lambda) * std::pow(std::cos(th) * sinc(arg), 2);
        std::printf("%8.2f, %8.2f, %8.2f\n", s.azimuth_deg, to_db(std::max(s.rcs_m2, 1e-12)),
                    to_db(std::max(ideal, 1e-12)));
    }
    return 0;
}
