#ifndef SARSIM_IO_HPP
#define SARSIM_IO_HPP

#include <algorithm>
#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "augment.hpp"
#include "imaging.hpp"

// On-disk formats. Binary payloads are little-endian 32-bit floats/ints with
// versioned headers; sidecars and manifests are JSON / JSON-lines. Raw chip
// grids are bit-exact under fixed seeds.

static_assert(std::endian::native == std::endian::little, "binary formats are little-endian");

namespace sarsim {

using json = nlohmann::json;

inline std::string checksum_hex(const void* data, std::size_t n) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(data, n)));
    return buf;
}

inline void atomic_write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write '" + tmp.string() + "'");
        out.write(bytes.data(), std::streamsize(bytes.size()));
        if (!out) throw Error("short write to '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

namespace detail {

struct Writer {
    std::string bytes;

    template <typename T>
    void put(T v) {
        static_assert(std::is_trivially_copyable_v<T>);
        bytes.append(reinterpret_cast<const char*>(&v), sizeof(T));
    }
};

struct Reader {
    const char* p;
    const char* end;

    explicit Reader(const std::string& s) : p(s.data()), end(s.data() + s.size()) {}

    template <typename T>
    T get() {
        if (p + sizeof(T) > end) throw Error("truncated binary file");
        T v;
        std::memcpy(&v, p, sizeof(T));
        p += sizeof(T);
        return v;
    }
};

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return s;
}

} // namespace detail

// ---- contribution dump (SBRC v1) ----

inline void write_contributions(const std::filesystem::path& path, const std::vector<RayContribution>& contribs) {
    detail::Writer w;
    w.bytes.append("SBRC", 4);
    w.put<std::uint32_t>(1);
    w.put<std::uint64_t>(contribs.size());
    for (const auto& c : contribs) {
        w.put<float>(float(c.amp[0].real()));
        w.put<float>(float(c.amp[0].imag()));
        w.put<float>(float(c.amp[1].real()));
        w.put<float>(float(c.amp[1].imag()));
        w.put<float>(float(c.path_len));
        w.put<float>(float(c.range));
        w.put<float>(float(c.cross));
        w.put<std::int32_t>(c.bounces);
        w.put<std::int32_t>(c.first_facet);
        w.put<std::int32_t>(c.last_facet);
    }
    atomic_write_file(path, w.bytes);
}

inline std::vector<RayContribution> read_contributions(const std::filesystem::path& path) {
    std::string s = detail::slurp(path);
    detail::Reader r(s);
    if (s.size() < 16 || s.compare(0, 4, "SBRC") != 0) throw Error("not a contribution dump: " + path.string());
    r.p += 4;
    std::uint32_t version = r.get<std::uint32_t>();
    if (version != 1) throw Error("unsupported contribution dump version");
    std::uint64_t n = r.get<std::uint64_t>();
    std::vector<RayContribution> out(n);
    for (auto& c : out) {
        float re_h = r.get<float>(), im_h = r.get<float>(), re_v = r.get<float>(), im_v = r.get<float>();
        c.amp[0] = cplx(re_h, im_h);
        c.amp[1] = cplx(re_v, im_v);
        c.path_len = r.get<float>();
        c.range = r.get<float>();
        c.cross = r.get<float>();
        c.bounces = r.get<std::int32_t>();
        c.first_facet = r.get<std::int32_t>();
        c.last_facet = r.get<std::int32_t>();
    }
    return out;
}

// ---- M3D (M3D1 v1) ----

inline void write_m3d(const std::filesystem::path& path, const M3dModel& m) {
    detail::Writer w;
    w.bytes.append("M3D1", 4);
    w.put<std::uint32_t>(1);
    w.put<double>(m.geometry.azimuth_deg);
    w.put<double>(m.geometry.depression_deg);
    w.put<double>(m.geometry.frequency_hz);
    w.put<std::uint8_t>(std::uint8_t(m.geometry.tx));
    w.put<std::uint8_t>(std::uint8_t(m.geometry.rx));
    w.put<double>(m.config.specular_tol_deg);
    w.put<double>(m.config.ortho_tol_deg);
    w.put<std::int32_t>(m.config.buffer_resolution);
    w.put<double>(m.config.min_effective_area);
    w.put<std::uint8_t>(m.config.visibility == DetectionConfig::Visibility::DepthBuffer ? 0 : 1);
    w.put<std::uint64_t>(m.seed);
    w.put<std::uint64_t>(m.scatterers.size());
    for (const auto& s : m.scatterers) {
        w.put<std::uint8_t>(std::uint8_t(s.kind));
        w.put<std::uint8_t>(std::uint8_t(s.pattern));
        w.put<std::uint8_t>(s.coherent ? 1 : 0);
        for (double v : {s.position.x, s.position.y, s.position.z}) w.put<float>(float(v));
        w.put<float>(float(s.amplitude.real()));
        w.put<float>(float(s.amplitude.imag()));
        w.put<float>(float(s.extent_a));
        w.put<float>(float(s.extent_b));
        for (double v : {s.axis1.x, s.axis1.y, s.axis1.z, s.axis2.x, s.axis2.y, s.axis2.z}) w.put<float>(float(v));
    }
    atomic_write_file(path, w.bytes);
}

inline M3dModel read_m3d(const std::filesystem::path& path) {
    std::string s = detail::slurp(path);
    if (s.size() < 8 || s.compare(0, 4, "M3D1") != 0) throw Error("not an M3D file: " + path.string());
    detail::Reader r(s);
    r.p += 4;
    if (r.get<std::uint32_t>() != 1) throw Error("unsupported M3D version");
    M3dModel m;
    m.geometry.azimuth_deg = r.get<double>();
    m.geometry.depression_deg = r.get<double>();
    m.geometry.frequency_hz = r.get<double>();
    m.geometry.tx = Pol(r.get<std::uint8_t>());
    m.geometry.rx = Pol(r.get<std::uint8_t>());
    m.config.specular_tol_deg = r.get<double>();
    m.config.ortho_tol_deg = r.get<double>();
    m.config.buffer_resolution = r.get<std::int32_t>();
    m.config.min_effective_area = r.get<double>();
    m.config.visibility =
        r.get<std::uint8_t>() == 0 ? DetectionConfig::Visibility::DepthBuffer : DetectionConfig::Visibility::ExactClipping;
    m.seed = r.get<std::uint64_t>();
    std::uint64_t n = r.get<std::uint64_t>();
    m.scatterers.resize(n);
    for (auto& sc : m.scatterers) {
        sc.kind = Scatterer::Kind(r.get<std::uint8_t>());
        sc.pattern = Scatterer::Pattern(r.get<std::uint8_t>());
        sc.coherent = r.get<std::uint8_t>() != 0;
        sc.position = {r.get<float>(), r.get<float>(), r.get<float>()};
        float re = r.get<float>(), im = r.get<float>();
        sc.amplitude = cplx(re, im);
        sc.extent_a = r.get<float>();
        sc.extent_b = r.get<float>();
        sc.axis1 = {r.get<float>(), r.get<float>(), r.get<float>()};
        sc.axis2 = {r.get<float>(), r.get<float>(), r.get<float>()};
    }
    return m;
}

// human-readable companion: counts per kind and the strongest returns
inline std::string m3d_summary(const M3dModel& m) {
    std::vector<std::size_t> order(m.scatterers.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(m.scatterers[a].amplitude) > std::abs(m.scatterers[b].amplitude);
    });
    char line[160];
    std::string out;
    std::snprintf(line, sizeof(line), "m3d azimuth=%.3f depression=%.3f frequency=%.4g seed=%llu\n",
                  m.geometry.azimuth_deg, m.geometry.depression_deg, m.geometry.frequency_hz,
                  static_cast<unsigned long long>(m.seed));
    out += line;
    for (auto kind : {Scatterer::Kind::Plate, Scatterer::Kind::Dihedral, Scatterer::Kind::Trihedral,
                      Scatterer::Kind::Diffuse}) {
        std::snprintf(line, sizeof(line), "count %-9s %zu\n", kind_name(kind), m.count(kind));
        out += line;
    }
    out += "top amplitudes (kind, |amp|^2 dBsm, position):\n";
    for (std::size_t i = 0; i < std::min<std::size_t>(10, order.size()); ++i) {
        const Scatterer& s = m.scatterers[order[i]];
        std::snprintf(line, sizeof(line), "  %-9s %8.2f  (%.3f, %.3f, %.3f)\n", kind_name(s.kind),
                      to_db(std::norm(s.amplitude)), s.position.x, s.position.y, s.position.z);
        out += line;
    }
    return out;
}

// ---- sensor / clutter / meta JSON ----

inline json to_json(const SensorModel& s) {
    return json{{"window", s.window == SensorModel::Window::Taylor ? "taylor" : "rect"},
                {"res_range", s.res_range},
                {"res_cross", s.res_cross},
                {"px_range", s.px_range},
                {"px_cross", s.px_cross},
                {"taylor_sll_db", s.taylor_sll_db},
                {"taylor_nbar", s.taylor_nbar},
                {"nesigma0_db", s.nesigma0_db},
                {"calibration", s.calibration}};
}

inline SensorModel sensor_from_json(const json& j) {
    SensorModel s;
    s.window = j.value("window", "taylor") == std::string("rect") ? SensorModel::Window::Rect : SensorModel::Window::Taylor;
    s.res_range = j.value("res_range", s.res_range);
    s.res_cross = j.value("res_cross", s.res_cross);
    s.px_range = j.value("px_range", s.px_range);
    s.px_cross = j.value("px_cross", s.px_cross);
    s.taylor_sll_db = j.value("taylor_sll_db", s.taylor_sll_db);
    s.taylor_nbar = j.value("taylor_nbar", s.taylor_nbar);
    s.nesigma0_db = j.value("nesigma0_db", s.nesigma0_db);
    s.calibration = j.value("calibration", s.calibration);
    return s;
}

inline json to_json(const ClutterModel& c) {
    return json{{"family", family_name(c.family)}, {"mean_sigma0_db", c.mean_sigma0_db}, {"shape", c.shape}};
}

inline ClutterModel clutter_from_json(const json& j) {
    ClutterModel c;
    std::string fam = j.value("family", "none");
    c.family = fam == "rayleigh"  ? ClutterModel::Family::Rayleigh
               : fam == "weibull" ? ClutterModel::Family::Weibull
               : fam == "k"       ? ClutterModel::Family::K
                                  : ClutterModel::Family::None;
    c.mean_sigma0_db = j.value("mean_sigma0_db", c.mean_sigma0_db);
    c.shape = j.value("shape", c.shape);
    return c;
}

// ---- material table ----

inline MaterialTable load_material_table(const std::filesystem::path& path) {
    json j = json::parse(detail::slurp(path));
    MaterialTable t;
    for (auto& [name, mj] : j.at("materials").items()) {
        Material m;
        std::string kind = mj.value("kind", "pec");
        m.kind = kind == "dielectric" ? Material::Kind::Dielectric : Material::Kind::PEC;
        if (mj.contains("permittivity")) {
            auto& p = mj["permittivity"];
            m.permittivity = cplx(p.at(0).get<double>(), p.at(1).get<double>());
        }
        m.reflectivity = mj.value("reflectivity", 1.0);
        m.roughness_rms = mj.value("roughness_rms", 0.0);
        m.sigma0_db = mj.value("sigma0_db", -15.0);
        m.validate();
        t.materials[name] = m;
    }
    if (j.contains("bindings"))
        for (auto& [group, mat] : j["bindings"].items()) t.bindings[group] = mat.get<std::string>();
    if (t.bindings.empty() && t.materials.size() == 1) t.bindings["*"] = t.materials.begin()->first;
    return t;
}

// ---- chip: raw float32 grid + JSON sidecar + PGM preview ----

inline json chip_sidecar_json(const RadarChip& chip, const std::string& checksum) {
    json seeds{{"job", chip.meta.job_seed},
               {"clutter", chip.meta.clutter_seed},
               {"noise", chip.meta.noise_seed},
               {"phase", chip.meta.phase_seed}};
    json randomized{{"dropout_k", chip.meta.dropout_k},
                    {"translate_dx", chip.meta.translate_dx},
                    {"translate_dy", chip.meta.translate_dy},
                    {"res_range", chip.meta.sensor.res_range},
                    {"res_cross", chip.meta.sensor.res_cross},
                    {"nesigma0_db", chip.meta.sensor.nesigma0_db},
                    {"clutter", to_json(chip.meta.clutter)}};
    return json{{"version", 1},
                {"content", "magnitude"},
                {"width", chip.w},
                {"height", chip.h},
                {"px_range", chip.px_range},
                {"px_cross", chip.px_cross},
                {"label", chip.meta.label},
                {"paradigm", chip.meta.paradigm},
                {"azimuth_deg", chip.meta.azimuth_deg},
                {"depression_deg", chip.meta.depression_deg},
                {"frequency_hz", chip.meta.frequency_hz},
                {"seeds", seeds},
                {"sensor", to_json(chip.meta.sensor)},
                {"randomized", randomized},
                {"checksum", checksum}};
}

inline std::string chip_raw_bytes(const RadarChip& chip) {
    std::string raw(chip.mag.size() * 4, '\0');
    for (std::size_t i = 0; i < chip.mag.size(); ++i) {
        float f = float(chip.mag[i]);
        std::memcpy(raw.data() + i * 4, &f, 4);
    }
    return raw;
}

// writes <path> (raw grid) and <path>.json (sidecar); returns the checksum
inline std::string write_chip(const std::filesystem::path& path, const RadarChip& chip) {
    std::string raw = chip_raw_bytes(chip);
    std::string sum = checksum_hex(raw.data(), raw.size());
    atomic_write_file(path, raw);
    atomic_write_file(path.string() + ".json", chip_sidecar_json(chip, sum).dump(2) + "\n");
    return sum;
}

inline RadarChip read_chip(const std::filesystem::path& path) {
    json j = json::parse(detail::slurp(path.string() + ".json"));
    std::string raw = detail::slurp(path);
    RadarChip chip;
    chip.w = j.at("width").get<int>();
    chip.h = j.at("height").get<int>();
    chip.px_range = j.at("px_range").get<double>();
    chip.px_cross = j.at("px_cross").get<double>();
    if (raw.size() != std::size_t(chip.w) * chip.h * 4) throw Error("chip grid size mismatch: " + path.string());
    chip.mag.resize(std::size_t(chip.w) * chip.h);
    for (std::size_t i = 0; i < chip.mag.size(); ++i) {
        float f;
        std::memcpy(&f, raw.data() + i * 4, 4);
        chip.mag[i] = f;
    }
    chip.meta.label = j.value("label", "");
    chip.meta.paradigm = j.value("paradigm", "");
    chip.meta.azimuth_deg = j.value("azimuth_deg", 0.0);
    chip.meta.depression_deg = j.value("depression_deg", 0.0);
    chip.meta.frequency_hz = j.value("frequency_hz", 0.0);
    if (j.contains("sensor")) chip.meta.sensor = sensor_from_json(j["sensor"]);
    if (j.contains("seeds")) {
        chip.meta.job_seed = j["seeds"].value("job", 0ULL);
        chip.meta.clutter_seed = j["seeds"].value("clutter", 0ULL);
        chip.meta.noise_seed = j["seeds"].value("noise", 0ULL);
        chip.meta.phase_seed = j["seeds"].value("phase", 0ULL);
    }
    return chip;
}

inline void write_pgm(const std::filesystem::path& path, const std::vector<std::uint8_t>& pixels, int w, int h) {
    if (int(pixels.size()) != w * h) throw Error("write_pgm: size mismatch");
    std::string out = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    out.append(reinterpret_cast<const char*>(pixels.data()), pixels.size());
    atomic_write_file(path, out);
}

} // namespace sarsim

#endif
