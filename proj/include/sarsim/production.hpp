#ifndef SARSIM_PRODUCTION_HPP
#define SARSIM_PRODUCTION_HPP

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <optional>
#include <set>
#include <thread>

#include "io.hpp"

namespace sarsim {

// Batch dataset factory: parametric sweeps over targets and geometries, chip
// files plus sidecars on disk, an append-friendly JSON-lines manifest written
// atomically at the end. (config, master seed) fully determine every byte;
// worker count is a hint, never a semantic input.

enum class Paradigm : std::uint8_t { Centers = 0, Sbr = 1 };

inline const char* paradigm_name(Paradigm p) { return p == Paradigm::Centers ? "centers" : "sbr"; }

struct TargetEntry {
    std::string mesh_path;
    std::string material_path; // empty -> PEC default
    std::string label;
    double unit_scale = 1.0;
};

struct ProductionConfig {
    std::vector<TargetEntry> targets;
    std::vector<double> depressions_deg{17.0};
    double azimuth_start = 0.0, azimuth_stop = 360.0, azimuth_step = 0.5;
    double frequency_hz = 10e9;
    Pol tx = Pol::H, rx = Pol::H;
    std::vector<Paradigm> paradigms{Paradigm::Centers, Paradigm::Sbr};
    SensorModel sensor;
    GridConfig grid;
    ClutterModel clutter;                      // fixed-parameter runs
    std::optional<RandomizationPolicy> policy; // randomized runs
    bool noise = true;
    bool write_previews = false;
    std::string output_dir = "dataset";
    std::uint64_t master_seed = 0;
    unsigned workers = 1;
    bool fail_fast = false;
    SbrConfig sbr;
    DetectionConfig detection;

    void validate() const {
        if (!(azimuth_step > 0)) throw Error("config: azimuth step must be > 0");
        if (azimuth_start < 0 || azimuth_stop > 360 || azimuth_stop < azimuth_start)
            throw Error("config: azimuth range must lie inside [0,360]");
        if (paradigms.empty()) throw Error("config: no paradigm selected");
        std::set<std::string> labels;
        for (const auto& t : targets) {
            if (t.label.empty()) throw Error("config: target with empty label");
            if (!labels.insert(t.label).second) throw Error("config: duplicate label '" + t.label + "'");
        }
        if (policy) policy->validate();
        grid.validate();
        sensor.validate();
    }

    std::vector<double> azimuths() const {
        std::vector<double> out;
        for (int i = 0;; ++i) {
            double v = azimuth_start + double(i) * azimuth_step;
            if (v > azimuth_stop + 1e-9) break;
            if (v - azimuth_start >= 360.0 - 1e-9) break; // full circle wraps onto the start
            out.push_back(v);
        }
        return out;
    }
};

inline RandomizationPolicy policy_from_json(const json& j) {
    RandomizationPolicy p;
    auto interval = [&](const char* key, Interval def) {
        if (!j.contains(key)) return def;
        return Interval{j[key].at(0).get<double>(), j[key].at(1).get<double>()};
    };
    p.res_range = interval("res_range", p.res_range);
    p.res_cross = interval("res_cross", p.res_cross);
    p.clutter_sigma0_db = interval("clutter_sigma0_db", p.clutter_sigma0_db);
    p.nesigma0_db = interval("nesigma0_db", p.nesigma0_db);
    if (j.contains("clutter_families")) {
        p.clutter_families.clear();
        for (const auto& f : j["clutter_families"]) p.clutter_families.push_back(clutter_from_json(json{{"family", f}}).family);
    }
    p.clutter_shape = j.value("clutter_shape", p.clutter_shape);
    if (j.contains("translate_limit")) {
        p.translate_limit_x = j["translate_limit"].at(0).get<int>();
        p.translate_limit_y = j["translate_limit"].at(1).get<int>();
    }
    p.dropout_max = j.value("dropout_max", p.dropout_max);
    return p;
}

// production config file: the CLI-facing structured-text surface
inline ProductionConfig config_from_json(const json& j) {
    ProductionConfig c;
    for (const auto& t : j.value("targets", json::array())) {
        TargetEntry e;
        e.mesh_path = t.at("mesh").get<std::string>();
        e.material_path = t.value("materials", "");
        e.label = t.at("label").get<std::string>();
        e.unit_scale = t.value("unit_scale", 1.0);
        c.targets.push_back(std::move(e));
    }
    if (j.contains("depressions_deg")) {
        c.depressions_deg.clear();
        for (const auto& d : j["depressions_deg"]) c.depressions_deg.push_back(d.get<double>());
    }
    if (j.contains("azimuth")) {
        c.azimuth_start = j["azimuth"].value("start", 0.0);
        c.azimuth_stop = j["azimuth"].value("stop", 360.0);
        c.azimuth_step = j["azimuth"].value("step", 0.5);
    }
    c.frequency_hz = j.value("frequency_hz", c.frequency_hz);
    std::string pol = j.value("polarization", "HH");
    if (pol.size() == 2) {
        c.tx = pol[0] == 'V' ? Pol::V : Pol::H;
        c.rx = pol[1] == 'V' ? Pol::V : Pol::H;
    }
    std::string par = j.value("paradigm", "both");
    if (par == "centers")
        c.paradigms = {Paradigm::Centers};
    else if (par == "sbr")
        c.paradigms = {Paradigm::Sbr};
    else if (par == "both")
        c.paradigms = {Paradigm::Centers, Paradigm::Sbr};
    else
        throw Error("config: unknown paradigm '" + par + "'");
    if (j.contains("sensor")) {
        if (j["sensor"].is_string())
            c.sensor = j["sensor"].get<std::string>() == "rect" ? SensorModel::rect_preset() : SensorModel::mstar_like();
        else
            c.sensor = sensor_from_json(j["sensor"]);
    }
    if (j.contains("grid")) {
        const auto& g = j["grid"];
        c.grid.width = g.value("width", c.grid.width);
        c.grid.height = g.value("height", c.grid.height);
        c.grid.px_range = g.value("px_range", c.grid.px_range);
        c.grid.px_cross = g.value("px_cross", c.grid.px_cross);
        c.grid.oversampling = g.value("oversampling", c.grid.oversampling);
    }
    // the sensor preset and the focusing grid must agree on pixel spacing
    c.grid.px_range = c.sensor.px_range;
    c.grid.px_cross = c.sensor.px_cross;
    if (j.contains("clutter")) c.clutter = clutter_from_json(j["clutter"]);
    if (j.contains("randomization") && !j["randomization"].is_null()) c.policy = policy_from_json(j["randomization"]);
    c.noise = j.value("noise", true);
    c.write_previews = j.value("previews", false);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.master_seed = j.value("master_seed", 0ULL);
    c.workers = j.value("workers", 1u);
    c.fail_fast = j.value("fail_fast", false);
    if (j.contains("sbr")) {
        const auto& s = j["sbr"];
        c.sbr.max_bounces = s.value("max_bounces", c.sbr.max_bounces);
        c.sbr.ray_area = s.value("ray_area", c.sbr.ray_area);
        c.sbr.amp_cutoff = s.value("amp_cutoff", c.sbr.amp_cutoff);
        c.sbr.aperture_margin = s.value("aperture_margin", c.sbr.aperture_margin);
    }
    if (j.contains("detection")) {
        const auto& d = j["detection"];
        c.detection.specular_tol_deg = d.value("specular_tol_deg", c.detection.specular_tol_deg);
        c.detection.ortho_tol_deg = d.value("ortho_tol_deg", c.detection.ortho_tol_deg);
        c.detection.buffer_resolution = d.value("buffer_resolution", c.detection.buffer_resolution);
        c.detection.min_effective_area = d.value("min_effective_area", c.detection.min_effective_area);
        c.detection.visibility = d.value("visibility", "depth-buffer") == std::string("exact-clipping")
                                     ? DetectionConfig::Visibility::ExactClipping
                                     : DetectionConfig::Visibility::DepthBuffer;
    }
    c.validate();
    return c;
}

inline ProductionConfig load_production_config(const std::filesystem::path& path) {
    return config_from_json(json::parse(detail::slurp(path)));
}

struct Job {
    std::size_t target_index = 0;
    std::string label;
    double azimuth_deg = 0, depression_deg = 0;
    Paradigm paradigm = Paradigm::Centers;
    std::uint64_t seed = 0;
    std::string rel_path;
};

inline std::uint64_t job_seed(std::uint64_t master, const std::string& label, double az, double dep, Paradigm p) {
    return hash_mix(master, label, std::uint64_t(std::llround(az * 1000.0) + 1000000),
                    std::uint64_t(std::llround(dep * 1000.0) + 1000000), std::uint64_t(p));
}

inline std::string job_rel_path(const Job& j) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%s/%s_d%05.1f_a%05.1f.chip", j.label.c_str(), paradigm_name(j.paradigm),
                  j.depression_deg, j.azimuth_deg);
    return buf;
}

// cartesian product targets x depressions x azimuths x paradigms, each job
// with its derived deterministic seed
inline std::vector<Job> plan_production(const ProductionConfig& cfg) {
    cfg.validate();
    if (cfg.targets.empty()) return {};
    auto azs = cfg.azimuths();
    if (cfg.depressions_deg.empty() || azs.empty())
        throw Error("plan: empty depression or azimuth sweep with targets configured");
    for (const auto& t : cfg.targets)
        if (!std::filesystem::exists(t.mesh_path)) throw Error("plan: mesh path does not exist: " + t.mesh_path);
    std::vector<Job> jobs;
    jobs.reserve(cfg.targets.size() * cfg.depressions_deg.size() * azs.size() * cfg.paradigms.size());
    for (std::size_t t = 0; t < cfg.targets.size(); ++t)
        for (double dep : cfg.depressions_deg)
            for (double az : azs)
                for (Paradigm p : cfg.paradigms) {
                    Job j;
                    j.target_index = t;
                    j.label = cfg.targets[t].label;
                    j.azimuth_deg = az;
                    j.depression_deg = dep;
                    j.paradigm = p;
                    j.seed = job_seed(cfg.master_seed, j.label, az, dep, p);
                    j.rel_path = job_rel_path(j);
                    jobs.push_back(std::move(j));
                }
    return jobs;
}

struct ManifestRecord {
    std::string label;
    double azimuth_deg = 0, depression_deg = 0;
    std::string paradigm;
    std::uint64_t seed = 0;
    std::string file; // relative to the manifest directory
    std::string checksum;
    json sensor;
};

struct Manifest {
    std::vector<ManifestRecord> records;
    std::vector<std::string> errors; // per-job failures under the continue policy

    json record_json(const ManifestRecord& r) const {
        return json{{"label", r.label},     {"azimuth_deg", r.azimuth_deg}, {"depression_deg", r.depression_deg},
                    {"paradigm", r.paradigm}, {"seed", r.seed},             {"file", r.file},
                    {"checksum", r.checksum}, {"sensor", r.sensor}};
    }

    std::string to_jsonl() const {
        std::string out;
        for (const auto& r : records) out += record_json(r).dump() + "\n";
        for (const auto& e : errors) out += json{{"error", e}}.dump() + "\n";
        return out;
    }
};

inline Manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open manifest '" + path.string() + "'");
    Manifest m;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        if (j.contains("error")) {
            m.errors.push_back(j["error"].get<std::string>());
            continue;
        }
        ManifestRecord r;
        r.label = j.at("label").get<std::string>();
        r.azimuth_deg = j.at("azimuth_deg").get<double>();
        r.depression_deg = j.at("depression_deg").get<double>();
        r.paradigm = j.at("paradigm").get<std::string>();
        r.seed = j.value("seed", 0ULL);
        r.file = j.at("file").get<std::string>();
        r.checksum = j.value("checksum", "");
        if (j.contains("sensor")) r.sensor = j["sensor"];
        m.records.push_back(std::move(r));
    }
    return m;
}

inline void save_manifest(const std::filesystem::path& path, const Manifest& m) {
    atomic_write_file(path, m.to_jsonl());
}

// union of datasets; file paths must be disjoint
inline Manifest combine_datasets(const std::vector<Manifest>& manifests) {
    Manifest out;
    std::set<std::string> paths;
    for (const auto& m : manifests) {
        for (const auto& r : m.records) {
            if (!paths.insert(r.file).second) throw Error("combine: path collision on '" + r.file + "'");
            out.records.push_back(r);
        }
        out.errors.insert(out.errors.end(), m.errors.begin(), m.errors.end());
    }
    return out;
}

namespace detail {

struct SimInputs {
    std::optional<M3dModel> m3d;
    std::optional<std::vector<RayContribution>> contribs;
};

struct TargetScene {
    TargetMesh mesh;
    std::optional<AccelIndex> index;
};

} // namespace detail

struct ProductionResult {
    Manifest manifest;
    std::size_t planned = 0;
    std::size_t skipped = 0; // resumed from disk
    std::size_t failed = 0;
};

inline ProductionResult run_production(const ProductionConfig& cfg, unsigned workers_override = 0) {
    auto jobs = plan_production(cfg);
    std::filesystem::path out_dir(cfg.output_dir);
    std::filesystem::create_directories(out_dir);

    unsigned workers = workers_override;
    if (!workers) {
        if (const char* env = std::getenv("SARSIM_WORKERS")) workers = unsigned(std::atoi(env));
        if (!workers) workers = cfg.workers ? cfg.workers : 1;
    }

    // scenes loaded once, shared read-only
    std::vector<std::unique_ptr<detail::TargetScene>> scenes(cfg.targets.size());
    std::mutex scene_mu;
    auto scene_for = [&](std::size_t t) -> detail::TargetScene& {
        std::lock_guard<std::mutex> lock(scene_mu);
        if (!scenes[t]) {
            auto sc = std::make_unique<detail::TargetScene>();
            MaterialTable table = cfg.targets[t].material_path.empty()
                                      ? MaterialTable::single(pec_material())
                                      : load_material_table(cfg.targets[t].material_path);
            sc->mesh = load_mesh(cfg.targets[t].mesh_path, cfg.targets[t].unit_scale, table);
            recenter_to_bbox(sc->mesh); // target frame centered on the bbox centroid
            sc->index.emplace(sc->mesh);
            scenes[t] = std::move(sc);
        }
        return *scenes[t];
    };

    std::vector<std::optional<ManifestRecord>> records(jobs.size());
    std::vector<std::string> errors(jobs.size());
    std::atomic<std::size_t> next{0}, skipped{0};
    std::atomic<bool> abort{false};

    auto run_job = [&](std::size_t ji) {
        const Job& job = jobs[ji];
        std::filesystem::path chip_path = out_dir / job.rel_path;
        std::filesystem::create_directories(chip_path.parent_path());

        // resume: a chip whose sidecar checksum validates is not recomputed
        if (std::filesystem::exists(chip_path) && std::filesystem::exists(chip_path.string() + ".json")) {
            std::string raw = detail::slurp(chip_path);
            json side = json::parse(detail::slurp(chip_path.string() + ".json"));
            if (side.value("checksum", "") == checksum_hex(raw.data(), raw.size())) {
                ManifestRecord r;
                r.label = job.label;
                r.azimuth_deg = job.azimuth_deg;
                r.depression_deg = job.depression_deg;
                r.paradigm = paradigm_name(job.paradigm);
                r.seed = job.seed;
                r.file = job.rel_path;
                r.checksum = side["checksum"].get<std::string>();
                r.sensor = side.value("sensor", json::object());
                records[ji] = std::move(r);
                ++skipped;
                return;
            }
        }

        detail::TargetScene& scene = scene_for(job.target_index);
        AcquisitionGeometry geom;
        geom.azimuth_deg = job.azimuth_deg;
        geom.depression_deg = job.depression_deg;
        geom.frequency_hz = cfg.frequency_hz;
        geom.tx = cfg.tx;
        geom.rx = cfg.rx;

        detail::SimInputs sim;
        ChipInputs inputs = static_cast<const M3dModel*>(nullptr);
        if (job.paradigm == Paradigm::Centers) {
            std::uint64_t m3d_seed = hash_mix(job.seed, std::string_view("m3d"));
            sim.m3d = assemble_m3d(scene.mesh, geom, cfg.detection, m3d_seed);
            inputs = &*sim.m3d;
        } else {
            sim.contribs = trace_paths(*scene.index, geom, cfg.sbr, 1);
            inputs = &*sim.contribs;
        }

        RadarChip chip;
        if (cfg.policy) {
            RandomizationPolicy pol = *cfg.policy;
            pol.master_seed = hash_mix(cfg.master_seed, std::string_view("policy"));
            chip = augment_chip(inputs, geom, cfg.grid, cfg.sensor, pol, job.seed);
        } else {
            RandomizedParams p;
            p.res_range = cfg.sensor.res_range;
            p.res_cross = cfg.sensor.res_cross;
            p.nesigma0_db = cfg.sensor.nesigma0_db;
            p.clutter_family = cfg.clutter.family;
            p.clutter_sigma0_db = cfg.clutter.mean_sigma0_db;
            p.clutter_seed = hash_mix(job.seed, std::string_view("clutter"));
            p.noise_seed = hash_mix(job.seed, std::string_view("noise"));
            p.phase_seed = hash_mix(job.seed, std::string_view("phase"));
            chip = make_chip(inputs, geom, cfg.grid, cfg.sensor, cfg.clutter, p, cfg.noise);
        }
        chip.meta.label = job.label;
        chip.meta.paradigm = paradigm_name(job.paradigm);
        chip.meta.job_seed = job.seed;

        std::string sum = write_chip(chip_path, chip);
        if (cfg.write_previews) {
            auto pix = to_preview(chip);
            write_pgm(chip_path.string() + ".pgm", pix, chip.w, chip.h);
        }
        ManifestRecord r;
        r.label = job.label;
        r.azimuth_deg = job.azimuth_deg;
        r.depression_deg = job.depression_deg;
        r.paradigm = paradigm_name(job.paradigm);
        r.seed = job.seed;
        r.file = job.rel_path;
        r.checksum = sum;
        r.sensor = to_json(chip.meta.sensor);
        records[ji] = std::move(r);
    };

    auto worker = [&] {
        for (;;) {
            std::size_t ji = next.fetch_add(1);
            if (ji >= jobs.size() || abort.load()) return;
            try {
                run_job(ji);
            } catch (const std::exception& e) {
                errors[ji] = std::string(e.what());
                if (cfg.fail_fast) abort.store(true);
            }
        }
    };

    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    ProductionResult res;
    res.planned = jobs.size();
    res.skipped = skipped.load();
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (records[i]) {
            res.manifest.records.push_back(std::move(*records[i]));
        } else if (!errors[i].empty()) {
            ++res.failed;
            res.manifest.errors.push_back(jobs[i].rel_path + ": " + errors[i]);
        }
    }
    if (cfg.fail_fast && res.failed) throw Error("production failed: " + res.manifest.errors.front());
    save_manifest(out_dir / "manifest.jsonl", res.manifest);
    return res;
}

// ---- cross-paradigm comparison ----

struct Similarity {
    double ncc = 0;           // peak-aligned normalized cross-correlation of magnitudes
    bool degenerate = false;  // a zero chip: NCC defined as 0 by convention
    double quad_delta_db[4] = {0, 0, 0, 0}; // per-quadrant mean power delta (a vs b)
    int shift_rows = 0, shift_cols = 0;
};

inline Similarity compare_paradigms(const RadarChip& a, const RadarChip& b) {
    if (a.w != b.w || a.h != b.h) throw Error("compare: chip dimensions differ");
    Similarity s;
    auto argmax = [](const RadarChip& c) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < c.mag.size(); ++i)
            if (c.mag[i] > c.mag[best]) best = i;
        return best;
    };
    double peak_a = a.mag.empty() ? 0 : a.mag[argmax(a)];
    double peak_b = b.mag.empty() ? 0 : b.mag[argmax(b)];
    if (peak_a <= 0 || peak_b <= 0) {
        s.degenerate = true;
        return s;
    }
    std::size_t ia = argmax(a), ib = argmax(b);
    int ar = int(ia) / a.w, ac = int(ia) % a.w;
    int br = int(ib) / b.w, bc = int(ib) % b.w;
    s.shift_rows = ar - br;
    s.shift_cols = ac - bc;

    double sum_a = 0, sum_b = 0;
    std::size_t n = 0;
    auto overlap = [&](auto&& fn) {
        for (int r = 0; r < a.h; ++r) {
            int rb = r - s.shift_rows;
            if (rb < 0 || rb >= a.h) continue;
            for (int c = 0; c < a.w; ++c) {
                int cb = c - s.shift_cols;
                if (cb < 0 || cb >= a.w) continue;
                fn(a.at(r, c), b.at(rb, cb));
            }
        }
    };
    overlap([&](double va, double vb) {
        sum_a += va;
        sum_b += vb;
        ++n;
    });
    if (!n) {
        s.degenerate = true;
        return s;
    }
    double mean_a = sum_a / double(n), mean_b = sum_b / double(n);
    double num = 0, den_a = 0, den_b = 0;
    overlap([&](double va, double vb) {
        num += (va - mean_a) * (vb - mean_b);
        den_a += (va - mean_a) * (va - mean_a);
        den_b += (vb - mean_b) * (vb - mean_b);
    });
    if (den_a <= 0 || den_b <= 0) {
        s.degenerate = true;
        return s;
    }
    s.ncc = num / std::sqrt(den_a * den_b);

    for (int q = 0; q < 4; ++q) {
        int r0 = (q / 2) * a.h / 2, c0 = (q % 2) * a.w / 2;
        double pa = 0, pb = 0;
        for (int r = r0; r < r0 + a.h / 2; ++r)
            for (int c = c0; c < c0 + a.w / 2; ++c) {
                pa += a.at(r, c) * a.at(r, c);
                pb += b.at(r, c) * b.at(r, c);
            }
        s.quad_delta_db[q] = (pa > 0 && pb > 0) ? to_db(pa / pb) : 0.0;
    }
    return s;
}

// ---- dataset summary ----

struct MetricsReport {
    std::size_t record_count = 0;
    std::map<std::string, std::size_t> coverage; // label -> chip count
    std::vector<std::string> gaps;               // missing (label, depression, azimuth, paradigm) cells
    std::vector<std::string> missing_files;
    std::map<std::string, double> peak_db;  // label -> mean chip peak
    std::map<std::string, double> floor_db; // label -> mean clutter floor (border median)
    std::vector<json> similarity;           // per-cell cross-paradigm records

    json to_json() const {
        json cov = json::object(), pk = json::object(), fl = json::object();
        for (const auto& [k, v] : coverage) cov[k] = v;
        for (const auto& [k, v] : peak_db) pk[k] = v;
        for (const auto& [k, v] : floor_db) fl[k] = v;
        return json{{"record_count", record_count}, {"coverage", cov},           {"gaps", gaps},
                    {"missing_files", missing_files}, {"peak_db", pk},           {"floor_db", fl},
                    {"similarity", similarity}};
    }
};

inline MetricsReport summarize(const Manifest& manifest, const std::filesystem::path& base_dir) {
    MetricsReport rep;
    rep.record_count = manifest.records.size();

    std::set<std::string> labels, paradigms;
    std::set<long long> deps, azs;
    auto key_of = [](const ManifestRecord& r) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%s|%.3f|%.3f|%s", r.label.c_str(), r.depression_deg, r.azimuth_deg,
                      r.paradigm.c_str());
        return std::string(buf);
    };
    std::set<std::string> present;
    for (const auto& r : manifest.records) {
        labels.insert(r.label);
        paradigms.insert(r.paradigm);
        deps.insert(std::llround(r.depression_deg * 1000));
        azs.insert(std::llround(r.azimuth_deg * 1000));
        present.insert(key_of(r));
        ++rep.coverage[r.label];
    }

    // coverage closure: every (label, depression, azimuth, paradigm) seen in
    // the manifest should exist for every label
    for (const auto& lbl : labels)
        for (long long d : deps)
            for (long long a : azs)
                for (const auto& par : paradigms) {
                    char buf[160];
                    std::snprintf(buf, sizeof(buf), "%s|%.3f|%.3f|%s", lbl.c_str(), double(d) / 1000.0,
                                  double(a) / 1000.0, par.c_str());
                    if (!present.count(buf)) rep.gaps.push_back(buf);
                }

    std::map<std::string, std::pair<double, std::size_t>> peak_acc, floor_acc;
    std::map<std::string, const ManifestRecord*> by_cell_centers, by_cell_sbr;
    for (const auto& r : manifest.records) {
        std::filesystem::path p = base_dir / r.file;
        if (!std::filesystem::exists(p)) {
            rep.missing_files.push_back(r.file);
            rep.gaps.push_back(key_of(r) + " (file missing)");
            continue;
        }
        RadarChip chip = read_chip(p);
        double peak = 0;
        for (double m : chip.mag) peak = std::max(peak, m);
        std::vector<double> border;
        int ring = std::max(1, chip.h / 10);
        for (int r2 = 0; r2 < chip.h; ++r2)
            for (int c2 = 0; c2 < chip.w; ++c2)
                if (r2 < ring || r2 >= chip.h - ring || c2 < ring || c2 >= chip.w - ring)
                    border.push_back(chip.at(r2, c2) * chip.at(r2, c2));
        std::nth_element(border.begin(), border.begin() + border.size() / 2, border.end());
        double floor_pow = border.empty() ? 0 : border[border.size() / 2];
        if (peak > 0) {
            peak_acc[r.label].first += to_db(peak * peak);
            ++peak_acc[r.label].second;
        }
        if (floor_pow > 0) {
            floor_acc[r.label].first += to_db(floor_pow);
            ++floor_acc[r.label].second;
        }
        char cell[160];
        std::snprintf(cell, sizeof(cell), "%s|%.3f|%.3f", r.label.c_str(), r.depression_deg, r.azimuth_deg);
        if (r.paradigm == "centers") by_cell_centers[cell] = &r;
        if (r.paradigm == "sbr") by_cell_sbr[cell] = &r;
    }
    for (const auto& [k, acc] : peak_acc) rep.peak_db[k] = acc.first / double(acc.second);
    for (const auto& [k, acc] : floor_acc) rep.floor_db[k] = acc.first / double(acc.second);

    for (const auto& [cell, ra] : by_cell_centers) {
        auto it = by_cell_sbr.find(cell);
        if (it == by_cell_sbr.end()) continue;
        RadarChip a = read_chip(base_dir / ra->file);
        RadarChip b = read_chip(base_dir / it->second->file);
        Similarity s = compare_paradigms(a, b);
        rep.similarity.push_back(json{{"cell", cell},
                                      {"ncc", s.ncc},
                                      {"degenerate", s.degenerate},
                                      {"quad_delta_db", {s.quad_delta_db[0], s.quad_delta_db[1], s.quad_delta_db[2],
                                                         s.quad_delta_db[3]}}});
    }
    return rep;
}

} // namespace sarsim

#endif
