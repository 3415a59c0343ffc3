// Command-line surface for the dual-paradigm SAR simulator: plan and run
// dataset productions, combine and summarize manifests, compare chips,
// render previews, and run RCS validation sweeps.

#include <CLI11.hpp>

#include <iostream>

#include <sarsim/sarsim.hpp>

using namespace sarsim;

namespace {

int exit_config_error(const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
}

std::vector<double> parse_sweep(const std::string& spec) {
    double start = 0, stop = 0, step = 1;
    if (std::sscanf(spec.c_str(), "%lf:%lf:%lf", &start, &stop, &step) != 3 || step <= 0)
        throw Error("bad sweep '" + spec + "', expected start:stop:step");
    std::vector<double> out;
    for (double v = start; v <= stop + 1e-9; v += step) out.push_back(v);
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"sarsim: dual-paradigm SAR target-signature simulator and dataset factory"};
    app.require_subcommand(1);

    std::string config_path, out_path, base_dir = ".", paradigm_override, pol = "HH";
    std::vector<std::string> manifest_paths;
    std::string chip_a, chip_b, mesh_path, material_path;
    unsigned workers = 0;
    bool fail_fast = false, previews = false, recenter = false;
    double dynamic_range = 50.0, freq = 10e9, depression = 17.0, unit_scale = 1.0, ray_area = 1e-6;
    int bounces = 5;
    std::string azimuth_sweep = "0:359.5:0.5";

    auto* plan = app.add_subcommand("plan", "report the job list implied by a production config");
    plan->add_option("config", config_path, "production config JSON")->required();

    auto* produce = app.add_subcommand("produce", "run a production (resumable, deterministic)");
    produce->add_option("config", config_path, "production config JSON")->required();
    produce->add_option("--paradigm", paradigm_override, "centers|sbr|both (overrides the config)");
    produce->add_option("--workers", workers, "worker threads (or env SARSIM_WORKERS)");
    produce->add_flag("--fail-fast", fail_fast, "abort the batch on the first job error");
    produce->add_flag("--previews", previews, "also write PGM previews");

    auto* combine = app.add_subcommand("combine", "union of dataset manifests");
    combine->add_option("manifests", manifest_paths, "input manifest.jsonl files")->required()->expected(-1);
    combine->add_option("-o,--output", out_path, "output manifest path")->required();

    auto* compare = app.add_subcommand("compare", "cross-paradigm chip similarity");
    compare->add_option("chip_a", chip_a, "first chip file")->required();
    compare->add_option("chip_b", chip_b, "second chip file")->required();

    auto* summarize_cmd = app.add_subcommand("summarize", "coverage and statistics report for a manifest");
    summarize_cmd->add_option("manifest", config_path, "manifest.jsonl")->required();
    summarize_cmd->add_option("--base-dir", base_dir, "directory chip paths are relative to");
    summarize_cmd->add_option("-o,--output", out_path, "write the JSON report here (default stdout)");

    auto* preview = app.add_subcommand("preview", "render a chip to an 8-bit PGM");
    preview->add_option("chip", chip_a, "chip file")->required();
    preview->add_option("-o,--output", out_path, "output PGM (default <chip>.pgm)");
    preview->add_option("--dynamic-range", dynamic_range, "dB below peak mapped to black");

    auto* rcs = app.add_subcommand("rcs", "RCS-vs-azimuth validation sweep");
    rcs->add_option("mesh", mesh_path, "mesh file (OBJ or binary STL)")->required();
    rcs->add_option("--materials", material_path, "material table JSON");
    rcs->add_option("--scale", unit_scale, "meters per model unit");
    rcs->add_option("--freq", freq, "center frequency, Hz");
    rcs->add_option("--depression", depression, "depression angle, degrees");
    rcs->add_option("--azimuth", azimuth_sweep, "start:stop:step degrees");
    rcs->add_option("--paradigm", paradigm_override, "sbr (default) or centers");
    rcs->add_option("--ray-area", ray_area, "SBR ray tube cross-section, m^2");
    rcs->add_option("--bounces", bounces, "SBR maximum bounce order");
    rcs->add_option("--pol", pol, "polarization channel, e.g. HH or VV");
    rcs->add_flag("--recenter", recenter, "center the mesh bbox on the origin first");
    rcs->add_option("-o,--output", out_path, "write CSV here (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*plan) {
            ProductionConfig cfg = load_production_config(config_path);
            auto jobs = plan_production(cfg);
            std::map<std::string, std::size_t> per_paradigm;
            for (const auto& j : jobs) ++per_paradigm[paradigm_name(j.paradigm)];
            std::cout << "jobs: " << jobs.size() << "\n";
            for (const auto& [p, n] : per_paradigm) std::cout << "  " << p << ": " << n << "\n";
            std::cout << "targets: " << cfg.targets.size() << ", depressions: " << cfg.depressions_deg.size()
                      << ", azimuths: " << cfg.azimuths().size() << "\n";
            return 0;
        }
        if (*produce) {
            ProductionConfig cfg = load_production_config(config_path);
            if (!paradigm_override.empty()) {
                if (paradigm_override == "centers")
                    cfg.paradigms = {Paradigm::Centers};
                else if (paradigm_override == "sbr")
                    cfg.paradigms = {Paradigm::Sbr};
                else if (paradigm_override == "both")
                    cfg.paradigms = {Paradigm::Centers, Paradigm::Sbr};
                else
                    throw Error("unknown paradigm '" + paradigm_override + "'");
            }
            if (fail_fast) cfg.fail_fast = true;
            if (previews) cfg.write_previews = true;
            std::cout << "planned jobs: " << plan_production(cfg).size() << "\n";
            auto res = run_production(cfg, workers);
            std::cout << "planned " << res.planned << ", written "
                      << res.manifest.records.size() - res.skipped << ", resumed " << res.skipped << ", failed "
                      << res.failed << "\n";
            std::cout << "manifest: " << (std::filesystem::path(cfg.output_dir) / "manifest.jsonl").string() << "\n";
            return res.failed ? 2 : 0;
        }
        if (*combine) {
            std::vector<Manifest> inputs;
            for (const auto& p : manifest_paths) inputs.push_back(load_manifest(p));
            Manifest merged = combine_datasets(inputs);
            save_manifest(out_path, merged);
            std::cout << "records: " << merged.records.size() << "\n";
            return 0;
        }
        if (*compare) {
            RadarChip a = read_chip(chip_a);
            RadarChip b = read_chip(chip_b);
            Similarity s = compare_paradigms(a, b);
            json out{{"ncc", s.ncc},
                     {"degenerate", s.degenerate},
                     {"shift", {s.shift_rows, s.shift_cols}},
                     {"quad_delta_db",
                      {s.quad_delta_db[0], s.quad_delta_db[1], s.quad_delta_db[2], s.quad_delta_db[3]}}};
            std::cout << out.dump(2) << "\n";
            return 0;
        }
        if (*summarize_cmd) {
            Manifest m = load_manifest(config_path);
            std::filesystem::path base = base_dir == "." ? std::filesystem::path(config_path).parent_path()
                                                         : std::filesystem::path(base_dir);
            MetricsReport rep = summarize(m, base);
            std::string text = rep.to_json().dump(2) + "\n";
            if (out_path.empty())
                std::cout << text;
            else
                atomic_write_file(out_path, text);
            return 0;
        }
        if (*preview) {
            RadarChip chip = read_chip(chip_a);
            auto pix = to_preview(chip, dynamic_range);
            std::string dest = out_path.empty() ? chip_a + ".pgm" : out_path;
            write_pgm(dest, pix, chip.w, chip.h);
            std::cout << dest << "\n";
            return 0;
        }
        if (*rcs) {
            MaterialTable table =
                material_path.empty() ? MaterialTable::single(pec_material()) : load_material_table(material_path);
            TargetMesh mesh = load_mesh(mesh_path, unit_scale, table);
            if (recenter) recenter_to_bbox(mesh);
            AcquisitionGeometry geom;
            geom.frequency_hz = freq;
            geom.depression_deg = depression;
            geom.tx = pol.size() == 2 && pol[0] == 'V' ? Pol::V : Pol::H;
            geom.rx = pol.size() == 2 && pol[1] == 'V' ? Pol::V : Pol::H;
            auto azimuths = parse_sweep(azimuth_sweep);

            std::string csv = "azimuth_deg,rcs_m2,rcs_dbsm\n";
            if (paradigm_override == "centers") {
                DetectionConfig dcfg;
                for (double az : azimuths) {
                    AcquisitionGeometry g = geom;
                    g.azimuth_deg = az;
                    M3dModel m = assemble_m3d(mesh, g, dcfg, 0);
                    double r = m3d_rcs(m, g);
                    char line[96];
                    std::snprintf(line, sizeof(line), "%.3f,%.8g,%.3f\n", az, r, to_db(std::max(r, 1e-30)));
                    csv += line;
                }
            } else {
                AccelIndex index(mesh);
                SbrConfig cfg;
                cfg.ray_area = ray_area;
                cfg.max_bounces = bounces;
                auto sweep = sweep_rcs(index, geom, azimuths, cfg);
                for (const auto& s : sweep) {
                    char line[96];
                    std::snprintf(line, sizeof(line), "%.3f,%.8g,%.3f\n", s.azimuth_deg, s.rcs_m2,
                                  to_db(std::max(s.rcs_m2, 1e-30)));
                    csv += line;
                }
            }
            if (out_path.empty())
                std::cout << csv;
            else
                atomic_write_file(out_path, csv);
            return 0;
        }
    } catch (const std::exception& e) {
        return exit_config_error(e);
    }
    return 0;
}
