#ifndef SARSIM_MESH_HPP
#define SARSIM_MESH_HPP

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "vec.hpp"

namespace sarsim {

// Electromagnetic surface description bound to facet groups.
//
// Time convention is exp(+j w t): a lossy dielectric has Im(eps_r) <= 0.
// `reflectivity` scales reflected power per bounce (amplitude gets its square
// root); `roughness_rms` attenuates the coherent specular component with the
// Rayleigh factor exp(-2 (k s cos(theta))^2); `sigma0_db` feeds the
// non-coherent backscatter fill.
struct Material {
    enum class Kind { PEC, Dielectric };

    Kind kind = Kind::PEC;
    cplx permittivity{1.0, 0.0}; // relative; ignored for PEC
    double reflectivity = 1.0;   // [0,1] power scale
    double roughness_rms = 0.0;  // m
    double sigma0_db = -15.0;    // backscatter coefficient, dB

    void validate() const {
        if (reflectivity < 0.0 || reflectivity > 1.0) throw Error("material: reflectivity outside [0,1]");
        if (!std::isfinite(sigma0_db)) throw Error("material: sigma0 not finite");
        if (roughness_rms < 0.0) throw Error("material: negative roughness");
        if (kind == Kind::Dielectric) {
            if (!std::isfinite(permittivity.real()) || !std::isfinite(permittivity.imag()))
                throw Error("material: non-finite permittivity");
            if (permittivity.imag() > 1e-12)
                throw Error("material: permittivity must have non-positive imaginary part (exp(+jwt) convention)");
        }
    }
};

inline Material pec_material(double sigma0_db = -15.0) {
    Material m;
    m.kind = Material::Kind::PEC;
    m.sigma0_db = sigma0_db;
    return m;
}

struct Facet {
    Vec3 v0, v1, v2;
    Vec3 normal;   // unit, from vertex winding
    double area = 0;
    int material = 0; // index into TargetMesh::materials
};

struct TargetMesh {
    std::vector<Facet> facets;
    std::vector<Material> materials;
    std::vector<std::string> material_names;
    Vec3 bbox_min, bbox_max;
    std::size_t degenerate_dropped = 0;

    bool empty() const { return facets.empty(); }
    Vec3 bbox_center() const { return (bbox_min + bbox_max) * 0.5; }
    double bbox_diagonal() const { return norm(bbox_max - bbox_min); }

    void recompute_bounds() {
        if (facets.empty()) {
            bbox_min = bbox_max = Vec3{};
            return;
        }
        bbox_min = bbox_max = facets[0].v0;
        for (const auto& f : facets)
            for (const Vec3* v : {&f.v0, &f.v1, &f.v2}) {
                bbox_min = min3(bbox_min, *v);
                bbox_max = max3(bbox_max, *v);
            }
    }
};

namespace detail {

constexpr double kDegenerateArea = 1e-12; // m^2, below this a facet is dropped

inline bool finish_facet(Facet& f) {
    Vec3 n = cross(f.v1 - f.v0, f.v2 - f.v0);
    double a2 = norm(n);
    f.area = 0.5 * a2;
    if (!(f.area > kDegenerateArea) || !finite(f.v0) || !finite(f.v1) || !finite(f.v2)) return false;
    f.normal = n / a2;
    return true;
}

} // namespace detail

inline void append_facet(TargetMesh& mesh, Vec3 a, Vec3 b, Vec3 c, int material = 0) {
    Facet f;
    f.v0 = a;
    f.v1 = b;
    f.v2 = c;
    f.material = material;
    if (detail::finish_facet(f))
        mesh.facets.push_back(f);
    else
        ++mesh.degenerate_dropped;
}

// Material table: name -> Material plus facet-group bindings. Serialized as
// JSON elsewhere (io.hpp); the in-memory form is what loaders consume.
struct MaterialTable {
    std::map<std::string, Material> materials;
    std::map<std::string, std::string> bindings; // facet group -> material name; "*" is the default

    const Material* resolve(const std::string& group) const {
        auto b = bindings.find(group);
        if (b == bindings.end()) b = bindings.find("*");
        if (b == bindings.end()) return nullptr;
        auto m = materials.find(b->second);
        return m == materials.end() ? nullptr : &m->second;
    }

    static MaterialTable single(const Material& m, const std::string& name = "default") {
        MaterialTable t;
        t.materials[name] = m;
        t.bindings["*"] = name;
        return t;
    }
};

namespace detail {

struct GroupBinder {
    const MaterialTable& table;
    TargetMesh& mesh;
    std::map<std::string, int> index;
    std::set<std::string> groups_seen;

    int material_for(const std::string& group) {
        groups_seen.insert(group);
        auto it = index.find(group);
        if (it != index.end()) return it->second;
        const Material* m = table.resolve(group);
        if (!m) throw Error("load_mesh: no material bound for facet group '" + group + "' and no '*' default");
        m->validate();
        int id = int(mesh.materials.size());
        mesh.materials.push_back(*m);
        mesh.material_names.push_back(group);
        index[group] = id;
        return id;
    }

    // a binding that names a group the file never declares is a config error
    void check_bindings_used() const {
        for (const auto& [group, mat] : table.bindings) {
            if (group == "*") continue;
            if (!groups_seen.count(group))
                throw Error("load_mesh: material binding references facet group '" + group +
                            "' which is absent from the file");
        }
    }
};

inline TargetMesh load_obj(std::istream& in, double unit_scale, const MaterialTable& table) {
    TargetMesh mesh;
    GroupBinder binder{table, mesh, {}, {}};
    std::vector<Vec3> verts;
    std::string line, current_group = "default";
    int current_mat = -1;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag.empty() || tag[0] == '#') continue;
        if (tag == "v") {
            Vec3 v;
            if (!(ls >> v.x >> v.y >> v.z)) throw Error("load_mesh: bad vertex at line " + std::to_string(lineno));
            verts.push_back(v * unit_scale);
        } else if (tag == "g" || tag == "o" || tag == "usemtl") {
            std::string name;
            ls >> name;
            if (!name.empty()) binder.groups_seen.insert(name);
            if (!name.empty() && (tag != "usemtl" || table.bindings.count(name))) {
                current_group = name;
                current_mat = -1;
            }
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string tok;
            while (ls >> tok) {
                // "v", "v/t", "v//n", "v/t/n" forms; only the vertex index matters
                int vi = std::atoi(tok.c_str());
                if (vi == 0) throw Error("load_mesh: bad face index at line " + std::to_string(lineno));
                if (vi < 0) vi = int(verts.size()) + vi + 1;
                if (vi < 1 || vi > int(verts.size()))
                    throw Error("load_mesh: face index out of range at line " + std::to_string(lineno));
                idx.push_back(vi - 1);
            }
            if (idx.size() < 3) throw Error("load_mesh: face with <3 vertices at line " + std::to_string(lineno));
            if (current_mat < 0) current_mat = binder.material_for(current_group);
            for (std::size_t i = 2; i < idx.size(); ++i)
                append_facet(mesh, verts[idx[0]], verts[idx[i - 1]], verts[idx[i]], current_mat);
        }
    }
    binder.check_bindings_used();
    return mesh;
}

inline TargetMesh load_stl_binary(std::istream& in, double unit_scale, const MaterialTable& table) {
    TargetMesh mesh;
    GroupBinder binder{table, mesh, {}, {}};
    binder.groups_seen.insert("default");
    int mat = binder.material_for("default"); // STL has no facet groups; the '*' binding applies
    binder.check_bindings_used();
    char header[80];
    in.read(header, 80);
    std::uint32_t count = 0;
    in.read(reinterpret_cast<char*>(&count), 4);
    if (!in) throw Error("load_mesh: truncated STL header");
    for (std::uint32_t i = 0; i < count; ++i) {
        float rec[12];
        std::uint16_t attr;
        in.read(reinterpret_cast<char*>(rec), sizeof(rec));
        in.read(reinterpret_cast<char*>(&attr), 2);
        if (!in) throw Error("load_mesh: truncated STL record " + std::to_string(i));
        // rec[0..2] is the stored normal; winding is authoritative here
        Vec3 a{rec[3], rec[4], rec[5]}, b{rec[6], rec[7], rec[8]}, c{rec[9], rec[10], rec[11]};
        append_facet(mesh, a * unit_scale, b * unit_scale, c * unit_scale, mat);
    }
    return mesh;
}

} // namespace detail

// Loads Wavefront OBJ (text, with g/o groups) or binary STL, scales model
// units to meters, binds materials, drops degenerate facets (count kept on the
// mesh). Throws on unparsable input or an unresolvable material binding.
inline TargetMesh load_mesh(const std::string& path, double unit_scale, const MaterialTable& table) {
    if (!(unit_scale > 0.0)) throw Error("load_mesh: unit_scale must be > 0");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("load_mesh: cannot open '" + path + "'");
    for (const auto& [group, mat] : table.bindings) {
        if (!table.materials.count(mat))
            throw Error("load_mesh: binding '" + group + "' references unknown material '" + mat + "'");
    }
    TargetMesh mesh;
    auto ends_with = [&](const char* suf) {
        std::size_t n = std::strlen(suf);
        return path.size() >= n && path.compare(path.size() - n, n, suf) == 0;
    };
    if (ends_with(".stl") || ends_with(".STL"))
        mesh = detail::load_stl_binary(in, unit_scale, table);
    else
        mesh = detail::load_obj(in, unit_scale, table);
    if (mesh.facets.empty()) throw Error("load_mesh: no non-degenerate facets in '" + path + "'");
    mesh.recompute_bounds();
    return mesh;
}

inline void translate_mesh(TargetMesh& mesh, const Vec3& d) {
    for (auto& f : mesh.facets) {
        f.v0 += d;
        f.v1 += d;
        f.v2 += d;
    }
    mesh.recompute_bounds();
}

// rotation about +z by angle (radians), for aspect sweeps on static meshes
inline void rotate_mesh_z(TargetMesh& mesh, double angle) {
    double c = std::cos(angle), s = std::sin(angle);
    auto rot = [&](Vec3& v) { v = Vec3{c * v.x - s * v.y, s * v.x + c * v.y, v.z}; };
    for (auto& f : mesh.facets) {
        rot(f.v0);
        rot(f.v1);
        rot(f.v2);
        rot(f.normal);
    }
    mesh.recompute_bounds();
}

inline void recenter_to_bbox(TargetMesh& mesh) { translate_mesh(mesh, -mesh.bbox_center()); }

inline TargetMesh merge_meshes(const TargetMesh& a, const TargetMesh& b) {
    TargetMesh out = a;
    int mat_off = int(out.materials.size());
    out.materials.insert(out.materials.end(), b.materials.begin(), b.materials.end());
    out.material_names.insert(out.material_names.end(), b.material_names.begin(), b.material_names.end());
    for (Facet f : b.facets) {
        f.material += mat_off;
        out.facets.push_back(f);
    }
    out.degenerate_dropped += b.degenerate_dropped;
    out.recompute_bounds();
    return out;
}

// ---- canonical target constructors (validation geometry) ----

// square plate, side `a`, centered at origin in the x=0 plane, normal +x
inline TargetMesh make_plate(double a, double b = -1, const Material& m = pec_material()) {
    if (b <= 0) b = a;
    TargetMesh mesh;
    mesh.materials.push_back(m);
    mesh.material_names.push_back("plate");
    Vec3 p00{0, -a / 2, -b / 2}, p10{0, a / 2, -b / 2}, p11{0, a / 2, b / 2}, p01{0, -a / 2, b / 2};
    append_facet(mesh, p00, p10, p11);
    append_facet(mesh, p00, p11, p01);
    mesh.recompute_bounds();
    return mesh;
}

// right-angle dihedral: fold along z, faces a (fold) x b (depth), opening
// toward +x; boresight (bisector) is +x
inline TargetMesh make_dihedral(double a, double b, const Material& m = pec_material()) {
    TargetMesh mesh;
    mesh.materials.push_back(m);
    mesh.material_names.push_back("dihedral");
    double s = b / std::sqrt(2.0);
    Vec3 fold_lo{0, 0, -a / 2}, fold_hi{0, 0, a / 2};
    Vec3 e1{s, s, 0}, e2{s, -s, 0}; // outer edges of the two faces
    // face 1 spans fold..fold+e1, normal toward (+x,-y) side
    append_facet(mesh, fold_lo, fold_lo + e1, fold_hi + e1);
    append_facet(mesh, fold_lo, fold_hi + e1, fold_hi);
    // face 2 spans fold..fold+e2, normal toward (+x,+y) side
    append_facet(mesh, fold_lo, fold_hi + e2, fold_lo + e2);
    append_facet(mesh, fold_lo, fold_hi, fold_hi + e2);
    mesh.recompute_bounds();
    return mesh;
}

// square trihedral corner with face side `a`; apex at origin, faces in the
// coordinate planes, boresight (1,1,1)/sqrt(3)
inline TargetMesh make_trihedral(double a, const Material& m = pec_material()) {
    TargetMesh mesh;
    mesh.materials.push_back(m);
    mesh.material_names.push_back("trihedral");
    Vec3 o{0, 0, 0}, ex{a, 0, 0}, ey{0, a, 0}, ez{0, 0, a};
    auto quad = [&](Vec3 p0, Vec3 p1, Vec3 p2, Vec3 p3) {
        append_facet(mesh, p0, p1, p2);
        append_facet(mesh, p0, p2, p3);
    };
    quad(o, ex, ex + ey, ey);         // z=0 face, normal +z
    quad(o, ey, ey + ez, ez);         // x=0 face, normal +x
    quad(o, ez, ez + ex, ex);         // y=0 face, normal +y
    mesh.recompute_bounds();
    return mesh;
}

// icosphere of radius r, `subdiv` refinement levels (facet count 20*4^subdiv)
inline TargetMesh make_sphere(double r, int subdiv, const Material& m = pec_material()) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0}, {0, -1, t},  {0, 1, t},
                           {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
    for (auto& p : v) p = normalize(p);
    std::vector<std::array<int, 3>> f = {{0, 11, 5}, {0, 5, 1},   {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                         {1, 5, 9},  {5, 11, 4},  {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                         {3, 9, 4},  {3, 4, 2},   {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                         {4, 9, 5},  {2, 4, 11},  {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    for (int level = 0; level < subdiv; ++level) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            v.push_back(normalize((v[a] + v[b]) * 0.5));
            int id = int(v.size()) - 1;
            midpoint[key] = id;
            return id;
        };
        std::vector<std::array<int, 3>> nf;
        nf.reserve(f.size() * 4);
        for (auto& tri : f) {
            int a = mid(tri[0], tri[1]), b = mid(tri[1], tri[2]), c = mid(tri[2], tri[0]);
            nf.push_back({tri[0], a, c});
            nf.push_back({tri[1], b, a});
            nf.push_back({tri[2], c, b});
            nf.push_back({a, b, c});
        }
        f.swap(nf);
    }
    TargetMesh mesh;
    mesh.materials.push_back(m);
    mesh.material_names.push_back("sphere");
    for (auto& tri : f) append_facet(mesh, v[tri[0]] * r, v[tri[1]] * r, v[tri[2]] * r);
    mesh.recompute_bounds();
    return mesh;
}

} // namespace sarsim

#endif
