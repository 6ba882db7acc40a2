#ifndef VASMG_MESH_HPP
#define VASMG_MESH_HPP

/**
 * \file   vasmg/mesh.hpp
 * \brief  Unstructured simplex meshes (triangles in 2D, tetrahedra in 3D)
 *         with named vertex tags, plus readers/writers for Triangle-style
 *         .node/.ele files and a Gmsh v2 ASCII subset.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <vasmg/error.hpp>
#include <vasmg/sparse.hpp>

namespace vasmg {

/// Coordinates are always stored with three components; z is zero in 2D.
using Coord   = std::array<double, 3>;
using Simplex = std::array<index_t, 4>;

struct Mesh {
    int dim = 2;
    std::vector<Coord> vertices;
    /// Only the first dim+1 indices of each entry are meaningful.
    std::vector<Simplex> elements;
    /// tag name -> sorted vertex indices carrying it.
    std::map<std::string, std::vector<index_t>> tags;

    index_t vertex_count() const noexcept { return vertices.size(); }
    index_t element_count() const noexcept { return elements.size(); }
    int nodes_per_element() const noexcept { return dim + 1; }

    std::set<std::string> tags_of(index_t v) const {
        std::set<std::string> out;
        for (const auto &[name, list] : tags)
            if (std::binary_search(list.begin(), list.end(), v)) out.insert(name);
        return out;
    }

    bool has_tag(const std::string &name) const { return tags.count(name) != 0; }

    bool operator==(const Mesh &) const = default;
};

/// Signed measure (area in 2D, volume in 3D) of element e.
inline double signed_measure(const Mesh &m, const Simplex &e) {
    const Coord &a = m.vertices[e[0]], &b = m.vertices[e[1]], &c = m.vertices[e[2]];
    if (m.dim == 2) return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
    const Coord &d = m.vertices[e[3]];
    const double u[3] = {b[0] - a[0], b[1] - a[1], b[2] - a[2]};
    const double v[3] = {c[0] - a[0], c[1] - a[1], c[2] - a[2]};
    const double w[3] = {d[0] - a[0], d[1] - a[1], d[2] - a[2]};
    return (u[0] * (v[1] * w[2] - v[2] * w[1]) - u[1] * (v[0] * w[2] - v[2] * w[0]) +
            u[2] * (v[0] * w[1] - v[1] * w[0])) / 6.0;
}

/// Checks every mesh invariant and flips negatively oriented elements in place.
inline void normalize(Mesh &m) {
    detail::require(m.dim == 2 || m.dim == 3, error_kind::input, "mesh dimension must be 2 or 3");
    const index_t n = m.vertex_count();
    detail::require(n >= static_cast<index_t>(m.dim + 1), error_kind::geometry,
                    "mesh needs at least dim+1 vertices");
    const int nv = m.nodes_per_element();
    for (index_t k = 0; k < m.elements.size(); ++k) {
        auto &e = m.elements[k];
        for (int a = 0; a < nv; ++a) {
            detail::require(e[a] < n, error_kind::geometry,
                            "element " + std::to_string(k) + " references vertex " + std::to_string(e[a]) +
                                " out of range");
            for (int b = 0; b < a; ++b)
                detail::require(e[a] != e[b], error_kind::geometry,
                                "element " + std::to_string(k) + " repeats a vertex");
        }
        if (m.dim == 2) e[3] = 0;
        const double s = signed_measure(m, e);
        detail::require(s != 0.0, error_kind::geometry, "element " + std::to_string(k) + " is degenerate");
        if (s < 0) std::swap(e[1], e[2]);
    }
    for (auto &[name, list] : m.tags) {
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
        detail::require(list.empty() || list.back() < n, error_kind::geometry,
                        "tag '" + name + "' references a vertex out of range");
    }
    if (m.dim == 2)
        for (auto &v : m.vertices) v[2] = 0.0;
}

/// Vertices lying on boundary facets (edges in 2D, faces in 3D that belong
/// to exactly one element).
inline std::vector<std::vector<index_t>> boundary_facets(const Mesh &m) {
    const int nv = m.nodes_per_element();
    std::map<std::vector<index_t>, int> count;
    for (const auto &e : m.elements) {
        for (int skip = 0; skip < nv; ++skip) {
            std::vector<index_t> f;
            for (int a = 0; a < nv; ++a)
                if (a != skip) f.push_back(e[a]);
            std::sort(f.begin(), f.end());
            ++count[f];
        }
    }
    std::vector<std::vector<index_t>> out;
    for (auto &[f, c] : count)
        if (c == 1) out.push_back(f);
    return out;
}

struct MeshStats {
    double d_min = 0;
    double d_max = 0;
    double q_exponent = 0;
    /// True when both distances came from the all-pairs scan.
    bool exact_all_pairs = true;
};

namespace detail {

inline double dist(const Coord &a, const Coord &b) {
    const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

inline double cross2(const Coord &o, const Coord &a, const Coord &b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

/// Exact closest-pair distance by an x-sorted sweep.
inline double closest_pair(std::vector<Coord> pts) {
    std::sort(pts.begin(), pts.end());
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size() && pts[j][0] - pts[i][0] < best; ++j)
            best = std::min(best, dist(pts[i], pts[j]));
    return best;
}

/// Andrew's monotone chain over the xy-projection.
inline std::vector<Coord> convex_hull_2d(std::vector<Coord> pts) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) return pts;
    std::vector<Coord> hull(2 * pts.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        while (k >= 2 && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
        while (k >= t && cross2(hull[k - 2], hull[k - 1], pts[i - 1]) <= 0) --k;
        hull[k++] = pts[i - 1];
    }
    hull.resize(k - 1);
    return hull;
}

} // namespace detail

/// Threshold below which mesh_stats scans all pairs.
inline constexpr index_t mesh_stats_all_pairs_limit = 4096;

/// Minimum/maximum pairwise vertex distance and the exponent q with
/// d_max / d_min = N^q.
///
/// Up to 4096 vertices both distances come from the all-pairs scan. Above
/// that, d_min is still exact (sorted sweep); in 2D d_max is exact as the
/// diameter of the convex hull; in 3D d_max is the largest distance among
/// the extreme points along the 13 lattice directions, which is a
/// deterministic lower bound.
inline MeshStats mesh_stats(std::span<const Coord> pts, int dim) {
    const index_t n = pts.size();
    detail::require(n >= 2, error_kind::geometry, "mesh_stats needs at least 2 vertices");
    MeshStats s;
    if (n <= mesh_stats_all_pairs_limit) {
        s.d_min = std::numeric_limits<double>::infinity();
        for (index_t i = 0; i < n; ++i)
            for (index_t j = i + 1; j < n; ++j) {
                const double d = detail::dist(pts[i], pts[j]);
                s.d_min = std::min(s.d_min, d);
                s.d_max = std::max(s.d_max, d);
            }
    } else {
        s.exact_all_pairs = false;
        std::vector<Coord> v(pts.begin(), pts.end());
        s.d_min = detail::closest_pair(v);
        std::vector<Coord> cand;
        if (dim == 2) {
            cand = detail::convex_hull_2d(v);
        } else {
            for (int a = -1; a <= 1; ++a)
                for (int b = -1; b <= 1; ++b)
                    for (int c = -1; c <= 1; ++c) {
                        if (a == 0 && b == 0 && c == 0) continue;
                        auto score = [&](const Coord &p) { return a * p[0] + b * p[1] + c * p[2]; };
                        cand.push_back(*std::max_element(v.begin(), v.end(), [&](const Coord &x, const Coord &y) {
                            return score(x) < score(y);
                        }));
                    }
        }
        for (std::size_t i = 0; i < cand.size(); ++i)
            for (std::size_t j = i + 1; j < cand.size(); ++j)
                s.d_max = std::max(s.d_max, detail::dist(cand[i], cand[j]));
    }
    detail::require(s.d_min > 0, error_kind::geometry, "mesh_stats: coincident vertices");
    s.q_exponent = std::log(s.d_max / s.d_min) / std::log(static_cast<double>(n));
    return s;
}

inline MeshStats mesh_stats(const Mesh &m) { return mesh_stats(m.vertices, m.dim); }

//---------------------------------------------------------------------------
// File formats
//---------------------------------------------------------------------------
enum class MeshFormat { node_ele, gmsh_v2 };

inline MeshFormat parse_mesh_format(const std::string &s) {
    if (s == "node-ele" || s == "node") return MeshFormat::node_ele;
    if (s == "gmsh-v2-subset" || s == "gmsh" || s == "msh") return MeshFormat::gmsh_v2;
    throw error(error_kind::input, "unknown mesh format '" + s + "'");
}

namespace detail {

/// Line reader that skips blank lines and '#' comments and tracks line numbers.
class LineReader {
  public:
    LineReader(std::istream &in, std::string name) : in_(in), name_(std::move(name)) {}

    bool next(std::string &line) {
        while (std::getline(in_, line)) {
            ++lineno_;
            auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos) continue;
            if (line[first] == '#') {
                comments_.push_back(line.substr(first + 1));
                continue;
            }
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string &msg) const {
        throw error(error_kind::input, name_ + ":" + std::to_string(lineno_) + ": " + msg);
    }

    std::string expect(const char *what) {
        std::string line;
        if (!next(line)) fail(std::string("unexpected end of file, expected ") + what);
        return line;
    }

    const std::vector<std::string> &comments() const { return comments_; }

  private:
    std::istream &in_;
    std::string name_;
    std::size_t lineno_ = 0;
    std::vector<std::string> comments_;
};

/// Parses "tags: left=1 right=2 ..." comment lines from a .node file.
inline std::map<int, std::string> marker_names(const std::vector<std::string> &comments) {
    std::map<int, std::string> out;
    for (const auto &c : comments) {
        std::istringstream ss(c);
        std::string head;
        ss >> head;
        if (head != "tags:") continue;
        std::string item;
        while (ss >> item) {
            auto eq = item.find('=');
            if (eq == std::string::npos) continue;
            out[std::stoi(item.substr(eq + 1))] = item.substr(0, eq);
        }
    }
    return out;
}

} // namespace detail

/// Reads a Triangle/TetGen style pair. The .node header is
/// "<count> <dim> <attrs> <markers>"; vertex ids start at 1. When a
/// "# tags: name=bit ..." comment is present the marker column is decoded as
/// a bit mask of named tags, otherwise a nonzero marker k becomes tag "k".
inline Mesh read_node_ele(std::istream &node_in, std::istream &ele_in, const std::string &name = "mesh") {
    Mesh m;
    detail::LineReader nr(node_in, name + ".node");
    std::string line = nr.expect("node header");
    index_t n = 0;
    int attrs = 0, markers = 0;
    {
        std::istringstream ss(line);
        if (!(ss >> n >> m.dim)) nr.fail("bad node header");
        ss >> attrs >> markers;
        if (m.dim != 2 && m.dim != 3) nr.fail("dimension must be 2 or 3");
    }
    std::vector<long> raw_markers(n, 0);
    m.vertices.resize(n);
    for (index_t i = 0; i < n; ++i) {
        line = nr.expect("vertex line");
        std::istringstream ss(line);
        long id = 0;
        Coord c{0, 0, 0};
        if (!(ss >> id >> c[0] >> c[1])) nr.fail("bad vertex line");
        if (m.dim == 3 && !(ss >> c[2])) nr.fail("missing z coordinate");
        if (id != static_cast<long>(i) + 1) nr.fail("vertex ids must be consecutive and start at 1");
        double attr = 0;
        for (int a = 0; a < attrs; ++a)
            if (!(ss >> attr)) nr.fail("missing attribute");
        if (markers > 0 && !(ss >> raw_markers[i])) nr.fail("missing boundary marker");
        m.vertices[i] = c;
    }

    const auto names = detail::marker_names(nr.comments());
    for (index_t i = 0; i < n; ++i) {
        const long mk = raw_markers[i];
        if (mk == 0) continue;
        if (!names.empty()) {
            for (const auto &[bit, tag] : names)
                if (mk & bit) m.tags[tag].push_back(i);
        } else {
            m.tags[std::to_string(mk)].push_back(i);
        }
    }

    detail::LineReader er(ele_in, name + ".ele");
    line = er.expect("element header");
    index_t ne = 0;
    int per = 0;
    {
        std::istringstream ss(line);
        if (!(ss >> ne >> per)) er.fail("bad element header");
        if (per != m.dim + 1) er.fail("expected " + std::to_string(m.dim + 1) + " vertices per element");
    }
    m.elements.resize(ne);
    for (index_t k = 0; k < ne; ++k) {
        line = er.expect("element line");
        std::istringstream ss(line);
        long id = 0;
        if (!(ss >> id)) er.fail("bad element line");
        Simplex e{0, 0, 0, 0};
        for (int a = 0; a < per; ++a) {
            long v = 0;
            if (!(ss >> v)) er.fail("bad element line");
            if (v < 1 || static_cast<index_t>(v) > n) er.fail("vertex index " + std::to_string(v) + " out of range");
            e[a] = static_cast<index_t>(v - 1);
        }
        m.elements[k] = e;
    }
    normalize(m);
    return m;
}

/// Reads "<base>.node" and "<base>.ele"; a trailing ".node" on base is stripped.
inline Mesh read_node_ele(std::string base) {
    if (base.size() > 5 && base.ends_with(".node")) base.resize(base.size() - 5);
    std::ifstream node(base + ".node"), ele(base + ".ele");
    if (!node) throw error(error_kind::input, "cannot open " + base + ".node");
    if (!ele) throw error(error_kind::input, "cannot open " + base + ".ele");
    return read_node_ele(node, ele, base);
}

inline void write_node_ele(std::ostream &node_out, std::ostream &ele_out, const Mesh &m) {
    node_out << std::setprecision(std::numeric_limits<double>::max_digits10);
    std::map<std::string, long> bit;
    long next = 1;
    for (const auto &[name, list] : m.tags) {
        bit[name] = next;
        next <<= 1;
    }
    std::vector<long> marker(m.vertex_count(), 0);
    for (const auto &[name, list] : m.tags)
        for (index_t v : list) marker[v] |= bit[name];

    node_out << "# tags:";
    for (const auto &[name, b] : bit) node_out << ' ' << name << '=' << b;
    node_out << '\n';
    node_out << m.vertex_count() << ' ' << m.dim << " 0 1\n";
    for (index_t i = 0; i < m.vertex_count(); ++i) {
        node_out << i + 1;
        for (int a = 0; a < m.dim; ++a) node_out << ' ' << m.vertices[i][a];
        node_out << ' ' << marker[i] << '\n';
    }

    ele_out << m.element_count() << ' ' << m.nodes_per_element() << " 0\n";
    for (index_t k = 0; k < m.element_count(); ++k) {
        ele_out << k + 1;
        for (int a = 0; a < m.nodes_per_element(); ++a) ele_out << ' ' << m.elements[k][a] + 1;
        ele_out << '\n';
    }
}

inline void write_node_ele(std::string base, const Mesh &m) {
    if (base.size() > 5 && base.ends_with(".node")) base.resize(base.size() - 5);
    std::ofstream node(base + ".node"), ele(base + ".ele");
    if (!node || !ele) throw error(error_kind::input, "cannot write " + base + ".node/.ele");
    write_node_ele(node, ele, m);
}

/// Gmsh 2.2 ASCII subset: $PhysicalNames (optional), $Nodes, $Elements with
/// element types 15 (point), 1 (line), 2 (triangle) and 4 (tetrahedron).
/// The mesh is 3D iff it contains tetrahedra. Lower-dimensional elements
/// only contribute tags: the first element tag (physical group) names the
/// tag, resolved through $PhysicalNames when available.
inline Mesh read_gmsh(std::istream &in, const std::string &name = "mesh.msh") {
    detail::LineReader r(in, name);
    std::map<long, std::string> physical;
    std::map<long, index_t> node_index;
    std::vector<Coord> coords;
    struct RawElement {
        int type;
        long phys;
        std::vector<long> nodes;
    };
    std::vector<RawElement> raw;

    std::string line;
    while (r.next(line)) {
        std::istringstream hs(line);
        std::string section;
        hs >> section;
        if (section == "$MeshFormat") {
            std::istringstream ss(r.expect("format line"));
            double version = 0;
            int filetype = -1;
            ss >> version >> filetype;
            if (version < 2.0 || version >= 3.0 || filetype != 0) r.fail("only Gmsh v2 ASCII is supported");
            if (r.expect("$EndMeshFormat").find("$EndMeshFormat") == std::string::npos) r.fail("expected $EndMeshFormat");
        } else if (section == "$PhysicalNames") {
            long count = std::stol(r.expect("physical name count"));
            for (long k = 0; k < count; ++k) {
                std::istringstream ss(r.expect("physical name"));
                int pdim = 0;
                long tag = 0;
                std::string pname;
                if (!(ss >> pdim >> tag >> std::quoted(pname))) r.fail("bad physical name line");
                physical[tag] = pname;
            }
            r.expect("$EndPhysicalNames");
        } else if (section == "$Nodes") {
            long count = std::stol(r.expect("node count"));
            for (long k = 0; k < count; ++k) {
                std::istringstream ss(r.expect("node line"));
                long id = 0;
                Coord c{0, 0, 0};
                if (!(ss >> id >> c[0] >> c[1] >> c[2])) r.fail("bad node line");
                if (!node_index.emplace(id, coords.size()).second) r.fail("duplicate node id " + std::to_string(id));
                coords.push_back(c);
            }
            r.expect("$EndNodes");
        } else if (section == "$Elements") {
            long count = std::stol(r.expect("element count"));
            for (long k = 0; k < count; ++k) {
                std::istringstream ss(r.expect("element line"));
                long id = 0;
                int type = 0, ntags = 0;
                if (!(ss >> id >> type >> ntags)) r.fail("bad element line");
                long phys = 0, t = 0;
                for (int a = 0; a < ntags; ++a) {
                    if (!(ss >> t)) r.fail("bad element tags");
                    if (a == 0) phys = t;
                }
                int nn = 0;
                switch (type) {
                    case 15: nn = 1; break;
                    case 1:  nn = 2; break;
                    case 2:  nn = 3; break;
                    case 4:  nn = 4; break;
                    default: r.fail("unsupported element type " + std::to_string(type));
                }
                RawElement e{type, phys, std::vector<long>(nn)};
                for (auto &v : e.nodes)
                    if (!(ss >> v)) r.fail("bad element connectivity");
                raw.push_back(std::move(e));
            }
            r.expect("$EndElements");
        } else if (!section.empty() && section[0] == '$') {
            // Skip unknown sections.
            const std::string end = "$End" + section.substr(1);
            while (r.next(line) && line.find(end) == std::string::npos) {}
        } else {
            r.fail("unexpected content '" + line + "'");
        }
    }

    Mesh m;
    m.dim = std::any_of(raw.begin(), raw.end(), [](const RawElement &e) { return e.type == 4; }) ? 3 : 2;
    m.vertices = std::move(coords);
    const int volume_type = m.dim == 3 ? 4 : 2;
    for (const auto &e : raw) {
        std::vector<index_t> ids;
        for (long v : e.nodes) {
            auto it = node_index.find(v);
            if (it == node_index.end()) r.fail("element references unknown node " + std::to_string(v));
            ids.push_back(it->second);
        }
        if (e.type == volume_type) {
            Simplex s{0, 0, 0, 0};
            std::copy(ids.begin(), ids.end(), s.begin());
            m.elements.push_back(s);
        } else if (e.phys != 0) {
            auto pn = physical.find(e.phys);
            const std::string tag = pn != physical.end() ? pn->second : std::to_string(e.phys);
            auto &list = m.tags[tag];
            list.insert(list.end(), ids.begin(), ids.end());
        }
    }
    normalize(m);
    return m;
}

inline Mesh read_gmsh(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw error(error_kind::input, "cannot open " + path);
    return read_gmsh(in, path);
}

/// Writes tags as physical point elements (type 15), one per tagged vertex.
inline void write_gmsh(std::ostream &out, const Mesh &m) {
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    out << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n";
    std::map<std::string, long> phys;
    long next = 1;
    for (const auto &[name, list] : m.tags) phys[name] = next++;
    out << "$PhysicalNames\n" << phys.size() << '\n';
    for (const auto &[name, id] : phys) out << "0 " << id << " \"" << name << "\"\n";
    out << "$EndPhysicalNames\n";
    out << "$Nodes\n" << m.vertex_count() << '\n';
    for (index_t i = 0; i < m.vertex_count(); ++i)
        out << i + 1 << ' ' << m.vertices[i][0] << ' ' << m.vertices[i][1] << ' ' << m.vertices[i][2] << '\n';
    out << "$EndNodes\n";
    index_t tagged = 0;
    for (const auto &[name, list] : m.tags) tagged += list.size();
    out << "$Elements\n" << m.element_count() + tagged << '\n';
    long id = 1;
    for (const auto &[name, list] : m.tags)
        for (index_t v : list) out << id++ << " 15 2 " << phys[name] << " 0 " << v + 1 << '\n';
    const int type = m.dim == 3 ? 4 : 2;
    for (const auto &e : m.elements) {
        out << id++ << ' ' << type << " 2 0 0";
        for (int a = 0; a < m.nodes_per_element(); ++a) out << ' ' << e[a] + 1;
        out << '\n';
    }
    out << "$EndElements\n";
}

inline void write_gmsh(const std::string &path, const Mesh &m) {
    std::ofstream out(path);
    if (!out) throw error(error_kind::input, "cannot write " + path);
    write_gmsh(out, m);
}

inline Mesh read_mesh(const std::string &path, MeshFormat format) {
    return format == MeshFormat::node_ele ? read_node_ele(path) : read_gmsh(path);
}

} // namespace vasmg

#endif
