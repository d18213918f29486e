#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "dbparam/errors.hpp"
#include "dbparam/mesh.hpp"

namespace dbparam {

namespace {

std::string lowercase_extension(const std::filesystem::path& path)
{
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return char(std::tolower(c)); });
    return ext;
}

RawMesh pack(const std::vector<Eigen::Vector3d>& verts, const std::vector<Eigen::Vector3i>& faces)
{
    RawMesh raw;
    raw.vertices.resize(Eigen::Index(verts.size()), 3);
    raw.faces.resize(Eigen::Index(faces.size()), 3);
    for (std::size_t i = 0; i < verts.size(); ++i) {
        raw.vertices.row(Eigen::Index(i)) = verts[i];
    }
    for (std::size_t i = 0; i < faces.size(); ++i) {
        raw.faces.row(Eigen::Index(i)) = faces[i];
    }
    return raw;
}

// OBJ index token "7", "7/2", "7//3" or "-1"; returns a 0-based index.
int parse_obj_index(const std::string& token, std::size_t vertex_count, std::size_t line_no)
{
    std::string head = token.substr(0, token.find('/'));
    int idx = 0;
    try {
        std::size_t used = 0;
        idx = std::stoi(head, &used);
        if (used != head.size()) {
            throw std::invalid_argument(head);
        }
    }
    catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line_no) + ": bad face index '" + token + "'");
    }
    if (idx < 0) {
        idx = int(vertex_count) + idx + 1;
    }
    if (idx < 1 || std::size_t(idx) > vertex_count) {
        throw ParseError("line " + std::to_string(line_no) + ": face index " + token +
                         " out of range");
    }
    return idx - 1;
}

RawMesh read_obj(std::istream& in)
{
    std::vector<Eigen::Vector3d> verts;
    std::vector<Eigen::Vector3i> faces;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::string tag;
        if (!(ss >> tag) || tag[0] == '#') {
            continue;
        }
        if (tag == "v") {
            Eigen::Vector3d p;
            if (!(ss >> p.x() >> p.y())) {
                throw ParseError("line " + std::to_string(line_no) + ": malformed vertex");
            }
            p.z() = 0.0;
            std::string z;
            if (ss >> z) {
                std::size_t used = 0;
                try {
                    p.z() = std::stod(z, &used);
                }
                catch (const std::exception&) {
                    used = 0;
                }
                if (used != z.size()) {
                    throw ParseError("line " + std::to_string(line_no) + ": malformed vertex");
                }
            }
            if (!p.allFinite()) {
                throw ParseError("line " + std::to_string(line_no) + ": non-finite vertex");
            }
            verts.push_back(p);
        }
        else if (tag == "f") {
            std::vector<int> idx;
            std::string tok;
            while (ss >> tok) {
                idx.push_back(parse_obj_index(tok, verts.size(), line_no));
            }
            if (idx.size() != 3) {
                throw ParseError("line " + std::to_string(line_no) + ": only triangles supported, got " +
                                 std::to_string(idx.size()) + " indices");
            }
            faces.emplace_back(idx[0], idx[1], idx[2]);
        }
        // vt, vn, g, o, s, usemtl, mtllib are ignored
    }
    return pack(verts, faces);
}

// Next non-empty, non-comment line of an OFF file.
bool next_off_line(std::istream& in, std::string& line)
{
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.resize(hash);
        }
        if (line.find_first_not_of(" \t\r") != std::string::npos) {
            return true;
        }
    }
    return false;
}

RawMesh read_off(std::istream& in)
{
    std::string line;
    if (!next_off_line(in, line)) {
        throw ParseError("empty OFF file");
    }
    std::istringstream header(line);
    std::string magic;
    header >> magic;
    if (magic != "OFF") {
        throw ParseError("missing OFF header");
    }
    long nv = -1, nf = -1, ne = 0;
    if (!(header >> nv)) {
        if (!next_off_line(in, line)) {
            throw ParseError("missing OFF counts");
        }
        header = std::istringstream(line);
        header >> nv;
    }
    if (!(header >> nf >> ne) || nv < 0 || nf < 0) {
        throw ParseError("malformed OFF counts");
    }

    std::vector<Eigen::Vector3d> verts(static_cast<std::size_t>(nv));
    for (auto& p : verts) {
        if (!next_off_line(in, line)) {
            throw ParseError("unexpected end of OFF vertex list");
        }
        std::istringstream ss(line);
        if (!(ss >> p.x() >> p.y() >> p.z()) || !p.allFinite()) {
            throw ParseError("malformed OFF vertex: '" + line + "'");
        }
    }
    std::vector<Eigen::Vector3i> faces(static_cast<std::size_t>(nf));
    for (auto& f : faces) {
        if (!next_off_line(in, line)) {
            throw ParseError("unexpected end of OFF face list");
        }
        std::istringstream ss(line);
        int k = 0;
        if (!(ss >> k) || k != 3) {
            throw ParseError("only triangular OFF faces supported: '" + line + "'");
        }
        if (!(ss >> f.x() >> f.y() >> f.z())) {
            throw ParseError("malformed OFF face: '" + line + "'");
        }
        if (f.minCoeff() < 0 || f.maxCoeff() >= nv) {
            throw ParseError("OFF face index out of range: '" + line + "'");
        }
    }
    return pack(verts, faces);
}

}  // namespace

RawMesh read_raw_mesh(const std::filesystem::path& path, MeshFormat format)
{
    if (format == MeshFormat::Auto) {
        const std::string ext = lowercase_extension(path);
        if (ext == ".obj") {
            format = MeshFormat::Obj;
        }
        else if (ext == ".off") {
            format = MeshFormat::Off;
        }
        else {
            throw ParseError("cannot infer mesh format from extension '" + ext + "'");
        }
    }
    std::ifstream in(path);
    if (!in) {
        throw IOError("cannot open " + path.string());
    }
    return format == MeshFormat::Obj ? read_obj(in) : read_off(in);
}

TriMesh load_mesh(const std::filesystem::path& path, MeshFormat format)
{
    RawMesh raw = read_raw_mesh(path, format);
    return TriMesh(std::move(raw.vertices), std::move(raw.faces));
}

void write_obj(const std::filesystem::path& path, const Eigen::MatrixXd& positions,
               const Eigen::MatrixX3i& faces)
{
    if (positions.cols() != 2 && positions.cols() != 3) {
        throw ShapeError("write_obj expects 2 or 3 position columns");
    }
    std::ofstream out(path);
    if (!out) {
        throw IOError("cannot write " + path.string());
    }
    out.precision(17);
    for (Eigen::Index i = 0; i < positions.rows(); ++i) {
        out << "v " << positions(i, 0) << ' ' << positions(i, 1) << ' '
            << (positions.cols() == 3 ? positions(i, 2) : 0.0) << '\n';
    }
    for (Eigen::Index f = 0; f < faces.rows(); ++f) {
        out << "f " << faces(f, 0) + 1 << ' ' << faces(f, 1) + 1 << ' ' << faces(f, 2) + 1 << '\n';
    }
    if (!out) {
        throw IOError("failed writing " + path.string());
    }
}

}  // namespace dbparam
