// ASCII PLY subset used for labeled meshes and point clouds.
#include <algorithm>
#include <string>

#include "calyx/error.hpp"
#include "calyx/labeled_mesh.hpp"
#include "calyx/text_io.hpp"

namespace calyx {

namespace {

struct PlyContents {
  std::vector<std::string> comments;
  std::vector<std::string> vertex_props;
  std::vector<std::vector<std::string_view>> rows;  // views into `storage`
  std::vector<Face> faces;
  std::vector<std::string> storage;
};

[[noreturn]] void fail(const std::filesystem::path& path, std::size_t line, const std::string& msg) {
  throw Error(ErrorCode::kParseError, path.string() + ":" + std::to_string(line) + ": " + msg);
}

PlyContents read_ply(const std::filesystem::path& path) {
  auto in = text::open_input(path);
  PlyContents ply;
  std::string line;
  std::size_t lineno = 0;

  auto next = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };

  if (!next() || text::trim(line) != "ply") fail(path, lineno, "missing 'ply' magic");
  if (!next() || text::trim(line) != "format ascii 1.0") fail(path, lineno, "expected 'format ascii 1.0'");

  std::size_t n_vertices = 0;
  std::size_t n_faces = 0;
  enum class Section { kNone, kVertex, kFace } section = Section::kNone;
  bool have_vertex = false;
  while (true) {
    if (!next()) fail(path, lineno, "unexpected end of header");
    const auto tok = text::tokens(line);
    if (tok.empty()) continue;
    if (tok[0] == "end_header") break;
    if (tok[0] == "comment") {
      const auto pos = line.find("comment");
      ply.comments.emplace_back(text::trim(std::string_view(line).substr(pos + 7)));
      continue;
    }
    if (tok[0] == "element" && tok.size() == 3) {
      const auto count = text::parse_number<std::size_t>(tok[2], "element count");
      if (tok[1] == "vertex") {
        section = Section::kVertex;
        n_vertices = count;
        have_vertex = true;
      } else if (tok[1] == "face") {
        if (!have_vertex) fail(path, lineno, "face element before vertex element");
        section = Section::kFace;
        n_faces = count;
      } else {
        fail(path, lineno, "unsupported element '" + std::string(tok[1]) + "'");
      }
      continue;
    }
    if (tok[0] == "property") {
      if (section == Section::kVertex && tok.size() == 3) {
        ply.vertex_props.emplace_back(tok[2]);
      } else if (section == Section::kFace && tok.size() == 5 && tok[1] == "list") {
        // property list uchar int vertex_indices
      } else {
        fail(path, lineno, "unsupported property declaration");
      }
      continue;
    }
    fail(path, lineno, "unexpected header line '" + line + "'");
  }
  if (!have_vertex) fail(path, lineno, "no vertex element");

  ply.storage.reserve(n_vertices);
  ply.rows.reserve(n_vertices);
  for (std::size_t i = 0; i < n_vertices; ++i) {
    if (!next()) fail(path, lineno, "truncated vertex list");
    ply.storage.push_back(line);
  }
  for (const std::string& s : ply.storage) {
    auto tok = text::tokens(s);
    if (tok.size() != ply.vertex_props.size()) {
      fail(path, lineno, "vertex row has " + std::to_string(tok.size()) + " fields, expected " +
                             std::to_string(ply.vertex_props.size()));
    }
    ply.rows.push_back(std::move(tok));
  }
  ply.faces.reserve(n_faces);
  for (std::size_t i = 0; i < n_faces; ++i) {
    if (!next()) fail(path, lineno, "truncated face list");
    const auto tok = text::tokens(line);
    if (tok.size() != 4 || tok[0] != "3") fail(path, lineno, "faces must be triangles '3 i j k'");
    Face f{};
    for (int k = 0; k < 3; ++k) f[k] = text::parse_number<std::uint32_t>(tok[k + 1], "face index");
    ply.faces.push_back(f);
  }
  return ply;
}

int property_index(const PlyContents& ply, std::string_view name) {
  const auto it = std::find(ply.vertex_props.begin(), ply.vertex_props.end(), name);
  return it == ply.vertex_props.end() ? -1 : static_cast<int>(it - ply.vertex_props.begin());
}

std::vector<Vec3> positions(const PlyContents& ply, const std::filesystem::path& path) {
  const int ix = property_index(ply, "x");
  const int iy = property_index(ply, "y");
  const int iz = property_index(ply, "z");
  if (ix < 0 || iy < 0 || iz < 0) fail(path, 0, "vertex element lacks x/y/z");
  std::vector<Vec3> out;
  out.reserve(ply.rows.size());
  for (const auto& row : ply.rows) {
    out.emplace_back(text::parse_number<double>(row[static_cast<std::size_t>(ix)], "x"),
                     text::parse_number<double>(row[static_cast<std::size_t>(iy)], "y"),
                     text::parse_number<double>(row[static_cast<std::size_t>(iz)], "z"));
  }
  return out;
}

void write_vertex_header(std::ostream& out, std::size_t n) {
  out << "element vertex " << n << "\n"
      << "property double x\nproperty double y\nproperty double z\n";
}

}  // namespace

LabeledMesh load_labeled_mesh(const std::filesystem::path& path, const LabelValidation& validation) {
  const PlyContents ply = read_ply(path);
  const int il = property_index(ply, "calyx_id");
  if (il < 0) fail(path, 0, "vertex element lacks calyx_id");
  std::vector<int> labels;
  labels.reserve(ply.rows.size());
  for (const auto& row : ply.rows) {
    labels.push_back(text::parse_number<int>(row[static_cast<std::size_t>(il)], "calyx_id"));
  }
  std::map<int, std::string> names;
  for (const std::string& c : ply.comments) {
    const auto tok = text::tokens(c);
    if (tok.size() >= 3 && tok[0] == "calyx_name") {
      const int id = text::parse_number<int>(tok[1], "calyx id");
      const auto pos = static_cast<std::size_t>(tok[2].data() - c.data());
      names[id] = std::string(text::trim(std::string_view(c).substr(pos)));
    }
  }
  return LabeledMesh(TriMesh(positions(ply, path), ply.faces), std::move(labels), std::move(names),
                     validation);
}

TriMesh load_mesh(const std::filesystem::path& path) {
  const PlyContents ply = read_ply(path);
  return TriMesh(positions(ply, path), ply.faces);
}

void save_labeled_mesh(const std::filesystem::path& path, const LabeledMesh& m,
                       const std::vector<bool>* visited) {
  const auto vertices = m.mesh().vertices();
  const auto labels = m.labels();
  if (visited && visited->size() != vertices.size()) {
    throw Error(ErrorCode::kInvalidArgument, "visited flags must cover every vertex");
  }
  auto out = text::open_output(path);
  out << "ply\nformat ascii 1.0\ncomment calyx labeled mesh, units mm\n";
  for (const auto& [id, name] : m.calyx_names()) out << "comment calyx_name " << id << ' ' << name << '\n';
  write_vertex_header(out, vertices.size());
  out << "property int calyx_id\n";
  if (visited) {
    out << "property uchar visited\nproperty uchar red\nproperty uchar green\nproperty uchar blue\n";
  }
  out << "element face " << m.mesh().face_count() << "\n"
      << "property list uchar int vertex_indices\nend_header\n";
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const Vec3& p = vertices[i];
    out << text::format_double(p.x()) << ' ' << text::format_double(p.y()) << ' '
        << text::format_double(p.z()) << ' ' << labels[i];
    if (visited) {
      const bool v = (*visited)[i];
      // visited: green; missed calyx: red; unannotated: grey
      const char* rgb = v ? "40 200 60" : (labels[i] == kUnannotated ? "160 160 160" : "220 40 40");
      out << ' ' << (v ? 1 : 0) << ' ' << rgb;
    }
    out << '\n';
  }
  for (const Face& f : m.mesh().faces()) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

PointCloud load_point_cloud(const std::filesystem::path& path) {
  return positions(read_ply(path), path);
}

void save_point_cloud(const std::filesystem::path& path, std::span<const Vec3> points) {
  auto out = text::open_output(path);
  out << "ply\nformat ascii 1.0\ncomment point cloud, units mm\n";
  write_vertex_header(out, points.size());
  out << "end_header\n";
  for (const Vec3& p : points) {
    out << text::format_double(p.x()) << ' ' << text::format_double(p.y()) << ' '
        << text::format_double(p.z()) << '\n';
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

}  // namespace calyx
