#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <unordered_map>

#include "calyx/error.hpp"
#include "calyx/rng.hpp"
#include "calyx/synth.hpp"

namespace calyx::synth {

void PhantomSpec::validate() const {
  if (n_calyces < 1 || !(calyx_diameter_mm > 0.0) || !(calyx_depth_mm > 0.0) ||
      !(pelvis_radius_mm > 0.0) || mesh_resolution < 1) {
    throw Error(ErrorCode::kInvalidArgument, "invalid phantom spec");
  }
}

namespace {

constexpr double kLabelMarginMm = 1.0;
constexpr double kExcludedConeDeg = 45.0;  // around the ureter
constexpr double kMaxJitterDeg = 10.0;
constexpr double kUreterLengthMm = 20.0;
constexpr int kMinResolution = 8;
constexpr double kNeckFraction = 0.4;  // of calyx depth; the cup takes the rest
constexpr double kBendDeg = 60.0;
constexpr double kNeckRadiusFraction = 0.6;  // of the cup radius
constexpr int kBendCandidates = 8;

double capsule_sdf(const Vec3& p, const Vec3& a, const Vec3& b, double r) {
  const Vec3 ab = b - a;
  if (ab.squaredNorm() == 0.0) return (p - a).norm() - r;
  const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return (p - (a + t * ab)).norm() - r;
}

struct Shape {
  Vec3 semi_axes;
  Centerline centerline;
  double ureter_radius = 0.0;
  Vec3 ureter_end;

  double pelvis(const Vec3& p) const {
    return (p.cwiseQuotient(semi_axes).norm() - 1.0) * semi_axes.minCoeff();
  }
  double neck(const Vec3& p, const CalyxAxis& c) const {
    return capsule_sdf(p, centerline.pelvis_center, c.bend, c.neck_radius_mm);
  }
  double cup(const Vec3& p, const CalyxAxis& c) const {
    const double len = std::max(0.0, c.cup_length_mm - c.radius_mm);
    return capsule_sdf(p, c.bend, c.bend + len * c.cup_direction, c.radius_mm);
  }
  double calyx(const Vec3& p, const CalyxAxis& c) const { return std::min(neck(p, c), cup(p, c)); }
  double operator()(const Vec3& p) const {
    double f = std::min(pelvis(p), capsule_sdf(p, centerline.pelvis_center, ureter_end, ureter_radius));
    for (const CalyxAxis& c : centerline.calyces) f = std::min(f, calyx(p, c));
    return f;
  }
};

Vec3 any_perpendicular(const Vec3& u) {
  const Vec3 other = std::abs(u.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  return u.cross(other).normalized();
}

Shape make_shape(const PhantomSpec& spec) {
  Shape s;
  const double r = spec.pelvis_radius_mm;
  s.semi_axes = Vec3(1.2 * r, r, 0.8 * r);
  s.ureter_radius = 0.4 * spec.calyx_diameter_mm;
  s.ureter_end = s.centerline.pelvis_center + (s.semi_axes.z() + kUreterLengthMm) * s.centerline.ureter_direction;

  // Fibonacci spiral over the sphere minus a cone around the ureter, then a
  // seeded jitter.
  Rng rng(combine_seed(spec.seed, 0xca1));
  const double z_min = -std::cos(kExcludedConeDeg * std::numbers::pi / 180.0);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  for (int i = 0; i < spec.n_calyces; ++i) {
    const double z = 1.0 - (i + 0.5) * (1.0 - z_min) / spec.n_calyces;
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = phase + golden * i;
    Vec3 u(rho * std::cos(phi), rho * std::sin(phi), z);
    const Vec3 perp = any_perpendicular(u);
    const double spin = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const Vec3 axis = Eigen::AngleAxisd(spin, u) * perp;
    const double tilt = rng.uniform(0.0, kMaxJitterDeg) * std::numbers::pi / 180.0;
    u = (Eigen::AngleAxisd(tilt, axis) * u).normalized();

    CalyxAxis c;
    c.id = i + 1;
    c.direction = u;
    c.entry_mm = 1.0 / u.cwiseQuotient(s.semi_axes).norm();
    c.bend = s.centerline.pelvis_center + (c.entry_mm + kNeckFraction * spec.calyx_depth_mm) * u;
    c.cup_length_mm = (1.0 - kNeckFraction) * spec.calyx_depth_mm;
    c.radius_mm = 0.5 * spec.calyx_diameter_mm;
    c.neck_radius_mm = kNeckRadiusFraction * c.radius_mm;
    s.centerline.calyces.push_back(c);
  }

  // Bend each cup towards the candidate direction farthest from every other
  // neck and from the ureter.
  const double bend = kBendDeg * std::numbers::pi / 180.0;
  for (CalyxAxis& c : s.centerline.calyces) {
    const Vec3 perp = any_perpendicular(c.direction);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    double best_score = -1.0;
    for (int k = 0; k < kBendCandidates; ++k) {
      const double spin = phase + 2.0 * std::numbers::pi * k / kBendCandidates;
      const Vec3 w = Eigen::AngleAxisd(spin, c.direction) * perp;
      const Vec3 v = (std::cos(bend) * c.direction + std::sin(bend) * w).normalized();
      const Vec3 end = (c.bend + c.cup_length_mm * v - s.centerline.pelvis_center).normalized();
      double score = std::acos(std::clamp(end.dot(s.centerline.ureter_direction), -1.0, 1.0));
      for (const CalyxAxis& o : s.centerline.calyces) {
        if (o.id != c.id) score = std::min(score, std::acos(std::clamp(end.dot(o.direction), -1.0, 1.0)));
      }
      if (score > best_score) {
        best_score = score;
        c.cup_direction = v;
      }
    }
  }
  return s;
}

// Kuhn subdivision of the unit cube: six tetrahedra sharing the 0-7 diagonal.
// Corner bit 0 is x, bit 1 is y, bit 2 is z.
constexpr std::array<std::array<int, 4>, 6> kTets{{
    {0, 1, 3, 7}, {0, 1, 5, 7}, {0, 2, 3, 7}, {0, 2, 6, 7}, {0, 4, 5, 7}, {0, 4, 6, 7},
}};

class Mesher {
 public:
  Mesher(const Shape& shape, const Vec3& lo, double h, std::array<int, 3> n)
      : lo_(lo), h_(h), n_(n) {
    values_.resize(static_cast<std::size_t>(n[0]) * n[1] * n[2]);
    const double floor = 1e-3 * h;
    for (int k = 0; k < n[2]; ++k) {
      for (int j = 0; j < n[1]; ++j) {
        for (int i = 0; i < n[0]; ++i) {
          double f = shape(node_position(i, j, k));
          // Keep the surface off grid nodes so every crossing is interior to an edge.
          if (std::abs(f) < floor) f = floor;
          values_[index(i, j, k)] = f;
        }
      }
    }
  }

  void run() {
    for (int k = 0; k + 1 < n_[2]; ++k) {
      for (int j = 0; j + 1 < n_[1]; ++j) {
        for (int i = 0; i + 1 < n_[0]; ++i) {
          std::array<std::size_t, 8> corner;
          for (int c = 0; c < 8; ++c) corner[c] = index(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1));
          for (const auto& tet : kTets) {
            tetrahedron({corner[tet[0]], corner[tet[1]], corner[tet[2]], corner[tet[3]]});
          }
        }
      }
    }
  }

  std::vector<Vec3> vertices;
  std::vector<Face> faces;

 private:
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * n_[1] + j) * n_[0] + i;
  }
  Vec3 node_position(int i, int j, int k) const { return lo_ + h_ * Vec3(i, j, k); }
  Vec3 node_position(std::size_t idx) const {
    const auto nx = static_cast<std::size_t>(n_[0]);
    const auto ny = static_cast<std::size_t>(n_[1]);
    return node_position(static_cast<int>(idx % nx), static_cast<int>((idx / nx) % ny),
                         static_cast<int>(idx / (nx * ny)));
  }

  std::uint32_t edge_vertex(std::size_t a, std::size_t b) {
    if (a > b) std::swap(a, b);
    const std::uint64_t key = static_cast<std::uint64_t>(a) * values_.size() + b;
    const auto [it, inserted] = edge_cache_.try_emplace(key, static_cast<std::uint32_t>(vertices.size()));
    if (inserted) {
      const double fa = values_[a];
      const double fb = values_[b];
      const double t = fa / (fa - fb);
      const Vec3 pa = node_position(a);
      vertices.push_back(pa + t * (node_position(b) - pa));
    }
    return it->second;
  }

  void emit(std::uint32_t a, std::uint32_t b, std::uint32_t c, const Vec3& outward) {
    const Vec3 n = (vertices[b] - vertices[a]).cross(vertices[c] - vertices[a]);
    if (n.dot(outward) < 0.0) std::swap(b, c);
    faces.push_back({a, b, c});
  }

  void tetrahedron(const std::array<std::size_t, 4>& v) {
    std::array<std::size_t, 4> in{};
    std::array<std::size_t, 4> out{};
    int ni = 0;
    int no = 0;
    for (std::size_t x : v) {
      if (values_[x] < 0.0) {
        in[ni++] = x;
      } else {
        out[no++] = x;
      }
    }
    if (ni == 0 || no == 0) return;
    Vec3 in_c = Vec3::Zero();
    Vec3 out_c = Vec3::Zero();
    for (int i = 0; i < ni; ++i) in_c += node_position(in[i]);
    for (int i = 0; i < no; ++i) out_c += node_position(out[i]);
    const Vec3 outward = out_c / no - in_c / ni;
    if (ni == 1) {
      emit(edge_vertex(in[0], out[0]), edge_vertex(in[0], out[1]), edge_vertex(in[0], out[2]), outward);
    } else if (ni == 3) {
      emit(edge_vertex(out[0], in[0]), edge_vertex(out[0], in[1]), edge_vertex(out[0], in[2]), outward);
    } else {
      const std::uint32_t ac = edge_vertex(in[0], out[0]);
      const std::uint32_t ad = edge_vertex(in[0], out[1]);
      const std::uint32_t bd = edge_vertex(in[1], out[1]);
      const std::uint32_t bc = edge_vertex(in[1], out[0]);
      emit(ac, ad, bd, outward);
      emit(ac, bd, bc, outward);
    }
  }

  Vec3 lo_;
  double h_;
  std::array<int, 3> n_;
  std::vector<double> values_;
  std::unordered_map<std::uint64_t, std::uint32_t> edge_cache_;
};

std::vector<int> label_vertices(const Shape& shape, std::span<const Vec3> vertices) {
  std::vector<int> labels(vertices.size(), kUnannotated);
  for (std::size_t v = 0; v < vertices.size(); ++v) {
    // The vertex belongs to a cup if that cup is its nearest calyx primitive.
    double best = std::numeric_limits<double>::infinity();
    const CalyxAxis* owner = nullptr;
    for (const CalyxAxis& c : shape.centerline.calyces) {
      const double fn = shape.neck(vertices[v], c);
      const double fc = shape.cup(vertices[v], c);
      if (fn < best) {
        best = fn;
        owner = nullptr;
      }
      if (fc < best) {
        best = fc;
        owner = &c;
      }
    }
    if (owner && (vertices[v] - owner->bend).dot(owner->cup_direction) > kLabelMarginMm) {
      labels[v] = owner->id;
    }
  }
  return labels;
}

}  // namespace

Phantom generate_phantom(const PhantomSpec& spec) {
  spec.validate();
  if (spec.mesh_resolution < kMinResolution) {
    throw Error(ErrorCode::kGenerationFailed, "mesh_resolution " + std::to_string(spec.mesh_resolution) +
                                                  " is below the minimum of " +
                                                  std::to_string(kMinResolution));
  }
  const Shape shape = make_shape(spec);
  const double h = std::numbers::pi * spec.calyx_diameter_mm / spec.mesh_resolution;

  Vec3 lo = -shape.semi_axes;
  Vec3 hi = shape.semi_axes;
  auto extend = [&](const Vec3& p, double r) {
    lo = lo.cwiseMin(p - Vec3::Constant(r));
    hi = hi.cwiseMax(p + Vec3::Constant(r));
  };
  extend(shape.ureter_end, shape.ureter_radius);
  for (const CalyxAxis& c : shape.centerline.calyces) {
    extend(c.bend, c.radius_mm);
    extend(c.apex(), c.radius_mm);
  }
  lo -= Vec3::Constant(2.0 * h);
  hi += Vec3::Constant(2.0 * h);
  std::array<int, 3> n{};
  for (int a = 0; a < 3; ++a) n[static_cast<std::size_t>(a)] = static_cast<int>(std::ceil((hi[a] - lo[a]) / h)) + 1;

  Mesher mesher(shape, lo, h, n);
  mesher.run();

  TriMesh mesh(std::move(mesher.vertices), std::move(mesher.faces));
  if (!mesh.is_watertight()) {
    throw Error(ErrorCode::kGenerationFailed, "phantom surface is not closed; raise mesh_resolution");
  }
  std::vector<int> labels = label_vertices(shape, mesh.vertices());
  std::map<int, std::string> names;
  for (const CalyxAxis& c : shape.centerline.calyces) names[c.id] = "calyx_" + std::to_string(c.id);
  try {
    return {LabeledMesh(std::move(mesh), std::move(labels), std::move(names)), shape.centerline};
  } catch (const Error& e) {
    throw Error(ErrorCode::kGenerationFailed, e.what());
  }
}

}  // namespace calyx::synth
