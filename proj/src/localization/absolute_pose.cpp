#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include "calyx/localization.hpp"
#include "calyx/registration.hpp"
#include "calyx/rng.hpp"

namespace calyx {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Real roots of c[0] x^n + ... + c[n] via the companion matrix, Newton-polished.
std::vector<double> real_roots(std::vector<double> c) {
  while (!c.empty() && std::abs(c.front()) < 1e-14 * (1.0 + std::abs(c.back()))) c.erase(c.begin());
  const int deg = static_cast<int>(c.size()) - 1;
  std::vector<double> roots;
  if (deg < 1) return roots;
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(deg, deg);
  for (int j = 0; j < deg; ++j) comp(0, j) = -c[static_cast<std::size_t>(j + 1)] / c[0];
  for (int i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
  const Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
  for (int i = 0; i < deg; ++i) {
    const std::complex<double> z = es.eigenvalues()[i];
    if (std::abs(z.imag()) > 1e-6 * (1.0 + std::abs(z.real()))) continue;
    double x = z.real();
    for (int it = 0; it < 8; ++it) {
      double f = 0.0;
      double df = 0.0;
      for (double coeff : c) {
        df = df * x + f;
        f = f * x + coeff;
      }
      if (df == 0.0) break;
      const double step = f / df;
      x -= step;
      if (std::abs(step) < 1e-15 * (1.0 + std::abs(x))) break;
    }
    roots.push_back(x);
  }
  return roots;
}

Mat3 exp_so3(const Vec3& w) {
  const double angle = w.norm();
  if (angle < 1e-15) return Mat3::Identity() + skew(w);
  return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

std::optional<double> reprojection_error(const RigidTransform& t, const Correspondence2D3D& c,
                                         const PinholeCamera& cam) {
  const auto px = project(cam, t.apply(c.point));
  if (!px) return std::nullopt;
  return (*px - c.pixel).norm();
}

std::size_t count_inliers(const RigidTransform& t, std::span<const Correspondence2D3D> corrs,
                          const PinholeCamera& cam, double threshold, std::vector<bool>* mask) {
  std::size_t count = 0;
  if (mask) mask->assign(corrs.size(), false);
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    const auto e = reprojection_error(t, corrs[i], cam);
    if (e && *e < threshold) {
      ++count;
      if (mask) (*mask)[i] = true;
    }
  }
  return count;
}

double cost(const Mat3& r, const Vec3& t, std::span<const Correspondence2D3D> corrs,
            const PinholeCamera& cam) {
  double sum = 0.0;
  for (const auto& c : corrs) {
    const Vec3 p = r * c.point + t;
    if (!(p.z() > 1e-9)) return kInf;
    const Vec2 px(cam.fx * p.x() / p.z() + cam.cx, cam.fy * p.y() / p.z() + cam.cy);
    sum += (px - c.pixel).squaredNorm();
  }
  return sum;
}

}  // namespace

std::vector<RigidTransform> solve_p3p(const std::array<Vec3, 3>& bearings,
                                      const std::array<Vec3, 3>& points) {
  std::vector<RigidTransform> out;
  const double a2 = (points[1] - points[2]).squaredNorm();
  const double b2 = (points[0] - points[2]).squaredNorm();
  const double c2 = (points[0] - points[1]).squaredNorm();
  if (!(a2 > 0.0 && b2 > 0.0 && c2 > 0.0)) return out;
  const Vec3 j1 = bearings[0].normalized();
  const Vec3 j2 = bearings[1].normalized();
  const Vec3 j3 = bearings[2].normalized();
  const double ca = j2.dot(j3);
  const double cb = j1.dot(j3);
  const double cg = j1.dot(j2);

  // Grunert's quartic in v = s3 / s1 (s_i: distance from centre to point i).
  const double amc = (a2 - c2) / b2;
  const double apc = (a2 + c2) / b2;
  const double ca2 = ca * ca;
  const double cb2 = cb * cb;
  const double cg2 = cg * cg;
  const double a4 = (amc - 1.0) * (amc - 1.0) - 4.0 * c2 / b2 * ca2;
  const double a3 = 4.0 * (amc * (1.0 - amc) * cb - (1.0 - apc) * ca * cg + 2.0 * c2 / b2 * ca2 * cb);
  const double a2c = 2.0 * (amc * amc - 1.0 + 2.0 * amc * amc * cb2 + 2.0 * (b2 - c2) / b2 * ca2 -
                            4.0 * apc * ca * cb * cg + 2.0 * (b2 - a2) / b2 * cg2);
  const double a1 = 4.0 * (-amc * (1.0 + amc) * cb + 2.0 * a2 / b2 * cg2 * cb - (1.0 - apc) * ca * cg);
  const double a0 = (1.0 + amc) * (1.0 + amc) - 4.0 * a2 / b2 * cg2;

  for (const double v : real_roots({a4, a3, a2c, a1, a0})) {
    if (!(v > 0.0)) continue;
    const double den = 2.0 * (cg - v * ca);
    if (std::abs(den) < 1e-14) continue;
    const double u = ((-1.0 + amc) * v * v - 2.0 * amc * cb * v + 1.0 + amc) / den;
    if (!(u > 0.0)) continue;
    const double q = 1.0 + v * v - 2.0 * v * cb;
    if (!(q > 0.0)) continue;
    double s1 = std::sqrt(b2 / q);
    double s2 = u * s1;
    double s3 = v * s1;

    // Gauss-Newton polish on the three law-of-cosines equations.
    for (int it = 0; it < 5; ++it) {
      const Vec3 f(s2 * s2 + s3 * s3 - 2.0 * s2 * s3 * ca - a2,
                   s1 * s1 + s3 * s3 - 2.0 * s1 * s3 * cb - b2,
                   s1 * s1 + s2 * s2 - 2.0 * s1 * s2 * cg - c2);
      Mat3 jac;
      jac << 0.0, 2.0 * s2 - 2.0 * s3 * ca, 2.0 * s3 - 2.0 * s2 * ca,
          2.0 * s1 - 2.0 * s3 * cb, 0.0, 2.0 * s3 - 2.0 * s1 * cb,
          2.0 * s1 - 2.0 * s2 * cg, 2.0 * s2 - 2.0 * s1 * cg, 0.0;
      const Vec3 step = jac.fullPivLu().solve(f);
      if (!step.allFinite()) break;
      s1 -= step[0];
      s2 -= step[1];
      s3 -= step[2];
      if (step.norm() < 1e-14 * (s1 + s2 + s3)) break;
    }
    const double scale = std::sqrt(std::max({a2, b2, c2}));
    const Vec3 resid(s2 * s2 + s3 * s3 - 2.0 * s2 * s3 * ca - a2,
                     s1 * s1 + s3 * s3 - 2.0 * s1 * s3 * cb - b2,
                     s1 * s1 + s2 * s2 - 2.0 * s1 * s2 * cg - c2);
    if (!(s1 > 0.0 && s2 > 0.0 && s3 > 0.0) || resid.cwiseAbs().maxCoeff() > 1e-6 * scale * scale) {
      continue;
    }

    const std::array<Vec3, 3> cam_pts{s1 * j1, s2 * j2, s3 * j3};
    if (collinear(points, 1e-12)) continue;
    const SimilarityTransform fit = umeyama(points, cam_pts, false);
    out.push_back(fit.rigid());
  }
  return out;
}

double reprojection_rms(const RigidTransform& cam_from_world,
                        std::span<const Correspondence2D3D> corrs, const PinholeCamera& cam) {
  if (corrs.empty()) return 0.0;
  const double c = cost(cam_from_world.rotation_matrix(), cam_from_world.translation(), corrs, cam);
  return std::sqrt(c / static_cast<double>(corrs.size()));
}

RigidTransform refine_pose(const RigidTransform& init, std::span<const Correspondence2D3D> corrs,
                           const PinholeCamera& cam, int max_iterations) {
  Mat3 r = init.rotation_matrix();
  Vec3 t = init.translation();
  double current = cost(r, t, corrs, cam);
  if (!std::isfinite(current) || corrs.size() < 3) return init;

  using Mat6 = Eigen::Matrix<double, 6, 6>;
  using Vec6 = Eigen::Matrix<double, 6, 1>;
  double lambda = -1.0;
  for (int it = 0; it < max_iterations; ++it) {
    Mat6 jtj = Mat6::Zero();
    Vec6 jtr = Vec6::Zero();
    for (const auto& c : corrs) {
      const Vec3 rx = r * c.point;
      const Vec3 p = rx + t;
      const double iz = 1.0 / p.z();
      const Vec2 res(cam.fx * p.x() * iz + cam.cx - c.pixel.x(),
                     cam.fy * p.y() * iz + cam.cy - c.pixel.y());
      Eigen::Matrix<double, 2, 3> jp;
      jp << cam.fx * iz, 0.0, -cam.fx * p.x() * iz * iz, 0.0, cam.fy * iz, -cam.fy * p.y() * iz * iz;
      Eigen::Matrix<double, 2, 6> j;
      j.leftCols<3>() = -jp * skew(rx);
      j.rightCols<3>() = jp;
      jtj += j.transpose() * j;
      jtr += j.transpose() * res;
    }
    if (lambda < 0.0) lambda = 1e-4 * jtj.diagonal().maxCoeff();

    bool improved = false;
    for (int attempt = 0; attempt < 10 && !improved; ++attempt) {
      Mat6 damped = jtj;
      damped.diagonal() += lambda * (jtj.diagonal().array() + 1e-12).matrix();
      const Vec6 delta = damped.ldlt().solve(-jtr);
      if (!delta.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      const Mat3 r_new = exp_so3(delta.head<3>()) * r;
      const Vec3 t_new = t + delta.tail<3>();
      const double c_new = cost(r_new, t_new, corrs, cam);
      if (c_new < current) {
        const double gain = current - c_new;
        r = r_new;
        t = t_new;
        current = c_new;
        lambda = std::max(lambda * 0.1, 1e-12);
        improved = true;
        if (gain <= 1e-15 * (1.0 + current) || delta.norm() < 1e-14) return {r, t};
      } else {
        lambda *= 10.0;
      }
    }
    if (!improved) break;
  }
  return {r, t};
}

std::optional<AbsolutePose> estimate_absolute_pose(std::span<const Correspondence2D3D> corrs,
                                                   const PinholeCamera& cam,
                                                   const LocalizationParams& params,
                                                   std::uint64_t seed) {
  const std::size_t n = corrs.size();
  if (n < 4) return std::nullopt;
  std::vector<Vec3> bearings(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 x = cam.normalize(corrs[i].pixel);
    bearings[i] = Vec3(x.x(), x.y(), 1.0).normalized();
  }
  const double threshold = params.pnp_reprojection_threshold_px;

  Rng rng(seed);
  std::optional<RigidTransform> best;
  std::size_t best_count = 0;
  std::size_t needed = static_cast<std::size_t>(params.ransac_iterations);
  for (std::size_t it = 0; it < needed; ++it) {
    const auto idx = rng.sample_indices(n, 4);
    const auto solutions = solve_p3p({bearings[idx[0]], bearings[idx[1]], bearings[idx[2]]},
                                     {corrs[idx[0]].point, corrs[idx[1]].point, corrs[idx[2]].point});
    // The fourth correspondence picks among the up-to-four P3P roots.
    std::optional<RigidTransform> chosen;
    double chosen_err = kInf;
    for (const RigidTransform& s : solutions) {
      const auto e = reprojection_error(s, corrs[idx[3]], cam);
      if (e && *e < chosen_err) {
        chosen_err = *e;
        chosen = s;
      }
    }
    if (!chosen) continue;
    const std::size_t count = count_inliers(*chosen, corrs, cam, threshold, nullptr);
    if (count > best_count) {
      best_count = count;
      best = chosen;
      const double w = static_cast<double>(count) / static_cast<double>(n);
      const double p_good = w * w * w * w;
      if (p_good >= 1.0) {
        needed = it + 1;
      } else {
        const double k = std::log(1.0 - params.ransac_confidence) / std::log(1.0 - p_good);
        if (std::isfinite(k) && k < static_cast<double>(needed)) {
          needed = static_cast<std::size_t>(std::ceil(k));
        }
      }
    }
  }
  if (!best || best_count < std::max<std::size_t>(4, params.min_inlier_count)) return std::nullopt;

  std::vector<bool> mask;
  count_inliers(*best, corrs, cam, threshold, &mask);
  std::vector<Correspondence2D3D> inliers;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i]) inliers.push_back(corrs[i]);
  }
  AbsolutePose out;
  out.ransac_rms_px = reprojection_rms(*best, inliers, cam);
  out.cam_from_world = refine_pose(*best, inliers, cam);
  out.refined_rms_px = reprojection_rms(out.cam_from_world, inliers, cam);
  out.inlier_count = count_inliers(out.cam_from_world, corrs, cam, threshold, &out.inliers);
  if (out.inlier_count < std::max<std::size_t>(4, params.min_inlier_count)) return std::nullopt;
  return out;
}

}  // namespace calyx
