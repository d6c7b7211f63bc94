#include "folavg/genus2_surface.hpp"

#include "folavg/shape_operator.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>

namespace folavg {

namespace {

constexpr double kResidualTolerance = 1e-10;
constexpr int kMaxIterations = 50;

struct Jet {
  double value;
  Vec3 grad;
  Mat3 hess;
};

// F = g^2 + z^2 with g = x^2 (1 - x^2) - y^2.
Jet evaluate(const Point3& p, double level) {
  const double x = p.x(), y = p.y(), z = p.z();
  const double x2 = x * x;
  const double g = x2 * (1.0 - x2) - y * y;
  const double gx = 2.0 * x - 4.0 * x2 * x;
  const double gy = -2.0 * y;
  const double gxx = 2.0 - 12.0 * x2;
  const double gyy = -2.0;

  Jet jet;
  jet.value = g * g + z * z - level;
  jet.grad = Vec3(2.0 * g * gx, 2.0 * g * gy, 2.0 * z);
  jet.hess << 2.0 * (gx * gx + g * gxx), 2.0 * gx * gy, 0.0,
              2.0 * gx * gy, 2.0 * (gy * gy + g * gyy), 0.0,
              0.0, 0.0, 2.0;
  return jet;
}

template <class T>
void write_le(std::ostream& out, T value) {
  auto bits = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bits.begin(), bits.end());
  }
  out.write(reinterpret_cast<const char*>(bits.data()), bits.size());
}

template <class T>
T read_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bits{};
  in.read(reinterpret_cast<char*>(bits.data()), bits.size());
  if (!in) throw std::runtime_error("truncated point cloud file");
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bits.begin(), bits.end());
  }
  return std::bit_cast<T>(bits);
}

}  // namespace

Genus2Surface::Genus2Surface(double level, std::vector<Point3> cloud)
    : level_(level), cloud_(std::move(cloud)) {
  if (!(level_ > 0.0 && level_ < 0.0625)) {
    throw ConfigError("genus2.level must lie in (0, 1/16) for a genus-2 level set");
  }
  if (cloud_.empty()) {
    throw ConfigError("genus2 point cloud is empty");
  }

  box_min_ = box_max_ = cloud_.front();
  for (const auto& p : cloud_) {
    box_min_ = box_min_.cwiseMin(p);
    box_max_ = box_max_.cwiseMax(p);
    const Jet jet = evaluate(p, level_);
    const auto k = implicit_principal_curvatures(jet.grad, jet.hess);
    kappa_max_ = std::max({kappa_max_, std::abs(k.k1), std::abs(k.k2)});
  }

  grid_origin_ = box_min_ - Vec3::Constant(cell_);
  const Vec3 extent = box_max_ - grid_origin_ + Vec3::Constant(cell_);
  nx_ = static_cast<int>(std::ceil(extent.x() / cell_));
  ny_ = static_cast<int>(std::ceil(extent.y() / cell_));
  nz_ = static_cast<int>(std::ceil(extent.z() / cell_));

  const std::size_t n_cells = static_cast<std::size_t>(nx_) * ny_ * nz_;
  std::vector<std::size_t> owner(cloud_.size());
  cell_start_.assign(n_cells + 1, 0);
  for (std::size_t i = 0; i < cloud_.size(); ++i) {
    const Vec3 rel = (cloud_[i] - grid_origin_) / cell_;
    owner[i] = cell_of(static_cast<int>(rel.x()), static_cast<int>(rel.y()),
                       static_cast<int>(rel.z()));
    ++cell_start_[owner[i] + 1];
  }
  for (std::size_t c = 0; c < n_cells; ++c) cell_start_[c + 1] += cell_start_[c];
  cell_items_.resize(cloud_.size());
  std::vector<std::uint32_t> fill(cell_start_.begin(), cell_start_.end() - 1);
  for (std::size_t i = 0; i < cloud_.size(); ++i) {
    cell_items_[fill[owner[i]]++] = static_cast<std::uint32_t>(i);
  }
}

std::size_t Genus2Surface::cell_of(int ix, int iy, int iz) const {
  return (static_cast<std::size_t>(iz) * ny_ + iy) * nx_ + ix;
}

double Genus2Surface::value(const Point3& p) const { return evaluate(p, level_).value + level_; }
Vec3 Genus2Surface::gradient(const Point3& p) const { return evaluate(p, level_).grad; }
Mat3 Genus2Surface::hessian(const Point3& p) const { return evaluate(p, level_).hess; }

std::optional<std::size_t> Genus2Surface::nearest_cloud_index(const Point3& x) const {
  const Vec3 rel = (x - grid_origin_) / cell_;
  const int cx = static_cast<int>(std::floor(rel.x()));
  const int cy = static_cast<int>(std::floor(rel.y()));
  const int cz = static_cast<int>(std::floor(rel.z()));

  std::optional<std::size_t> best;
  double best_d2 = std::numeric_limits<double>::infinity();
  // Every cloud point within one cell width of x lies in the 3x3x3 block, so a
  // hit closer than cell_ is the global nearest.
  for (int dz = -1; dz <= 1; ++dz) {
    const int iz = cz + dz;
    if (iz < 0 || iz >= nz_) continue;
    for (int dy = -1; dy <= 1; ++dy) {
      const int iy = cy + dy;
      if (iy < 0 || iy >= ny_) continue;
      for (int dx = -1; dx <= 1; ++dx) {
        const int ix = cx + dx;
        if (ix < 0 || ix >= nx_) continue;
        const std::size_t c = cell_of(ix, iy, iz);
        for (std::uint32_t k = cell_start_[c]; k < cell_start_[c + 1]; ++k) {
          const double d2 = (cloud_[cell_items_[k]] - x).squaredNorm();
          if (d2 < best_d2) {
            best_d2 = d2;
            best = cell_items_[k];
          }
        }
      }
    }
  }
  if (best && best_d2 > cell_ * cell_) return std::nullopt;
  return best;
}

Genus2Surface::Foot Genus2Surface::closest_point(const Point3& x, double max_distance,
                                                 const Point3* init) const {
  Point3 y;
  if (init) {
    y = *init;
  } else {
    const auto idx = nearest_cloud_index(x);
    if (!idx) throw OutOfChart("point is not near the genus-2 base leaf");
    y = cloud_[*idx];
  }

  Jet jet = evaluate(y, level_);
  double gnorm = jet.grad.norm();
  if (gnorm < 1e-8) throw SingularGeometry("implicit gradient norm below 1e-8");
  Vec3 n = jet.grad / gnorm;
  double s = (x - y).dot(n);

  auto residual = [&](const Point3& yy, double ss, const Jet& j, double gn) {
    const Vec3 nn = j.grad / gn;
    const double r1 = (yy + ss * nn - x).norm();
    const double r2 = std::abs(j.value) / gn;
    return std::max(r1, r2);
  };

  double res = residual(y, s, jet, gnorm);
  bool polished = false;
  for (int it = 0; it < kMaxIterations; ++it) {
    if (res <= kResidualTolerance && polished) {
      if (std::abs(s) > max_distance) throw OutOfChart("point lies beyond the genus-2 chart reach");
      return {y, s, it};
    }
    if (res <= kResidualTolerance) polished = true;

    Eigen::Matrix4d jac;
    const Mat3 proj = Mat3::Identity() - n * n.transpose();
    jac.topLeftCorner<3, 3>() = Mat3::Identity() + (s / gnorm) * proj * jet.hess;
    jac.topRightCorner<3, 1>() = n;
    jac.bottomLeftCorner<1, 3>() = jet.grad.transpose() / gnorm;
    jac(3, 3) = 0.0;
    Eigen::Vector4d rhs;
    rhs.head<3>() = y + s * n - x;
    rhs(3) = jet.value / gnorm;
    const Eigen::Vector4d delta = jac.partialPivLu().solve(rhs);
    if (!delta.allFinite()) throw NoConvergence("genus-2 closest point: singular Newton system");

    double step = 1.0;
    for (int backtrack = 0;; ++backtrack) {
      const Point3 y_try = y - step * delta.head<3>();
      const double s_try = s - step * delta(3);
      const Jet j_try = evaluate(y_try, level_);
      const double gn_try = j_try.grad.norm();
      const double res_try = gn_try >= 1e-8 ? residual(y_try, s_try, j_try, gn_try)
                                            : std::numeric_limits<double>::infinity();
      if (res_try < res || backtrack == 6 || res <= kResidualTolerance) {
        if (!(gn_try >= 1e-8)) throw SingularGeometry("implicit gradient norm below 1e-8");
        y = y_try;
        s = s_try;
        jet = j_try;
        gnorm = gn_try;
        n = jet.grad / gnorm;
        res = res_try;
        break;
      }
      step *= 0.5;
    }
  }
  if (res <= kResidualTolerance) {
    if (std::abs(s) > max_distance) throw OutOfChart("point lies beyond the genus-2 chart reach");
    return {y, s, kMaxIterations};
  }
  throw NoConvergence("genus-2 closest point did not converge in 50 iterations");
}

std::vector<Point3> Genus2Surface::generate_cloud(double level, std::size_t count,
                                                  std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  // Bounding box of F <= c0 for c0 < 1/16: |x| <= 1.1, |y| <= 0.65, |z| <= sqrt(c0).
  const double zmax = std::sqrt(level) * 1.2;
  std::uniform_real_distribution<double> ux(-1.1, 1.1), uy(-0.65, 0.65), uz(-zmax, zmax);

  std::vector<Point3> cloud;
  cloud.reserve(count);
  while (cloud.size() < count) {
    Point3 p(ux(engine), uy(engine), uz(engine));
    bool ok = false;
    for (int it = 0; it < 60; ++it) {
      const Jet jet = evaluate(p, level);
      const double g2 = jet.grad.squaredNorm();
      if (g2 < 1e-12) break;
      if (std::abs(jet.value) < 1e-14) {
        ok = true;
        break;
      }
      const Vec3 step = (jet.value / g2) * jet.grad;
      if (step.norm() > 0.2) break;
      p -= step;
    }
    if (ok) cloud.push_back(p);
  }
  return cloud;
}

void Genus2Surface::save_cloud(const std::string& path, std::span<const Point3> cloud) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_le<std::uint64_t>(out, cloud.size());
  for (const auto& p : cloud) {
    write_le<double>(out, p.x());
    write_le<double>(out, p.y());
    write_le<double>(out, p.z());
  }
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

std::vector<Point3> Genus2Surface::load_cloud(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  const auto count = read_le<std::uint64_t>(in);
  if (count > (std::uint64_t{1} << 32)) throw std::runtime_error("implausible point count in '" + path + "'");
  std::vector<Point3> cloud(count);
  for (auto& p : cloud) {
    p.x() = read_le<double>(in);
    p.y() = read_le<double>(in);
    p.z() = read_le<double>(in);
  }
  return cloud;
}

}  // namespace folavg
