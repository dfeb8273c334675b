#include "dynoscan/pose.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "dynoscan/errors.hpp"

namespace dynoscan {

Pose Pose::translation(double x, double y, double z)
{
  Pose p;
  p.t = {x, y, z};
  return p;
}

Pose Pose::rotation_z(double angle)
{
  Pose p;
  p.R = Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  return p;
}

Pose Pose::from_rotvec(const Eigen::Vector3d& rotvec, const Eigen::Vector3d& t)
{
  Pose p;
  const double angle = rotvec.norm();
  if (angle > 0.0)
    p.R = Eigen::AngleAxisd(angle, rotvec / angle).toRotationMatrix();
  p.t = t;
  return p;
}

Pose Pose::inverse() const
{
  Pose inv;
  inv.R = R.transpose();
  inv.t = -(inv.R * t);
  return inv;
}

Eigen::Matrix4d Pose::matrix() const
{
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = R;
  m.topRightCorner<3, 1>() = t;
  return m;
}

double Pose::orthonormality_error() const
{
  return (R.transpose() * R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
}

Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& m)
{
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? -1.0 : 1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

Pose compose(const Pose& a, const Pose& b)
{
  Pose out;
  out.R = orthonormalize(a.R * b.R);
  out.t = a.R * b.t + a.t;
  return out;
}

Pose accumulate(std::span<const Pose> chain)
{
  Pose acc;
  for (const Pose& p : chain)
    acc = compose(acc, p);
  return acc;
}

std::vector<Pose> relative_poses(std::span<const Pose> absolute)
{
  std::vector<Pose> out;
  out.reserve(absolute.size());
  for (std::size_t i = 0; i < absolute.size(); ++i)
    out.push_back(i == 0 ? Pose::identity() : compose(absolute[i - 1].inverse(), absolute[i]));
  return out;
}

std::string tum_line(const TimedPose& p)
{
  const Eigen::Quaterniond q(p.pose.R);
  char buf[320];
  std::snprintf(buf, sizeof(buf), "%.9f %.17g %.17g %.17g %.17g %.17g %.17g %.17g", p.t, p.pose.t.x(), p.pose.t.y(),
                p.pose.t.z(), q.x(), q.y(), q.z(), q.w());
  return buf;
}

void write_tum(std::span<const TimedPose> poses, const std::filesystem::path& path)
{
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    throw IoError("cannot write " + path.string());
  for (const auto& p : poses)
    out << tum_line(p) << '\n';
  if (!out)
    throw IoError("write failed for " + path.string());
}

std::vector<TimedPose> read_tum(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open " + path.string());
  std::vector<TimedPose> poses;
  std::string line;
  std::uint64_t offset = 0;
  std::size_t line_no = 0;
  while (std::getline(in, line))
  {
    const std::uint64_t start = offset;
    offset += line.size() + 1;
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#')
      continue;
    std::istringstream fields(line);
    double v[8];
    for (double& x : v)
      if (!(fields >> x))
        throw FormatError("TUM line " + std::to_string(line_no) + " needs 8 numbers", start);
    Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);
    if (!(q.norm() > 1e-9))
      throw FormatError("TUM line " + std::to_string(line_no) + " has a zero quaternion", start);
    TimedPose p;
    p.t = v[0];
    p.pose.R = q.normalized().toRotationMatrix();
    p.pose.t = {v[1], v[2], v[3]};
    poses.push_back(p);
  }
  return poses;
}

}  // namespace dynoscan
