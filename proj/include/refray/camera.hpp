#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "refray/image.hpp"
#include "refray/vec.hpp"

namespace refray {

struct Intrinsics {
    int width = 0;
    int height = 0;
    double fx = 0.0, fy = 0.0;
    double cx = 0.0, cy = 0.0;

    void validate() const {
        if (width < 1 || height < 1) throw std::invalid_argument("intrinsics: image size must be >= 1");
        if (!(fx > 0.0) || !(fy > 0.0)) throw std::invalid_argument("intrinsics: focal lengths must be > 0");
        if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height))
            throw std::invalid_argument("intrinsics: principal point outside image");
    }
};

// World-to-camera rigid transform, COLMAP convention: p_cam = R * p_world + t,
// with camera axes x right, y down, z forward.
struct Pose {
    double qw = 1.0, qx = 0.0, qy = 0.0, qz = 0.0;
    Vec3 translation{0.0, 0.0, 0.0};

    void validate() const {
        const double n = std::sqrt(qw * qw + qx * qx + qy * qy + qz * qz);
        if (std::abs(n - 1.0) > 1e-6) throw std::invalid_argument("pose: quaternion is not unit length");
    }

    Mat3 rotation() const {
        const double w = qw, x = qx, y = qy, z = qz;
        Mat3 R;
        R.m = {1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
               2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
               2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y)};
        return R;
    }

    Vec3 to_camera(const Vec3& p_world) const { return rotation() * p_world + translation; }

    // Camera center in world coordinates: -R^T t.
    Vec3 center() const { return -(transpose(rotation()) * translation); }
};

// Builds a world-to-camera pose looking from `eye` toward `target`.
inline Pose look_at_pose(const Vec3& eye, const Vec3& target, Vec3 up = {0, 1, 0}) {
    const Vec3 forward = normalize(target - eye);
    if (norm(cross(forward, up)) < 1e-8) up = std::abs(forward.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 0, 1};
    const Vec3 right = normalize(cross(forward, up));
    const Vec3 down = cross(forward, right);  // y axis points down in image space
    const Mat3 R = Mat3::from_rows(right, down, forward);

    // Rotation matrix -> quaternion (Shepperd's method).
    Pose pose;
    const double trace = R(0, 0) + R(1, 1) + R(2, 2);
    if (trace > 0.0) {
        const double s = std::sqrt(trace + 1.0) * 2.0;
        pose.qw = 0.25 * s;
        pose.qx = (R(2, 1) - R(1, 2)) / s;
        pose.qy = (R(0, 2) - R(2, 0)) / s;
        pose.qz = (R(1, 0) - R(0, 1)) / s;
    } else if (R(0, 0) > R(1, 1) && R(0, 0) > R(2, 2)) {
        const double s = std::sqrt(1.0 + R(0, 0) - R(1, 1) - R(2, 2)) * 2.0;
        pose.qw = (R(2, 1) - R(1, 2)) / s;
        pose.qx = 0.25 * s;
        pose.qy = (R(0, 1) + R(1, 0)) / s;
        pose.qz = (R(0, 2) + R(2, 0)) / s;
    } else if (R(1, 1) > R(2, 2)) {
        const double s = std::sqrt(1.0 + R(1, 1) - R(0, 0) - R(2, 2)) * 2.0;
        pose.qw = (R(0, 2) - R(2, 0)) / s;
        pose.qx = (R(0, 1) + R(1, 0)) / s;
        pose.qy = 0.25 * s;
        pose.qz = (R(1, 2) + R(2, 1)) / s;
    } else {
        const double s = std::sqrt(1.0 + R(2, 2) - R(0, 0) - R(1, 1)) * 2.0;
        pose.qw = (R(1, 0) - R(0, 1)) / s;
        pose.qx = (R(0, 2) + R(2, 0)) / s;
        pose.qy = (R(1, 2) + R(2, 1)) / s;
        pose.qz = 0.25 * s;
    }
    const double n = std::sqrt(pose.qw * pose.qw + pose.qx * pose.qx + pose.qy * pose.qy + pose.qz * pose.qz);
    pose.qw /= n;
    pose.qx /= n;
    pose.qy /= n;
    pose.qz /= n;
    pose.translation = -(R * eye);
    return pose;
}

// One calibrated observation. Immutable after construction.
struct View {
    Intrinsics intrinsics;
    Pose pose;
    Image image;
    std::optional<MaskImage> mask;
    std::string name;

    void validate() const {
        intrinsics.validate();
        pose.validate();
        if (!image.empty() && (image.width != intrinsics.width || image.height != intrinsics.height))
            throw std::invalid_argument("view: image dimensions do not match intrinsics");
        if (mask && (mask->width != intrinsics.width || mask->height != intrinsics.height))
            throw std::invalid_argument("view: mask dimensions do not match image");
    }
};

struct Ray {
    Vec3 origin;
    Vec3 direction;  // unit length
};

struct Pixel {
    double u = 0.0;
    double v = 0.0;
};

// Projects a world point into continuous pixel coordinates. Returns nullopt
// when the point is at or behind the camera plane (z <= 1e-9).
inline std::optional<Pixel> project(const Intrinsics& intr, const Pose& pose, const Vec3& p_world) {
    const Vec3 pc = pose.to_camera(p_world);
    if (pc.z <= 1e-9) return std::nullopt;
    return Pixel{intr.fx * pc.x / pc.z + intr.cx, intr.fy * pc.y / pc.z + intr.cy};
}

inline std::optional<Pixel> project(const View& view, const Vec3& p_world) {
    return project(view.intrinsics, view.pose, p_world);
}

// Ray through continuous pixel coordinates (pixel centers sit at i + 0.5).
inline Ray pixel_ray(const Intrinsics& intr, const Pose& pose, double u, double v) {
    if (!(u >= 0.0 && u < intr.width && v >= 0.0 && v < intr.height))
        throw std::invalid_argument("pixel_ray: pixel (" + std::to_string(u) + ", " + std::to_string(v) +
                                    ") outside image bounds");
    const Vec3 dir_cam{(u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0};
    const Mat3 Rt = transpose(pose.rotation());
    return Ray{pose.center(), normalize(Rt * dir_cam)};
}

inline Ray pixel_ray(const View& view, double u, double v) { return pixel_ray(view.intrinsics, view.pose, u, v); }

}  // namespace refray
