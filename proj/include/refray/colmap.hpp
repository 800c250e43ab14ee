#pragma once

#include <cctype>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "refray/camera.hpp"

namespace refray {

// One row of a COLMAP sparse model, joined across cameras.txt / images.txt.
struct ColmapView {
    int image_id = 0;
    int camera_id = 0;
    Intrinsics intrinsics;
    std::string image_name;
    Pose pose;
};

namespace detail {

inline std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

inline bool is_comment_or_blank(const std::string& line) {
    for (char c : line) {
        if (c == '#') return true;
        if (!std::isspace(static_cast<unsigned char>(c))) return false;
    }
    return true;  // blank
}

}  // namespace detail

// Parses COLMAP sparse-model text files. cameras.txt rows:
//   CAMERA_ID MODEL WIDTH HEIGHT PARAMS...
// images.txt rows alternate a pose line
//   IMAGE_ID QW QX QY QZ TX TY TZ CAMERA_ID NAME
// with a 2D-points line, which is skipped. Supported camera models are
// PINHOLE (fx fy cx cy) and SIMPLE_PINHOLE (f cx cy); anything else is
// rejected rather than approximated.
inline std::vector<ColmapView> load_colmap(const std::string& cameras_text, const std::string& images_text) {
    std::map<int, Intrinsics> cameras;

    {
        std::istringstream in(cameras_text);
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            line = detail::strip_cr(line);
            if (detail::is_comment_or_blank(line)) continue;
            std::istringstream row(line);
            int camera_id = 0, width = 0, height = 0;
            std::string model;
            if (!(row >> camera_id >> model >> width >> height))
                throw std::runtime_error("cameras.txt line " + std::to_string(line_no) + ": malformed row");
            Intrinsics intr;
            intr.width = width;
            intr.height = height;
            if (model == "PINHOLE") {
                if (!(row >> intr.fx >> intr.fy >> intr.cx >> intr.cy))
                    throw std::runtime_error("cameras.txt line " + std::to_string(line_no) +
                                             ": PINHOLE expects 4 params");
            } else if (model == "SIMPLE_PINHOLE") {
                double f = 0.0;
                if (!(row >> f >> intr.cx >> intr.cy))
                    throw std::runtime_error("cameras.txt line " + std::to_string(line_no) +
                                             ": SIMPLE_PINHOLE expects 3 params");
                intr.fx = intr.fy = f;
            } else {
                throw std::runtime_error("cameras.txt line " + std::to_string(line_no) + ": unsupported camera model '" +
                                         model + "' (supported: PINHOLE, SIMPLE_PINHOLE)");
            }
            std::string extra;
            if (row >> extra)
                throw std::runtime_error("cameras.txt line " + std::to_string(line_no) + ": trailing tokens");
            intr.validate();
            cameras[camera_id] = intr;
        }
    }

    std::vector<ColmapView> out;
    {
        std::istringstream in(images_text);
        std::string line;
        int line_no = 0;
        bool expect_points_line = false;
        while (std::getline(in, line)) {
            ++line_no;
            line = detail::strip_cr(line);
            if (detail::is_comment_or_blank(line) && !expect_points_line) continue;
            if (expect_points_line) {  // 2D points row (possibly empty), skipped
                expect_points_line = false;
                continue;
            }
            std::istringstream row(line);
            ColmapView v;
            if (!(row >> v.image_id >> v.pose.qw >> v.pose.qx >> v.pose.qy >> v.pose.qz >> v.pose.translation.x >>
                  v.pose.translation.y >> v.pose.translation.z >> v.camera_id >> v.image_name))
                throw std::runtime_error("images.txt line " + std::to_string(line_no) + ": malformed pose row");
            const auto it = cameras.find(v.camera_id);
            if (it == cameras.end())
                throw std::runtime_error("images.txt line " + std::to_string(line_no) + ": CAMERA_ID " +
                                         std::to_string(v.camera_id) + " not present in cameras.txt");
            v.intrinsics = it->second;
            v.pose.validate();
            out.push_back(std::move(v));
            expect_points_line = true;
        }
    }
    return out;
}

inline std::string write_colmap_cameras(const std::vector<std::pair<int, Intrinsics>>& cameras) {
    std::ostringstream out;
    out << "# Camera list with one line of data per camera:\n";
    out << "#   CAMERA_ID, MODEL, WIDTH, HEIGHT, PARAMS[]\n";
    char buf[256];
    for (const auto& [id, intr] : cameras) {
        std::snprintf(buf, sizeof(buf), "%d PINHOLE %d %d %.17g %.17g %.17g %.17g\n", id, intr.width, intr.height,
                      intr.fx, intr.fy, intr.cx, intr.cy);
        out << buf;
    }
    return out.str();
}

struct ColmapImageRecord {
    int image_id = 0;
    Pose pose;
    int camera_id = 0;
    std::string name;
};

inline std::string write_colmap_images(const std::vector<ColmapImageRecord>& images) {
    std::ostringstream out;
    out << "# Image list with two lines of data per image:\n";
    out << "#   IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME\n";
    out << "#   POINTS2D[] as (X, Y, POINT3D_ID)\n";
    char buf[512];
    for (const auto& rec : images) {
        std::snprintf(buf, sizeof(buf), "%d %.17g %.17g %.17g %.17g %.17g %.17g %.17g %d %s\n", rec.image_id,
                      rec.pose.qw, rec.pose.qx, rec.pose.qy, rec.pose.qz, rec.pose.translation.x,
                      rec.pose.translation.y, rec.pose.translation.z, rec.camera_id, rec.name.c_str());
        out << buf;
        out << "\n";  // empty 2D-points line
    }
    return out.str();
}

}  // namespace refray
