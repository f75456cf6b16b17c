#include "viewforge/scene_io.hpp"

#include "viewforge/error.hpp"

#include <Eigen/SVD>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>

namespace viewforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kShC0 = 0.28209479177387814;

static_assert(std::endian::native == std::endian::little, "binary sidecars assume a little-endian host");

enum class PlyType { i8, u8, i16, u16, i32, u32, f32, f64 };

PlyType parse_ply_type(const std::string& t) {
    static const std::unordered_map<std::string, PlyType> table = {
        {"char", PlyType::i8},    {"int8", PlyType::i8},     {"uchar", PlyType::u8},
        {"uint8", PlyType::u8},   {"short", PlyType::i16},   {"int16", PlyType::i16},
        {"ushort", PlyType::u16}, {"uint16", PlyType::u16},  {"int", PlyType::i32},
        {"int32", PlyType::i32},  {"uint", PlyType::u32},    {"uint32", PlyType::u32},
        {"float", PlyType::f32},  {"float32", PlyType::f32}, {"double", PlyType::f64},
        {"float64", PlyType::f64},
    };
    const auto it = table.find(t);
    if (it == table.end()) throw Error(ErrorCode::MalformedFile, "unknown PLY type '" + t + "'");
    return it->second;
}

std::size_t ply_type_size(PlyType t) {
    switch (t) {
    case PlyType::i8:
    case PlyType::u8: return 1;
    case PlyType::i16:
    case PlyType::u16: return 2;
    case PlyType::i32:
    case PlyType::u32:
    case PlyType::f32: return 4;
    case PlyType::f64: return 8;
    }
    return 0;
}

double read_binary_value(const char* p, PlyType t) {
    switch (t) {
    case PlyType::i8: { std::int8_t v; std::memcpy(&v, p, 1); return v; }
    case PlyType::u8: { std::uint8_t v; std::memcpy(&v, p, 1); return v; }
    case PlyType::i16: { std::int16_t v; std::memcpy(&v, p, 2); return v; }
    case PlyType::u16: { std::uint16_t v; std::memcpy(&v, p, 2); return v; }
    case PlyType::i32: { std::int32_t v; std::memcpy(&v, p, 4); return v; }
    case PlyType::u32: { std::uint32_t v; std::memcpy(&v, p, 4); return v; }
    case PlyType::f32: { float v; std::memcpy(&v, p, 4); return v; }
    case PlyType::f64: { double v; std::memcpy(&v, p, 8); return v; }
    }
    return 0.0;
}

struct PlyProperty {
    std::string name;
    PlyType type;
};

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> properties;
    bool has_list = false;
};

constexpr std::array<const char*, 14> kRequiredPly = {
    "x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2", "opacity",
    "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"};

} // namespace

GaussianScene load_gaussian_ply(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line) || line.rfind("ply", 0) != 0) {
        throw Error(ErrorCode::MalformedFile, path.string() + " is not a PLY file");
    }
    bool binary = false;
    std::vector<PlyElement> elements;
    bool header_done = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt == "ascii") {
                binary = false;
            } else if (fmt == "binary_little_endian") {
                binary = true;
            } else {
                throw Error(ErrorCode::MalformedFile, "unsupported PLY format '" + fmt + "'");
            }
        } else if (key == "element") {
            PlyElement e;
            ls >> e.name >> e.count;
            if (!ls) throw Error(ErrorCode::MalformedFile, "bad element line: " + line);
            elements.push_back(std::move(e));
        } else if (key == "property") {
            if (elements.empty()) throw Error(ErrorCode::MalformedFile, "property before element");
            std::string type;
            ls >> type;
            if (type == "list") {
                elements.back().has_list = true;
                continue;
            }
            PlyProperty p;
            p.type = parse_ply_type(type);
            ls >> p.name;
            elements.back().properties.push_back(std::move(p));
        } else if (key == "end_header") {
            header_done = true;
            break;
        }
    }
    if (!header_done) throw Error(ErrorCode::MalformedFile, "PLY header not terminated");

    std::size_t vertex_index = elements.size();
    for (std::size_t i = 0; i < elements.size(); ++i) {
        if (elements[i].name == "vertex") {
            vertex_index = i;
            break;
        }
        if (elements[i].has_list || (!binary && elements[i].count > 0)) {
            throw Error(ErrorCode::MalformedFile, "elements before 'vertex' are not supported");
        }
    }
    if (vertex_index == elements.size()) throw Error(ErrorCode::MalformedFile, "no vertex element");
    const PlyElement& vertex = elements[vertex_index];
    if (vertex.has_list) throw Error(ErrorCode::MalformedFile, "list property on vertex element");

    // Skip binary payload of scalar elements that precede the vertices.
    if (binary) {
        for (std::size_t i = 0; i < vertex_index; ++i) {
            std::size_t stride = 0;
            for (const auto& p : elements[i].properties) stride += ply_type_size(p.type);
            in.seekg(static_cast<std::streamoff>(stride * elements[i].count), std::ios::cur);
        }
    }

    std::unordered_map<std::string, std::size_t> column;
    for (std::size_t i = 0; i < vertex.properties.size(); ++i) column[vertex.properties[i].name] = i;
    std::array<std::size_t, kRequiredPly.size()> slot{};
    for (std::size_t k = 0; k < kRequiredPly.size(); ++k) {
        const auto it = column.find(kRequiredPly[k]);
        if (it == column.end()) {
            throw Error(ErrorCode::MissingProperty, std::string("PLY vertex lacks '") + kRequiredPly[k] + "'");
        }
        slot[k] = it->second;
    }
    if (vertex.properties.size() > kRequiredPly.size()) {
        spdlog::warn("{}: ignoring {} extra vertex properties (higher SH bands, normals, ...)",
                     path.string(), vertex.properties.size() - kRequiredPly.size());
    }
    if (vertex.count == 0) throw Error(ErrorCode::EmptyScene, path.string() + " has no vertices");

    std::vector<std::size_t> offsets(vertex.properties.size());
    std::size_t stride = 0;
    for (std::size_t i = 0; i < vertex.properties.size(); ++i) {
        offsets[i] = stride;
        stride += ply_type_size(vertex.properties[i].type);
    }

    GaussianScene scene;
    scene.reserve(vertex.count);
    std::vector<double> row(vertex.properties.size());
    std::vector<char> buffer(stride);
    for (std::size_t v = 0; v < vertex.count; ++v) {
        if (binary) {
            if (!in.read(buffer.data(), static_cast<std::streamsize>(stride))) {
                throw Error(ErrorCode::MalformedFile, "PLY truncated at vertex " + std::to_string(v));
            }
            for (std::size_t i = 0; i < row.size(); ++i) {
                row[i] = read_binary_value(buffer.data() + offsets[i], vertex.properties[i].type);
            }
        } else {
            for (double& value : row) {
                if (!(in >> value)) {
                    throw Error(ErrorCode::MalformedFile, "PLY truncated at vertex " + std::to_string(v));
                }
            }
        }
        auto get = [&](std::size_t k) { return row[slot[k]]; };
        const Vec3 center(get(0), get(1), get(2));
        const Vec3 color = (Vec3(get(3), get(4), get(5)) * kShC0).array() + 0.5;
        const double opacity = logistic(get(6));
        const Vec3 log_scale(get(7), get(8), get(9));
        Quat q(get(10), get(11), get(12), get(13));
        const double qn = q.norm();
        if (!(qn > 0.0) || !std::isfinite(qn)) {
            throw Error(ErrorCode::MalformedFile, "zero or non-finite quaternion at vertex " + std::to_string(v));
        }
        q.coeffs() /= qn;
        scene.push_back(center, log_scale, q, opacity, color.cwiseMax(0.0).cwiseMin(1.0));
    }
    scene.validate();
    return scene;
}

void write_gaussian_ply(const GaussianScene& scene, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << "ply\nformat binary_little_endian 1.0\nelement vertex " << scene.size() << "\n";
    for (const char* name : kRequiredPly) out << "property float " << name << "\n";
    out << "end_header\n";
    std::array<float, kRequiredPly.size()> row{};
    for (std::size_t i = 0; i < scene.size(); ++i) {
        const Vec3& c = scene.centers[i];
        const Vec3 dc = (scene.dc_colors[i].array() - 0.5) / kShC0;
        const double alpha = std::clamp(scene.opacities[i], 1e-7, 1.0 - 1e-7);
        const Vec3& s = scene.log_scales[i];
        const Quat& q = scene.rotations[i];
        const std::array<double, kRequiredPly.size()> values = {
            c.x(), c.y(), c.z(), dc.x(), dc.y(), dc.z(), logit(alpha),
            s.x(), s.y(), s.z(), q.w(), q.x(), q.y(), q.z()};
        for (std::size_t k = 0; k < values.size(); ++k) row[k] = static_cast<float>(values[k]);
        out.write(reinterpret_cast<const char*>(row.data()), sizeof(row));
    }
}

CameraFormat camera_format_from_string(std::string_view s) {
    if (s == "colmap_text") return CameraFormat::colmap_text;
    if (s == "transforms_json") return CameraFormat::transforms_json;
    throw Error(ErrorCode::InvalidArgument, "unknown camera format '" + std::string(s) + "'");
}

namespace {

struct Intrinsics {
    double fx, fy, cx, cy;
    int width, height;
};

std::vector<CameraPose> load_colmap(const fs::path& dir) {
    const fs::path cameras_path = dir / "cameras.txt";
    const fs::path images_path = dir / "images.txt";
    std::ifstream cams(cameras_path);
    if (!cams) throw Error(ErrorCode::Io, "cannot open " + cameras_path.string());
    std::map<long, Intrinsics> intrinsics;
    std::string line;
    while (std::getline(cams, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        long id = 0;
        std::string model;
        int w = 0, h = 0;
        if (!(ls >> id >> model >> w >> h)) {
            throw Error(ErrorCode::MalformedFile, cameras_path.string() + ": bad line '" + line + "'");
        }
        Intrinsics k{};
        k.width = w;
        k.height = h;
        if (model == "PINHOLE") {
            ls >> k.fx >> k.fy >> k.cx >> k.cy;
        } else if (model == "SIMPLE_PINHOLE") {
            ls >> k.fx >> k.cx >> k.cy;
            k.fy = k.fx;
        } else {
            throw Error(ErrorCode::UnsupportedCameraModel, "camera model '" + model + "' (only PINHOLE, SIMPLE_PINHOLE)");
        }
        if (!ls) throw Error(ErrorCode::MalformedFile, cameras_path.string() + ": missing intrinsics");
        intrinsics[id] = k;
    }

    std::ifstream imgs(images_path);
    if (!imgs) throw Error(ErrorCode::Io, "cannot open " + images_path.string());
    std::optional<long> declared;
    struct Entry {
        std::string name;
        CameraPose pose;
    };
    std::vector<Entry> entries;
    bool expect_points = false;
    while (std::getline(imgs, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!expect_points && !line.empty() && line[0] == '#') {
            const std::string tag = "# Number of images:";
            if (line.rfind(tag, 0) == 0) declared = std::stol(line.substr(tag.size()));
            continue;
        }
        if (expect_points) {
            expect_points = false;
            continue;
        }
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::istringstream ls(line);
        long image_id = 0, camera_id = 0;
        double qw, qx, qy, qz, tx, ty, tz;
        Entry e;
        if (!(ls >> image_id >> qw >> qx >> qy >> qz >> tx >> ty >> tz >> camera_id >> e.name)) {
            throw Error(ErrorCode::MalformedFile, images_path.string() + ": bad image line '" + line + "'");
        }
        const auto it = intrinsics.find(camera_id);
        if (it == intrinsics.end()) {
            throw Error(ErrorCode::MalformedFile, "image '" + e.name + "' references unknown camera " +
                                                      std::to_string(camera_id));
        }
        Quat q(qw, qx, qy, qz);
        q.normalize();
        e.pose.rotation = q;
        e.pose.translation = Vec3(tx, ty, tz);
        e.pose.fx = it->second.fx;
        e.pose.fy = it->second.fy;
        e.pose.cx = it->second.cx;
        e.pose.cy = it->second.cy;
        e.pose.width = it->second.width;
        e.pose.height = it->second.height;
        entries.push_back(std::move(e));
        expect_points = true;
    }
    if (declared && *declared != static_cast<long>(entries.size())) {
        throw Error(ErrorCode::PoseCountMismatch, images_path.string() + " declares " + std::to_string(*declared) +
                                                      " images but lists " + std::to_string(entries.size()));
    }
    std::stable_sort(entries.begin(), entries.end(),
                     [](const Entry& a, const Entry& b) { return a.name < b.name; });
    std::vector<CameraPose> poses;
    poses.reserve(entries.size());
    for (auto& e : entries) poses.push_back(e.pose);
    return poses;
}

double json_number(const json& j, const char* key, const fs::path& path) {
    if (!j.contains(key) || !j[key].is_number()) {
        throw Error(ErrorCode::MalformedFile, path.string() + ": missing numeric '" + key + "'");
    }
    return j[key].get<double>();
}

std::vector<CameraPose> load_transforms(const fs::path& path, std::optional<std::pair<double, double>>& depth) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedFile, path.string() + ": " + e.what());
    }
    if (!doc.contains("frames") || !doc["frames"].is_array()) {
        throw Error(ErrorCode::MalformedFile, path.string() + ": missing 'frames' array");
    }
    if (doc.contains("num_frames") && doc["num_frames"].get<std::size_t>() != doc["frames"].size()) {
        throw Error(ErrorCode::PoseCountMismatch, path.string() + ": num_frames disagrees with frames");
    }
    const bool opengl = doc.value("camera_convention", std::string("opencv")) == "opengl";
    if (doc.contains("near") && doc.contains("far")) {
        depth = std::make_pair(doc["near"].get<double>(), doc["far"].get<double>());
    }
    std::vector<CameraPose> poses;
    for (const auto& frame : doc["frames"]) {
        auto pick = [&](const char* key) {
            return frame.contains(key) ? json_number(frame, key, path) : json_number(doc, key, path);
        };
        if (!frame.contains("transform_matrix")) {
            throw Error(ErrorCode::MalformedFile, path.string() + ": frame without transform_matrix");
        }
        const auto& m = frame["transform_matrix"];
        if (!m.is_array() || m.size() < 3) throw Error(ErrorCode::MalformedFile, path.string() + ": bad transform_matrix");
        Eigen::Matrix4d c2w = Eigen::Matrix4d::Identity();
        for (int r = 0; r < static_cast<int>(m.size()) && r < 4; ++r) {
            if (!m[r].is_array() || m[r].size() != 4) {
                throw Error(ErrorCode::MalformedFile, path.string() + ": transform_matrix rows must have 4 entries");
            }
            for (int c = 0; c < 4; ++c) c2w(r, c) = m[r][c].get<double>();
        }
        Mat3 rot = c2w.block<3, 3>(0, 0);
        if (opengl) {
            rot.col(1) *= -1.0;
            rot.col(2) *= -1.0;
        }
        // Re-orthonormalize; manifests often carry float-rounded rotations.
        Eigen::JacobiSVD<Mat3> svd(rot, Eigen::ComputeFullU | Eigen::ComputeFullV);
        rot = svd.matrixU() * svd.matrixV().transpose();
        if (rot.determinant() < 0) throw Error(ErrorCode::MalformedFile, path.string() + ": improper rotation");
        CameraPose pose;
        pose.rotation = Quat(rot.transpose()).normalized();
        pose.set_center(c2w.block<3, 1>(0, 3));
        pose.fx = pick("fl_x");
        pose.fy = pick("fl_y");
        pose.cx = pick("cx");
        pose.cy = pick("cy");
        pose.width = static_cast<int>(pick("w"));
        pose.height = static_cast<int>(pick("h"));
        poses.push_back(pose);
    }
    return poses;
}

} // namespace

std::vector<CameraPose> load_cameras(const fs::path& path, CameraFormat format, const CameraLoadOptions& options) {
    std::optional<std::pair<double, double>> depth;
    std::vector<CameraPose> poses =
        format == CameraFormat::colmap_text ? load_colmap(path) : load_transforms(path, depth);
    for (std::size_t i = 0; i < poses.size(); ++i) {
        poses[i].id = static_cast<int>(i);
        poses[i].kind = PoseKind::training;
        if (depth) {
            poses[i].near = depth->first;
            poses[i].far = depth->second;
        }
    }
    if (!depth && options.bounds) apply_default_depth_range(poses, *options.bounds);
    for (const auto& p : poses) {
        if (!p.center().allFinite()) throw Error(ErrorCode::MalformedFile, "non-finite camera center");
        p.validate();
    }
    return poses;
}

void write_transforms_json(const std::vector<CameraPose>& cameras, const fs::path& path) {
    json doc;
    if (!cameras.empty()) {
        const auto& c0 = cameras.front();
        doc["fl_x"] = c0.fx;
        doc["fl_y"] = c0.fy;
        doc["cx"] = c0.cx;
        doc["cy"] = c0.cy;
        doc["w"] = c0.width;
        doc["h"] = c0.height;
    }
    json frames = json::array();
    for (const auto& cam : cameras) {
        json f;
        char name[32];
        std::snprintf(name, sizeof(name), "images/frame_%05d.png", cam.id);
        f["file_path"] = name;
        const Mat3 c2w = cam.rotation.conjugate().toRotationMatrix();
        const Vec3 c = cam.center();
        json rows = json::array();
        for (int r = 0; r < 3; ++r) rows.push_back({c2w(r, 0), c2w(r, 1), c2w(r, 2), c(r)});
        rows.push_back({0.0, 0.0, 0.0, 1.0});
        f["transform_matrix"] = rows;
        const auto& c0 = cameras.front();
        if (cam.fx != c0.fx || cam.fy != c0.fy || cam.cx != c0.cx || cam.cy != c0.cy || cam.width != c0.width ||
            cam.height != c0.height) {
            f["fl_x"] = cam.fx;
            f["fl_y"] = cam.fy;
            f["cx"] = cam.cx;
            f["cy"] = cam.cy;
            f["w"] = cam.width;
            f["h"] = cam.height;
        }
        frames.push_back(std::move(f));
    }
    doc["frames"] = std::move(frames);
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << doc.dump(2) << "\n";
}

void write_colmap_text(const std::vector<CameraPose>& cameras, const fs::path& dir) {
    fs::create_directories(dir);
    std::ofstream cams(dir / "cameras.txt");
    std::ofstream imgs(dir / "images.txt");
    if (!cams || !imgs) throw Error(ErrorCode::Io, "cannot write COLMAP files under " + dir.string());
    cams.precision(17);
    imgs.precision(17);
    cams << "# Camera list with one line of data per camera:\n";
    imgs << "# Number of images: " << cameras.size() << ", mean observations per image: 0\n";
    for (std::size_t i = 0; i < cameras.size(); ++i) {
        const auto& c = cameras[i];
        cams << i + 1 << " PINHOLE " << c.width << " " << c.height << " " << c.fx << " " << c.fy << " " << c.cx
             << " " << c.cy << "\n";
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%05zu.png", i);
        imgs << i + 1 << " " << c.rotation.w() << " " << c.rotation.x() << " " << c.rotation.y() << " "
             << c.rotation.z() << " " << c.translation.x() << " " << c.translation.y() << " " << c.translation.z()
             << " " << i + 1 << " " << name << "\n\n";
    }
}

void apply_default_depth_range(std::vector<CameraPose>& cameras, const SceneBounds& bounds) {
    const double diag = bounds.diagonal();
    for (auto& c : cameras) {
        c.near = 0.01 * diag;
        c.far = 10.0 * diag;
    }
}

namespace {

double quantile(std::vector<double>& values, double q) {
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

} // namespace

SceneBounds compute_bounds(const GaussianScene& scene, double lo_quantile, double hi_quantile, double pad) {
    if (scene.empty()) throw Error(ErrorCode::EmptyScene, "cannot bound an empty scene");
    if (!(lo_quantile >= 0.0 && lo_quantile < hi_quantile && hi_quantile <= 1.0) || !(pad >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "quantiles must satisfy 0 <= lo < hi <= 1 and pad >= 0");
    }
    SceneBounds b;
    std::vector<double> coords(scene.size());
    for (int axis = 0; axis < 3; ++axis) {
        for (std::size_t i = 0; i < scene.size(); ++i) coords[i] = scene.centers[i][axis];
        b.min_corner[axis] = quantile(coords, lo_quantile);
        b.max_corner[axis] = quantile(coords, hi_quantile);
    }
    Vec3 extent = b.extent();
    const double largest = std::max(extent.maxCoeff(), 1e-6);
    for (int axis = 0; axis < 3; ++axis) {
        // Flat scenes would otherwise violate min < max on one axis.
        if (extent[axis] < 1e-9 * largest) {
            b.min_corner[axis] -= 1e-3 * largest;
            b.max_corner[axis] += 1e-3 * largest;
        }
    }
    extent = b.extent();
    b.min_corner -= pad * extent;
    b.max_corner += pad * extent;
    return b;
}

} // namespace viewforge
