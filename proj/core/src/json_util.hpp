#pragma once

#include "viewforge/error.hpp"
#include "viewforge/scene.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <string>

namespace viewforge::detail {

using nlohmann::json;

inline json vec_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline Vec3 vec_from_json(const json& j) {
    if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::MalformedFile, "expected a 3-vector");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline json pose_to_json(const CameraPose& p) {
    return json{
        {"id", p.id},
        {"kind", std::string(to_string(p.kind))},
        {"w2c",
         {{"quaternion", {p.rotation.w(), p.rotation.x(), p.rotation.y(), p.rotation.z()}},
          {"translation", vec_to_json(p.translation)}}},
        {"intrinsics",
         {{"fx", p.fx},
          {"fy", p.fy},
          {"cx", p.cx},
          {"cy", p.cy},
          {"width", p.width},
          {"height", p.height},
          {"near", p.near},
          {"far", p.far}}},
    };
}

inline CameraPose pose_from_json(const json& j) {
    try {
        CameraPose p;
        p.id = j.at("id").get<int>();
        p.kind = pose_kind_from_string(j.at("kind").get<std::string>());
        const auto& q = j.at("w2c").at("quaternion");
        p.rotation = Quat(q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>(), q.at(3).get<double>());
        p.translation = vec_from_json(j.at("w2c").at("translation"));
        const auto& k = j.at("intrinsics");
        p.fx = k.at("fx").get<double>();
        p.fy = k.at("fy").get<double>();
        p.cx = k.at("cx").get<double>();
        p.cy = k.at("cy").get<double>();
        p.width = k.at("width").get<int>();
        p.height = k.at("height").get<int>();
        p.near = k.at("near").get<double>();
        p.far = k.at("far").get<double>();
        return p;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedFile, std::string("bad pose record: ") + e.what());
    }
}

inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedFile, path.string() + ": " + e.what());
    }
}

inline void write_json_file(const json& doc, const std::filesystem::path& path, int indent = 1) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << doc.dump(indent) << "\n";
}

} // namespace viewforge::detail
