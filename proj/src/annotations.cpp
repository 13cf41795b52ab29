#include <json.hpp>

#include "msaf/data.hpp"

namespace msaf {

namespace {

using ordered_json = nlohmann::ordered_json;

const char* kKeys[] = {"video_id", "category_id", "ego_involved", "num_frames", "fps",
                       "aw_start", "aw_end",      "behavior_type", "crash_boxes"};
const char* kBoxKeys[] = {"frame", "x", "y", "w", "h"};

}  // namespace

std::string behavior_name(Behavior b) {
    switch (b) {
        case Behavior::crossing: return "crossing";
        case Behavior::hitting: return "hitting";
        case Behavior::out_of_control: return "out_of_control";
        case Behavior::other: return "other";
    }
    fail("unreachable behavior value");
}

std::optional<Behavior> behavior_from_name(const std::string& s) {
    if (s == "crossing") return Behavior::crossing;
    if (s == "hitting") return Behavior::hitting;
    if (s == "out_of_control") return Behavior::out_of_control;
    if (s == "other") return Behavior::other;
    return std::nullopt;
}

AccidentAnnotation parse_annotation(const std::string& bytes) {
    ordered_json j;
    try {
        j = ordered_json::parse(bytes);
    } catch (const nlohmann::json::parse_error& e) {
        fail(std::string("malformed annotation JSON: ") + e.what());
    }

    std::vector<std::string> bad;
    auto blame = [&](const std::string& msg) { bad.push_back(msg); };

    if (!j.is_object()) fail("annotation must be a JSON object");
    for (auto& [key, _] : j.items()) {
        bool known = false;
        for (const char* k : kKeys) known = known || key == k;
        if (!known) blame("unknown field \"" + key + "\"");
    }

    auto want = [&](const char* key, const char* type, auto pred) -> const ordered_json* {
        if (!j.contains(key)) {
            blame(std::string("missing field \"") + key + "\"");
            return nullptr;
        }
        if (!pred(j[key])) {
            blame(std::string("field \"") + key + "\" must be " + type);
            return nullptr;
        }
        return &j[key];
    };
    auto is_int = [](const ordered_json& v) { return v.is_number_integer(); };
    auto is_str = [](const ordered_json& v) { return v.is_string(); };
    auto is_bool = [](const ordered_json& v) { return v.is_boolean(); };
    auto is_arr = [](const ordered_json& v) { return v.is_array(); };

    AccidentAnnotation ann;
    if (auto* v = want("video_id", "a string", is_str)) {
        ann.video_id = v->get<std::string>();
        if (ann.video_id.empty()) blame("field \"video_id\" must be non-empty");
    }
    if (auto* v = want("category_id", "an integer", is_int)) {
        ann.category_id = v->get<int64_t>();
        if (ann.category_id < 1 || ann.category_id > kCategoryCount)
            blame("field \"category_id\" is " + std::to_string(ann.category_id) +
                  ", outside 1.." + std::to_string(kCategoryCount));
    }
    if (auto* v = want("ego_involved", "a boolean", is_bool)) ann.ego_involved = v->get<bool>();
    if (auto* v = want("num_frames", "an integer", is_int)) {
        ann.num_frames = v->get<int64_t>();
        if (ann.num_frames < 1) blame("field \"num_frames\" must be positive");
    }
    if (auto* v = want("fps", "an integer", is_int)) {
        ann.fps = v->get<int64_t>();
        if (ann.fps != 30) blame("field \"fps\" must be 30");
    }
    if (auto* v = want("aw_start", "an integer", is_int)) ann.aw_start = v->get<int64_t>();
    if (auto* v = want("aw_end", "an integer", is_int)) ann.aw_end = v->get<int64_t>();
    if (auto* v = want("behavior_type", "a string", is_str)) {
        auto b = behavior_from_name(v->get<std::string>());
        if (b) {
            ann.behavior_type = *b;
        } else {
            blame("field \"behavior_type\" has unknown value \"" + v->get<std::string>() + "\"");
        }
    }

    bool frames_known = j.contains("num_frames") && is_int(j["num_frames"]) && ann.num_frames >= 1;
    if (frames_known) {
        if (ann.aw_start < 0) blame("field \"aw_start\" must be non-negative");
        if (ann.aw_end < ann.aw_start) blame("field \"aw_end\" must be at least aw_start");
        if (ann.aw_end >= ann.num_frames)
            blame("field \"aw_end\" is " + std::to_string(ann.aw_end) +
                  ", not below num_frames " + std::to_string(ann.num_frames));
    }

    if (auto* arr = want("crash_boxes", "an array", is_arr)) {
        for (size_t i = 0; i < arr->size(); ++i) {
            const auto& e = (*arr)[i];
            std::string at = "crash_boxes[" + std::to_string(i) + "]";
            if (!e.is_object()) {
                blame(at + " must be an object");
                continue;
            }
            bool shaped = true;
            for (const char* k : kBoxKeys)
                if (!e.contains(k) || !e[k].is_number_integer()) {
                    blame(at + " needs integer field \"" + std::string(k) + "\"");
                    shaped = false;
                }
            for (auto& [key, _] : e.items()) {
                bool known = false;
                for (const char* k : kBoxKeys) known = known || key == k;
                if (!known) blame(at + " has unknown field \"" + key + "\"");
            }
            if (!shaped) continue;
            CrashBox box{e["frame"].get<int64_t>(), e["x"].get<int64_t>(), e["y"].get<int64_t>(),
                         e["w"].get<int64_t>(), e["h"].get<int64_t>()};
            if (frames_known && (box.frame < 0 || box.frame >= ann.num_frames))
                blame(at + " frame " + std::to_string(box.frame) + " outside [0," +
                      std::to_string(ann.num_frames) + ")");
            if (box.x < 0 || box.y < 0) blame(at + " origin must be non-negative");
            if (box.w < 1 || box.h < 1) blame(at + " extent must be positive");
            ann.crash_boxes.push_back(box);
        }
    }

    if (!bad.empty()) {
        std::string msg = "invalid annotation";
        if (!ann.video_id.empty()) msg += " for \"" + ann.video_id + "\"";
        msg += ": ";
        for (size_t i = 0; i < bad.size(); ++i) msg += (i ? "; " : "") + bad[i];
        fail(msg);
    }
    return ann;
}

std::string serialize_annotation(const AccidentAnnotation& ann) {
    ordered_json j;
    j["video_id"] = ann.video_id;
    j["category_id"] = ann.category_id;
    j["ego_involved"] = ann.ego_involved;
    j["num_frames"] = ann.num_frames;
    j["fps"] = ann.fps;
    j["aw_start"] = ann.aw_start;
    j["aw_end"] = ann.aw_end;
    j["behavior_type"] = behavior_name(ann.behavior_type);
    ordered_json boxes = ordered_json::array();
    for (const CrashBox& b : ann.crash_boxes) {
        ordered_json e;
        e["frame"] = b.frame;
        e["x"] = b.x;
        e["y"] = b.y;
        e["w"] = b.w;
        e["h"] = b.h;
        boxes.push_back(std::move(e));
    }
    j["crash_boxes"] = std::move(boxes);
    return j.dump(2) + "\n";
}

}  // namespace msaf
