#include "svcflow/catalog.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "svcflow/errors.hpp"

namespace svcflow {

using nlohmann::json;

namespace {

void require_keys(const json& obj, std::initializer_list<const char*> allowed,
                  const char* where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) { ok = true; break; }
        if (!ok)
            fail(ErrorKind::Validation,
                 std::string("unknown key '") + it.key() + "' in " + where);
    }
}

void validate_entry(const VideoEntry& v) {
    if (v.segments <= 0) fail(ErrorKind::Validation, "video needs at least one segment");
    if (v.layers <= 0) fail(ErrorKind::Validation, "video needs at least one layer");
    if (v.segment_duration_s <= 0)
        fail(ErrorKind::Validation, "segment duration must be positive");
    for (int l = 1; l < v.layers; ++l) {
        if (!(v.cumulative_kbps[size_t(l)] > v.cumulative_kbps[size_t(l - 1)]))
            fail(ErrorKind::Validation,
                 "cumulative bitrates must be strictly increasing in " + v.id);
    }
    for (int seg = 0; seg < v.segments; ++seg) {
        for (int l = 0; l < v.layers; ++l) {
            if (v.size_kbits[size_t(seg)][size_t(l)] <= Rational(0))
                fail(ErrorKind::Validation, "layer sizes must be positive in " + v.id);
            double q = v.quality[size_t(seg)][size_t(l)];
            if (q < 0.0 || q > 1.0)
                fail(ErrorKind::Validation, "quality scores must lie in [0,1]");
            if (l > 0 && q < v.quality[size_t(seg)][size_t(l - 1)])
                fail(ErrorKind::Validation,
                     "quality must be non-decreasing in layer count for " + v.id);
        }
    }
    for (const auto& [server, cube] : v.availability) {
        if (static_cast<int>(cube.size()) != v.segments)
            fail(ErrorKind::Validation, "availability segment count mismatch for " + server);
        for (const auto& row : cube) {
            if (static_cast<int>(row.size()) != v.layers)
                fail(ErrorKind::Validation, "availability layer count mismatch for " + server);
            // A server holding an enhancement layer holds every layer below it.
            for (int l = v.layers - 1; l >= 1; --l) {
                if (row[size_t(l)] && !row[size_t(l - 1)])
                    fail(ErrorKind::Validation,
                         "availability for " + server + " violates layer-prefix rule");
            }
        }
    }
}

VideoEntry parse_video(const json& jv) {
    require_keys(jv,
                 {"video", "segment_duration_s", "segments", "layers", "availability",
                  "availability_explicit"},
                 "video manifest");
    for (const char* key : {"video", "segment_duration_s", "segments", "layers"})
        if (!jv.contains(key))
            fail(ErrorKind::Parse, std::string("video manifest missing '") + key + "'");

    VideoEntry v;
    v.id = jv["video"].get<std::string>();
    v.segment_duration_s = jv["segment_duration_s"].get<double>();
    v.segments = jv["segments"].get<int>();
    if (!jv["layers"].is_array() || jv["layers"].empty())
        fail(ErrorKind::Parse, "video manifest needs a non-empty 'layers' array");
    v.layers = static_cast<int>(jv["layers"].size());
    if (v.segments <= 0) fail(ErrorKind::Validation, "segments must be positive");

    v.size_kbits.assign(size_t(v.segments), std::vector<Rational>(size_t(v.layers)));
    v.quality.assign(size_t(v.segments), std::vector<double>(size_t(v.layers), 0.0));
    v.cumulative_kbps.resize(size_t(v.layers));

    Rational duration = Rational::from_kbps(v.segment_duration_s);  // same 1/1000 grid
    Rational prev_cum(0);
    for (int l = 0; l < v.layers; ++l) {
        const json& jl = jv["layers"][size_t(l)];
        require_keys(jl, {"cumulative_kbps", "quality", "size_kbits"}, "layer");
        if (!jl.contains("cumulative_kbps") || !jl.contains("quality"))
            fail(ErrorKind::Parse, "layer entries need 'cumulative_kbps' and 'quality'");
        Rational cum = Rational::from_kbps(jl["cumulative_kbps"].get<double>());
        v.cumulative_kbps[size_t(l)] = cum;

        // Sizes: explicit when given, else derived from the bitrate ladder.
        if (jl.contains("size_kbits")) {
            const json& js = jl["size_kbits"];
            for (int seg = 0; seg < v.segments; ++seg) {
                double raw = js.is_array() ? js.at(size_t(seg)).get<double>()
                                           : js.get<double>();
                v.size_kbits[size_t(seg)][size_t(l)] = Rational::from_kbps(raw);
            }
        } else {
            Rational size = (cum - prev_cum) * duration;
            for (int seg = 0; seg < v.segments; ++seg)
                v.size_kbits[size_t(seg)][size_t(l)] = size;
        }
        prev_cum = cum;

        const json& jq = jl["quality"];
        for (int seg = 0; seg < v.segments; ++seg) {
            v.quality[size_t(seg)][size_t(l)] =
                jq.is_array() ? jq.at(size_t(seg)).get<double>() : jq.get<double>();
        }
    }

    if (jv.contains("availability")) {
        for (auto it = jv["availability"].begin(); it != jv["availability"].end(); ++it) {
            std::vector<std::vector<bool>> cube(size_t(v.segments),
                                                std::vector<bool>(size_t(v.layers), false));
            const json& val = it.value();
            for (int seg = 0; seg < v.segments; ++seg) {
                int max_layer = val.is_array() ? val.at(size_t(seg)).get<int>()
                                               : val.get<int>();
                if (max_layer < 0 || max_layer > v.layers)
                    fail(ErrorKind::Validation, "availability max layer out of range");
                for (int l = 0; l < max_layer; ++l) cube[size_t(seg)][size_t(l)] = true;
            }
            v.availability[it.key()] = std::move(cube);
        }
    }
    if (jv.contains("availability_explicit")) {
        for (auto it = jv["availability_explicit"].begin();
             it != jv["availability_explicit"].end(); ++it) {
            std::vector<std::vector<bool>> cube;
            for (const json& row : it.value()) {
                std::vector<bool> layers;
                for (const json& cell : row) layers.push_back(cell.get<int>() != 0);
                cube.push_back(std::move(layers));
            }
            v.availability[it.key()] = std::move(cube);
        }
    }
    validate_entry(v);
    return v;
}

}  // namespace

Catalog::Catalog(std::vector<VideoEntry> videos) {
    for (VideoEntry& v : videos) {
        std::string id = v.id;
        if (!videos_.emplace(id, std::move(v)).second)
            fail(ErrorKind::Validation, "duplicate video id: " + id);
    }
}

const VideoEntry& Catalog::video(const std::string& id) const {
    auto it = videos_.find(id);
    if (it == videos_.end()) fail(ErrorKind::NotFound, "unknown video: " + id);
    return it->second;
}

std::vector<std::string> Catalog::video_ids() const {
    std::vector<std::string> ids;
    for (const auto& [id, _] : videos_) ids.push_back(id);
    return ids;
}

Rational Catalog::layer_size(const std::string& vid, int segment, int layer) const {
    const VideoEntry& v = video(vid);
    if (segment < 1 || segment > v.segments)
        fail(ErrorKind::NotFound, "segment out of range: " + std::to_string(segment));
    if (layer < 1 || layer > v.layers)
        fail(ErrorKind::NotFound, "layer out of range: " + std::to_string(layer));
    return v.size_kbits[size_t(segment - 1)][size_t(layer - 1)];
}

Rational Catalog::avg_layer_size(const std::string& vid, int segment, int max_layer) const {
    const VideoEntry& v = video(vid);
    if (segment < 1 || segment > v.segments)
        fail(ErrorKind::NotFound, "segment out of range: " + std::to_string(segment));
    if (max_layer < 1 || max_layer > v.layers)
        fail(ErrorKind::NotFound, "layer out of range: " + std::to_string(max_layer));
    Rational sum(0);
    for (int l = 1; l <= max_layer; ++l)
        sum += v.size_kbits[size_t(segment - 1)][size_t(l - 1)];
    return sum / Rational(max_layer);
}

double Catalog::quality_of(const std::string& vid, int segment, int layer_count) const {
    const VideoEntry& v = video(vid);
    if (segment < 1 || segment > v.segments)
        fail(ErrorKind::NotFound, "segment out of range: " + std::to_string(segment));
    if (layer_count <= 0) return 0.0;
    int l = std::min(layer_count, v.layers);
    return v.quality[size_t(segment - 1)][size_t(l - 1)];
}

bool Catalog::available(const std::string& server, const std::string& vid, int segment,
                        int layer) const {
    const VideoEntry& v = video(vid);
    auto it = v.availability.find(server);
    if (it == v.availability.end()) return false;
    if (segment < 1 || segment > v.segments || layer < 1 || layer > v.layers) return false;
    return it->second[size_t(segment - 1)][size_t(layer - 1)];
}

std::vector<std::string> Catalog::servers() const {
    std::vector<std::string> out;
    for (const auto& [_, v] : videos_)
        for (const auto& [server, cube] : v.availability)
            if (std::find(out.begin(), out.end(), server) == out.end())
                out.push_back(server);
    std::sort(out.begin(), out.end());
    return out;
}

double Catalog::quality_min() const {
    double best = 1.0;
    for (const auto& [_, v] : videos_)
        for (const auto& row : v.quality)
            for (double q : row) best = std::min(best, q);
    return best;
}

double Catalog::quality_max() const {
    double best = 0.0;
    for (const auto& [_, v] : videos_)
        for (const auto& row : v.quality)
            for (double q : row) best = std::max(best, q);
    return best;
}

Catalog load_catalog(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const std::exception& e) {
        fail(ErrorKind::Parse, std::string("catalog parse error: ") + e.what());
    }
    std::vector<VideoEntry> videos;
    if (doc.is_object() && doc.contains("videos")) {
        require_keys(doc, {"videos"}, "catalog");
        for (const json& jv : doc["videos"]) videos.push_back(parse_video(jv));
    } else {
        videos.push_back(parse_video(doc));
    }
    return Catalog(std::move(videos));
}

Catalog load_catalog_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::NotFound, "cannot open catalog file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return load_catalog(ss.str());
}

}  // namespace svcflow
