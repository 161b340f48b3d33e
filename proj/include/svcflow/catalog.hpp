#pragma once

#include <map>
#include <string>
#include <vector>

#include "svcflow/rational.hpp"

namespace svcflow {

// Per-video layer metadata. Layers are 1-based; layer 1 is the base layer.
struct VideoEntry {
    std::string id;
    double segment_duration_s = 0;
    int segments = 0;
    int layers = 0;
    // size_kbits[seg][l-1], quality[seg][l-1]; seg is 0-based internally.
    std::vector<std::vector<Rational>> size_kbits;
    std::vector<std::vector<double>> quality;
    std::vector<Rational> cumulative_kbps;  // per layer, shared by all segments
    // availability[server][seg][l-1]
    std::map<std::string, std::vector<std::vector<bool>>> availability;
};

// Data catalog: per-segment, per-layer sizes, bitrates and quality scores,
// plus the per-server availability map. Immutable after load.
class Catalog {
public:
    Catalog() = default;
    explicit Catalog(std::vector<VideoEntry> videos);

    const VideoEntry& video(const std::string& id) const;  // NotFound
    std::vector<std::string> video_ids() const;

    Rational layer_size(const std::string& video, int segment, int layer) const;
    // Mean of layers 1..max_layer of one segment (exact rational).
    Rational avg_layer_size(const std::string& video, int segment, int max_layer) const;

    // Quality score for receiving `layer_count` layers; 0 layers scores 0.
    double quality_of(const std::string& video, int segment, int layer_count) const;

    bool available(const std::string& server, const std::string& video, int segment,
                   int layer) const;
    std::vector<std::string> servers() const;

    // Extrema of the quality table over all (segment, layer>=1) entries.
    double quality_min() const;
    double quality_max() const;

private:
    std::map<std::string, VideoEntry> videos_;
};

// Parses a JSON manifest. Either a single video object or {"videos": [...]}.
// Video object:
//   {"video": "id", "segment_duration_s": 5, "segments": 12,
//    "layers": [{"cumulative_kbps": 650, "quality": 0.8 | [..per segment..],
//                "size_kbits": 3250 | [..per segment..]  (optional)}],
//    "availability": {"server": 4 | [..per segment..]},
//    "availability_explicit": {"server": [[1,1,0,...] per segment]}}
// Sizes default to (cumulative_l - cumulative_{l-1}) * segment_duration.
Catalog load_catalog(const std::string& json_text);
Catalog load_catalog_file(const std::string& path);

}  // namespace svcflow
