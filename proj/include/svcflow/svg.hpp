#pragma once

#include <string>
#include <vector>

namespace svcflow {

// Minimal deterministic line-chart writer; enough for the per-run figure
// families without pulling in a plotting dependency.
class SvgChart {
public:
    SvgChart(int width, int height, std::string title);

    void add_series(const std::string& label, const std::vector<double>& x,
                    const std::vector<double>& y);

    // Renders to `path`; `manifest_hash` is embedded as metadata when given.
    void write(const std::string& path, const std::string& manifest_hash) const;
    std::string render(const std::string& manifest_hash) const;

private:
    struct Series {
        std::string label;
        std::vector<double> x, y;
    };
    int width_, height_;
    std::string title_;
    std::vector<Series> series_;
};

}  // namespace svcflow
