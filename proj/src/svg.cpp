#include "svcflow/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "svcflow/errors.hpp"

namespace svcflow {

namespace {
const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
}
}  // namespace

SvgChart::SvgChart(int width, int height, std::string title)
    : width_(width), height_(height), title_(std::move(title)) {}

void SvgChart::add_series(const std::string& label, const std::vector<double>& x,
                          const std::vector<double>& y) {
    if (x.size() != y.size())
        fail(ErrorKind::Validation, "series coordinates must pair up");
    series_.push_back({label, x, y});
}

std::string SvgChart::render(const std::string& manifest_hash) const {
    double min_x = 0, max_x = 1, min_y = 0, max_y = 1;
    bool first = true;
    for (const Series& s : series_) {
        for (size_t i = 0; i < s.x.size(); ++i) {
            if (first) {
                min_x = max_x = s.x[i];
                min_y = max_y = s.y[i];
                first = false;
            }
            min_x = std::min(min_x, s.x[i]);
            max_x = std::max(max_x, s.x[i]);
            min_y = std::min(min_y, s.y[i]);
            max_y = std::max(max_y, s.y[i]);
        }
    }
    if (max_x - min_x < 1e-9) max_x = min_x + 1;
    if (max_y - min_y < 1e-9) max_y = min_y + 1;
    min_y = std::min(min_y, 0.0);

    const double ml = 56, mr = 140, mt = 40, mb = 36;
    const double pw = width_ - ml - mr, ph = height_ - mt - mb;
    auto px = [&](double x) { return ml + (x - min_x) / (max_x - min_x) * pw; };
    auto py = [&](double y) { return mt + ph - (y - min_y) / (max_y - min_y) * ph; };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_ << "\" height=\""
        << height_ << "\" viewBox=\"0 0 " << width_ << " " << height_ << "\">\n";
    if (!manifest_hash.empty())
        out << "<metadata>run-manifest:" << manifest_hash << "</metadata>\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << ml << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\">"
        << title_ << "</text>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw
        << "\" y2=\"" << mt + ph << "\" stroke=\"#444\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
        << mt + ph << "\" stroke=\"#444\"/>\n";
    for (int tick = 0; tick <= 4; ++tick) {
        double vy = min_y + (max_y - min_y) * tick / 4.0;
        double vx = min_x + (max_x - min_x) * tick / 4.0;
        out << "<text x=\"8\" y=\"" << num(py(vy) + 4)
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << num(vy) << "</text>\n";
        out << "<text x=\"" << num(px(vx) - 8) << "\" y=\"" << height_ - 12
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << num(vx) << "</text>\n";
    }
    for (size_t si = 0; si < series_.size(); ++si) {
        const Series& s = series_[si];
        const char* color = kPalette[si % (sizeof kPalette / sizeof kPalette[0])];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
        for (size_t i = 0; i < s.x.size(); ++i)
            out << num(px(s.x[i])) << ',' << num(py(s.y[i])) << ' ';
        out << "\"/>\n";
        for (size_t i = 0; i < s.x.size(); ++i)
            out << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\"" << num(py(s.y[i]))
                << "\" r=\"2.4\" fill=\"" << color << "\"/>\n";
        double ly = mt + 16 + 16 * static_cast<double>(si);
        out << "<rect x=\"" << ml + pw + 10 << "\" y=\"" << num(ly - 9)
            << "\" width=\"10\" height=\"10\" fill=\"" << color << "\"/>\n";
        out << "<text x=\"" << ml + pw + 26 << "\" y=\"" << num(ly)
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

void SvgChart::write(const std::string& path, const std::string& manifest_hash) const {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Validation, "cannot write chart: " + path);
    out << render(manifest_hash);
}

}  // namespace svcflow
