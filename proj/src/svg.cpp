#include "ionfountain/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "ionfountain/errors.hpp"

namespace ionfountain::svg {

int Csv::column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return static_cast<int>(i);
    return -1;
}

Csv read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open CSV file: " + path);
    Csv csv;
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty CSV file: " + path);
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) csv.columns.push_back(cell);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::vector<double> row;
        while (std::getline(ls, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (...) {
                row.push_back(std::numeric_limits<double>::quiet_NaN());
            }
        }
        if (row.size() != csv.columns.size())
            throw ConfigError(path + ": row with wrong column count");
        csv.rows.push_back(std::move(row));
    }
    return csv;
}

namespace {

constexpr int W = 720, H = 480, ML = 70, MR = 20, MT = 20, MB = 50;

std::string header() {
    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << W
       << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << " " << H << "\">\n"
       << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    return os.str();
}

std::string axes(double x0, double x1, double y0, double y1, const std::string& xl,
                 const std::string& yl) {
    std::ostringstream os;
    os << "<rect x=\"" << ML << "\" y=\"" << MT << "\" width=\"" << (W - ML - MR)
       << "\" height=\"" << (H - MT - MB)
       << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
    os.precision(4);
    for (int i = 0; i <= 4; ++i) {
        const double fx = i / 4.0;
        const double px = ML + fx * (W - ML - MR);
        const double py = H - MB + (MB - 34);
        os << "<text x=\"" << px << "\" y=\"" << py
           << "\" font-size=\"12\" text-anchor=\"middle\">" << (x0 + fx * (x1 - x0))
           << "</text>\n";
        const double fy = i / 4.0;
        const double qy = H - MB - fy * (H - MT - MB);
        os << "<text x=\"" << (ML - 6) << "\" y=\"" << (qy + 4)
           << "\" font-size=\"12\" text-anchor=\"end\">" << (y0 + fy * (y1 - y0))
           << "</text>\n";
    }
    os << "<text x=\"" << (ML + (W - ML - MR) / 2) << "\" y=\"" << (H - 8)
       << "\" font-size=\"13\" text-anchor=\"middle\">" << xl << "</text>\n";
    os << "<text x=\"14\" y=\"" << (MT + (H - MT - MB) / 2)
       << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
       << (MT + (H - MT - MB) / 2) << ")\">" << yl << "</text>\n";
    return os.str();
}

} // namespace

void write_line_svg(const std::vector<double>& x, const std::vector<double>& y,
                    const std::string& x_label, const std::string& y_label,
                    const std::string& path) {
    if (x.empty() || x.size() != y.size())
        throw ConfigError("line plot needs matching non-empty x/y columns");
    const auto [x0it, x1it] = std::minmax_element(x.begin(), x.end());
    const auto [y0it, y1it] = std::minmax_element(y.begin(), y.end());
    double x0 = *x0it, x1 = *x1it, y0 = *y0it, y1 = *y1it;
    if (x1 == x0) x1 = x0 + 1.0;
    if (y1 == y0) y1 = y0 + 1.0;
    std::ofstream out(path);
    if (!out) throw SimulationError("cannot open output file: " + path);
    out << header() << axes(x0, x1, y0, y1, x_label, y_label);
    out << "<polyline fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"1.5\" points=\"";
    out.precision(7);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double px = ML + (x[i] - x0) / (x1 - x0) * (W - ML - MR);
        const double py = H - MB - (y[i] - y0) / (y1 - y0) * (H - MT - MB);
        out << px << "," << py << " ";
    }
    out << "\"/>\n</svg>\n";
}

void write_heatmap_svg(const std::vector<double>& x, const std::vector<double>& y,
                       const std::vector<double>& value, const std::string& x_label,
                       const std::string& y_label, const std::string& path) {
    if (x.empty() || x.size() != y.size() || x.size() != value.size())
        throw ConfigError("heatmap needs matching non-empty x/y/value columns");
    std::vector<double> xs = x, ys = y;
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    std::sort(ys.begin(), ys.end());
    ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
    std::map<double, std::size_t> xi, yi;
    for (std::size_t i = 0; i < xs.size(); ++i) xi[xs[i]] = i;
    for (std::size_t i = 0; i < ys.size(); ++i) yi[ys[i]] = i;

    const double cw = static_cast<double>(W - ML - MR) / xs.size();
    const double ch = static_cast<double>(H - MT - MB) / ys.size();
    std::ofstream out(path);
    if (!out) throw SimulationError("cannot open output file: " + path);
    out << header()
        << axes(xs.front(), xs.back(), ys.front(), ys.back(), x_label, y_label);
    out.precision(6);
    for (std::size_t k = 0; k < value.size(); ++k) {
        const double v = std::clamp(value[k], 0.0, 1.0);
        const int r = static_cast<int>(40 + 200 * v);
        const int b = static_cast<int>(200 - 160 * v);
        const double px = ML + xi[x[k]] * cw;
        const double py = H - MB - (yi[y[k]] + 1) * ch;
        out << "<rect x=\"" << px << "\" y=\"" << py << "\" width=\"" << cw
            << "\" height=\"" << ch << "\" fill=\"rgb(" << r << ",60," << b << ")\"/>\n";
    }
    out << "</svg>\n";
}

} // namespace ionfountain::svg
