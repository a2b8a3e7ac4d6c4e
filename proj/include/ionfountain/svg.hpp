#ifndef IONFOUNTAIN_SVG_HPP
#define IONFOUNTAIN_SVG_HPP

#include <string>
#include <vector>

namespace ionfountain::svg {

struct Csv {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    int column(const std::string& name) const; // -1 if absent
};

Csv read_csv(const std::string& path);

// Minimal SVG 1.1 writers for the produced CSVs.
void write_line_svg(const std::vector<double>& x, const std::vector<double>& y,
                    const std::string& x_label, const std::string& y_label,
                    const std::string& path);

// Cells colored by value in [0, 1] (clamped); grid inferred from the unique
// sorted x/y values.
void write_heatmap_svg(const std::vector<double>& x, const std::vector<double>& y,
                       const std::vector<double>& value, const std::string& x_label,
                       const std::string& y_label, const std::string& path);

} // namespace ionfountain::svg

#endif
