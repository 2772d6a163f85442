#pragma once

// Rectangular numeric tables and their CSV form.

#include <string>
#include <vector>

namespace efg {

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

// Header row, then one line per row; values with 17 significant digits, '.' decimal point,
// LF line endings. Throws ShapeError on ragged rows.
std::string to_csv(const Table& t);

}  // namespace efg
