#pragma once

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "conceptree/common.hpp"

namespace conceptree {

/// Throws MissingInputError naming the path when it does not exist.
std::ifstream open_input_file(const std::filesystem::path& path);

std::vector<std::string_view> split_csv_line(std::string_view line);
std::string_view strip_cr(std::string_view line);

/// Square matrix CSV: the first row and the first column hold the ids, the
/// top-left cell is "id".
void write_labeled_matrix(std::ostream& out, std::span<const std::string> ids, const Matrix& m);
std::pair<std::vector<std::string>, Matrix> read_labeled_matrix(std::istream& in);

}  // namespace conceptree
