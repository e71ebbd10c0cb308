#include "conceptree/io.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

namespace conceptree {

std::ifstream open_input_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw MissingInputError("missing input file: " + path.string());
  }
  std::ifstream in(path);
  if (!in) throw MissingInputError("cannot open input file: " + path.string());
  return in;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

void write_labeled_matrix(std::ostream& out, std::span<const std::string> ids, const Matrix& m) {
  out << "id";
  for (const auto& id : ids) out << ',' << id;
  out << '\n';
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out << ids[i];
    for (double v : m.row(i)) out << ',' << format_double(v);
    out << '\n';
  }
}

std::pair<std::vector<std::string>, Matrix> read_labeled_matrix(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty matrix file");
  auto header = split_csv_line(strip_cr(line));
  if (header.empty() || header[0] != "id") {
    throw ValidationError("matrix header must start with 'id' at row 1");
  }
  std::vector<std::string> ids(header.begin() + 1, header.end());
  const std::size_t k = ids.size();
  Matrix m(k, k);

  std::size_t r = 0;
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    auto text = strip_cr(line);
    if (text.empty()) continue;
    const auto where = " at row " + std::to_string(row_no);
    auto fields = split_csv_line(text);
    if (r >= k) throw ValidationError("too many rows" + where);
    if (fields.size() != k + 1) throw ValidationError("dimension mismatch" + where);
    if (fields[0] != ids[r]) throw ValidationError("row id does not match column order" + where);
    for (std::size_t c = 0; c < k; ++c) {
      auto f = fields[c + 1];
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v)) {
        throw ValidationError("bad value '" + std::string(f) + "'" + where);
      }
      m(r, c) = v;
    }
    ++r;
  }
  if (r != k) throw ValidationError("matrix has fewer rows than columns");
  return {std::move(ids), std::move(m)};
}

}  // namespace conceptree
