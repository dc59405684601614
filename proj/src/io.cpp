#include "ssnmf/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include "ssnmf/errors.hpp"

namespace ssnmf {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    fields.push_back(trim(line.substr(pos, comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return fields;
}

std::string where(std::string_view source, std::size_t line, std::size_t field) {
  std::ostringstream s;
  s << source << ": line " << line << ", field " << field;
  return s.str();
}

std::optional<double> to_double(std::string_view text) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) return std::nullopt;
  return v;
}

double parse_number(std::string_view text, std::string_view source, std::size_t line,
                    std::size_t field) {
  const auto v = to_double(text);
  if (!v) {
    throw ParseError(where(source, line, field) + ": '" + std::string(text) +
                     "' is not a number");
  }
  if (!std::isfinite(*v)) {
    throw ParseError(where(source, line, field) + ": value is not finite");
  }
  return *v;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  return out;
}

// Non-blank lines with their 1-based line numbers.
std::vector<std::pair<std::size_t, std::string>> content_lines(std::istream& in) {
  std::vector<std::pair<std::size_t, std::string>> lines;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!trim(line).empty()) lines.emplace_back(number, line);
  }
  return lines;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

DenseMatrix parse_matrix(std::istream& in, EntryPolicy policy, std::string_view source) {
  const auto lines = content_lines(in);
  if (lines.empty()) throw ShapeError(std::string(source) + ": no rows");
  std::vector<std::vector<double>> rows;
  rows.reserve(lines.size());
  for (const auto& [number, text] : lines) {
    const auto fields = split_fields(text);
    if (!rows.empty() && fields.size() != rows.front().size()) {
      throw RaggedRowError(std::string(source) + ": line " + std::to_string(number) + " has " +
                           std::to_string(fields.size()) + " fields, expected " +
                           std::to_string(rows.front().size()));
    }
    std::vector<double> row(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) {
      row[j] = parse_number(fields[j], source, number, j + 1);
      if (policy == EntryPolicy::kNonnegative && row[j] < 0.0) {
        throw NegativeEntryError(where(source, number, j + 1) + ": negative entry " +
                                 std::string(fields[j]));
      }
    }
    rows.push_back(std::move(row));
  }
  DenseMatrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

DenseMatrix load_matrix(const std::filesystem::path& path, EntryPolicy policy) {
  auto in = open_input(path);
  return parse_matrix(in, policy, path.string());
}

void write_matrix(std::ostream& out, const DenseMatrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

void save_matrix(const DenseMatrix& m, const std::filesystem::path& path) {
  auto out = open_output(path);
  write_matrix(out, m);
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

std::vector<double> load_vector(const std::filesystem::path& path) {
  const DenseMatrix m = load_matrix(path, EntryPolicy::kAnyReal);
  if (m.rows() != 1 && m.cols() != 1) {
    throw ShapeError(path.string() + ": expected a single row or column, got " +
                     std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  return {m.data().begin(), m.data().end()};
}

std::vector<SparsityConstraint> parse_constraints(std::istream& in, std::size_t rank,
                                                  std::size_t dim, std::string_view source) {
  std::vector<SparsityConstraint> out(rank, SparsityConstraint::free(dim));
  std::set<std::size_t> seen;
  auto lines = content_lines(in);
  if (!lines.empty() && split_fields(lines.front().second).front() == "index") {
    lines.erase(lines.begin());
  }
  for (const auto& [number, text] : lines) {
    const auto fields = split_fields(text);
    if (fields.size() < 2 || fields.size() > 4) {
      throw ShapeError(std::string(source) + ": line " + std::to_string(number) +
                       " must have the form index,kind,alpha_lo,alpha_hi");
    }
    const auto index_value = parse_number(fields[0], source, number, 1);
    if (index_value < 0 || index_value != std::floor(index_value) ||
        index_value >= static_cast<double>(rank)) {
      throw ShapeError(where(source, number, 1) + ": index " + std::string(fields[0]) +
                       " outside [0, " + std::to_string(rank) + ")");
    }
    const auto index = static_cast<std::size_t>(index_value);
    if (!seen.insert(index).second) {
      throw ShapeError(where(source, number, 1) + ": duplicate index " + std::to_string(index));
    }
    auto alpha = [&](std::size_t field) -> std::optional<double> {
      if (fields.size() <= field || fields[field].empty()) return std::nullopt;
      return parse_number(fields[field], source, number, field + 1);
    };
    const std::string_view kind = fields[1];
    try {
      if (kind == "free") {
        out[index] = SparsityConstraint::free(dim);
      } else if (kind == "eq") {
        const auto lo = alpha(2);
        const auto hi = alpha(3);
        if (!lo) throw ParseError(where(source, number, 3) + ": eq needs alpha_lo");
        if (hi && *hi != *lo) {
          throw ParseError(where(source, number, 4) + ": eq needs alpha_hi equal to alpha_lo");
        }
        out[index] = SparsityConstraint::equality(*lo, dim);
      } else if (kind == "interval") {
        const auto lo = alpha(2);
        const auto hi = alpha(3);
        if (!lo || !hi) {
          throw ParseError(where(source, number, 3) + ": interval needs alpha_lo and alpha_hi");
        }
        out[index] = SparsityConstraint::interval(*lo, *hi, dim);
      } else {
        throw ParseError(where(source, number, 2) + ": unknown kind '" + std::string(kind) +
                         "' (expected eq, interval or free)");
      }
    } catch (const RangeError& e) {
      throw ParseError(std::string(source) + ": line " + std::to_string(number) + ": " +
                       e.what());
    }
  }
  return out;
}

std::vector<SparsityConstraint> load_constraints(const std::filesystem::path& path,
                                                 std::size_t rank, std::size_t dim) {
  auto in = open_input(path);
  return parse_constraints(in, rank, dim, path.string());
}

void write_trace(std::ostream& out, const ConvergenceTrace& trace) {
  out << "updates,elapsed_s,error\n";
  for (const auto& r : trace.records) {
    out << r.updates << ',' << format_double(r.elapsed_seconds) << ','
        << format_double(r.error) << '\n';
  }
}

void save_trace(const ConvergenceTrace& trace, const std::filesystem::path& path) {
  auto out = open_output(path);
  write_trace(out, trace);
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

ConvergenceTrace parse_trace(std::istream& in, std::string_view source) {
  auto lines = content_lines(in);
  if (lines.empty() || trim(lines.front().second) != "updates,elapsed_s,error") {
    throw ParseError(std::string(source) + ": missing header updates,elapsed_s,error");
  }
  ConvergenceTrace trace;
  for (std::size_t l = 1; l < lines.size(); ++l) {
    const auto& [number, text] = lines[l];
    const auto fields = split_fields(text);
    if (fields.size() != 3) {
      throw RaggedRowError(std::string(source) + ": line " + std::to_string(number) +
                           " must have 3 fields");
    }
    const double updates = parse_number(fields[0], source, number, 1);
    if (updates < 1 || updates != std::floor(updates)) {
      throw ParseError(where(source, number, 1) + ": update count must be a positive integer");
    }
    TraceRecord rec{static_cast<std::size_t>(updates), parse_number(fields[1], source, number, 2),
                    parse_number(fields[2], source, number, 3)};
    try {
      trace.add(rec);
    } catch (const RangeError& e) {
      throw ParseError(std::string(source) + ": line " + std::to_string(number) + ": " +
                       e.what());
    }
  }
  return trace;
}

ConvergenceTrace load_trace(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_trace(in, path.string());
}

GridShape parse_grid_shape(std::string_view text) {
  const auto x = text.find('x');
  auto part = [&](std::string_view s) -> std::size_t {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() || v == 0) {
      throw ParseError("shape '" + std::string(text) + "' must look like ROWSxCOLS");
    }
    return v;
  };
  if (x == std::string_view::npos) {
    throw ParseError("shape '" + std::string(text) + "' must look like ROWSxCOLS");
  }
  return {part(text.substr(0, x)), part(text.substr(x + 1))};
}

std::string render_feature_sheet(const DenseMatrix& w, GridShape tile, GridShape grid) {
  if (tile.rows * tile.cols != w.rows()) {
    throw ShapeError("tile " + std::to_string(tile.rows) + "x" + std::to_string(tile.cols) +
                     " does not hold a column of length " + std::to_string(w.rows()));
  }
  if (grid.rows * grid.cols < w.cols()) {
    throw ShapeError("grid " + std::to_string(grid.rows) + "x" + std::to_string(grid.cols) +
                     " has fewer cells than the " + std::to_string(w.cols()) + " features");
  }
  const std::size_t width = grid.cols * tile.cols + (grid.cols - 1);
  const std::size_t height = grid.rows * tile.rows + (grid.rows - 1);
  std::vector<unsigned char> pixels(width * height, 255);

  for (std::size_t t = 0; t < w.cols(); ++t) {
    const auto column = w.col(t);
    const auto [lo_it, hi_it] = std::minmax_element(column.begin(), column.end());
    const double lo = *lo_it;
    const double range = *hi_it - lo;
    const std::size_t top = (t / grid.cols) * (tile.rows + 1);
    const std::size_t left = (t % grid.cols) * (tile.cols + 1);
    for (std::size_t y = 0; y < tile.rows; ++y) {
      for (std::size_t x = 0; x < tile.cols; ++x) {
        const double v = column[y * tile.cols + x];
        const long level = range > 0.0 ? std::lround(255.0 * (v - lo) / range) : 0;
        pixels[(top + y) * width + left + x] = static_cast<unsigned char>(std::clamp(level, 0L, 255L));
      }
    }
  }

  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  out.append(pixels.begin(), pixels.end());
  return out;
}

void render_features(const DenseMatrix& w, GridShape tile, GridShape grid,
                     const std::filesystem::path& path) {
  const std::string sheet = render_feature_sheet(w, tile, grid);
  auto out = open_output(path, true);
  out.write(sheet.data(), static_cast<std::streamsize>(sheet.size()));
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

}  // namespace ssnmf
