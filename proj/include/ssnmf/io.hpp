#ifndef SSNMF_IO_HPP
#define SSNMF_IO_HPP

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "ssnmf/matrix.hpp"
#include "ssnmf/solver.hpp"
#include "ssnmf/sparsity.hpp"

namespace ssnmf {

/// Data matrices must be nonnegative; projection inputs may hold any real value.
enum class EntryPolicy { kNonnegative, kAnyReal };

// Matrix CSV: no header, one line per row, comma separated, 17 significant digits.
// Errors name the offending line and field (both 1-based).
DenseMatrix parse_matrix(std::istream& in, EntryPolicy policy = EntryPolicy::kNonnegative,
                         std::string_view source = "<stream>");
DenseMatrix load_matrix(const std::filesystem::path& path,
                        EntryPolicy policy = EntryPolicy::kNonnegative);
void write_matrix(std::ostream& out, const DenseMatrix& m);
void save_matrix(const DenseMatrix& m, const std::filesystem::path& path);

/// Reads a single-row or single-column CSV as a vector of arbitrary reals.
std::vector<double> load_vector(const std::filesystem::path& path);

/**
 * Constraint CSV with rows `index,kind,alpha_lo,alpha_hi`, kind one of eq,
 * interval, free. An optional leading header row starting with `index` is
 * skipped. Indices are 0-based, unique and below `rank`; indices not listed are
 * free. `dim` is the length of the constrained vectors.
 */
std::vector<SparsityConstraint> parse_constraints(std::istream& in, std::size_t rank,
                                                  std::size_t dim,
                                                  std::string_view source = "<stream>");
std::vector<SparsityConstraint> load_constraints(const std::filesystem::path& path,
                                                 std::size_t rank, std::size_t dim);

// Trace CSV: header `updates,elapsed_s,error`, one row per record.
void write_trace(std::ostream& out, const ConvergenceTrace& trace);
void save_trace(const ConvergenceTrace& trace, const std::filesystem::path& path);
ConvergenceTrace parse_trace(std::istream& in, std::string_view source = "<stream>");
ConvergenceTrace load_trace(const std::filesystem::path& path);

struct GridShape {
  std::size_t rows = 0;
  std::size_t cols = 0;
};

/// Parses "19x19".
GridShape parse_grid_shape(std::string_view text);

/**
 * Binary PGM (P5, maxval 255) showing each column of W as a tile_rows x
 * tile_cols image (row-major reshape), tiles laid out row by row on a grid and
 * separated by 1-pixel white lines. Each tile is min-max scaled to 0..255 on its
 * own; a constant tile renders as 0. Unused grid cells are white.
 */
std::string render_feature_sheet(const DenseMatrix& w, GridShape tile, GridShape grid);
void render_features(const DenseMatrix& w, GridShape tile, GridShape grid,
                     const std::filesystem::path& path);

/// Shortest round-trip text for a double (17 significant digits).
std::string format_double(double v);

}  // namespace ssnmf

#endif  // SSNMF_IO_HPP
