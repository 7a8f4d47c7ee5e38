#pragma once

#include <functional>
#include <set>
#include <string>
#include <vector>

#include "warden/model.hpp"

namespace warden {

struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

struct CsvTypeError : std::runtime_error {
    CsvTypeError(size_t row, size_t col, const std::string& expected,
                 const std::string& got)
        : std::runtime_error("row " + std::to_string(row) + ", column " +
                             std::to_string(col) + ": expected " + expected +
                             ", got '" + got + "'"),
          row(row),
          col(col) {}
    size_t row;
    size_t col;
};

struct CsvBinding {
    std::string pred;
    std::string path;
    std::vector<std::string> column_types;  // int|float|string|bool|date; may
                                            // be empty (all string)
};

// RFC-4180 CSV without a header row; one fact per row, typed per the
// declared columns (string when unspecified). `_:nK` cells parse as labeled
// nulls. Rows are yielded in file order.
void load_csv(const CsvBinding& binding,
              const std::function<void(Fact)>& yield);
std::vector<Fact> load(const CsvBinding& binding);

// Constants occurring in any EDB fact; nulls never included.
std::set<Value> active_domain(const Database& database);

struct OutputDirectives {
    bool certain = false;  // drop facts containing labeled nulls
    bool sorted = false;   // order rows lexicographically by all columns
};

// Serializes facts as CSV (UTF-8, LF), nulls as `_:nK`. Deterministic
// byte-for-byte in sorted mode.
std::string render_csv(std::vector<Fact> facts, const OutputDirectives& d);
void write_output(const std::string& path, std::vector<Fact> facts,
                  const OutputDirectives& d);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace warden
